"""Operators on the tensor product space (C^N)^{\\otimes L}.

Basis vectors are labelled by multi-indices ``(d_1, ..., d_L)`` with 1-based
digits.  Linearization is big-endian: site 1 is the most significant digit,
matching ``V_1 (x) V_2 (x) ... (x) V_L`` read left to right.

:class:`TensorOperator` holds a ``scipy.sparse`` CSR matrix and switches to
a dense ``ndarray`` once more than a quarter of the entries are nonzero.
Entries smaller than ``1e-14`` times the largest magnitude are dropped.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, IndexOutOfRange, NotABijection
from .weights import WeightTable

DROP_TOL = 1e-14
DENSE_FILL = 0.25
EQ_RTOL = 1e-9


# ---------------------------------------------------------------------------
# multi-indices


def linear_index(digits: Sequence[int], n: int) -> int:
    """Big-endian position of a 1-based multi-index."""
    out = 0
    for d in digits:
        if not 1 <= d <= n:
            raise IndexOutOfRange(f"digit {d} outside [1, {n}]")
        out = out * n + (d - 1)
    return out


def digits_of(index: int, n: int, L: int) -> tuple[int, ...]:
    out = []
    for _ in range(L):
        index, r = divmod(index, n)
        out.append(r + 1)
    return tuple(reversed(out))


def digit_table(n: int, L: int) -> np.ndarray:
    """``(n**L, L)`` array of 0-based digits of every basis index."""
    idx = np.arange(n**L)
    powers = n ** np.arange(L - 1, -1, -1)
    return (idx[:, None] // powers[None, :]) % n


def basis_vector(digits: Sequence[int], n: int) -> np.ndarray:
    v = np.zeros(n ** len(digits), complex)
    v[linear_index(digits, n)] = 1.0
    return v


# ---------------------------------------------------------------------------
# the operator type


class TensorOperator:
    """Immutable complex operator on ``(C^n)^{(x) L}``.

    Supports ``@`` with operators and state vectors, ``+``, ``-``, scalar
    ``*``, :meth:`adjoint` and tolerance-based :meth:`allclose`.
    """

    __slots__ = ("n", "L", "_m")

    def __init__(self, n: int, L: int, mat) -> None:
        self.n = int(n)
        self.L = int(L)
        dim = self.n**self.L
        if mat.shape != (dim, dim):
            raise DimensionMismatch(f"matrix shape {mat.shape} does not match n={n}, L={L}")
        self._m = _normalize(mat)

    # construction helpers ---------------------------------------------

    @classmethod
    def identity(cls, n: int, L: int) -> "TensorOperator":
        return cls(n, L, sp.identity(n**L, dtype=complex, format="csr"))

    @classmethod
    def zeros(cls, n: int, L: int) -> "TensorOperator":
        return cls(n, L, sp.csr_matrix((n**L, n**L), dtype=complex))

    @classmethod
    def diagonal(cls, n: int, L: int, diag: np.ndarray) -> "TensorOperator":
        return cls(n, L, sp.diags(np.asarray(diag, complex), format="csr"))

    @classmethod
    def from_dense(cls, n: int, L: int, mat: np.ndarray) -> "TensorOperator":
        return cls(n, L, np.asarray(mat, complex))

    # properties -------------------------------------------------------

    @property
    def dims(self) -> tuple[int, int]:
        return (self.n, self.L)

    @property
    def dim(self) -> int:
        return self.n**self.L

    @property
    def is_dense(self) -> bool:
        return isinstance(self._m, np.ndarray)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self._m)) if self.is_dense else int(self._m.nnz)

    @property
    def matrix(self):
        """Underlying storage (CSR matrix or ndarray); do not mutate."""
        return self._m

    def to_dense(self) -> np.ndarray:
        return self._m.copy() if self.is_dense else self._m.toarray()

    def to_sparse(self) -> sp.csr_matrix:
        return sp.csr_matrix(self._m) if self.is_dense else self._m

    def diagonal_entries(self) -> np.ndarray:
        return np.diagonal(self._m).copy() if self.is_dense else self._m.diagonal()

    def element(self, row: Sequence[int], col: Sequence[int]) -> complex:
        r, c = linear_index(row, self.n), linear_index(col, self.n)
        if len(row) != self.L or len(col) != self.L:
            raise DimensionMismatch("multi-index length differs from L")
        return complex(self._m[r, c])

    def entries(self) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], complex]]:
        """Nonzero entries as ``(row digits, col digits, value)`` in row-major order."""
        coo = sp.coo_matrix(self._m)
        order = np.lexsort((coo.col, coo.row))
        for k in order:
            yield (
                digits_of(int(coo.row[k]), self.n, self.L),
                digits_of(int(coo.col[k]), self.n, self.L),
                complex(coo.data[k]),
            )

    def max_abs(self) -> float:
        if self.is_dense:
            return float(np.abs(self._m).max(initial=0.0))
        return float(np.abs(self._m.data).max(initial=0.0))

    # algebra ----------------------------------------------------------

    def _check(self, other: "TensorOperator") -> None:
        if not isinstance(other, TensorOperator):
            raise TypeError("expected a TensorOperator")
        if other.dims != self.dims:
            raise DimensionMismatch(f"dims {self.dims} vs {other.dims}")

    def __matmul__(self, other):
        if isinstance(other, TensorOperator):
            self._check(other)
            return TensorOperator(self.n, self.L, _mul(self._m, other._m))
        return self.act(other)

    def act(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec)
        if vec.shape[0] != self.dim:
            raise DimensionMismatch(f"vector length {vec.shape[0]} vs dimension {self.dim}")
        return np.asarray(self._m @ vec)

    def __add__(self, other: "TensorOperator") -> "TensorOperator":
        self._check(other)
        return TensorOperator(self.n, self.L, _add(self._m, other._m))

    def __sub__(self, other: "TensorOperator") -> "TensorOperator":
        return self + (-other)

    def __neg__(self) -> "TensorOperator":
        return TensorOperator(self.n, self.L, -self._m)

    def __mul__(self, scalar: complex) -> "TensorOperator":
        if isinstance(scalar, TensorOperator):
            raise TypeError("use @ for operator products")
        return TensorOperator(self.n, self.L, self._m * complex(scalar))

    __rmul__ = __mul__

    def adjoint(self) -> "TensorOperator":
        return TensorOperator(self.n, self.L, self._m.conj().T)

    def transpose(self) -> "TensorOperator":
        return TensorOperator(self.n, self.L, self._m.T)

    def kron(self, other: "TensorOperator") -> "TensorOperator":
        """Tensor product with ``other`` appended as the trailing sites."""
        if other.n != self.n:
            raise DimensionMismatch("local dimensions differ")
        return TensorOperator(self.n, self.L + other.L, sp.kron(self.to_sparse(), other.to_sparse(), format="csr"))

    # comparison -------------------------------------------------------

    def distance(self, other: "TensorOperator") -> float:
        """Max-norm of the difference."""
        self._check(other)
        d = _add(self._m, -other._m)
        if isinstance(d, np.ndarray):
            return float(np.abs(d).max(initial=0.0))
        return float(np.abs(d.data).max(initial=0.0))

    def relative_distance(self, other: "TensorOperator") -> float:
        scale = max(self.max_abs(), other.max_abs())
        d = self.distance(other)
        return 0.0 if scale == 0.0 else d / scale

    def allclose(self, other: "TensorOperator", rtol: float = EQ_RTOL, products: int = 1) -> bool:
        """Relative max-norm equality, tolerance scaled by ``sqrt(products)``."""
        return self.relative_distance(other) <= rtol * math.sqrt(max(products, 1))

    def __repr__(self) -> str:
        kind = "dense" if self.is_dense else "sparse"
        return f"TensorOperator(n={self.n}, L={self.L}, nnz={self.nnz}, {kind})"

    # export -----------------------------------------------------------

    def snapshot(self) -> dict:
        """Document listing dims and entries sorted lexicographically by digit strings."""
        rows = [
            {
                "row": "".join(map(str, r)),
                "col": "".join(map(str, c)),
                "value": [v.real, v.imag],
            }
            for r, c, v in self.entries()
        ]
        rows.sort(key=lambda e: (e["row"], e["col"]))
        return {"dims": [self.n, self.L], "entries": rows}


def _normalize(mat):
    if isinstance(mat, np.ndarray):
        m = np.array(mat, dtype=complex)
        big = np.abs(m).max(initial=0.0)
        if big > 0:
            m[np.abs(m) < DROP_TOL * big] = 0.0
        if np.count_nonzero(m) > DENSE_FILL * m.size:
            return m
        return sp.csr_matrix(m)
    m = sp.csr_matrix(mat, dtype=complex)
    m.sum_duplicates()
    if m.nnz:
        big = np.abs(m.data).max()
        m.data[np.abs(m.data) < DROP_TOL * big] = 0.0
        m.eliminate_zeros()
    if m.nnz > DENSE_FILL * m.shape[0] * m.shape[1]:
        return m.toarray()
    return m


def _mul(x, y):
    return x @ y


def _add(x, y):
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        xd = x if isinstance(x, np.ndarray) else x.toarray()
        yd = y if isinstance(y, np.ndarray) else y.toarray()
        return xd + yd
    return x + y


# ---------------------------------------------------------------------------
# local operators


def embed_local(local: np.ndarray, sites: Sequence[int], n: int, L: int) -> TensorOperator:
    """Embed a matrix acting on ``len(sites)`` factors; ``sites[0]`` is its first slot."""
    s = len(sites)
    if len(set(sites)) != s:
        raise IndexOutOfRange("sites must be distinct")
    for k in sites:
        if not 1 <= k <= L:
            raise IndexOutOfRange(f"site {k} outside [1, {L}]")
    local = np.asarray(local, complex)
    if local.shape != (n**s, n**s):
        raise DimensionMismatch("local matrix has the wrong size")
    dig = digit_table(n, L)
    weights_loc = n ** np.arange(s - 1, -1, -1)
    loc = dig[:, [k - 1 for k in sites]] @ weights_loc
    site_pow = np.array([n ** (L - k) for k in sites])
    ldig = digit_table(n, s)
    cols = np.arange(n**L)
    R, C, V = [], [], []
    lr, lc = np.nonzero(local)
    for r, c in zip(lr, lc):
        mask = loc == c
        gcols = cols[mask]
        shift = int((ldig[r] - ldig[c]) @ site_pow)
        R.append(gcols + shift)
        C.append(gcols)
        V.append(np.full(gcols.size, local[r, c]))
    if R:
        R, C, V = np.concatenate(R), np.concatenate(C), np.concatenate(V)
    dim = n**L
    return TensorOperator(n, L, sp.csr_matrix((V, (R, C)), shape=(dim, dim), dtype=complex))


def weyl(alpha: int, beta: int, site: int, dims: tuple[int, int]) -> TensorOperator:
    """``e^(alpha beta)`` on ``site``, identity elsewhere."""
    n, L = dims
    if not (1 <= alpha <= n and 1 <= beta <= n):
        raise IndexOutOfRange(f"states ({alpha}, {beta}) outside [1, {n}]")
    e = np.zeros((n, n), complex)
    e[alpha - 1, beta - 1] = 1.0
    return embed_local(e, [site], n, L)


def local_weyl(alpha: int, beta: int, n: int) -> np.ndarray:
    e = np.zeros((n, n), complex)
    e[alpha - 1, beta - 1] = 1.0
    return e


def product_operator(factors: Sequence[np.ndarray]) -> TensorOperator:
    """``factors[0] (x) factors[1] (x) ...`` for single-site matrices."""
    n = factors[0].shape[0]
    m = sp.csr_matrix(np.ones((1, 1), complex))
    for f in factors:
        m = sp.kron(m, sp.csr_matrix(f), format="csr")
    return TensorOperator(n, len(factors), m)


def sz_total(i: int, dims: tuple[int, int]) -> TensorOperator:
    """``sum_k (e^(ii)_k - e^((i+1)(i+1))_k)``."""
    n, L = dims
    d = np.zeros(n)
    d[i - 1], d[i] = 1.0, -1.0
    dig = digit_table(n, L)
    return TensorOperator.diagonal(n, L, d[dig].sum(axis=1))


def embed_r(
    table: WeightTable, sites: tuple[int, int], rapidities: tuple[str, str], dims: tuple[int, int]
) -> TensorOperator:
    """``R(x, y)`` acting on ``sites``; the first site carries the first tensor slot."""
    n, L = dims
    j, k = sites
    if j == k:
        raise IndexOutOfRange("an R-matrix needs two distinct sites")
    if n != table.rank:
        raise DimensionMismatch("table rank differs from local dimension")
    return embed_local(table.r_matrix(*rapidities), [j, k], n, L)


def swap_local(n: int) -> np.ndarray:
    P = np.zeros((n * n, n * n), complex)
    for i in range(n):
        for j in range(n):
            P[i * n + j, j * n + i] = 1.0
    return P


def swap(j: int, k: int, dims: tuple[int, int]) -> TensorOperator:
    """Permutator exchanging the contents of sites ``j`` and ``k``."""
    n, L = dims
    return embed_local(swap_local(n), [j, k], n, L)


def site_relabel(images: Sequence[int], n: int) -> TensorOperator:
    """Operator moving the content of slot ``k`` to site ``images[k-1]``."""
    L = len(images)
    _check_bijection(images)
    dig = digit_table(n, L)
    new = np.empty_like(dig)
    for k, s in enumerate(images):
        new[:, s - 1] = dig[:, k]
    rows = new @ (n ** np.arange(L - 1, -1, -1))
    dim = n**L
    return TensorOperator(n, L, sp.csr_matrix((np.ones(dim, complex), (rows, np.arange(dim))), shape=(dim, dim)))


# ---------------------------------------------------------------------------
# permutations


def _check_bijection(images: Sequence[int]) -> None:
    if sorted(images) != list(range(1, len(images) + 1)):
        raise NotABijection(f"{tuple(images)} is not a permutation of 1..{len(images)}")


@dataclass(frozen=True)
class Permutation:
    """Element of S_L with a reduced word.

    ``images`` is the one-line form ``(sigma(1), ..., sigma(L))``.  The
    word ``adjacent_factors = (alpha_1, ..., alpha_p)`` satisfies
    ``sigma = s_{alpha_p} o ... o s_{alpha_1}`` where ``s_alpha`` exchanges
    ``alpha`` and ``alpha + 1`` and ``o`` is composition of maps.
    """

    images: tuple[int, ...]
    adjacent_factors: tuple[int, ...]

    @property
    def L(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def compose(self, other: "Permutation") -> "Permutation":
        """``self o other``, i.e. ``i -> self(other(i))``."""
        return minimal_decomposition([self(other(i)) for i in range(1, self.L + 1)])

    def inverse(self) -> "Permutation":
        inv = [0] * self.L
        for i, s in enumerate(self.images, 1):
            inv[s - 1] = i
        return minimal_decomposition(inv)

    def is_identity(self) -> bool:
        return not self.adjacent_factors


def inversion_count(images: Sequence[int]) -> int:
    return sum(1 for i in range(len(images)) for j in range(i + 1, len(images)) if images[i] > images[j])


def minimal_decomposition(images: Sequence[int]) -> Permutation:
    """Reduced word from a left-to-right bubble sort of ``images``."""
    images = tuple(int(s) for s in images)
    _check_bijection(images)
    work = list(images)
    factors = []
    changed = True
    while changed:
        changed = False
        for a in range(len(work) - 1):
            if work[a] > work[a + 1]:
                work[a], work[a + 1] = work[a + 1], work[a]
                factors.append(a + 1)
                changed = True
    return Permutation(images, tuple(factors))


def recompose(factors: Sequence[int], L: int) -> tuple[int, ...]:
    """One-line form of ``s_{f_p} o ... o s_{f_1}``."""
    g = list(range(1, L + 1))
    for a in factors:
        g = [a + 1 if v == a else a if v == a + 1 else v for v in g]
    return tuple(g)


def all_permutations(L: int) -> list[Permutation]:
    return [minimal_decomposition(p) for p in itertools.permutations(range(1, L + 1))]


def p_sigma(sigma: Permutation, n: int) -> TensorOperator:
    """``P_{alpha_p} ... P_{alpha_1}`` built from the reduced word."""
    L = sigma.L
    out = TensorOperator.identity(n, L)
    for a in sigma.adjacent_factors:
        out = swap(a, a + 1, (n, L)) @ out
    return out


def permuted_sites(X_builder: Callable[[Sequence[str]], TensorOperator], sigma: Permutation, labels: Sequence[str]) -> TensorOperator:
    """``X_{sigma(1..L)}``: rebuild with rapidities ``labels[sigma(k)]`` then conjugate by ``P^{sigma}``."""
    permuted = [labels[s - 1] for s in sigma.images]
    X = X_builder(permuted)
    P = p_sigma(sigma, X.n)
    return P @ X @ P.transpose()


LocalFactory = Callable[[str, str], np.ndarray]


def r_sigma_generic(sigma: Permutation, local: LocalFactory, labels: Sequence[str], n: int) -> TensorOperator:
    """``P^{sigma} Rhat^{sigma^{-1}}`` for an arbitrary two-site factor ``local(x, y)``.

    The hatted factors ``P_{a,a+1} R_{a,a+1}`` are applied right to left; a
    position-to-label list follows the swaps so each ``R`` is evaluated at
    the rapidities currently sitting on positions ``a`` and ``a + 1``.
    """
    L = sigma.L
    if len(labels) != L:
        raise DimensionMismatch("one label per site required")
    pos = list(labels)
    acc = TensorOperator.identity(n, L)
    P_loc = swap_local(n)
    for a in reversed(sigma.adjacent_factors):
        hat = P_loc @ local(pos[a - 1], pos[a])
        acc = embed_local(hat, [a, a + 1], n, L) @ acc
        pos[a - 1], pos[a] = pos[a], pos[a - 1]
    return p_sigma(sigma, n) @ acc


def r_sigma(sigma: Permutation, table: WeightTable, labels: Sequence[str]) -> TensorOperator:
    """The operator ``R^{sigma}`` on sites carrying ``labels`` in order."""
    return r_sigma_generic(sigma, table.r_matrix, labels, table.rank)
