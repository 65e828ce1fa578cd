"""Monodromy matrices, their auxiliary-space blocks, and twisting into the F-basis.

The monodromy matrix is ``T_a(mu) = R_aL(mu, xi_L) ... R_a1(mu, xi_1)``.
Block ``(i, j)`` is the quantum-space operator ``<i|_a T |j>_a``.  For rank
three the blocks carry the names::

    A11 A12 B1
    A21 A22 B2
    C1  C2  D
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, DivisionNearZero
from .reports import DEFAULT_TOL, ResidualReport
from .tensor import TensorOperator, embed_r, local_weyl, product_operator
from .weights import EPS_SING, WeightTable

BLOCK_NAMES = {
    "A11": (1, 1), "A12": (1, 2), "B1": (1, 3),
    "A21": (2, 1), "A22": (2, 2), "B2": (2, 3),
    "C1": (3, 1), "C2": (3, 2), "D": (3, 3),
}


@dataclass(frozen=True)
class MonodromyBlocks:
    """Auxiliary-space blocks of a monodromy matrix, keyed by 1-based ``(i, j)``."""

    mu: str
    inhomogeneities: tuple[str, ...]
    blocks: Mapping[tuple[int, int], TensorOperator]

    def __getitem__(self, key: "str | tuple[int, int]") -> TensorOperator:
        if isinstance(key, str):
            key = BLOCK_NAMES[key]
        return self.blocks[key]

    def __getattr__(self, name: str) -> TensorOperator:
        if name in BLOCK_NAMES:
            return self.blocks[BLOCK_NAMES[name]]
        raise AttributeError(name)

    @property
    def n(self) -> int:
        return int(round(len(self.blocks) ** 0.5))

    def assemble(self) -> TensorOperator:
        """Reassemble ``T`` on ``aux (x) quantum`` with the auxiliary space first."""
        n = self.n
        L = len(self.inhomogeneities)
        grid = [[self.blocks[(i, j)].to_sparse() for j in range(1, n + 1)] for i in range(1, n + 1)]
        return TensorOperator(n, L + 1, sp.bmat(grid, format="csr"))


def _local_blocks(table: WeightTable, mu: str, xi: str) -> list[list[np.ndarray]]:
    n = table.rank
    R = table.r_matrix(mu, xi)
    return [[R[i * n:(i + 1) * n, j * n:(j + 1) * n] for j in range(n)] for i in range(n)]


def build_monodromy(table: WeightTable, mu: str, inhomogeneities: Sequence[str]) -> MonodromyBlocks:
    """Blocks of ``T_a(mu)`` over the sites carrying ``inhomogeneities``.

    Built site by site: ``T^(l)[i][j] = sum_k T^(l-1)[k][j] (x) r_l[i][k]``
    where ``r_l[i][k] = <i|_a R_al(mu, xi_l) |k>_a`` acts on the new site.
    """
    n = table.rank
    xs = tuple(inhomogeneities)
    if not xs:
        raise DimensionMismatch("need at least one site")
    r = _local_blocks(table, mu, xs[0])
    cur = [[sp.csr_matrix(r[i][j]) for j in range(n)] for i in range(n)]
    for xi in xs[1:]:
        r = _local_blocks(table, mu, xi)
        rs = [[sp.csr_matrix(r[i][k]) for k in range(n)] for i in range(n)]
        nxt = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = None
                for k in range(n):
                    if rs[i][k].nnz == 0 or cur[k][j].nnz == 0:
                        continue
                    term = sp.kron(cur[k][j], rs[i][k], format="csr")
                    acc = term if acc is None else acc + term
                if acc is None:
                    acc = sp.csr_matrix((cur[0][0].shape[0] * n, cur[0][0].shape[0] * n), dtype=complex)
                row.append(acc)
            nxt.append(row)
        cur = nxt
    L = len(xs)
    blocks = {(i + 1, j + 1): TensorOperator(n, L, cur[i][j]) for i in range(n) for j in range(n)}
    return MonodromyBlocks(mu, xs, blocks)


def apply_block(
    table: WeightTable, mu: str, inhomogeneities: Sequence[str], block: "str | tuple[int, int]", vec: np.ndarray
) -> np.ndarray:
    """``<i|_a T_a(mu) |j>_a`` applied to ``vec`` without forming the operator.

    The state ``|j>_a (x) vec`` is swept through ``R_a1, ..., R_aL`` as a
    rank ``L + 1`` tensor; the auxiliary row ``i`` is read off at the end.
    """
    i, j = BLOCK_NAMES[block] if isinstance(block, str) else block
    n = table.rank
    xs = tuple(inhomogeneities)
    L = len(xs)
    vec = np.asarray(vec, dtype=complex)
    if vec.shape != (n**L,):
        raise DimensionMismatch(f"vector of shape {vec.shape} on {L} sites of dimension {n}")
    psi = np.zeros((n,) + (n,) * L, complex)
    psi[j - 1] = vec.reshape((n,) * L)
    for k, xi in enumerate(xs, 1):
        R = table.r_matrix(mu, xi).reshape(n, n, n, n)
        psi = np.tensordot(R, psi, axes=([2, 3], [0, k]))
        psi = np.moveaxis(psi, 1, k)
    return psi[i - 1].reshape(-1)


def monodromy_operator(
    table: WeightTable, mu: str, inhomogeneities: Sequence[str], aux_site: int = 1, extra_aux: int = 0
) -> TensorOperator:
    """``T_a(mu)`` as one operator on ``1 + extra_aux`` auxiliary sites followed by the chain.

    ``aux_site`` selects which of the leading auxiliary sites carries ``a``.
    """
    n = table.rank
    L = len(inhomogeneities)
    lead = 1 + extra_aux
    dims = (n, lead + L)
    T = TensorOperator.identity(*dims)
    for k, xi in enumerate(inhomogeneities, 1):
        T = embed_r(table, (aux_site, lead + k), (mu, xi), dims) @ T
    return T


# ---------------------------------------------------------------------------
# twisting


def twist(X: TensorOperator, bundle) -> TensorOperator:
    """``curly_F X curly_F^{-1}`` using the bundle of :mod:`fbasis.fmatrix`."""
    if X.dims != bundle.curly_f.dims:
        raise DimensionMismatch("operator and F-matrix act on different spaces")
    return bundle.curly_f @ X @ bundle.curly_f_inverse


class Theta:
    """``theta_i(xi_j, xi_k) = a_i(xi_j, xi_k)`` if ``j < k`` else 1, by site position."""

    def __init__(self, table: WeightTable, inhomogeneities: Sequence[str]) -> None:
        self.table = table
        self.xs = tuple(inhomogeneities)

    def __call__(self, i: int, j: int, k: int) -> complex:
        if j < k:
            return self.table.weight((self.xs[j - 1], self.xs[k - 1]), f"a{i}")
        return 1.0 + 0j


def _guarded(table: WeightTable) -> Callable[[tuple[str, str], str], complex]:
    def den(pair: tuple[str, str], kind: str) -> complex:
        v = table.weight(pair, kind)
        if abs(v) < EPS_SING:
            raise DivisionNearZero(f"{kind}{pair} = {v:.3g} enters a denominator")
        return v

    return den


def conjectured_twisted(kind: str, table: WeightTable, mu: str, inhomogeneities: Sequence[str]) -> TensorOperator:
    """Closed quasilocal form of the twisted block ``kind`` in D, C2, B2, C1, B1.

    Sites are referred to by their position ``1..L`` in ``inhomogeneities``;
    the theta functions compare those positions.

    Raises
    ------
    DivisionNearZero
        When a dressing denominator is below ``EPS_SING``.
    """
    if table.rank != 3:
        raise DimensionMismatch("closed forms exist for the rank-3 model only")
    xs = tuple(inhomogeneities)
    L = len(xs)
    th = Theta(table, xs)
    W = table.weight
    den = _guarded(table)

    def w(k: str, i: int) -> complex:
        return W((mu, xs[i - 1]), k)

    def x(k: str, i: int, j: int) -> complex:
        return W((xs[i - 1], xs[j - 1]), k)

    def dx(k: str, i: int, j: int) -> complex:
        return den((xs[i - 1], xs[j - 1]), k)

    def diag(*v) -> np.ndarray:
        return np.diag(np.array(v, complex))

    def single(coef: Callable[[int], complex], e: tuple[int, int], dressing: Callable[[int, int], np.ndarray]) -> TensorOperator:
        total = TensorOperator.zeros(3, L)
        for l in range(1, L + 1):
            factors = [local_weyl(*e, 3) if i == l else dressing(i, l) for i in range(1, L + 1)]
            total = total + product_operator(factors) * coef(l)
        return total

    def double(coef, e1, e2, dressing) -> TensorOperator:
        total = TensorOperator.zeros(3, L)
        for l1 in range(1, L + 1):
            for l2 in range(1, L + 1):
                if l1 == l2:
                    continue
                factors = []
                for i in range(1, L + 1):
                    if i == l1:
                        factors.append(local_weyl(*e1, 3))
                    elif i == l2:
                        factors.append(local_weyl(*e2, 3))
                    else:
                        factors.append(dressing(i, l1, l2))
                total = total + product_operator(factors) * coef(l1, l2)
        return total

    if kind == "D":
        return product_operator([diag(w("b31", i), w("b32", i), w("a3", i)) for i in range(1, L + 1)])
    if kind == "C2":
        return single(
            lambda l: w("c32", l),
            (2, 3),
            lambda i, l: diag(w("b21", i), w("b32", i) / (dx("b32", l, i) * th(2, i, l)), w("a3", i) * th(3, i, l)),
        )
    if kind == "B2":
        return single(
            lambda l: w("c23", l),
            (3, 2),
            lambda i, l: diag(w("b31", i), w("b32", i) * th(2, l, i), w("a3", i) / (dx("b32", i, l) * th(3, l, i))),
        )
    if kind == "C1":
        first = single(
            lambda l: w("c31", l),
            (1, 3),
            lambda i, l: diag(
                w("b21", i) / (dx("b21", l, i) * th(1, i, l)),
                w("b32", i) / dx("b32", l, i),
                w("a3", i) * th(3, i, l),
            ),
        )
        second = double(
            lambda l1, l2: w("c31", l1) * w("b32", l2) * x("c21", l1, l2) / dx("b32", l1, l2),
            (2, 3),
            (1, 2),
            lambda i, l1, l2: diag(
                w("b21", i) / (dx("b21", l2, i) * th(1, i, l2)),
                w("b32", i) * th(2, i, l2) / (dx("b32", l1, i) * th(2, i, l1)),
                w("a3", i) * th(3, i, l1),
            ),
        )
        return first + second
    if kind == "B1":
        first = single(
            lambda l: w("c13", l),
            (3, 1),
            lambda i, l: diag(
                w("b31", i) * th(1, l, i),
                w("b32", i) / dx("b21", i, l),
                w("a3", i) / (dx("b31", i, l) * th(3, l, i)),
            ),
        )
        second = double(
            lambda l1, l2: w("c13", l1) * w("b32", l2) * x("c12", l1, l2) / dx("b21", l1, l2),
            (3, 2),
            (2, 1),
            lambda i, l1, l2: diag(
                w("b31", i) * th(1, l2, i),
                w("b32", i) * th(2, l1, i) / (dx("b21", i, l2) * th(2, l2, i)),
                w("a3", i) / (dx("b31", i, l1) * th(3, l1, i)),
            ),
        )
        return first + second
    raise ValueError(f"no closed form for block {kind!r}")


# ---------------------------------------------------------------------------
# vanishing two-site entries

#: Weyl-pair position ``(row digits, column digits)`` of each entry that must vanish.
KAPPA_ZERO_POSITIONS = {
    "kappa.D.1": ("D", (2, 1), (1, 2)),
    "kappa.D.2": ("D", (3, 1), (1, 3)),
    "kappa.D.3": ("D", (3, 2), (2, 3)),
    "kappa.C2.7": ("C2", (2, 1), (1, 3)),
    "kappa.B2.7": ("B2", (3, 1), (1, 2)),
}


def kappa_zero_expressions(table: WeightTable, mu: str, x1: str, x2: str) -> dict[str, list[complex]]:
    """Terms of the two-site entries that vanish by the weight relations.

    Each value is the list of terms whose sum is the entry as produced by
    twisting, before any relation is applied.
    """
    W = table.weight

    def m(k, x):
        return W((mu, x), k)

    def x(k):
        return W((x1, x2), k)

    return {
        "kappa.D.1": [x("c21") * m("b31", x1) * m("b32", x2), -x("c21") * m("b32", x1) * m("b31", x2)],
        "kappa.D.2": [
            m("b31", x1) * m("a3", x2) * x("c31"),
            m("c13", x1) * m("c31", x2) * x("b31"),
            -m("a3", x1) * m("b31", x2) * x("c31"),
        ],
        "kappa.D.3": [
            m("b32", x1) * m("a3", x2) * x("c32"),
            m("c23", x1) * m("c32", x2) * x("b32"),
            -m("a3", x1) * m("b32", x2) * x("c32"),
        ],
        "kappa.C2.7": [
            m("b21", x1) * m("c32", x2) * x("c21"),
            m("c12", x1) * m("c31", x2) * x("b21"),
            -m("c32", x1) * m("b31", x2) * x("b21") * x("c31") / x("b31"),
        ],
        "kappa.B2.7": [
            m("c13", x1) * m("c21", x2) * x("b31"),
            m("b31", x1) * m("c23", x2) * x("c31"),
            -m("c23", x1) * m("b21", x2) * x("b31") * x("c21") / x("b21"),
        ],
    }


def check_kappa_zeros(
    table: WeightTable, mu: str, inhomogeneities: Sequence[str], bundle, tol: float = 1e-10
) -> list[ResidualReport]:
    """Two reports per vanishing entry: the weight expression and the twisted matrix element.

    Both are judged on absolute magnitude.
    """
    x1, x2 = inhomogeneities
    blocks = build_monodromy(table, mu, (x1, x2))
    exprs = kappa_zero_expressions(table, mu, x1, x2)
    out = []
    for name, (block, row, col) in KAPPA_ZERO_POSITIONS.items():
        terms = exprs[name]
        total = abs(sum(terms))
        out.append(ResidualReport.from_values(f"{name}.expression", total, 1.0, tol, row + col, (mu, x1, x2)))
        entry = twist(blocks[block], bundle).element(row, col)
        out.append(ResidualReport.from_values(f"{name}.entry", abs(entry), 1.0, tol, row + col, (mu, x1, x2)))
    return out


TWISTED_KINDS = ("D", "C2", "B2", "C1", "B1")


def check_twisted(
    table: WeightTable,
    mu: str,
    inhomogeneities: Sequence[str],
    bundle,
    kinds: Sequence[str] = TWISTED_KINDS,
    tol: float = DEFAULT_TOL,
    note: str = "",
) -> list[ResidualReport]:
    """Compare ``twist(block)`` with its closed quasilocal form for each kind."""
    xs = tuple(inhomogeneities)
    blocks = build_monodromy(table, mu, xs)
    out = []
    for kind in kinds:
        lhs = twist(blocks[kind], bundle)
        rhs = conjectured_twisted(kind, table, mu, xs)
        scale = max(lhs.max_abs(), rhs.max_abs())
        out.append(
            ResidualReport.from_values(f"twist.{kind}:L={len(xs)}", lhs.distance(rhs), scale, tol, (), (mu,) + xs, note)
        )
    return out
