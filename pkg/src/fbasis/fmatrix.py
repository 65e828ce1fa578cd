"""Factorizing F-matrices ``F = N curly_F`` and the diagonal twisted R-matrices.

``curly_F`` sums, over permutations ``sigma``, the projectors onto index
sequences ``alpha`` that are non-decreasing along ``sigma`` (strictly where
``sigma`` descends) times ``R^{sigma}``.  Each multi-index ``alpha`` is
admitted by exactly one ``sigma``: the stable sort order of its digits.
The builder therefore takes every row of ``curly_F`` from the single
``R^{sigma}`` that owns it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import BranchCut, SingularDiagonal
from .reports import DEFAULT_TOL, ResidualReport
from .tensor import (
    Permutation,
    TensorOperator,
    all_permutations,
    digit_table,
    embed_local,
    minimal_decomposition,
    p_sigma,
    permuted_sites,
    r_sigma,
    r_sigma_generic,
)
from .weights import WeightTable

BRANCH_TOL = 1e-12
DIAG_TOL = 1e-12


def ordered_index_rule(sigma: Permutation) -> tuple[bool, ...]:
    """Strictness flags along ``sigma``: ``True`` where ``sigma(i) > sigma(i+1)``."""
    s = sigma.images
    return tuple(s[i] > s[i + 1] for i in range(len(s) - 1))


def admits(sigma: Permutation, digits: Sequence[int]) -> bool:
    """Whether ``digits`` (the sequence alpha) is summed with ``sigma``."""
    seq = [digits[p - 1] for p in sigma.images]
    for k, strict in enumerate(ordered_index_rule(sigma)):
        if seq[k] > seq[k + 1] or (strict and seq[k] == seq[k + 1]):
            return False
    return True


def owner_permutations(n: int, L: int) -> dict[tuple[int, ...], np.ndarray]:
    """Rows of the ``n**L`` basis grouped by the permutation admitting them."""
    dig = digit_table(n, L)
    order = np.argsort(dig, axis=1, kind="stable") + 1
    groups: dict[tuple[int, ...], list[int]] = {}
    for r, key in enumerate(map(tuple, order.tolist())):
        groups.setdefault(key, []).append(r)
    return {k: np.array(v) for k, v in groups.items()}


def build_curly_f(table: WeightTable, labels: Sequence[str]) -> TensorOperator:
    """``curly_F`` on sites carrying ``labels``."""
    n, L = table.rank, len(labels)
    dim = n**L
    if L <= 1:
        return TensorOperator.identity(n, max(L, 1))
    rows, cols, vals = [], [], []
    for images, members in sorted(owner_permutations(n, L).items()):
        sigma = minimal_decomposition(images)
        if sigma.is_identity():
            rows.append(members)
            cols.append(members)
            vals.append(np.ones(members.size, complex))
            continue
        block = sp.coo_matrix(r_sigma(sigma, table, labels).to_sparse()[members])
        rows.append(members[block.row])
        cols.append(block.col)
        vals.append(block.data)
    M = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim), dtype=complex
    )
    return TensorOperator(n, L, M)


def _sqrt(a: complex, what: str) -> complex:
    if a.real < 0 and abs(a.imag) <= BRANCH_TOL * max(abs(a), 1.0):
        raise BranchCut(f"{what} = {a:.6g} lies on the branch cut of the square root")
    return complex(np.sqrt(a))


def pair_n_diagonal(table: WeightTable, x: str, y: str, i: int, j: int, L: int, power: float = 0.5) -> np.ndarray:
    """Diagonal of the pairwise factor on sites ``i, j``: ``a_k(x, y)**power`` where both digits equal ``k``."""
    n = table.rank
    dig = digit_table(n, L)
    d = np.ones(n**L, complex)
    co = dig[:, i - 1] == dig[:, j - 1]
    vals = []
    for k in range(1, n + 1):
        a = table.weight((x, y), f"a{k}")
        vals.append(_sqrt(a, f"a{k}({x}, {y})") if power == 0.5 else a**power)
    d[co] = np.array(vals)[dig[co, i - 1]]
    return d


def build_n_matrix(table: WeightTable, labels: Sequence[str]) -> TensorOperator:
    """Ordered product ``N_{(L-1)L} ... N_{1,2..L}`` of pairwise diagonal factors.

    ``N_{i,(i+1)..L} = N_{iL} ... N_{i(i+1)}``; each factor carries the
    principal square root of ``a_k`` on its coincidence subspace.
    """
    n, L = table.rank, len(labels)
    d = np.ones(n**L, complex)
    for i in range(1, L + 1):
        for j in range(i + 1, L + 1):
            d = pair_n_diagonal(table, labels[i - 1], labels[j - 1], i, j, L) * d
    return TensorOperator.diagonal(n, L, d)


def curly_r_local(table: WeightTable):
    n = table.rank

    def local(x: str, y: str) -> np.ndarray:
        d = np.ones(n * n, complex)
        for k in range(n):
            d[k * n + k] = table.weight((x, y), f"a{k + 1}")
        return np.diag(d)

    return local


def build_curly_r_sigma(sigma: Permutation, table: WeightTable, labels: Sequence[str]) -> TensorOperator:
    """Diagonal counterpart of ``R^{sigma}`` built from the pairwise factors ``diag(a_k)``."""
    return r_sigma_generic(sigma, curly_r_local(table), labels, table.rank)


def build_hat_word(sigma: Permutation, local, labels: Sequence[str], n: int) -> TensorOperator:
    """``Rhat^{sigma^{-1}}``: the hatted product without the trailing ``P^{sigma}``."""
    full = r_sigma_generic(sigma, local, labels, n)
    return p_sigma(sigma, n).transpose() @ full


@dataclass(frozen=True)
class FMatrixBundle:
    labels: tuple[str, ...]
    curly_f: TensorOperator
    n_matrix: TensorOperator
    f: TensorOperator
    f_inverse: TensorOperator
    curly_f_inverse: TensorOperator


def lower_triangular_inverse(M: TensorOperator) -> TensorOperator:
    """Inverse of a lower-triangular operator by forward substitution.

    Raises
    ------
    SingularDiagonal
        If a diagonal entry is below ``1e-12`` in magnitude.
    """
    D = M.to_dense()
    diag = np.diagonal(D)
    bad = np.flatnonzero(np.abs(diag) < DIAG_TOL)
    if bad.size:
        raise SingularDiagonal(f"diagonal entry {bad[0]} has magnitude {abs(diag[bad[0]]):.3g}")
    inv = scipy.linalg.solve_triangular(D, np.eye(D.shape[0], dtype=complex), lower=True)
    return TensorOperator.from_dense(M.n, M.L, inv)


def build_f_bundle(table: WeightTable, labels: Sequence[str]) -> FMatrixBundle:
    cf = build_curly_f(table, labels)
    N = build_n_matrix(table, labels)
    F = N @ cf
    cf_inv = lower_triangular_inverse(cf)
    Ninv = TensorOperator.diagonal(N.n, N.L, 1.0 / N.diagonal_entries())
    return FMatrixBundle(tuple(labels), cf, N, F, cf_inv @ Ninv, cf_inv)


def is_lower_triangular(op: TensorOperator) -> bool:
    coo = sp.coo_matrix(op.matrix)
    return bool(np.all(coo.row >= coo.col)) and bool(np.all(op.diagonal_entries() != 0))


def _choose_sigmas(L: int, sigmas, seed) -> list[Permutation]:
    if sigmas in (None, "all"):
        return all_permutations(L)
    if isinstance(sigmas, int):
        rng = random.Random(seed)
        base = list(range(1, L + 1))
        out = []
        for _ in range(sigmas):
            rng.shuffle(base)
            out.append(minimal_decomposition(base))
        return out
    return [s if isinstance(s, Permutation) else minimal_decomposition(s) for s in sigmas]


def verify_factorization(
    table: WeightTable,
    labels: Sequence[str],
    sigmas="all",
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    executor=None,
) -> list[ResidualReport]:
    """Residual of ``F_{sigma(1..L)} R^{sigma} = F`` per permutation.

    ``sigmas`` is ``"all"``, a sample size, or an explicit list.  The
    permuted F-matrix is rebuilt with the permuted rapidity list and then
    conjugated by ``P^{sigma}``.
    """
    labels = tuple(labels)
    F = build_f_bundle(table, labels).f

    def build(lbls):
        return build_f_bundle(table, lbls).f

    def one(sigma: Permutation) -> ResidualReport:
        Fs = permuted_sites(build, sigma, labels)
        lhs = Fs @ r_sigma(sigma, table, labels)
        rid = "factorization:{" + ",".join(map(str, sigma.images)) + "}"
        return ResidualReport.from_values(rid, lhs.distance(F), max(lhs.max_abs(), F.max_abs()), tol, sigma.images, labels)

    chosen = _choose_sigmas(len(labels), sigmas, seed)
    if executor is not None:
        return list(executor.map(one, chosen))
    return [one(s) for s in chosen]


def verify_n_ratio(table: WeightTable, labels: Sequence[str], tol: float = DEFAULT_TOL) -> list[ResidualReport]:
    """``N^{-1}_{sigma(1..L)} N = curly_R^{sigma}`` for every permutation."""
    labels = tuple(labels)
    N = build_n_matrix(table, labels)
    out = []
    for sigma in all_permutations(len(labels)):
        Ns = permuted_sites(lambda l: build_n_matrix(table, l), sigma, labels)
        lhs = TensorOperator.diagonal(N.n, N.L, 1.0 / Ns.diagonal_entries()) @ N
        rhs = build_curly_r_sigma(sigma, table, labels)
        rid = "n_ratio:{" + ",".join(map(str, sigma.images)) + "}"
        out.append(ResidualReport.from_values(rid, lhs.distance(rhs), max(lhs.max_abs(), rhs.max_abs()), tol, sigma.images, labels))
    return out


def curly_r_global_unitarity(table: WeightTable, labels: Sequence[str], tol: float = DEFAULT_TOL) -> ResidualReport:
    """``curly_R_{1,2..L} curly_R_{2..L,1} = identity``."""
    n, L = table.rank, len(labels)
    loc = curly_r_local(table)
    left = TensorOperator.identity(n, L)
    right = TensorOperator.identity(n, L)
    for k in range(2, L + 1):
        left = embed_local(loc(labels[0], labels[k - 1]), [1, k], n, L) @ left
        right = right @ embed_local(loc(labels[k - 1], labels[0]), [k, 1], n, L)
    prod = left @ right
    I = TensorOperator.identity(n, L)
    return ResidualReport.from_values("curly_r.global_unitarity", prod.distance(I), 1.0, tol, (), tuple(labels))


def verify_hat_form(table: WeightTable, labels: Sequence[str], tol: float = DEFAULT_TOL) -> list[ResidualReport]:
    """``curly_F^{-1} curly_Rhat^{sigma^{-1}} curly_F = Rhat^{sigma^{-1}}`` for every permutation.

    The inverse on the left is taken at the permuted rapidity list
    ``labels[sigma(1)], ..., labels[sigma(L)]``; the right factor at ``labels``.
    """
    labels = tuple(labels)
    b = build_f_bundle(table, labels)
    n = table.rank
    out = []
    for sigma in all_permutations(len(labels)):
        permuted = [labels[s - 1] for s in sigma.images]
        left = build_f_bundle(table, permuted).curly_f_inverse
        lhs = left @ build_hat_word(sigma, curly_r_local(table), labels, n) @ b.curly_f
        rhs = build_hat_word(sigma, table.r_matrix, labels, n)
        rid = "hat_form:{" + ",".join(map(str, sigma.images)) + "}"
        out.append(ResidualReport.from_values(rid, lhs.distance(rhs), max(lhs.max_abs(), rhs.max_abs()), tol, sigma.images, labels))
    return out
