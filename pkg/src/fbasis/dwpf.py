"""Domain wall partition functions of the rank-3 model.

Every single-type DWPF is evaluated three ways:

* ``direct``: monodromy blocks applied to reference states (the oracle);
* ``recurrence``: peel one auxiliary rapidity and one site per step;
* ``exact``: the closed permutation sum over site assignments.

The single kinds are::

    C2: <2..2| C2(nu_L) ... C2(nu_1) |3..3>
    B2: <3..3| B2(mu_1) ... B2(mu_L) |2..2>
    C1: <1..1| C1(nu_L) ... C1(nu_1) |3..3>
    B1: <3..3| B1(mu_1) ... B1(mu_L) |1..1>

The mixed kinds put ``M`` type-1 operators next to the ``|3>`` reference
state and a pattern with ``|1>`` at the positions ``q`` and ``|2>``
elsewhere on the other side.  Their closed formulas sum over position sets
``p`` and carry one matrix element of ``curly_F`` or its inverse.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from ._kernels import compensated_sum, perm_sum
from .errors import (
    DimensionMismatch,
    DivisionNearZero,
    InsufficientRapidities,
    UnknownKind,
)
from .fmatrix import FMatrixBundle, build_f_bundle
from .monodromy import Theta, apply_block, build_monodromy
from .reports import DEFAULT_TOL, ResidualReport
from .tensor import basis_vector
from .weights import EPS_SING, RapiditySet, WeightTable, random_del_pezzo

SINGLE_KINDS = ("C2", "B2", "C1", "B1")
MIXED_KINDS = ("mixedC", "mixedB")
EXACT_MAX_L = 7


@dataclass(frozen=True)
class _KindData:
    block: tuple[int, int]
    c: str
    b: str
    theta_num: int
    theta_den: int
    bra: int
    ket: int
    creation: bool  # C-type operators act on the ket in the order nu_1, nu_2, ...


_KINDS = {
    "C2": _KindData((3, 2), "c32", "b32", 3, 2, 2, 3, True),
    "B2": _KindData((2, 3), "c23", "b32", 2, 3, 3, 2, False),
    "C1": _KindData((3, 1), "c31", "b21", 3, 1, 1, 3, True),
    "B1": _KindData((1, 3), "c13", "b31", 1, 3, 3, 1, False),
}


def _kind(kind: str) -> _KindData:
    try:
        return _KINDS[kind]
    except KeyError:
        raise UnknownKind(f"unknown single DWPF kind {kind!r}") from None


@dataclass(frozen=True)
class ReferenceState:
    """Product state with local state ``pattern[k]`` on site ``k + 1``."""

    pattern: tuple[int, ...]

    @classmethod
    def uniform(cls, state: int, L: int) -> "ReferenceState":
        return cls((state,) * L)

    @classmethod
    def with_ones(cls, positions: Sequence[int], L: int, rest: int = 2) -> "ReferenceState":
        """``|1>`` at the 1-based ``positions`` and ``|rest>`` elsewhere."""
        pos = set(positions)
        return cls(tuple(1 if k in pos else rest for k in range(1, L + 1)))

    @property
    def L(self) -> int:
        return len(self.pattern)

    def vector(self, n: int = 3) -> np.ndarray:
        return basis_vector(self.pattern, n)


@dataclass(frozen=True)
class DwpfInstance:
    """A fully specified DWPF problem on labels of a weight table.

    ``aux`` holds the auxiliary rapidities ``nu`` (C kinds) or ``mu`` (B
    kinds) in index order.  For the mixed kinds ``M`` counts the type-1
    operators and ``q`` lists the 1-based positions of ``|1>`` in the mixed
    reference state.
    """

    kind: str
    aux: tuple[str, ...]
    inhomogeneities: tuple[str, ...]
    M: int = 0
    q: tuple[int, ...] = ()
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "aux", tuple(self.aux))
        object.__setattr__(self, "inhomogeneities", tuple(self.inhomogeneities))
        object.__setattr__(self, "q", tuple(int(x) for x in self.q))
        if self.kind not in SINGLE_KINDS + MIXED_KINDS:
            raise UnknownKind(f"unknown DWPF kind {self.kind!r}")
        L = self.L
        if self.kind in SINGLE_KINDS and (self.M or self.q):
            raise ValueError("M and q apply to the mixed kinds only")
        if not 0 <= self.M <= len(self.aux):
            raise ValueError(f"M={self.M} outside [0, {len(self.aux)}]")
        if list(self.q) != sorted(set(self.q)) or any(not 1 <= x <= L for x in self.q):
            raise ValueError(f"q must be strictly increasing positions in [1, {L}]")

    @property
    def L(self) -> int:
        return len(self.inhomogeneities)

    @property
    def is_mixed(self) -> bool:
        return self.kind in MIXED_KINDS

    def to_document(self) -> dict:
        doc = {"kind": self.kind, "L": self.L, "aux": list(self.aux), "inhomogeneities": list(self.inhomogeneities)}
        if self.is_mixed:
            doc["M"] = self.M
            doc["q"] = list(self.q)
        if self.seed is not None:
            doc["seed"] = self.seed
        return doc

    @classmethod
    def from_document(cls, doc: "Mapping | str") -> "DwpfInstance":
        if isinstance(doc, str):
            doc = json.loads(doc)
        L = int(doc["L"])
        kind = doc["kind"]
        prefix = "nu" if kind in ("C2", "C1", "mixedC") else "mu"
        aux = doc.get("aux") or [f"{prefix}{k}" for k in range(1, L + 1)]
        xs = doc.get("inhomogeneities") or [f"xi{k}" for k in range(1, L + 1)]
        if len(xs) != L:
            raise DimensionMismatch(f"L={L} but {len(xs)} inhomogeneities given")
        return cls(kind, aux, xs, int(doc.get("M", 0)), doc.get("q", ()), doc.get("seed"))


def standard_instance(kind: str, L: int, M: int = 0, q: Sequence[int] = (), seed: int | None = None) -> DwpfInstance:
    """Instance on labels ``xi1..xiL`` and ``nu1..nuL`` (C kinds) or ``mu1..muL`` (B kinds)."""
    prefix = "nu" if kind in ("C2", "C1", "mixedC") else "mu"
    return DwpfInstance(kind, [f"{prefix}{k}" for k in range(1, L + 1)], [f"xi{k}" for k in range(1, L + 1)], M, q, seed)


def random_instance(
    kind: str, L: int, seed: int, M: int = 0, q: Sequence[int] = ()
) -> tuple[DwpfInstance, WeightTable]:
    """Standard instance with a seeded del Pezzo table covering its labels."""
    inst = standard_instance(kind, L, M, q, seed)
    table, _ = random_del_pezzo(RapiditySet(inst.inhomogeneities, inst.aux), seed)
    return inst, table


# ---------------------------------------------------------------------------
# direct contraction


def _apply_sequence(table: WeightTable, ops: Sequence[tuple[str, tuple[int, int]]], xs: Sequence[str], ket: np.ndarray) -> np.ndarray:
    """Apply ``ops`` to ``ket`` in list order; each op is ``(aux label, block)``."""
    v = ket
    for label, block in ops:
        v = apply_block(table, label, xs, block, v)
    return v


def _single_direct(kind: str, table: WeightTable, aux: Sequence[str], xs: Sequence[str]) -> complex:
    kd = _kind(kind)
    L = len(xs)
    ket = ReferenceState.uniform(kd.ket, L).vector(table.rank)
    bra = ReferenceState.uniform(kd.bra, L).vector(table.rank)
    order = list(aux) if kd.creation else list(aux)[::-1]
    v = _apply_sequence(table, [(a, kd.block) for a in order], xs, ket)
    return complex(bra @ v)


def dwpf_direct(inst: DwpfInstance, table: WeightTable) -> complex:
    """Brute-force contraction of untwisted monodromy blocks with reference states.

    Mismatched charge sectors (for example more operators than sites) give 0.
    """
    xs, L, n = inst.inhomogeneities, inst.L, table.rank
    if inst.kind in SINGLE_KINDS:
        return _single_direct(inst.kind, table, inst.aux, xs)
    mixed = ReferenceState.with_ones(inst.q, L).vector(n)
    uniform3 = ReferenceState.uniform(3, L).vector(n)
    if inst.kind == "mixedC":
        # C2(nu_L) ... C2(nu_{M+1}) C1(nu_M) ... C1(nu_1) |3>
        ops = [(a, (3, 1)) for a in inst.aux[: inst.M]] + [(a, (3, 2)) for a in inst.aux[inst.M:]]
        return complex(mixed @ _apply_sequence(table, ops, xs, uniform3))
    # <3| B1(mu_1) ... B1(mu_M) B2(mu_{M+1}) ... B2(mu_L) |mixed>
    ops = [(a, (1, 3)) for a in inst.aux[: inst.M]] + [(a, (2, 3)) for a in inst.aux[inst.M:]]
    return complex(uniform3 @ _apply_sequence(table, ops[::-1], xs, mixed))


# ---------------------------------------------------------------------------
# recurrence and exact sum


def _den(table: WeightTable, pair: tuple[str, str], kind: str) -> complex:
    v = table.weight(pair, kind)
    if abs(v) < EPS_SING:
        raise DivisionNearZero(f"{kind}({pair[0]}, {pair[1]}) = {v:.3g} enters a denominator")
    return v


def kernel_matrices(kind: str, table: WeightTable, aux: Sequence[str], xs: Sequence[str]):
    """Matrices ``C, A, B, H`` of the permutation sum for a single kind.

    ``C[i, s] = c(v_i, x_s)``, ``A[i, s] = a3(v_i, x_s)``, ``B[i, s] = b(v_i, x_s)``
    and ``H[s, t] = theta_u(x_s, x_t) / (b(x_s, x_t) theta_w(x_t, x_s))`` for
    ``s != t``, with theta comparing positions in ``xs``.
    """
    kd = _kind(kind)
    L = len(xs)
    if len(aux) != L:
        raise InsufficientRapidities(f"{kind} needs {L} auxiliary rapidities, got {len(aux)}")
    W = table.weight
    th = Theta(table, xs)
    C = np.array([[W((v, x), kd.c) for x in xs] for v in aux], complex).reshape(L, L)
    A = np.array([[W((v, x), "a3") for x in xs] for v in aux], complex).reshape(L, L)
    B = np.array([[W((v, x), kd.b) for x in xs] for v in aux], complex).reshape(L, L)
    H = np.ones((L, L), complex)
    for s in range(L):
        for t in range(L):
            if s != t:
                H[s, t] = th(kd.theta_num, s + 1, t + 1) / (_den(table, (xs[s], xs[t]), kd.b) * th(kd.theta_den, t + 1, s + 1))
    return C, A, B, H


def _single_exact(kind: str, table: WeightTable, aux: Sequence[str], xs: Sequence[str], max_L: int = EXACT_MAX_L) -> complex:
    L = len(xs)
    if L == 0:
        return 1.0 + 0j
    if L > max_L:
        raise ValueError(f"exact sum capped at L={max_L}; use the recurrence")
    return perm_sum(*kernel_matrices(kind, table, aux, xs))


def _single_recurrence(kind: str, table: WeightTable, aux: Sequence[str], xs: Sequence[str]) -> complex:
    L = len(xs)
    if L == 0:
        return 1.0 + 0j
    C, A, B, H = kernel_matrices(kind, table, aux, xs)

    @lru_cache(maxsize=None)
    def Z(d: int, rest: tuple[int, ...]) -> complex:
        if len(rest) == 1:
            return complex(C[d, rest[0]])
        terms = []
        for p in rest:
            others = [i for i in rest if i != p]
            coef = C[d, p] * np.prod(A[d, others] * H[others, p]) * np.prod(B[d + 1:, p])
            terms.append(coef * Z(d + 1, tuple(others)))
        return compensated_sum(np.array(terms))

    return Z(0, tuple(range(L)))


def _require_single(inst: DwpfInstance) -> None:
    if inst.kind not in SINGLE_KINDS:
        raise UnknownKind(f"{inst.kind} has no single-type recurrence; use mixed_dwpf_formula")


def dwpf_recurrence(inst: DwpfInstance, table: WeightTable) -> complex:
    """Recurrence removing the first auxiliary rapidity and one site per level."""
    _require_single(inst)
    return _single_recurrence(inst.kind, table, inst.aux, inst.inhomogeneities)


def dwpf_exact(inst: DwpfInstance, table: WeightTable, max_L: int = EXACT_MAX_L) -> complex:
    """``L!``-term permutation sum; refuses ``L > max_L``."""
    _require_single(inst)
    return _single_exact(inst.kind, table, inst.aux, inst.inhomogeneities, max_L)


# ---------------------------------------------------------------------------
# mixed kinds


def f_sandwich(bundle: FMatrixBundle, bra: Sequence[int], ket: Sequence[int], use_inverse: bool = False) -> complex:
    """``<bra| curly_F |ket>`` or, with ``use_inverse``, ``<bra| curly_F^{-1} |ket>``."""
    op = bundle.curly_f_inverse if use_inverse else bundle.curly_f
    if len(bra) != op.L or len(ket) != op.L:
        raise DimensionMismatch(f"patterns of length {len(bra)}, {len(ket)} on {op.L} sites")
    return op.element(tuple(bra), tuple(ket))


def mixed_dwpf_formula(inst: DwpfInstance, table: WeightTable, bundle: FMatrixBundle | None = None) -> complex:
    """Closed formula of a mixed DWPF as a sum over position sets ``p``.

    Each term is one ``curly_F`` (mixedB) or ``curly_F^{-1}`` (mixedC) matrix
    element, products of ``b`` and ``a3`` weights with theta dressings, and the
    single DWPFs ``Z_M`` of type 1 on ``(aux[:M], xs[p])`` and ``Z_{L-M}`` of
    type 2 on ``(aux[M:], xs[not p])``, both keeping the original site order.
    """
    if not inst.is_mixed:
        raise UnknownKind(f"{inst.kind} is not a mixed kind")
    xs, L, M = inst.inhomogeneities, inst.L, inst.M
    if len(inst.aux) != L:
        raise InsufficientRapidities(f"mixed formula needs {L} auxiliary rapidities, got {len(inst.aux)}")
    if len(inst.q) != M:
        return 0.0 + 0j  # charge sectors differ
    if bundle is None:
        bundle = build_f_bundle(table, xs)
    W = table.weight
    th = Theta(table, xs)
    aux1, aux2 = inst.aux[:M], inst.aux[M:]
    q_pattern = ReferenceState.with_ones(inst.q, L).pattern
    is_c = inst.kind == "mixedC"
    terms = []
    for p in itertools.combinations(range(1, L + 1), M):
        rest = [l for l in range(1, L + 1) if l not in p]
        p_pattern = ReferenceState.with_ones(p, L).pattern
        if is_c:
            sandwich = f_sandwich(bundle, q_pattern, p_pattern, use_inverse=True)
        else:
            sandwich = f_sandwich(bundle, p_pattern, q_pattern)
        if sandwich == 0:
            continue
        coef = sandwich
        for v in aux2:
            for pj in p:
                coef *= W((v, xs[pj - 1]), "b21" if is_c else "b31")
        for k, v in enumerate(aux1):
            pk = p[k]
            for l in rest:
                if is_c:
                    coef *= W((v, xs[l - 1]), "a3") * th(3, l, pk)
                else:
                    coef *= W((v, xs[l - 1]), "a3") / (_den(table, (xs[l - 1], xs[pk - 1]), "b31") * th(3, pk, l))
        z1 = _single_exact("C1" if is_c else "B1", table, aux1, [xs[i - 1] for i in p])
        z2 = _single_exact("C2" if is_c else "B2", table, aux2, [xs[i - 1] for i in rest])
        terms.append(coef * z1 * z2)
    return compensated_sum(np.array(terms, complex)) if terms else 0.0 + 0j


# ---------------------------------------------------------------------------
# exchange relations


def _exchange_operators(kind: str, table: WeightTable, mu: str, nu: str, xs: Sequence[str]):
    Tm = build_monodromy(table, mu, xs)
    Tn = build_monodromy(table, nu, xs)
    a3 = table.weight((mu, nu), "a3")
    b21 = _den(table, (mu, nu), "b21")
    if kind == "CC":
        # C1(nu) C2(mu) = a3/b21 C2(mu) C1(nu) - c12/b21 C2(nu) C1(mu)
        c = table.weight((mu, nu), "c12")
        return [Tn["C1"] @ Tm["C2"], Tm["C2"] @ Tn["C1"] * (-a3 / b21), Tn["C2"] @ Tm["C1"] * (c / b21)]
    if kind == "BB":
        # B2(mu) B1(nu) = a3/b21 B1(nu) B2(mu) - c21/b21 B1(mu) B2(nu)
        c = table.weight((mu, nu), "c21")
        return [Tm["B2"] @ Tn["B1"], Tn["B1"] @ Tm["B2"] * (-a3 / b21), Tm["B1"] @ Tn["B2"] * (c / b21)]
    raise UnknownKind(f"unknown exchange relation {kind!r}; expected CC or BB")


def commute_check(
    kind: str, table: WeightTable, mu: str, nu: str, inhomogeneities: Sequence[str], tol: float = DEFAULT_TOL
) -> ResidualReport:
    """Residual of the two-operator exchange relation ``CC`` or ``BB`` on the chain."""
    ops = _exchange_operators(kind, table, mu, nu, inhomogeneities)
    total = ops[0] + ops[1] + ops[2]
    scale = max(op.max_abs() for op in ops)
    return ResidualReport.from_values(
        f"exchange.{kind}", total.max_abs(), scale, tol, (), (mu, nu) + tuple(inhomogeneities)
    )


# ---------------------------------------------------------------------------
# route comparison


def route_values(inst: DwpfInstance, table: WeightTable, max_exact_L: int = EXACT_MAX_L) -> dict[str, complex]:
    """Every applicable route: direct plus recurrence/exact or the mixed formula."""
    out = {"direct": dwpf_direct(inst, table)}
    if inst.is_mixed:
        out["formula"] = mixed_dwpf_formula(inst, table)
    else:
        out["recurrence"] = dwpf_recurrence(inst, table)
        if inst.L <= max_exact_L:
            out["exact"] = dwpf_exact(inst, table, max_exact_L)
    return out


def agreement_reports(inst: DwpfInstance, values: Mapping[str, complex], tol: float = 1e-8) -> list[ResidualReport]:
    """One report per non-direct route, relative to ``|direct|``."""
    ref = values["direct"]
    label = inst.kind + (f":M={inst.M}:q={','.join(map(str, inst.q))}" if inst.is_mixed else "")
    out = []
    for route in sorted(values):
        if route == "direct":
            continue
        diff = abs(values[route] - ref)
        scale = max(abs(ref), abs(values[route]))
        out.append(
            ResidualReport.from_values(
                f"dwpf.{route}:{label}:L={inst.L}", diff, scale, tol, inst.q, inst.aux + inst.inhomogeneities, value=values[route]
            )
        )
    return out


def compute_dwpf(doc: "Mapping | str", table: WeightTable | None = None, tol: float = 1e-8) -> dict:
    """Evaluate an instance document; the table defaults to a seeded del Pezzo draw."""
    inst = DwpfInstance.from_document(doc)
    if table is None:
        seed = 0 if inst.seed is None else inst.seed
        table, _ = random_del_pezzo(RapiditySet(inst.inhomogeneities, inst.aux), seed)
    values = route_values(inst, table)
    reports = agreement_reports(inst, values, tol)
    return {
        "instance": inst.to_document(),
        "value": [values["direct"].real, values["direct"].imag],
        "routes": {k: [v.real, v.imag] for k, v in sorted(values.items())},
        "residuals": {r.relation.split(":", 1)[0].split(".", 1)[1]: r.relative for r in reports},
        "passed": all(r.passed for r in reports),
    }
