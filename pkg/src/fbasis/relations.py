"""Residuals of the algebraic relations obeyed by the weights and operators.

Weight-level relations are evaluated in a vectorized way over every ordered
pair or triple of registered rapidities.  Relation identifiers are stable
strings such as ``"unitarity.b:{1,2}"`` or ``"yb.w10:{1,2,3}"``; the twelve
three-rapidity relations are numbered ``w01`` to ``w12``.

Multi-index relations written with "i != j != k" are enumerated over
pairwise-distinct index triples.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .errors import InsufficientRapidities
from .monodromy import monodromy_operator
from .reports import DEFAULT_TOL, ResidualReport
from .tensor import TensorOperator, embed_r, sz_total
from .weights import RapiditySet, WeightTable

__all__ = [
    "ResidualReport",
    "UNITARITY",
    "YANG_BAXTER",
    "weight_relation_arrays",
    "check_unitarity_weights",
    "check_yb_weights",
    "check_all_weights",
    "check_matrix_relations",
    "check_weight_invariants",
    "weight_invariants",
]

# A relation is (index letters, terms); each term is (sign, factors) and a
# factor is (class, index letters, argument slot).  The relation states
# that the signed sum of the term products vanishes.

UNITARITY: dict[str, tuple[str, list]] = {
    "unitarity.a": ("i", [(1, [("a", "i", "12"), ("a", "i", "21")]), (-1, [])]),
    "unitarity.b": (
        "ij",
        [(1, [("b", "ij", "12"), ("b", "ji", "21")]), (1, [("c", "ij", "12"), ("c", "ij", "21")]), (-1, [])],
    ),
    "unitarity.c": ("ij", [(1, [("b", "ij", "12"), ("c", "ji", "21")]), (1, [("c", "ij", "12"), ("b", "ij", "21")])]),
}


def _t(sign, *factors):
    return (sign, [tuple(f.split()) for f in factors])


YANG_BAXTER: dict[str, tuple[str, list]] = {
    "yb.w01": ("ij", [_t(1, "c ij 12", "c ji 13", "c ij 23"), _t(-1, "c ji 12", "c ij 13", "c ji 23")]),
    "yb.w02": ("ijk", [_t(1, "b ij 12", "b ik 13"), _t(-1, "b ik 12", "b ij 13")]),
    "yb.w03": ("ijk", [_t(1, "b jk 13", "b ik 23"), _t(-1, "b ik 13", "b jk 23")]),
    "yb.w04": (
        "ij",
        [_t(1, "b ij 12", "a i 13", "c ij 23"), _t(1, "c ji 12", "c ij 13", "b ij 23"), _t(-1, "a i 12", "b ij 13", "c ij 23")],
    ),
    "yb.w05": (
        "ij",
        [_t(1, "b ij 12", "a i 13", "c ji 23"), _t(1, "c ij 12", "c ji 13", "b ij 23"), _t(-1, "a i 12", "b ij 13", "c ji 23")],
    ),
    "yb.w06": (
        "ij",
        [_t(1, "b ji 12", "c ij 13", "b ij 23"), _t(1, "c ij 12", "a i 13", "c ij 23"), _t(-1, "a i 12", "c ij 13", "a i 23")],
    ),
    "yb.w07": (
        "ij",
        [_t(1, "b ij 12", "c ij 13", "b ji 23"), _t(1, "c ij 12", "a j 13", "c ij 23"), _t(-1, "a j 12", "c ij 13", "a j 23")],
    ),
    "yb.w08": (
        "ij",
        [_t(1, "c ij 12", "a i 13", "b ji 23"), _t(1, "b ji 12", "c ij 13", "c ji 23"), _t(-1, "c ij 12", "b ji 13", "a i 23")],
    ),
    "yb.w09": (
        "ij",
        [_t(1, "c ij 12", "a j 13", "b ij 23"), _t(1, "b ij 12", "c ij 13", "c ji 23"), _t(-1, "c ij 12", "b ij 13", "a j 23")],
    ),
    "yb.w10": (
        "ijk",
        [_t(1, "c ij 12", "c jk 13", "b ij 23"), _t(1, "b ij 12", "c ik 13", "c ji 23"), _t(-1, "c ik 12", "b ij 13", "c jk 23")],
    ),
    "yb.w11": (
        "ijk",
        [_t(1, "c kj 12", "c ik 13", "b jk 23"), _t(1, "b jk 12", "c ij 13", "c jk 23"), _t(-1, "c ij 12", "b jk 13", "c ik 23")],
    ),
    "yb.w12": (
        "ijk",
        [
            _t(1, "b ij 12", "c ik 13", "b ji 23"),
            _t(1, "c ij 12", "c jk 13", "c ij 23"),
            _t(-1, "b kj 12", "c ik 13", "b jk 23"),
            _t(-1, "c jk 12", "c ij 13", "c jk 23"),
        ],
    ),
}


def _index_assignments(letters: str, n: int):
    """Pairwise-distinct 1-based state assignments to ``letters``."""
    for vals in itertools.permutations(range(1, n + 1), len(letters)):
        yield dict(zip(letters, vals))


def _factor(table: WeightTable, cls: str, idx: str, assign: dict, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    states = [assign[ch] - 1 for ch in idx]
    if cls == "a":
        return table.a[states[0]][X, Y]
    arr = table.b if cls == "b" else table.c
    return arr[states[0], states[1]][X, Y]


def _evaluate(table: WeightTable, letters: str, terms: list, assign: dict, args: dict) -> tuple[np.ndarray, np.ndarray]:
    """Absolute residual and largest term magnitude for every argument tuple."""
    shape = next(iter(args.values())).shape
    values = []
    for sign, factors in terms:
        v = np.full(shape, float(sign), dtype=complex)
        for cls, idx, slot in factors:
            X, Y = args[slot[0]], args[slot[1]]
            v = v * _factor(table, cls, idx, assign, X, Y)
        values.append(v)
    stack = np.stack(values)
    return np.abs(stack.sum(axis=0)), np.abs(stack).max(axis=0)


def weight_relation_arrays(
    table: WeightTable,
    which: str = "yb",
    arguments: np.ndarray | None = None,
) -> dict[tuple[str, tuple[int, ...]], tuple[np.ndarray, np.ndarray]]:
    """Vectorized residuals keyed by ``(relation, state indices)``.

    ``arguments`` is an ``(k, 2)`` array of pair indices for ``which="unitarity"``
    or ``(k, 3)`` triple indices for ``which="yb"``; by default all ordered
    pairs or triples of distinct registered labels with stored weights.
    Returns ``(absolute, scale)`` arrays of length ``k`` per relation instance.
    """
    m = len(table.labels)
    arity = 2 if which == "unitarity" else 3
    if arguments is None:
        arguments = np.array(
            [
                t
                for t in itertools.permutations(range(m), arity)
                if all(table.present[p] for p in itertools.permutations(t, 2))
            ],
            dtype=int,
        ).reshape(-1, arity)
    arguments = np.asarray(arguments, int)
    cols = {str(k + 1): arguments[:, k] for k in range(arity)}
    relations = UNITARITY if which == "unitarity" else YANG_BAXTER
    out = {}
    for name, (letters, terms) in relations.items():
        for assign in _index_assignments(letters, table.rank):
            key = (name, tuple(assign[ch] for ch in letters))
            out[key] = _evaluate(table, letters, terms, assign, cols)
    return out


def _relation_id(name: str, indices: Sequence[int]) -> str:
    return f"{name}:{{{','.join(map(str, indices))}}}"


def _reports_for(table: WeightTable, which: str, labels: Sequence[str], tol: float) -> list[ResidualReport]:
    for a in labels:
        for b in labels:
            if a != b:
                table.pair_index((a, b))
    idx = np.array([[table.index(lab) for lab in labels]])
    arrays = weight_relation_arrays(table, which, idx)
    return [
        ResidualReport.from_values(_relation_id(name, ind), absr[0], scale[0], tol, ind, tuple(labels))
        for (name, ind), (absr, scale) in arrays.items()
    ]


def check_unitarity_weights(table: WeightTable, pair: tuple[str, str], tol: float = DEFAULT_TOL) -> list[ResidualReport]:
    """One report per unitarity relation instance for the ordered pair.

    Raises
    ------
    UnknownPair
        If either ordering of the pair is not registered.
    """
    return _reports_for(table, "unitarity", pair, tol)


def check_yb_weights(table: WeightTable, triple: tuple[str, str, str], tol: float = DEFAULT_TOL) -> list[ResidualReport]:
    """Reports for the twelve three-rapidity relations at one ordered triple."""
    return _reports_for(table, "yb", triple, tol)


def check_all_weights(table: WeightTable, tol: float = DEFAULT_TOL) -> list[ResidualReport]:
    """Unitarity over every ordered pair and the twelve relations over every ordered triple.

    Each report carries the worst instance over the argument tuples, with the
    arguments of that worst instance.
    """
    out = []
    for which in ("unitarity", "yb"):
        arity = 2 if which == "unitarity" else 3
        m = len(table.labels)
        args = np.array(
            [
                t
                for t in itertools.permutations(range(m), arity)
                if all(table.present[p] for p in itertools.permutations(t, 2))
            ],
            dtype=int,
        ).reshape(-1, arity)
        if len(args) == 0:
            continue
        for (name, ind), (absr, scale) in weight_relation_arrays(table, which, args).items():
            with np.errstate(all="ignore"):
                rel = np.where(scale > 0, absr / np.where(scale > 0, scale, 1.0), 0.0)
            rel = np.where(np.isfinite(rel), rel, np.inf)
            k = int(np.argmax(rel))
            labs = tuple(table.labels[i] for i in args[k])
            out.append(ResidualReport.from_values(_relation_id(name, ind), absr[k], scale[k], tol, ind, labs))
    return out


# ---------------------------------------------------------------------------
# matrix level


def _commutator(A: TensorOperator, B: TensorOperator) -> TensorOperator:
    return A @ B - B @ A


def _operator_report(relation: str, lhs: TensorOperator, rhs: TensorOperator, tol: float, arguments=()) -> ResidualReport:
    scale = max(lhs.max_abs(), rhs.max_abs())
    return ResidualReport.from_values(relation, lhs.distance(rhs), scale, tol, (), tuple(arguments))


def check_matrix_relations(
    table: WeightTable,
    rapidities: RapiditySet,
    tol: float = DEFAULT_TOL,
    aux: tuple[str, str] | None = None,
) -> list[ResidualReport]:
    """Operator-level Yang-Baxter, unitarity, U(1) symmetry and Yang-Baxter algebra.

    The Yang-Baxter equation is checked on the first three inhomogeneities,
    unitarity and the U(1) commutators on every ordered pair of
    inhomogeneities, and the Yang-Baxter algebra for the two auxiliary
    rapidities ``aux`` (default: the first two registered auxiliary labels)
    whenever two are available.
    """
    n = table.rank
    xs = rapidities.inhomogeneities
    out: list[ResidualReport] = []
    if len(xs) >= 3:
        x, y, z = xs[:3]
        d = (n, 3)
        R12, R13, R23 = embed_r(table, (1, 2), (x, y), d), embed_r(table, (1, 3), (x, z), d), embed_r(table, (2, 3), (y, z), d)
        out.append(_operator_report("matrix.yang_baxter", R12 @ R13 @ R23, R23 @ R13 @ R12, tol, (x, y, z)))
    d2 = (n, 2)
    I2 = TensorOperator.identity(n, 2)
    gens = [sz_total(i, d2) for i in range(1, n)]
    for x, y in itertools.permutations(xs, 2):
        R12 = embed_r(table, (1, 2), (x, y), d2)
        R21 = embed_r(table, (2, 1), (y, x), d2)
        out.append(_operator_report("matrix.unitarity", R12 @ R21, I2, tol, (x, y)))
        for i, S in enumerate(gens, 1):
            C = _commutator(R12, S)
            out.append(
                ResidualReport.from_values(
                    f"matrix.u1:{{{i}}}", C.max_abs(), max(R12.max_abs(), 1.0) * max(S.max_abs(), 1.0), tol, (i,), (x, y)
                )
            )
    if aux is None and len(rapidities.auxiliary) >= 2:
        aux = tuple(rapidities.auxiliary[:2])
    if aux is not None:
        out.append(check_yang_baxter_algebra(table, aux[0], aux[1], xs, tol))
    return out


def check_yang_baxter_algebra(
    table: WeightTable, mu: str, nu: str, inhomogeneities: Sequence[str], tol: float = DEFAULT_TOL
) -> ResidualReport:
    """Residual of ``R_ab(mu, nu) T_a(mu) T_b(nu) = T_b(nu) T_a(mu) R_ab(mu, nu)``."""
    L = len(inhomogeneities)
    n = table.rank
    Ta = monodromy_operator(table, mu, inhomogeneities, aux_site=1, extra_aux=1)
    Tb = monodromy_operator(table, nu, inhomogeneities, aux_site=2, extra_aux=1)
    Rab = embed_r(table, (1, 2), (mu, nu), (n, L + 2))
    return _operator_report("matrix.yb_algebra", Rab @ Ta @ Tb, Tb @ Ta @ Rab, tol, (mu, nu, *inhomogeneities))


# ---------------------------------------------------------------------------
# invariants of the rank-3 general solution


def weight_invariants(table: WeightTable, x: str, z: str) -> dict[str, complex]:
    """The invariant combinations of the weights at the pair ``(x, z)``."""
    def g(kind: str) -> complex:
        return table.weight((x, z), kind)

    a1, a2, a3 = g("a1"), g("a2"), g("a3")
    b12, b13, b21, b23, b31, b32 = g("b12"), g("b13"), g("b21"), g("b23"), g("b31"), g("b32")
    c12, c13, c21, c23, c31, c32 = g("c12"), g("c13"), g("c21"), g("c23"), g("c31"), g("c32")
    d1 = b32 / b12
    return {
        "delta1": d1,
        "delta2": b31 / b21,
        "delta3": b13 / b23,
        "delta4": (a1 * a2 + b12 * b21 - c12 * c21) / (a1 * b12),
        "delta5": (a3 * a2 + d1 * b12 * b23 - c23 * c32) / (a3 * b12),
        "delta6": (d1 * a1 * b23 - a3 * b21) / (b23 * b21),
        "delta7": d1 * (a1 * c23 - c13 * c21) / (c23 * b21),
        "delta8": (d1 * a1 * c12 * b23 - c13 * b21 * c32) / (c12 * b23 * b21),
        "delta9": d1 * (a1 * c32 - c12 * c31) / (b21 * c32),
        "delta10": (d1 * a1 * b23 * c21 - c23 * b21 * c31) / (b23 * b21 * c21),
        "branch_a": a2 * b21 / (a1 * b12),
        "branch_b": d1 * a2 * b23 / (a3 * b12),
    }


def _close(relation: str, lhs: complex, rhs: complex, tol: float, args) -> ResidualReport:
    scale = max(abs(lhs), abs(rhs))
    return ResidualReport.from_values(relation, abs(lhs - rhs), scale, tol, (), args, value=lhs)


def check_weight_invariants(table: WeightTable, tol: float = DEFAULT_TOL) -> list[ResidualReport]:
    """Constancy of the invariants and the closure relations of the branch.

    For every registered reference rapidity ``z`` the invariants are
    evaluated at ``(x, z)`` for every other label ``x``; each must be
    independent of ``x``.  Their common values must then satisfy the branch
    closures (``delta5 = delta4``, ``delta6 = 0``, ``delta8 = delta7``,
    ``delta9 = delta10 = delta1 delta7 / (delta4 delta7 - delta1)``, the
    ``delta3`` closure and the two branch ratios).

    Raises
    ------
    InsufficientRapidities
        With fewer than three registered labels.
    """
    if table.rank != 3:
        raise InsufficientRapidities("invariants are defined for the rank-3 model")
    labels = table.labels
    if len(labels) < 3:
        raise InsufficientRapidities("need at least three rapidities to test independence")
    out: list[ResidualReport] = []
    for z in labels:
        others = [x for x in labels if x != z]
        vals = [weight_invariants(table, x, z) for x in others]
        mean = {k: sum(v[k] for v in vals) / len(vals) for k in vals[0]}
        for k in vals[0]:
            if k == "delta6":
                continue
            spread = max(abs(v[k] - mean[k]) for v in vals)
            scale = max(abs(v[k]) for v in vals)
            out.append(
                ResidualReport.from_values(f"invariant.{k}.constant", spread, scale, tol, (), (z,), value=mean[k])
            )
        # delta6 vanishes; scale by the size of its two numerator terms
        worst, scale = 0.0, 0.0
        for x, v in zip(others, vals):
            w = {k: table.weight((x, z), k) for k in ("a1", "a3", "b21", "b23")}
            terms = (abs(v["delta1"] * w["a1"] / w["b21"]), abs(w["a3"] / w["b23"]))
            if abs(v["delta6"]) / max(terms) >= worst / max(scale, 1e-300):
                worst, scale = abs(v["delta6"]), max(terms)
        out.append(ResidualReport.from_values("invariant.delta6.zero", worst, scale, tol, (), (z,)))
        d = mean
        D = d["delta4"] * d["delta7"] - d["delta1"]
        target = d["delta1"] * D / d["delta7"] ** 2
        out.append(_close("invariant.delta5=delta4", d["delta5"], d["delta4"], tol, (z,)))
        out.append(_close("invariant.delta8=delta7", d["delta8"], d["delta7"], tol, (z,)))
        out.append(_close("invariant.delta9=delta10", d["delta9"], d["delta10"], tol, (z,)))
        out.append(_close("invariant.delta9.closure", d["delta9"], d["delta1"] * d["delta7"] / D, tol, (z,)))
        out.append(_close("invariant.delta3.closure", d["delta3"], d["delta7"] ** 2 / (d["delta2"] * D), tol, (z,)))
        out.append(_close("invariant.branch.a", d["branch_a"], target, tol, (z,)))
        out.append(_close("invariant.branch.b", d["branch_b"], target, tol, (z,)))
    return out
