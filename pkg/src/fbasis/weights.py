"""Boltzmann weight tables for U(1)^(N-1) invariant vertex models.

A :class:`WeightTable` stores every nonzero weight ``a_i``, ``b_ij`` and
``c_ij`` for each ordered pair of registered rapidity labels.  Tables are
produced by the rank-3 del Pezzo generator, by the Perk-Schultz
specialization, by the trigonometric six-vertex generator (rank 2), or
imported from a JSON document.

Internally the weights live in three dense arrays indexed by state and by
the registration index of the two labels::

    a[i, x, y]      b[i, j, x, y]      c[i, j, x, y]

with 0-based states.  Entries ``b[i, i]`` and ``c[i, i]`` are unused.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    MalformedDocument,
    MissingEntry,
    RankMismatch,
    SingularParameter,
    UnknownKind,
    UnknownPair,
)
from .rng import make_rng, sample_annulus

EPS_SING = 1e-6

_KIND_RE = re.compile(r"^([abc])([1-9])([1-9])?$")


# ---------------------------------------------------------------------------
# kinds


@dataclass(frozen=True, order=True)
class WeightKind:
    """One of ``a_i``, ``b_ij`` or ``c_ij`` with 1-based state indices."""

    cls: str
    i: int
    j: int = 0

    def __str__(self) -> str:
        return f"a{self.i}" if self.cls == "a" else f"{self.cls}{self.i}{self.j}"

    @classmethod
    def parse(cls, kind: "str | WeightKind", rank: int | None = None) -> "WeightKind":
        if isinstance(kind, WeightKind):
            out = kind
        else:
            m = _KIND_RE.match(str(kind))
            if m is None:
                raise UnknownKind(f"unrecognised weight kind {kind!r}")
            letter, i, j = m.group(1), int(m.group(2)), m.group(3)
            if letter == "a":
                if j is not None:
                    raise UnknownKind(f"unrecognised weight kind {kind!r}")
                out = cls("a", i)
            else:
                if j is None or int(j) == i:
                    raise UnknownKind(f"unrecognised weight kind {kind!r}")
                out = cls(letter, i, int(j))
        if rank is not None:
            top = max(out.i, out.j)
            if top > rank:
                raise UnknownKind(f"kind {out} is out of range for rank {rank}")
        return out


def all_kinds(rank: int) -> list[WeightKind]:
    """Canonical ordering of the ``n(2n-1)`` kinds of a rank-``n`` model."""
    out = [WeightKind("a", i) for i in range(1, rank + 1)]
    for letter in ("b", "c"):
        out.extend(
            WeightKind(letter, i, j)
            for i in range(1, rank + 1)
            for j in range(1, rank + 1)
            if i != j
        )
    return out


# ---------------------------------------------------------------------------
# rapidities


@dataclass(frozen=True)
class RapiditySet:
    """Ordered site inhomogeneities plus auxiliary rapidities.

    Labels are identifiers; ``values`` holds the complex value attached to
    each label (used by value-based generators such as Perk-Schultz).
    Registration order is ``inhomogeneities`` followed by ``auxiliary``.
    """

    inhomogeneities: tuple[str, ...]
    auxiliary: tuple[str, ...] = ()
    values: Mapping[str, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "inhomogeneities", tuple(self.inhomogeneities))
        object.__setattr__(self, "auxiliary", tuple(self.auxiliary))
        labels = self.labels
        if len(set(labels)) != len(labels):
            raise ValueError("rapidity labels must be distinct")

    @property
    def labels(self) -> tuple[str, ...]:
        return self.inhomogeneities + self.auxiliary

    @property
    def L(self) -> int:
        return len(self.inhomogeneities)

    def value(self, label: str) -> complex:
        return complex(self.values.get(label, 0.0))

    @classmethod
    def standard(
        cls, L: int, aux: Sequence[str] = (), values: Mapping[str, complex] | None = None
    ) -> "RapiditySet":
        """Labels ``xi1..xiL`` plus the given auxiliary labels."""
        return cls(tuple(f"xi{k}" for k in range(1, L + 1)), tuple(aux), dict(values or {}))


# ---------------------------------------------------------------------------
# the table


class WeightTable:
    """Immutable table of Boltzmann weights keyed by rapidity label pairs."""

    __slots__ = ("rank", "labels", "values", "a", "b", "c", "present", "_index")

    def __init__(
        self,
        rank: int,
        labels: Sequence[str],
        a: np.ndarray,
        b: np.ndarray,
        c: np.ndarray,
        present: np.ndarray | None = None,
        values: Mapping[str, complex] | None = None,
    ) -> None:
        if rank < 2:
            raise RankMismatch("rank must be at least 2")
        m = len(labels)
        if a.shape != (rank, m, m) or b.shape != (rank, rank, m, m) or c.shape != b.shape:
            raise RankMismatch("weight arrays do not match rank and label count")
        self.rank = int(rank)
        self.labels = tuple(labels)
        self._index = {lab: k for k, lab in enumerate(self.labels)}
        self.values = {lab: complex((values or {}).get(lab, 0.0)) for lab in self.labels}
        self.a = np.array(a, dtype=complex)
        self.b = np.array(b, dtype=complex)
        self.c = np.array(c, dtype=complex)
        self.present = np.ones((m, m), bool) if present is None else np.array(present, bool)
        for arr in (self.a, self.b, self.c, self.present):
            arr.setflags(write=False)

    # lookup -------------------------------------------------------------

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownPair(f"rapidity {label!r} is not registered") from None

    def pair_index(self, pair: tuple[str, str]) -> tuple[int, int]:
        x, y = self.index(pair[0]), self.index(pair[1])
        if not self.present[x, y]:
            raise UnknownPair(f"pair {pair!r} has no weights")
        return x, y

    def weight(self, pair: tuple[str, str], kind: "str | WeightKind") -> complex:
        k = WeightKind.parse(kind, self.rank)
        x, y = self.pair_index(pair)
        if k.cls == "a":
            return complex(self.a[k.i - 1, x, y])
        arr = self.b if k.cls == "b" else self.c
        return complex(arr[k.i - 1, k.j - 1, x, y])

    def r_matrix(self, x: str, y: str) -> np.ndarray:
        """Dense ``n^2 x n^2`` matrix of R(x, y); row ``(i, j)`` sits at ``i*n + j``."""
        xi, yi = self.pair_index((x, y))
        return local_r(self.a[:, xi, yi], self.b[:, :, xi, yi], self.c[:, :, xi, yi])

    def __repr__(self) -> str:
        return f"WeightTable(rank={self.rank}, labels={list(self.labels)})"

    # derived tables -----------------------------------------------------

    def with_entry(self, pair: tuple[str, str], kind: "str | WeightKind", value: complex) -> "WeightTable":
        """Copy of the table with a single entry replaced."""
        k = WeightKind.parse(kind, self.rank)
        x, y = self.pair_index(pair)
        a, b, c = self.a.copy(), self.b.copy(), self.c.copy()
        if k.cls == "a":
            a[k.i - 1, x, y] = value
        else:
            (b if k.cls == "b" else c)[k.i - 1, k.j - 1, x, y] = value
        return WeightTable(self.rank, self.labels, a, b, c, self.present, self.values)

    def scaled_pair(self, pair: tuple[str, str], lam: complex) -> "WeightTable":
        """Multiply every weight of ``pair`` by ``lam`` and of the reversed pair by ``1/lam``."""
        x, y = self.pair_index(pair)
        a, b, c = self.a.copy(), self.b.copy(), self.c.copy()
        for arr in (a, b, c):
            arr[..., x, y] *= lam
            arr[..., y, x] /= lam
        return WeightTable(self.rank, self.labels, a, b, c, self.present, self.values)

    def entries(self) -> Iterator[tuple[tuple[str, str], WeightKind, complex]]:
        """Iterate over all stored entries in canonical order."""
        kinds = all_kinds(self.rank)
        for x, lx in enumerate(self.labels):
            for y, ly in enumerate(self.labels):
                if not self.present[x, y]:
                    continue
                for k in kinds:
                    yield (lx, ly), k, self.weight((lx, ly), k)


def local_r(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    R = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        R[i * n + i, i * n + i] = a[i]
        for j in range(n):
            if i != j:
                R[i * n + j, i * n + j] = b[i, j]
                R[i * n + j, j * n + i] = c[i, j]
    return R


def weight(table: WeightTable, pair: tuple[str, str], kind: "str | WeightKind") -> complex:
    """Pure lookup of a single weight."""
    return table.weight(pair, kind)


# ---------------------------------------------------------------------------
# rank-3 general solution


@dataclass(frozen=True)
class DelPezzoParams:
    """Constants and per-rapidity free variables of the rank-3 solution.

    ``variables`` maps each rapidity label to the tuple
    ``(a, bbar, c, cbar, h1, h2)``.
    """

    Delta1: complex
    Delta2: complex
    delta1: complex
    delta2: complex
    variables: Mapping[str, tuple[complex, complex, complex, complex, complex, complex]]

    @classmethod
    def sample(cls, labels: Iterable[str], seed: int | np.random.Generator | None = None) -> "DelPezzoParams":
        """Draw every free quantity from the annulus ``0.5 <= |z| <= 1.5``."""
        rng = make_rng(seed)
        D1, D2, d1, d2 = sample_annulus(rng, 4)
        variables = {lab: tuple(complex(v) for v in sample_annulus(rng, 6)) for lab in labels}
        return cls(complex(D1), complex(D2), complex(d1), complex(d2), variables)


def hypersurface_b(params: DelPezzoParams, label: str) -> complex:
    """Solve the defining cubic for the linear variable ``b`` at one rapidity."""
    a, bb, c, cb, _, _ = params.variables[label]
    coeff = _b_coefficient(params, a, bb)
    if abs(coeff) < EPS_SING:
        raise SingularParameter(f"hypersurface coefficient of b vanishes at {label!r}")
    return bb * c * cb / coeff


def hypersurface_residual(params: DelPezzoParams, label: str, b: complex) -> complex:
    a, bb, c, cb, _, _ = params.variables[label]
    return _b_coefficient(params, a, bb) * b - bb * c * cb


def _b_coefficient(params: DelPezzoParams, a: complex, bb: complex) -> complex:
    D1, D2 = params.Delta1, params.Delta2
    return (D1 * D2 - 1) / D1**2 * a * a - D2 * a * bb + bb * bb


def del_pezzo_ratios(params: DelPezzoParams, labels: Sequence[str]) -> dict[str, np.ndarray]:
    """All fourteen weight ratios to ``c12`` as ``(m, m)`` arrays over label pairs."""
    D1, D2 = params.Delta1, params.Delta2
    d1, d2 = params.delta1, params.delta2
    V = np.array([params.variables[lab] for lab in labels], dtype=complex).T
    a, bb, c, cb, h1, h2 = V
    K = D1 * D2 - 1
    P = a - D1 * bb
    Q = K * a - D1 * bb
    # first argument varies along axis 0, second along axis 1
    ax, ay = a[:, None], a[None, :]
    bx, by = bb[:, None], bb[None, :]
    cx, cy = c[:, None], c[None, :]
    cbx, cby = cb[:, None], cb[None, :]
    h1x, h1y = h1[:, None], h1[None, :]
    h2x, h2y = h2[:, None], h2[None, :]
    Px, Py = P[:, None], P[None, :]
    Qx, Qy = Q[:, None], Q[None, :]
    X = ay * bx - ax * by
    Nm = K * ax * ay - D1**2 * by * (D2 * ax - bx)
    r = {
        "a1": cy / cx * Nm / (Py * Qy),
        "a2": cbx / cby * Nm / (Px * Qx),
        "a3": h1x * cy * cby * h2x / (h1y * cx * cbx * h2y) * Nm / (Qx * Py),
        "b12": D1**2 * K * cy * cbx * X / (Py * Qy * Px * Qx),
        "b13": D1**2 * K * cy * h1x * h2x / (d2 * cx * cbx) * X / (Py * Qx * Qy),
        "b21": X / (cx * cby),
        "b23": K * h1x * h2x / (d1 * cx * cbx * cby) * X / Qx,
        "b31": d2 * cy * cby / (h1y * cx * h2y) * X / Py,
        "b32": D1**2 * d1 * cy * cbx * cby / (h1y * h2y) * X / (Qx * Px * Py),
        "c12": np.ones_like(X),
        "c13": cy * cby * h1x / (cx * cbx * h1y) * Px / Py,
        "c21": cy * cbx / (cx * cby),
        "c23": cy * h1x / (cx * h1y),
        "c31": cy * h2x / (cx * h2y),
        "c32": h2x / h2y * Qy / Qx,
    }
    return r


def _screen_del_pezzo(params: DelPezzoParams, labels: Sequence[str]) -> None:
    for name in ("Delta1", "delta1", "delta2"):
        if abs(getattr(params, name)) < EPS_SING:
            raise SingularParameter(f"constant {name} is below the singularity screen")
    K = params.Delta1 * params.Delta2 - 1
    for lab in labels:
        try:
            a, bb, c, cb, h1, h2 = params.variables[lab]
        except KeyError:
            raise SingularParameter(f"no free variables for rapidity {lab!r}") from None
        dens = {
            "c": c,
            "cbar": cb,
            "h1": h1,
            "h2": h2,
            "a - Delta1*bbar": a - params.Delta1 * bb,
            "(Delta1*Delta2 - 1)*a - Delta1*bbar": K * a - params.Delta1 * bb,
        }
        for what, v in dens.items():
            if abs(v) < EPS_SING:
                raise SingularParameter(f"denominator {what} vanishes at {lab!r}")
        hypersurface_b(params, lab)


def build_del_pezzo(params: DelPezzoParams, rapidities: RapiditySet, rank: int = 3) -> WeightTable:
    """Weight table of the general rank-3 solution.

    Ratios to ``c12`` are fixed by the parameters.  The normalization sets
    ``c12(x, y) = 1`` when ``x`` is registered before ``y``; for the
    reversed pair ``c12`` is chosen so that ``a1(x, y) a1(y, x) = 1``; on
    the diagonal ``c12`` makes ``a1(x, x) = 1`` so that ``R(x, x)`` is the
    permutation operator.

    Raises
    ------
    SingularParameter
        If a denominator, the normalizing ``a1`` ratio, or the hypersurface
        coefficient of ``b`` falls below ``EPS_SING`` in magnitude.
    RankMismatch
        If ``rank`` is not 3.
    """
    if rank != 3:
        raise RankMismatch("the del Pezzo solution is a rank-3 model")
    labels = rapidities.labels
    _screen_del_pezzo(params, labels)
    with np.errstate(all="ignore"):
        r = del_pezzo_ratios(params, labels)
    ra1 = r["a1"]
    m = len(labels)
    if np.any(np.abs(ra1) < EPS_SING) or not np.all(np.isfinite(ra1)):
        raise SingularParameter("the a1 ratio vanishes for some pair; cannot normalize")
    upper = np.triu(np.ones((m, m), bool), 1)
    norm = np.where(upper, 1.0 + 0j, 1.0 / (ra1 * ra1.T))
    norm[np.diag_indices(m)] = 1.0 / np.diag(ra1)
    a = np.zeros((3, m, m), complex)
    b = np.zeros((3, 3, m, m), complex)
    c = np.zeros((3, 3, m, m), complex)
    for name, arr in r.items():
        k = WeightKind.parse(name)
        if k.cls == "a":
            a[k.i - 1] = arr * norm
        else:
            (b if k.cls == "b" else c)[k.i - 1, k.j - 1] = arr * norm
    return WeightTable(3, labels, a, b, c, values=rapidities.values)


def random_del_pezzo(
    rapidities: RapiditySet, seed: int | np.random.Generator | None, max_tries: int = 64
) -> tuple[WeightTable, DelPezzoParams]:
    """Seeded del Pezzo table, redrawing parameters that hit the singularity screen."""
    rng = make_rng(seed)
    for _ in range(max_tries):
        params = DelPezzoParams.sample(rapidities.labels, rng)
        try:
            return build_del_pezzo(params, rapidities), params
        except SingularParameter:
            continue
    raise SingularParameter("could not draw non-singular parameters")


# ---------------------------------------------------------------------------
# Perk-Schultz specialization


def perk_schultz_params(q: complex, rapidities: RapiditySet) -> DelPezzoParams:
    q = complex(q)
    if abs(q) < EPS_SING:
        raise SingularParameter("q must be nonzero")
    variables = {}
    for lab in rapidities.labels:
        x = rapidities.value(lab)
        if abs(x * x - q * q) < EPS_SING:
            raise SingularParameter(f"rapidity {lab!r} sits on the pole x^2 = q^2")
        bb = q * (x * x - 1) / (x * x - q * q)
        cc = x * (q * q - 1) / (q * q - x * x)
        if abs(x) < EPS_SING:
            raise SingularParameter(f"rapidity {lab!r} has zero value")
        variables[lab] = (1.0 + 0j, bb, cc, cc, cc, cc / x)
    return DelPezzoParams(q, q + 1 / q, 1.0 + 0j, 1.0 + 0j, variables)


def build_perk_schultz(q: complex, rapidities: RapiditySet) -> WeightTable:
    """Rank-3 Perk-Schultz table; weights depend only on rapidity ratios."""
    return build_del_pezzo(perk_schultz_params(q, rapidities), rapidities)


# ---------------------------------------------------------------------------
# rank-2 trigonometric six-vertex model


def build_six_vertex(eta: complex, rapidities: RapiditySet, kappa: complex = 0.0) -> WeightTable:
    """Asymmetric trigonometric six-vertex table.

    With ``u = value(x) - value(y)``::

        a1 = a2 = 1,  b12 = b21 = sinh(u) / sinh(u + eta),
        c12 = exp(kappa u) sinh(eta) / sinh(u + eta),  c21 = exp(-kappa u) sinh(eta) / sinh(u + eta)

    ``eta = i pi / 2`` is the free-fermion point.
    """
    labels = rapidities.labels
    u = np.array([rapidities.value(lab) for lab in labels], complex)
    U = u[:, None] - u[None, :]
    den = np.sinh(U + eta)
    if np.any(np.abs(den) < EPS_SING):
        raise SingularParameter("sinh(u + eta) vanishes for some pair")
    m = len(labels)
    a = np.ones((2, m, m), complex)
    b = np.zeros((2, 2, m, m), complex)
    c = np.zeros((2, 2, m, m), complex)
    b[0, 1] = b[1, 0] = np.sinh(U) / den
    c[0, 1] = np.exp(kappa * U) * np.sinh(eta) / den
    c[1, 0] = np.exp(-kappa * U) * np.sinh(eta) / den
    return WeightTable(2, labels, a, b, c, values=rapidities.values)


# ---------------------------------------------------------------------------
# document import / export


def export_document(table: WeightTable) -> dict:
    """JSON-ready document of the table (exact round trip through ``import_custom``)."""
    entries = [
        {"pair": [p[0], p[1]], "kind": str(k), "value": [v.real, v.imag]}
        for p, k, v in table.entries()
    ]
    return {
        "rank": table.rank,
        "rapidities": {lab: [table.values[lab].real, table.values[lab].imag] for lab in table.labels},
        "entries": entries,
    }


def dumps(table: WeightTable) -> str:
    return json.dumps(export_document(table), indent=1)


def _complex(raw, where: str) -> complex:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 2
        or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in raw)
    ):
        raise MalformedDocument(f"{where}: expected [re, im], got {raw!r}")
    return complex(float(raw[0]), float(raw[1]))


def import_custom(raw: "Mapping | str", rank: int | None = None) -> WeightTable:
    """Build a table from a weight-table document (a mapping or JSON text).

    Every ordered pair of distinct registered labels must carry all
    ``n(2n-1)`` entries.  Diagonal pairs are optional but, when present,
    must be complete.  No relation checking happens here.

    Raises
    ------
    MalformedDocument
        Structural problems: bad JSON, wrong field types, unknown labels or
        kinds, duplicate entries, or a rank disagreeing with ``rank``.
    MissingEntry
        A pair lacks one or more kinds.
    """
    if isinstance(raw, (str, bytes)):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}") from None
    if not isinstance(raw, Mapping):
        raise MalformedDocument("document must be an object")
    for key in ("rank", "rapidities", "entries"):
        if key not in raw:
            raise MalformedDocument(f"missing field {key!r}")
    n = raw["rank"]
    if not isinstance(n, int) or isinstance(n, bool) or not 2 <= n <= 9:
        raise MalformedDocument(f"rank must be an integer in [2, 9], got {n!r}")
    if rank is not None and rank != n:
        raise MalformedDocument(f"document rank {n} differs from requested rank {rank}")
    raps = raw["rapidities"]
    if not isinstance(raps, Mapping) or not raps:
        raise MalformedDocument("rapidities must be a non-empty object")
    labels = list(raps)
    values = {lab: _complex(v, f"rapidity {lab!r}") for lab, v in raps.items()}
    idx = {lab: k for k, lab in enumerate(labels)}
    m = len(labels)
    a = np.zeros((n, m, m), complex)
    b = np.zeros((n, n, m, m), complex)
    c = np.zeros((n, n, m, m), complex)
    seen: dict[tuple[int, int], set[WeightKind]] = {}
    entries = raw["entries"]
    if not isinstance(entries, list):
        raise MalformedDocument("entries must be a list")
    for e in entries:
        if not isinstance(e, Mapping) or set(e) != {"pair", "kind", "value"}:
            raise MalformedDocument(f"bad entry {e!r}")
        pair = e["pair"]
        if not isinstance(pair, list) or len(pair) != 2 or any(p not in idx for p in pair):
            raise MalformedDocument(f"bad pair {pair!r}")
        try:
            k = WeightKind.parse(e["kind"], n)
        except UnknownKind as exc:
            raise MalformedDocument(str(exc)) from None
        x, y = idx[pair[0]], idx[pair[1]]
        got = seen.setdefault((x, y), set())
        if k in got:
            raise MalformedDocument(f"duplicate entry {k} for pair {pair!r}")
        got.add(k)
        v = _complex(e["value"], f"entry {pair!r} {k}")
        if k.cls == "a":
            a[k.i - 1, x, y] = v
        else:
            (b if k.cls == "b" else c)[k.i - 1, k.j - 1, x, y] = v
    full = set(all_kinds(n))
    present = np.zeros((m, m), bool)
    for x in range(m):
        for y in range(m):
            got = seen.get((x, y), set())
            if got == full:
                present[x, y] = True
            elif x != y or got:
                missing = sorted(str(k) for k in full - got)
                raise MissingEntry(f"pair ({labels[x]!r}, {labels[y]!r}) lacks {', '.join(missing)}")
    return WeightTable(n, labels, a, b, c, present, values)
