"""Acceptance criteria 1-8.

Each criterion is a function returning ``(passed, detail)``.  Under pytest
every criterion is one test and a one-line verdict per criterion is printed
in the terminal summary; run this file directly to print the same lines
without pytest.
"""

from __future__ import annotations

import itertools
import json
import sys
import time

import numpy as np
import pytest

from fbasis import cli
from fbasis.dwpf import (
    MIXED_KINDS,
    SINGLE_KINDS,
    DwpfInstance,
    agreement_reports,
    commute_check,
    dwpf_direct,
    mixed_dwpf_formula,
    random_instance,
    route_values,
)
from fbasis.fmatrix import (
    build_f_bundle,
    curly_r_global_unitarity,
    verify_factorization,
    verify_n_ratio,
)
from fbasis.monodromy import check_kappa_zeros, check_twisted
from fbasis.relations import (
    check_all_weights,
    check_matrix_relations,
    check_weight_invariants,
    weight_invariants,
)
from fbasis.reports import all_passed
from fbasis.weights import (
    RapiditySet,
    build_perk_schultz,
    build_six_vertex,
    dumps,
    import_custom,
    random_del_pezzo,
)

RESULTS: dict[int, tuple[bool, str]] = {}


def _worst(reports):
    return max((r.relative for r in reports), default=0.0)


def criterion_1():
    """Weight relations for 100 seeded del Pezzo tables within 5 s."""
    raps = RapiditySet.standard(4, ("mu1", "nu1"))
    t0 = time.perf_counter()
    worst, ok = 0.0, True
    for seed in range(100):
        table, _ = random_del_pezzo(raps, seed)
        reports = check_all_weights(table, 1e-9)
        ok &= all_passed(reports)
        worst = max(worst, _worst(reports))
    elapsed = time.perf_counter() - t0
    return ok and elapsed < 5.0, f"100 tables, worst relative {worst:.1e}, {elapsed:.2f} s"


def criterion_2():
    """Invariants and branch constraints; Perk-Schultz specialization."""
    ok, worst = True, 0.0
    for seed in range(10):
        table, _ = random_del_pezzo(RapiditySet.standard(4, ("mu1", "nu1")), seed)
        reports = check_weight_invariants(table, 1e-9)
        ok &= all_passed(reports)
        worst = max(worst, _worst(reports))
    rng = np.random.default_rng(0)
    ps_worst = 0.0
    for _ in range(5):
        q = complex(rng.uniform(0.6, 1.4) * np.exp(1j * rng.uniform(-3, 3)))
        vals = {lab: complex(rng.uniform(0.6, 1.4) * np.exp(1j * rng.uniform(-3, 3))) for lab in ("x", "y", "z")}
        t = build_perk_schultz(q, RapiditySet(("x", "y", "z"), (), vals))
        ok &= all_passed(check_weight_invariants(t, 1e-9))
        for x, z in itertools.permutations(("x", "y", "z"), 2):
            inv = weight_invariants(t, x, z)
            ps_worst = max(ps_worst, abs(inv["delta1"] - 1), abs(inv["delta2"] - 1))
        lam = complex(np.exp(0.4 + 1.1j))
        t2 = build_perk_schultz(q, RapiditySet(("x", "y", "z"), (), {k: lam * v for k, v in vals.items()}))
        for pair, kind, v in t.entries():
            ps_worst = max(ps_worst, abs(v - t2.weight(pair, kind)) / max(1.0, abs(v)))
    ok &= ps_worst < 1e-12
    return ok, f"invariants worst {worst:.1e}, Perk-Schultz deviation {ps_worst:.1e}"


def criterion_3():
    """Matrix-level relations for L <= 4."""
    table, _ = random_del_pezzo(RapiditySet.standard(4, ("mu1", "nu1")), 7)
    reports = []
    for L in range(1, 5):
        raps = RapiditySet(table.labels[:L], ("mu1", "nu1"))
        reports += check_matrix_relations(table, raps, 1e-9)
    kinds = {r.relation.split(":")[0] for r in reports}
    ok = all_passed(reports) and {"matrix.yang_baxter", "matrix.unitarity", "matrix.u1", "matrix.yb_algebra"} <= kinds
    return ok, f"{len(reports)} checks, worst relative {_worst(reports):.1e}"


def criterion_4():
    """Exhaustive factorization on del Pezzo and an imported six-vertex table within 60 s."""
    t0 = time.perf_counter()
    dp, _ = random_del_pezzo(RapiditySet.standard(4), 7)
    raps = RapiditySet.standard(4, (), {f"xi{k}": 0.37 * k - 0.21j * k * k for k in range(1, 5)})
    six = import_custom(dumps(build_six_vertex(0.55 + 0.3j, raps)))
    reports = []
    for table in (dp, six):
        for L in (2, 3, 4):
            xs = table.labels[:L]
            reports += verify_factorization(table, xs, tol=1e-9)
            reports += verify_n_ratio(table, xs, 1e-9)
            reports.append(curly_r_global_unitarity(table, xs, 1e-9))
    elapsed = time.perf_counter() - t0
    return all_passed(reports) and elapsed < 60, f"{len(reports)} checks, worst {_worst(reports):.1e}, {elapsed:.1f} s"


def criterion_5():
    """Twisted operators against closed forms; vanishing two-site entries."""
    table, _ = random_del_pezzo(RapiditySet.standard(5, ("mu1",)), 7)
    reports = []
    for L in range(1, 6):
        xs = table.labels[:L]
        kinds = ("D", "C2", "B2", "C1", "B1") if L <= 4 else ("D",)
        reports += check_twisted(table, "mu1", xs, build_f_bundle(table, xs), kinds, 1e-9)
    xs = table.labels[:2]
    kappa = check_kappa_zeros(table, "mu1", xs, build_f_bundle(table, xs), 1e-10)
    worst_k = max(r.absolute for r in kappa)
    ok = all_passed(reports) and all_passed(kappa) and len(reports) == 21
    return ok, f"{len(reports)} twisted checks, worst {_worst(reports):.1e}; kappa max {worst_k:.1e}"


def criterion_6():
    """Three DWPF routes, four kinds, L = 1..5, ten seeds; small-L displays."""
    reports = []
    for kind in SINGLE_KINDS:
        for L in range(1, 6):
            for seed in range(10):
                inst, table = random_instance(kind, L, seed)
                reports += agreement_reports(inst, route_values(inst, table), 1e-8)
    inst, t = random_instance("C2", 1, 3)
    d1 = abs(dwpf_direct(inst, t) - t.weight(("nu1", "xi1"), "c32"))
    inst, t = random_instance("C2", 2, 3)
    w = t.weight
    z2 = w(("nu1", "xi1"), "c32") * w(("nu2", "xi2"), "c32") * w(("nu1", "xi2"), "a3") * w(("nu2", "xi1"), "b32") / (
        w(("xi2", "xi1"), "b32") * w(("xi1", "xi2"), "a2")
    ) + w(("nu1", "xi2"), "c32") * w(("nu2", "xi1"), "c32") * w(("nu1", "xi1"), "a3") * w(("xi1", "xi2"), "a3") * w(
        ("nu2", "xi2"), "b32"
    ) / w(("xi1", "xi2"), "b32")
    z = dwpf_direct(inst, t)
    d2 = abs(z - z2) / abs(z)
    ok = all_passed(reports) and len(reports) == 400 and d1 < 1e-10 and d2 < 1e-10
    return ok, f"{len(reports)} route comparisons, worst {_worst(reports):.1e}; L=1 {d1:.1e}, L=2 {d2:.1e}"


def criterion_7():
    """Mixed DWPF formulas for every sector at L = 2..4; exchange relations for L <= 3."""
    worst, count, ok = 0.0, 0, True
    for kind in MIXED_KINDS:
        for L in (2, 3, 4):
            base, table = random_instance(kind, L, 7)
            bundle = build_f_bundle(table, base.inhomogeneities)
            for M in range(L + 1):
                for q in itertools.combinations(range(1, L + 1), M):
                    inst = DwpfInstance(kind, base.aux, base.inhomogeneities, M, q)
                    d, f = dwpf_direct(inst, table), mixed_dwpf_formula(inst, table, bundle)
                    rel = abs(d - f) / max(abs(d), abs(f), 1e-300)
                    worst = max(worst, rel)
                    ok &= rel < 1e-8
                    count += 1
    table, _ = random_del_pezzo(RapiditySet.standard(3, ("mu1", "nu1")), 7)
    ex = [
        commute_check(k, table, a, b, table.labels[:L], 1e-9)
        for k in ("CC", "BB")
        for L in (1, 2, 3)
        for a, b in (("mu1", "nu1"), ("nu1", "mu1"))
    ]
    ok &= all_passed(ex)
    return ok, f"{count} mixed sectors, worst {worst:.1e}; exchange worst {_worst(ex):.1e}"


def criterion_8(tmp_dir):
    """Byte-identical reports for ``all --seed 7``; a doubled weight is flagged by name."""
    a, b = tmp_dir / "run_a.json", tmp_dir / "run_b.json"
    codes = [cli.main(["all", "--seed", "7", "--out", str(p)]) for p in (a, b)]
    same = a.read_bytes() == b.read_bytes()
    bad = tmp_dir / "bad.json"
    code_bad = cli.main(["weights-check", "--seed", "7", "--corrupt", "xi1,xi2:c23", "--out", str(bad)])
    failing = json.loads(bad.read_text())["summary"]["failing_relations"]
    ok = codes == [0, 0] and same and code_bad != 0 and bool(failing)
    return ok, f"identical={same}, exits {codes}, corrupted exit {code_bad}, first failing {failing[:1]}"


def _record(n, result):
    RESULTS[n] = result
    ok, detail = result
    print(f"acceptance {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.mark.parametrize("n", range(1, 8))
def test_criterion(n):
    _record(n, globals()[f"criterion_{n}"]())


def test_criterion_8(tmp_path, capsys):
    result = criterion_8(tmp_path)
    capsys.readouterr()
    _record(8, result)


if __name__ == "__main__":
    import pathlib
    import tempfile

    failed = 0
    for n in range(1, 9):
        if n == 8:
            with tempfile.TemporaryDirectory() as d:
                ok, detail = criterion_8(pathlib.Path(d))
        else:
            ok, detail = globals()[f"criterion_{n}"]()
        failed += not ok
        print(f"acceptance {n}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
    sys.exit(1 if failed else 0)
