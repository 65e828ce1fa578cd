import numpy as np
import pytest
from conftest import dense_r, dense_two_site

from fbasis.errors import InsufficientRapidities, UnknownPair
from fbasis.relations import (
    UNITARITY,
    YANG_BAXTER,
    check_all_weights,
    check_matrix_relations,
    check_unitarity_weights,
    check_weight_invariants,
    check_yang_baxter_algebra,
    check_yb_weights,
    weight_invariants,
)
from fbasis.reports import all_passed
from fbasis.weights import RapiditySet, build_perk_schultz, random_del_pezzo


def test_relation_catalogue_size():
    assert len(YANG_BAXTER) == 12
    assert sorted(YANG_BAXTER) == [f"yb.w{k:02d}" for k in range(1, 13)]
    assert set(UNITARITY) == {"unitarity.a", "unitarity.b", "unitarity.c"}


def test_all_weight_relations_hold(dp4):
    reports = check_all_weights(dp4)
    assert reports and all_passed(reports)
    assert max(r.relative for r in reports) < 1e-10


def test_single_instances(dp4):
    u = check_unitarity_weights(dp4, ("xi1", "mu1"))
    y = check_yb_weights(dp4, ("xi3", "nu1", "xi1"))
    assert all_passed(u) and all_passed(y)
    assert {r.relation.split(":")[0] for r in y} == set(YANG_BAXTER)


def test_unregistered_pair(dp4):
    with pytest.raises(UnknownPair):
        check_unitarity_weights(dp4, ("xi1", "zz"))


def test_corruption_is_named(dp4):
    bad = dp4.with_entry(("xi1", "xi2"), "c13", 2 * dp4.weight(("xi1", "xi2"), "c13"))
    failing = {r.relation for r in check_all_weights(bad) if not r.passed}
    assert "unitarity.b:{1,3}" in failing
    assert any(f.startswith("yb.") for f in failing)


def test_dense_yang_baxter_oracle(dp4):
    # independent check of the matrix equation on dense matrices built here
    x, y, z = "xi1", "xi2", "xi3"
    R12 = dense_two_site(dense_r(dp4, x, y), 1, 2, 3, 3)
    R13 = dense_two_site(dense_r(dp4, x, z), 1, 3, 3, 3)
    R23 = dense_two_site(dense_r(dp4, y, z), 2, 3, 3, 3)
    lhs, rhs = R12 @ R13 @ R23, R23 @ R13 @ R12
    assert np.abs(lhs - rhs).max() < 1e-10 * np.abs(lhs).max()


def test_matrix_relations(dp4):
    raps = RapiditySet(("xi1", "xi2", "xi3", "xi4"), ("mu1", "nu1"))
    reports = check_matrix_relations(dp4, raps)
    names = {r.relation for r in reports}
    assert {"matrix.yang_baxter", "matrix.unitarity", "matrix.u1:{1}", "matrix.u1:{2}", "matrix.yb_algebra"} <= names
    assert all_passed(reports)


def test_yb_algebra_detects_corruption(dp4):
    bad = dp4.with_entry(("mu1", "xi2"), "b23", 3.0)
    r = check_yang_baxter_algebra(bad, "mu1", "nu1", ("xi1", "xi2"))
    assert not r.passed


def test_invariants_hold(dp4):
    reports = check_weight_invariants(dp4)
    assert all_passed(reports)
    names = {r.relation for r in reports}
    for k in range(1, 11):
        if k != 6:
            assert f"invariant.delta{k}.constant" in names
    assert {"invariant.delta6.zero", "invariant.delta8=delta7", "invariant.delta5=delta4"} <= names


def test_invariants_need_three_labels():
    t, _ = random_del_pezzo(RapiditySet(("x", "y")), 1)
    with pytest.raises(InsufficientRapidities):
        check_weight_invariants(t)


def test_perk_schultz_deltas():
    vals = {"x": 0.7 + 0.1j, "y": 1.2 - 0.3j, "z": -0.4 + 0.9j}
    t = build_perk_schultz(0.9 * np.exp(0.4j), RapiditySet(("x", "y", "z"), (), vals))
    assert all_passed(check_weight_invariants(t))
    inv = weight_invariants(t, "x", "z")
    assert abs(inv["delta1"] - 1) < 1e-12
    assert abs(inv["delta2"] - 1) < 1e-12


def test_six_vertex_relations(six_vertex):
    assert all_passed(check_all_weights(six_vertex))
    reports = check_matrix_relations(six_vertex, RapiditySet(six_vertex.labels))
    assert all_passed(reports)
