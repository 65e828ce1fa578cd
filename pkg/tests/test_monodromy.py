import numpy as np
import pytest
from conftest import dense_block, dense_monodromy

from fbasis.errors import DimensionMismatch, DivisionNearZero
from fbasis.fmatrix import build_f_bundle
from fbasis.monodromy import (
    BLOCK_NAMES,
    KAPPA_ZERO_POSITIONS,
    Theta,
    apply_block,
    build_monodromy,
    check_kappa_zeros,
    check_twisted,
    conjectured_twisted,
    kappa_zero_expressions,
    monodromy_operator,
    twist,
)
from fbasis.reports import all_passed
from fbasis.tensor import sz_total


@pytest.mark.parametrize("L", [1, 2, 3])
def test_blocks_match_dense_oracle(dp4, L):
    xs = dp4.labels[:L]
    T = build_monodromy(dp4, "mu1", xs)
    for name, (i, j) in BLOCK_NAMES.items():
        np.testing.assert_allclose(T[name].to_dense(), dense_block(dp4, "mu1", xs, i, j), atol=1e-13)
    np.testing.assert_allclose(T.assemble().to_dense(), dense_monodromy(dp4, "mu1", xs), atol=1e-13)
    np.testing.assert_allclose(monodromy_operator(dp4, "mu1", xs).to_dense(), dense_monodromy(dp4, "mu1", xs), atol=1e-13)


def test_apply_block_matches_blocks(dp4):
    xs = dp4.labels[:3]
    T = build_monodromy(dp4, "nu1", xs)
    rng = np.random.default_rng(2)
    v = rng.normal(size=27) + 1j * rng.normal(size=27)
    for name in BLOCK_NAMES:
        np.testing.assert_allclose(apply_block(dp4, "nu1", xs, name, v), T[name].act(v), atol=1e-13)
    with pytest.raises(DimensionMismatch):
        apply_block(dp4, "nu1", xs, "D", np.ones(9))


def test_theta_by_position(dp4):
    th = Theta(dp4, ("xi2", "xi1"))
    assert th(3, 1, 2) == dp4.weight(("xi2", "xi1"), "a3")
    assert th(3, 2, 1) == 1


@pytest.mark.parametrize("L", [1, 2, 3, 4])
def test_twisted_closed_forms(dp4, L):
    xs = dp4.labels[:L]
    bundle = build_f_bundle(dp4, xs)
    reports = check_twisted(dp4, "mu1", xs, bundle)
    assert [r.relation for r in reports] == [f"twist.{k}:L={L}" for k in ("D", "C2", "B2", "C1", "B1")]
    assert all_passed(reports)


def test_twist_dimension_guard(dp4):
    bundle = build_f_bundle(dp4, ("xi1", "xi2"))
    with pytest.raises(DimensionMismatch):
        twist(build_monodromy(dp4, "mu1", ("xi1",))["D"], bundle)


def test_twisted_d_is_diagonal(dp4):
    xs = dp4.labels[:3]
    D = twist(build_monodromy(dp4, "mu1", xs)["D"], build_f_bundle(dp4, xs)).to_dense()
    off = D - np.diag(np.diag(D))
    assert np.abs(off).max() < 1e-10 * np.abs(D).max()


def test_twisted_d_commutes_with_charges(dp4):
    xs = dp4.labels[:3]
    D = twist(build_monodromy(dp4, "mu1", xs)["D"], build_f_bundle(dp4, xs))
    for i in (1, 2):
        S = sz_total(i, (3, 3))
        assert (S @ D - D @ S).max_abs() < 1e-10 * D.max_abs()


def test_block_charge_selection(dp4):
    # block (a, b) moves one quantum-space site from state a to state b
    xs = dp4.labels[:3]
    T = build_monodromy(dp4, "nu1", xs)
    for name, (a, b) in BLOCK_NAMES.items():
        X = T[name]
        for i in (1, 2):
            shift = (b == i) - (a == i) - (b == i + 1) + (a == i + 1)
            S = sz_total(i, (3, 3))
            assert (S @ X - X @ S - X * shift).max_abs() < 1e-12 * max(X.max_abs(), 1.0), (name, i)


def test_kappa_zeros(dp4):
    bundle = build_f_bundle(dp4, ("xi1", "xi2"))
    reports = check_kappa_zeros(dp4, "mu1", ("xi1", "xi2"), bundle)
    assert len(reports) == 2 * len(KAPPA_ZERO_POSITIONS)
    assert all_passed(reports)
    exprs = kappa_zero_expressions(dp4, "mu1", "xi1", "xi2")
    # each expression is a genuine cancellation between sizable terms
    for terms in exprs.values():
        assert max(abs(t) for t in terms) > 1e-3


def test_kappa_detects_corruption(dp4):
    bad = dp4.with_entry(("mu1", "xi1"), "b31", 2 * dp4.weight(("mu1", "xi1"), "b31"))
    bundle = build_f_bundle(bad, ("xi1", "xi2"))
    reports = check_kappa_zeros(bad, "mu1", ("xi1", "xi2"), bundle)
    assert not all_passed(reports)


def test_division_near_zero_names_weight(dp4):
    bad = dp4.with_entry(("xi2", "xi1"), "b21", 0.0)
    with pytest.raises(DivisionNearZero, match=r"b21.*xi2.*xi1"):
        conjectured_twisted("C1", bad, "mu1", ("xi1", "xi2"))
