import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbasis import _kernels
from fbasis.dwpf import kernel_matrices, random_instance


def brute_terms(C, A, B, H):
    L = C.shape[0]
    out = []
    for s in itertools.permutations(range(L)):
        t = 1.0 + 0j
        for i in range(L):
            t *= C[i, s[i]]
        for j in range(L):
            for k in range(j + 1, L):
                t *= A[j, s[k]] * B[k, s[j]] * H[s[k], s[j]]
        out.append(t)
    return np.array(out)


def random_mats(L, seed):
    rng = np.random.default_rng(seed)
    return [rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L)) for _ in range(4)]


def test_permutation_table():
    t = _kernels.permutation_table(3)
    assert t.shape == (6, 3)
    assert not t.flags.writeable
    assert [tuple(r) for r in t] == list(itertools.permutations(range(3)))
    assert _kernels.permutation_table(0).shape == (1, 0)


@pytest.mark.parametrize("L", [1, 2, 3, 4, 5])
def test_numpy_backend_matches_brute_force(L):
    mats = random_mats(L, L)
    np.testing.assert_allclose(_kernels.perm_terms_numpy(_kernels.permutation_table(L), *mats), brute_terms(*mats), rtol=1e-13)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("L", [2, 4, 6])
def test_backends_agree(L):
    inst, table = random_instance("C1", L, 7)
    mats = [np.ascontiguousarray(m) for m in kernel_matrices("C1", table, inst.aux, inst.inhomogeneities)]
    perms = _kernels.permutation_table(L)
    a = _kernels.perm_terms_numpy(perms, *mats)
    b = _kernels.perm_terms_numba(perms, *mats)
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_env_flag(monkeypatch):
    monkeypatch.setenv("FBASIS_DISABLE_NUMBA", "1")
    assert _kernels.numba_disabled()
    mats = random_mats(3, 0)
    a = _kernels.perm_sum(*mats)
    monkeypatch.setenv("FBASIS_DISABLE_NUMBA", "0")
    assert _kernels.numba_disabled() is not _kernels.HAVE_NUMBA
    b = _kernels.perm_sum(*mats)
    assert abs(a - b) <= 1e-13 * max(abs(a), 1.0)
    monkeypatch.delenv("FBASIS_DISABLE_NUMBA")
    assert _kernels.numba_disabled() is not _kernels.HAVE_NUMBA


def test_compensated_sum_is_exact():
    vals = np.array([1e16, 1.0, -1e16, 1.0j, 3.0]) + 0j
    assert _kernels.compensated_sum(vals) == complex(4.0, 1.0)


@settings(max_examples=50)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40), st.randoms())
def test_compensated_sum_order_independent(xs, rnd):
    vals = np.array(xs, complex)
    shuffled = list(vals)
    rnd.shuffle(shuffled)
    assert _kernels.compensated_sum(vals) == _kernels.compensated_sum(np.array(shuffled))
    assert _kernels.compensated_sum(vals).real == math.fsum(xs)
