"""Shared fixtures and independent dense oracles for the test suite."""

from __future__ import annotations

import sys

import numpy as np
import pytest

from fbasis.weights import RapiditySet, build_six_vertex, random_del_pezzo


def dense_r(table, x, y):
    """R(x, y) assembled entry by entry from weight lookups, without ``local_r``."""
    n = table.rank
    R = np.zeros((n * n, n * n), complex)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            row = (i - 1) * n + (j - 1)
            if i == j:
                R[row, row] = table.weight((x, y), f"a{i}")
            else:
                R[row, row] = table.weight((x, y), f"b{i}{j}")
                R[row, (j - 1) * n + (i - 1)] = table.weight((x, y), f"c{i}{j}")
    return R


def dense_two_site(local, j, k, n, L):
    """Embed a two-site matrix on sites ``j, k`` by explicit index bookkeeping."""
    dim = n**L
    out = np.zeros((dim, dim), complex)
    loc = local.reshape(n, n, n, n)
    for col in range(dim):
        digs = list(np.unravel_index(col, (n,) * L))
        for a in range(n):
            for b in range(n):
                amp = loc[a, b, digs[j - 1], digs[k - 1]]
                if amp == 0:
                    continue
                new = list(digs)
                new[j - 1], new[k - 1] = a, b
                out[np.ravel_multi_index(new, (n,) * L), col] += amp
    return out


def dense_monodromy(table, mu, xs):
    """``T_a(mu) = R_aL ... R_a1`` as a dense matrix with the auxiliary site first."""
    n, L = table.rank, len(xs)
    T = np.eye(n ** (L + 1), dtype=complex)
    for k, xi in enumerate(xs, 2):
        T = dense_two_site(dense_r(table, mu, xi), 1, k, n, L + 1) @ T
    return T


def dense_block(table, mu, xs, i, j):
    n, L = table.rank, len(xs)
    T = dense_monodromy(table, mu, xs)
    d = n**L
    return T[(i - 1) * d:i * d, (j - 1) * d:j * d]


@pytest.fixture(scope="session")
def dp4():
    """Seeded del Pezzo table on four sites and two auxiliary rapidities."""
    table, params = random_del_pezzo(RapiditySet.standard(4, ("mu1", "nu1")), 7)
    return table


@pytest.fixture(scope="session")
def six_vertex():
    raps = RapiditySet.standard(4, (), {f"xi{k}": 0.3 * k + 0.1j * k * k for k in range(1, 5)})
    return build_six_vertex(0.45 + 0.2j, raps)


def pytest_terminal_summary(terminalreporter):
    """One verdict line per acceptance criterion that ran."""
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"acceptance {n}: {'PASS' if ok else 'FAIL'}  {detail}")
