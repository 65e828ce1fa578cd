"""Hot loops of the permutation sums, with an optional numba backend.

Both backends compute, for every row ``s`` of a permutation table, the term

    prod_i C[i, s(i)] * prod_{j<k} A[j, s(k)] * B[k, s(j)] * H[s(k), s(j)]

and the caller reduces the terms with a compensated sum.  Setting the
environment variable ``FBASIS_DISABLE_NUMBA`` to a non-empty value other than
``0`` forces the numpy fallback, which is also used when numba is missing.
"""

from __future__ import annotations

import itertools
import math
import os
from functools import lru_cache

import numpy as np

try:  # pragma: no cover - exercised only when numba is installed
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def numba_disabled() -> bool:
    flag = os.environ.get("FBASIS_DISABLE_NUMBA", "")
    return flag not in ("", "0") or not HAVE_NUMBA


@lru_cache(maxsize=16)
def permutation_table(L: int) -> np.ndarray:
    """All permutations of ``0..L-1`` in lexicographic order, one per row."""
    if L == 0:
        return np.zeros((1, 0), dtype=np.int64)
    out = np.array(list(itertools.permutations(range(L))), dtype=np.int64)
    out.flags.writeable = False
    return out


def perm_terms_numpy(perms: np.ndarray, C: np.ndarray, A: np.ndarray, B: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Vectorized term table over the rows of ``perms``."""
    P, L = perms.shape
    rows = np.arange(L)
    terms = np.prod(C[rows, perms], axis=1) if L else np.ones(P, complex)
    for j in range(L):
        for k in range(j + 1, L):
            sj, sk = perms[:, j], perms[:, k]
            terms = terms * A[j, sk] * B[k, sj] * H[sk, sj]
    return terms


def _perm_terms_loop(perms, C, A, B, H):
    P, L = perms.shape
    out = np.empty(P, dtype=np.complex128)
    for r in range(P):
        acc = 1.0 + 0.0j
        for i in range(L):
            acc *= C[i, perms[r, i]]
        for j in range(L):
            sj = perms[r, j]
            for k in range(j + 1, L):
                sk = perms[r, k]
                acc *= A[j, sk] * B[k, sj] * H[sk, sj]
        out[r] = acc
    return out


if HAVE_NUMBA:
    perm_terms_numba = njit(cache=False)(_perm_terms_loop)
else:  # pragma: no cover
    perm_terms_numba = _perm_terms_loop


def perm_terms(perms: np.ndarray, C: np.ndarray, A: np.ndarray, B: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Dispatch to the numba kernel unless it is disabled."""
    args = [np.ascontiguousarray(x, dtype=np.complex128) for x in (C, A, B, H)]
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    if numba_disabled():
        return perm_terms_numpy(perms, *args)
    return perm_terms_numba(perms, *args)


def compensated_sum(values: np.ndarray) -> complex:
    """Correctly rounded sum of real and imaginary parts, independent of order."""
    values = np.asarray(values, dtype=complex)
    return complex(math.fsum(values.real.tolist()), math.fsum(values.imag.tolist()))


def perm_sum(C: np.ndarray, A: np.ndarray, B: np.ndarray, H: np.ndarray) -> complex:
    """Sum of :func:`perm_terms` over the whole symmetric group."""
    L = np.shape(C)[0]
    return compensated_sum(perm_terms(permutation_table(L), C, A, B, H))
