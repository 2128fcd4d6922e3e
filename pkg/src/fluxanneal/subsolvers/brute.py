import time

import numba
import numpy as np

from ..errors import CapacityError
from .base import finalize

MAX_BRUTE_SITES = 26


@numba.njit(cache=True)
def _gray_search(J, h, tol):
    n = h.shape[0]
    s = np.ones(n)
    field = J @ s
    e = 0.5 * (field @ s) + h @ s
    best_e = e
    best_key = 0
    for t in range(1, 1 << n):
        # trailing zero count selects the bit that changes in Gray order
        b = 0
        while not (t >> b) & 1:
            b += 1
        i = n - 1 - b
        e += -2.0 * s[i] * (field[i] + h[i])
        s[i] = -s[i]
        two_s = 2.0 * s[i]
        for j in range(n):
            field[j] += two_s * J[j, i]
        key = t ^ (t >> 1)
        if e < best_e - tol:
            best_e = e
            best_key = key
        elif e <= best_e + tol:
            if key < best_key:
                best_key = key
            if e < best_e:
                best_e = e
    return best_key


def key_to_spins(key, n):
    """Bit ``n-1-i`` of ``key`` set means ``s_i = -1``; key 0 is all +1."""
    bits = (key >> np.arange(n - 1, -1, -1)) & 1
    return (1 - 2 * bits).astype(np.int8)


def brute_force(problem, warm_start=None, tol=1e-10):
    """Exact ground state by Gray-code enumeration of all 2^N configurations.

    Among (numerically) degenerate minima the lexicographically smallest
    configuration is returned, ordering +1 before -1 and comparing from
    site 0.
    """
    n = problem.n_sites
    if n > MAX_BRUTE_SITES:
        raise CapacityError(f"brute force is limited to {MAX_BRUTE_SITES} sites, got {n}")
    started = time.perf_counter()
    J = np.ascontiguousarray(problem.dense_couplings())
    key = _gray_search(J, problem.fields, tol)
    return finalize(problem, key_to_spins(key, n), "brute", started, warm_start,
                    flips=1 << n)
