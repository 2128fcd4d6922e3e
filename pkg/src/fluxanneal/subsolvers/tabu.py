from dataclasses import dataclass
import time

import numba
import numpy as np

from ..errors import ContractViolation
from ..ising import as_spins
from ..rng import random_spins
from .base import csr_arrays, finalize


@dataclass(frozen=True)
class TabuParams:
    """Tabu search settings.

    ``max_iterations`` and ``stall_limit`` default to ``50 * n`` and ``5 * n``
    for an ``n``-site problem when left as ``None``.
    """

    tenure: int = 20
    max_iterations: int | None = None
    stall_limit: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.tenure < 1:
            raise ContractViolation("tenure must be >= 1")
        for name in ("max_iterations", "stall_limit"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ContractViolation(f"{name} must be >= 1")


def effective_tenure(tenure, n):
    # keep a majority of moves open on small problems
    return max(1, min(tenure, n // 4 + 1)) if n > 1 else 0


@numba.njit(cache=True)
def _tabu(indptr, indices, data, h, s, tenure, max_iter, stall_limit):
    n = s.shape[0]
    field = np.zeros(n)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            field[i] += data[p] * s[indices[p]]
    e = 0.5 * (field @ s) + h @ s
    best_e = e
    best_s = s.copy()
    tabu_until = np.zeros(n, dtype=np.int64)
    stall = 0
    flips = 0
    for it in range(max_iter):
        move = -1
        move_de = np.inf
        for i in range(n):
            de = -2.0 * s[i] * (field[i] + h[i])
            if de < move_de and (tabu_until[i] <= it or e + de < best_e - 1e-12):
                move = i
                move_de = de
        if move < 0:
            break
        s[move] = -s[move]
        two_s = 2.0 * s[move]
        for p in range(indptr[move], indptr[move + 1]):
            field[indices[p]] += two_s * data[p]
        e += move_de
        flips += 1
        tabu_until[move] = it + 1 + tenure
        if e < best_e - 1e-12:
            best_e = e
            best_s[:] = s
            stall = 0
        else:
            stall += 1
            if stall >= stall_limit:
                break
    return best_s, flips


def tabu_search(problem, params=TabuParams(), warm_start=None):
    """Best-improvement single-flip tabu search.

    Each iteration flips the site with the lowest energy change among those
    not tabu; a tabu site is still eligible when flipping it beats the
    incumbent (aspiration).  A flipped site stays tabu for the tenure, capped
    at ``n // 4 + 1`` so small problems keep most moves open.  The search ends
    after ``max_iterations`` or ``stall_limit`` consecutive non-improving
    iterations.  Ties go to the lowest site index; the seed only matters when
    no warm start is given.
    """
    started = time.perf_counter()
    n = problem.n_sites
    if warm_start is not None:
        s = as_spins(warm_start, n).astype(np.float64)
    else:
        s = random_spins(n, params.seed).astype(np.float64)
    max_iter = params.max_iterations if params.max_iterations is not None else 50 * n
    stall = params.stall_limit if params.stall_limit is not None else 5 * n
    indptr, indices, data = csr_arrays(problem)
    best, flips = _tabu(indptr, indices, data, np.asarray(problem.fields, np.float64), s,
                        effective_tenure(params.tenure, n), max_iter, stall)
    return finalize(problem, best.astype(np.int8), "tabu", started, warm_start, flips=flips)
