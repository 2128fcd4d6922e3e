from dataclasses import dataclass
import time

import numpy as np

from ..ising import as_spins, energy


@dataclass
class SubsolverResult:
    spins: np.ndarray
    energy: float
    backend: str
    elapsed: float
    warm_start_used: bool = False
    flips: int = 0


def finalize(problem, spins, backend, started, warm_start=None, flips=0):
    """Recompute the energy and fall back to ``warm_start`` if it is better.

    Every backend funnels its answer through here, which is what makes the
    never-worse-than-warm-start contract hold regardless of backend.
    """
    spins = as_spins(spins, problem.n_sites)
    e = energy(problem, spins)
    used = False
    if warm_start is not None:
        ws = as_spins(warm_start, problem.n_sites)
        e_ws = energy(problem, ws)
        if e_ws < e:
            spins, e, used = ws.copy(), e_ws, True
    return SubsolverResult(spins, e, backend, time.perf_counter() - started, used, flips)


def csr_arrays(problem):
    csr = problem.csr()
    return (csr.indptr.astype(np.int64), csr.indices.astype(np.int64),
            csr.data.astype(np.float64))
