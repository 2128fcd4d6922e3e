"""Single-spin-flip Metropolis simulated annealing with a geometric beta ramp."""

from dataclasses import dataclass
import time

import numba
import numpy as np

from ..errors import ContractViolation
from ..ising import as_spins
from ..rng import make_rng
from .base import csr_arrays, finalize

# sweeps per compiled call; bounds the size of the uniform buffer
_BLOCK = 64


@dataclass(frozen=True)
class SaParams:
    sweeps: int = 1000
    beta_initial: float = 0.01
    beta_final: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ContractViolation("sweeps must be >= 1")
        if not 0 < self.beta_initial <= self.beta_final:
            raise ContractViolation("need 0 < beta_initial <= beta_final")

    def betas(self):
        """Inverse temperature used in each sweep."""
        if self.sweeps == 1:
            return np.array([self.beta_initial])
        ratio = (self.beta_final / self.beta_initial) ** (1.0 / (self.sweeps - 1))
        return self.beta_initial * ratio ** np.arange(self.sweeps)


@numba.njit(cache=True)
def _sweep_block(indptr, indices, data, h, s, field, betas, uniforms, e, best_e, best_s):
    n = s.shape[0]
    for k in range(betas.shape[0]):
        beta = betas[k]
        for i in range(n):
            de = -2.0 * s[i] * (field[i] + h[i])
            if de <= 0.0 or uniforms[k, i] < np.exp(-beta * de):
                s[i] = -s[i]
                two_s = 2.0 * s[i]
                for p in range(indptr[i], indptr[i + 1]):
                    field[indices[p]] += two_s * data[p]
                e += de
        if e < best_e:
            best_e = e
            best_s[:] = s
    return e, best_e


def simulated_annealing(problem, params=SaParams(), warm_start=None):
    """Anneal from the warm start (or a random state) and return the best state.

    One sweep proposes a flip at every site in index order; beta grows by a
    constant factor after each sweep from ``beta_initial`` to ``beta_final``.
    The best configuration is checked at the end of every sweep.
    """
    started = time.perf_counter()
    n = problem.n_sites
    rng = make_rng(params.seed)
    if warm_start is not None:
        s = as_spins(warm_start, n).astype(np.float64)
    else:
        s = (1 - 2 * rng.integers(0, 2, size=n)).astype(np.float64)
    indptr, indices, data = csr_arrays(problem)
    h = np.asarray(problem.fields, dtype=np.float64)
    field = problem.matvec(s)
    e = 0.5 * field @ s + h @ s
    best_e, best_s = e, s.copy()
    betas = params.betas()
    for start in range(0, params.sweeps, _BLOCK):
        chunk = betas[start:start + _BLOCK]
        uniforms = rng.random((chunk.shape[0], n))
        e, best_e = _sweep_block(indptr, indices, data, h, s, field, chunk, uniforms,
                                 e, best_e, best_s)
    return finalize(problem, best_s.astype(np.int8), "sa", started, warm_start,
                    flips=params.sweeps * n)
