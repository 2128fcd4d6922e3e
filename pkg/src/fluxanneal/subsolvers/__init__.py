"""Interchangeable Ising backends.

All backends return a :class:`SubsolverResult` whose energy is recomputed
from the returned spins, and never return anything worse than a supplied
warm start.
"""

from ..errors import ContractViolation
from .annealing import SaParams, simulated_annealing
from .base import SubsolverResult
from .brute import MAX_BRUTE_SITES, brute_force
from .remote import remote_solve
from .server import LoopbackServer
from .tabu import TabuParams, tabu_search

__all__ = [
    "SubsolverResult",
    "SaParams",
    "TabuParams",
    "MAX_BRUTE_SITES",
    "brute_force",
    "simulated_annealing",
    "tabu_search",
    "remote_solve",
    "LoopbackServer",
    "solve",
]


def solve(problem, backend, params=None, warm_start=None, endpoint=None, timeout=30.0,
          postprocess=False):
    """Dispatch to a backend by name (``brute``, ``sa``, ``tabu``, ``remote``)."""
    if backend == "brute":
        return brute_force(problem, warm_start)
    if backend == "sa":
        return simulated_annealing(problem, params or SaParams(), warm_start)
    if backend == "tabu":
        return tabu_search(problem, params or TabuParams(), warm_start)
    if backend == "remote":
        if endpoint is None:
            raise ContractViolation("remote backend needs an endpoint")
        return remote_solve(problem, endpoint, timeout, warm_start, postprocess=postprocess)
    raise ContractViolation(f"unknown backend {backend!r}")
