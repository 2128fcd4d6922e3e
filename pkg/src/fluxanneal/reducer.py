"""Split sites into ambivalent and frozen sets and build the reduced problem.

Sites are ranked by the magnitude of their time-averaged flux at the end of
the MD run.  The ``n`` smallest are ambivalent and go to a subsolver; the rest
are frozen to the sign of their averaged flux.  Freezing turns couplings to
frozen sites into extra local fields on the ambivalent ones, plus a constant.
"""

from dataclasses import dataclass
import json

import numpy as np

from .errors import ContractViolation
from .ising import IsingProblem, as_spins

__all__ = [
    "Partition",
    "SubProblem",
    "sign_projection",
    "project_all",
    "make_partition",
    "build_subproblem",
    "reconstruct",
    "restrict",
    "partition_to_json",
    "partition_from_json",
]


@dataclass(frozen=True)
class Partition:
    """Ambivalence ranking of all sites.

    ``order`` lists sites by ascending ``|phibar|`` (ties by site index); the
    first ``n_ambivalent`` are ambivalent.  ``frozen_spins`` maps every other
    site to its frozen sign.
    """

    order: np.ndarray
    n_ambivalent: int
    frozen_spins: dict

    @property
    def n_sites(self):
        return len(self.order)

    @property
    def ambivalent(self):
        return self.order[: self.n_ambivalent]

    @property
    def frozen(self):
        return self.order[self.n_ambivalent:]


@dataclass(frozen=True)
class SubProblem:
    base: IsingProblem | None
    offset: float
    ambivalent_sites: np.ndarray

    @property
    def n_sites(self):
        return len(self.ambivalent_sites)


def sign_projection(phibar):
    """Componentwise sign with sgn(0) = +1, as int8."""
    phibar = np.asarray(phibar, dtype=np.float64)
    return np.where(phibar < 0, -1, 1).astype(np.int8)


def project_all(phibar):
    """MD-only solution: every site takes the sign of its averaged flux."""
    return sign_projection(phibar)


def make_partition(phibar, n, tie_epsilon=0.0):
    """Rank sites by ``|phibar|`` and mark the lowest ``n`` as ambivalent.

    ``tie_epsilon > 0`` rounds magnitudes to the nearest multiple of ``tie_epsilon``
    before sorting, so near-equal sites fall back to index order.
    """
    phibar = np.asarray(phibar, dtype=np.float64).reshape(-1)
    N = phibar.shape[0]
    if not 0 <= n <= N:
        raise ContractViolation(f"n_ambivalent must lie in [0, {N}], got {n}")
    if tie_epsilon < 0:
        raise ContractViolation("tie_epsilon must be non-negative")
    mag = np.abs(phibar)
    if tie_epsilon > 0:
        mag = np.rint(mag / tie_epsilon)
    order = np.argsort(mag, kind="stable")
    signs = sign_projection(phibar)
    frozen = {int(k): int(signs[k]) for k in order[n:]}
    return Partition(order=order, n_ambivalent=int(n), frozen_spins=frozen)


def _frozen_arrays(part):
    sites = part.frozen
    spins = np.array([part.frozen_spins[int(k)] for k in sites], dtype=np.float64)
    return sites, spins


def build_subproblem(full, part):
    """Effective problem on the ambivalent sites.

    ``J_eff`` is ``J`` restricted to ambivalent sites, ``h_eff`` adds the
    frozen-neighbour fields, and ``offset`` is the frozen-frozen plus frozen
    field energy, so ``energy(full, s) == energy(sub, s') + offset``.
    """
    if part.n_sites != full.n_sites:
        raise ContractViolation("partition size does not match problem")
    amb = np.asarray(part.ambivalent)
    fro, s_fro = _frozen_arrays(part)
    h = full.fields

    J = full.csr() if full.is_sparse else full.couplings
    if len(fro):
        J_af = J[np.ix_(amb, fro)] if not full.is_sparse else J[amb][:, fro]
        J_ff = J[np.ix_(fro, fro)] if not full.is_sparse else J[fro][:, fro]
        offset = 0.5 * float(s_fro @ (J_ff @ s_fro)) + float(h[fro] @ s_fro)
        h_eff = h[amb] + J_af @ s_fro
    else:
        offset = 0.0
        h_eff = h[amb].copy()

    if len(amb) == 0:
        return SubProblem(base=None, offset=offset, ambivalent_sites=amb)
    J_aa = J[np.ix_(amb, amb)] if not full.is_sparse else J[amb][:, amb]
    base = IsingProblem(J_aa, h_eff, sparse=full.is_sparse)
    return SubProblem(base=base, offset=offset, ambivalent_sites=amb)


def reconstruct(part, sub, s_prime):
    """Full configuration from frozen signs and subproblem spins."""
    s_prime = as_spins(s_prime, sub.n_sites) if sub.n_sites else np.zeros(0, np.int8)
    if len(s_prime) != part.n_ambivalent:
        raise ContractViolation("subproblem spins do not match the partition")
    s = np.empty(part.n_sites, dtype=np.int8)
    fro, s_fro = _frozen_arrays(part)
    s[fro] = s_fro
    s[sub.ambivalent_sites] = s_prime
    return s


def restrict(part, s):
    """Spins of ``s`` on the ambivalent sites, in subproblem order."""
    return np.asarray(s, dtype=np.int8)[part.ambivalent]


def partition_to_json(part):
    return json.dumps({
        "n": part.n_ambivalent,
        "ambivalent": [int(i) for i in part.ambivalent],
        "frozen": {str(k): int(v) for k, v in part.frozen_spins.items()},
    })


def partition_from_json(text):
    """Inverse of :func:`partition_to_json`.

    Frozen sites are re-ranked after the ambivalent ones in the order stored.
    """
    data = json.loads(text)
    amb = [int(i) for i in data["ambivalent"]]
    if len(amb) != int(data["n"]):
        raise ContractViolation("partition JSON: 'n' disagrees with 'ambivalent'")
    frozen = {int(k): int(v) for k, v in data["frozen"].items()}
    if any(v not in (1, -1) for v in frozen.values()):
        raise ContractViolation("partition JSON: frozen signs must be +-1")
    order = np.array(amb + list(frozen), dtype=np.int64)
    if sorted(order.tolist()) != list(range(len(order))):
        raise ContractViolation("partition JSON: sites must cover 0..N-1 exactly once")
    return Partition(order=order, n_ambivalent=len(amb), frozen_spins=frozen)
