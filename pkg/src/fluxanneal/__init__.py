"""Hybrid annealing of Ising problems with a flux-variable MD preconditioner."""

from .errors import (CapacityError, ContractViolation, DivergenceError, FluxannealError,
                     MalformedResponseError, RemoteCapacityError, RemoteError,
                     RemoteTimeoutError, RemoteTransportError)
from .ising import (CutReport, IsingProblem, cut_value, energy, gen_bimodal_complete,
                    gen_uniform_spinglass, maxcut_offset, maxcut_to_ising, mirror,
                    parisi_reference_cut, read_instance, write_instance)
from .md import (FluxState, MdConfig, Schedule, TimeAveragedFlux, TrajectorySample, force,
                 leapfrog_ensemble, leapfrog_run, md_hamiltonian, schedule_eval)
from .reducer import (Partition, SubProblem, build_subproblem, make_partition, project_all,
                      reconstruct)

__version__ = "0.1.0"
