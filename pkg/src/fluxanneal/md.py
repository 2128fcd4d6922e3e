"""Molecular dynamics of classical flux variables.

The flux Hamiltonian is

    H_MD = alpha(tau) * sum_i (p_i^2 / 2 + phi_i^M)
         + beta(tau) * (1/2 * sum_{i != j} J_ij phi_i phi_j + sum_i h_i |phi_i| phi_i)

and is integrated with a kick-drift leapfrog in which the step in normalized
time ``tau`` is identified with the inverse time scale ``g``, so one step
advances ``p`` by the force and ``phi`` by ``alpha * p`` without an explicit
step factor.  ``MdConfig.time_scale`` multiplies both updates when a different
identification is wanted.

Several independent trajectories on the same instance can be integrated
together (:func:`leapfrog_ensemble`); each trajectory is a row of an
``(R, N)`` array and may carry its own schedule.
"""

from dataclasses import dataclass, field, replace
import gzip
import csv

import numpy as np

from .errors import ContractViolation, DivergenceError
from .rng import random_spins

__all__ = [
    "Schedule",
    "MdConfig",
    "FluxState",
    "TimeAveragedFlux",
    "TrajectorySample",
    "EnsembleResult",
    "schedule_eval",
    "force",
    "md_hamiltonian",
    "synchronize",
    "leapfrog_run",
    "leapfrog_ensemble",
    "initial_momenta",
    "write_trajectory_csv",
]

DIVERGENCE_CHECK_EVERY = 1000


@dataclass(frozen=True)
class Schedule:
    """Quadratic scheduling functions

    alpha(tau) = alpha_f * (tau + rho1 * (1 - tau) + rho2 * tau * (tau - 1))
    beta(tau)  = beta_f  * (tau + kappa1 * (1 - tau) + kappa2 * tau * (tau - 1))

    Defaults are the production values; ``alpha`` must stay positive on
    ``[0, 1]``.
    """

    alpha_f: float = 0.008
    rho1: float = 4.0
    rho2: float = 3.0
    beta_f: float = 0.12
    kappa1: float = 0.05
    kappa2: float = 1.0

    def __post_init__(self):
        for name in ("alpha_f", "rho1", "rho2", "beta_f", "kappa1", "kappa2"):
            if not np.isfinite(getattr(self, name)):
                raise ContractViolation(f"schedule coefficient {name} must be finite")
        if self.min_alpha() <= 0:
            raise ContractViolation(f"alpha(tau) must be positive on [0, 1]: {self}")

    def min_alpha(self):
        # alpha/alpha_f = rho2*t^2 + (1 - rho1 - rho2)*t + rho1
        a, b, c = self.rho2, 1.0 - self.rho1 - self.rho2, self.rho1
        cands = [0.0, 1.0]
        if a > 0:
            vertex = -b / (2 * a)
            if 0.0 < vertex < 1.0:
                cands.append(vertex)
        return min(self.alpha_f * (a * t * t + b * t + c) for t in cands)

    def alpha(self, tau):
        return self.alpha_f * (tau + self.rho1 * (1 - tau) + self.rho2 * tau * (tau - 1))

    def beta(self, tau):
        return self.beta_f * (tau + self.kappa1 * (1 - tau) + self.kappa2 * tau * (tau - 1))

    def with_kappa2(self, kappa2):
        return replace(self, kappa2=float(kappa2))

    def as_tuple(self):
        return (self.alpha_f, self.rho1, self.rho2, self.beta_f, self.kappa1, self.kappa2)

    @classmethod
    def parse(cls, text):
        """Parse ``"a_f,r1,r2,b_f,k1,k2"``."""
        parts = [p for p in text.split(",") if p.strip()]
        if len(parts) != 6:
            raise ContractViolation(f"schedule needs 6 comma-separated numbers, got {text!r}")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError as exc:
            raise ContractViolation(f"bad schedule {text!r}: {exc}") from None


@dataclass(frozen=True)
class MdConfig:
    """Integration settings.

    ``steps`` is the inverse step ``1/dtau``; ``window_steps`` is the length of
    the trailing time average in steps; ``record_stride`` > 0 stores a
    trajectory sample every that many steps.
    """

    steps: int = 50_000
    potential_power: int = 6
    window_steps: int = 100
    seed: int = 0
    record_stride: int = 0
    time_scale: float = 1.0

    def __post_init__(self):
        if self.steps < 1:
            raise ContractViolation("steps must be positive")
        if self.potential_power < 4 or self.potential_power % 2:
            raise ContractViolation("potential_power must be an even integer >= 4")
        if not 1 <= self.window_steps <= self.steps:
            raise ContractViolation("window_steps must lie in [1, steps]")
        if self.record_stride < 0:
            raise ContractViolation("record_stride must be non-negative")
        if not (np.isfinite(self.time_scale) and self.time_scale > 0):
            raise ContractViolation("time_scale must be positive")

    @property
    def dtau(self):
        return 1.0 / self.steps


@dataclass
class FluxState:
    """Fluxes and momenta at normalized time ``tau``.

    ``mom`` is stored half a step behind ``phi`` unless ``synchronized``.
    Arrays are ``(N,)`` for a single trajectory or ``(R, N)`` for an ensemble.
    """

    phi: np.ndarray
    mom: np.ndarray
    tau: float
    synchronized: bool = False
    time_scale: float = 1.0


@dataclass
class TimeAveragedFlux:
    phibar: np.ndarray
    window: float


@dataclass
class TrajectorySample:
    tau: float
    phi_snapshot: np.ndarray
    phibar_snapshot: np.ndarray
    mom_snapshot: np.ndarray = field(repr=False, default=None)


@dataclass
class EnsembleResult:
    """Output of :func:`leapfrog_ensemble`; arrays are ``(R, N)``."""

    final: FluxState
    phibar: np.ndarray
    window: float
    samples: list

    def state(self, r):
        return FluxState(self.final.phi[r], self.final.mom[r], self.final.tau,
                         self.final.synchronized, self.final.time_scale)

    def average(self, r):
        return TimeAveragedFlux(self.phibar[r], self.window)


def schedule_eval(schedule, tau):
    if not 0.0 <= tau <= 1.0:
        raise ContractViolation(f"tau must lie in [0, 1], got {tau}")
    return schedule.alpha(tau), schedule.beta(tau)


def _ipow(x, k):
    """x**k for a small positive integer k by repeated multiplication."""
    result = None
    base = x
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return result


def _column(v, ndim):
    v = np.asarray(v, dtype=np.float64)
    return v[:, None] if (ndim == 2 and v.ndim == 1) else v


def force(problem, phi, alpha, beta, M=6):
    """Momentum increment ``-alpha*M*phi^(M-1) - 2*beta*(J phi / 2 + h |phi|)``.

    ``phi`` may be ``(N,)`` or ``(R, N)``; in the batched case ``alpha`` and
    ``beta`` may be per-row vectors.  The ``h |phi|`` term uses ``|phi|``
    directly, so no subgradient choice is needed at ``phi = 0``.
    """
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape[-1] != problem.n_sites:
        raise ContractViolation(f"phi has {phi.shape[-1]} sites, problem has {problem.n_sites}")
    a = _column(alpha, phi.ndim)
    b = _column(beta, phi.ndim)
    coupling = problem.matvec(phi) + 2.0 * problem.fields * np.abs(phi)
    return -a * M * _ipow(phi, M - 1) - b * coupling


def synchronize(problem, state, schedule, M=6):
    """Return ``state`` with momenta kicked forward half a step to ``tau``."""
    if state.synchronized:
        return state
    alpha, beta = schedule.alpha(state.tau), schedule.beta(state.tau)
    mom = state.mom + 0.5 * state.time_scale * force(problem, state.phi, alpha, beta, M)
    return FluxState(state.phi, mom, state.tau, True, state.time_scale)


def md_hamiltonian(problem, state, schedule, M=6):
    """Value of H_MD; batched states give one value per row."""
    state = synchronize(problem, state, schedule, M)
    phi, p = state.phi, state.mom
    alpha, beta = schedule.alpha(state.tau), schedule.beta(state.tau)
    kinetic = np.sum(0.5 * p * p + _ipow(phi, M), axis=-1)
    ising = 0.5 * np.sum(phi * problem.matvec(phi), axis=-1) + np.sum(
        problem.fields * np.abs(phi) * phi, axis=-1)
    out = alpha * kinetic + beta * ising
    return float(out) if np.ndim(out) == 0 else out


def initial_momenta(n, seeds):
    """Stack of equiprobable +-1 momentum vectors, one row per seed."""
    return np.stack([random_spins(n, s) for s in seeds]).astype(np.float64)


def _schedule_tables(schedules, steps):
    # rows: integer times m*dtau (m = 0..steps) and half times (m + 1/2)*dtau
    tau_int = np.arange(steps + 1) / steps
    tau_half = (np.arange(steps) + 0.5) / steps
    a_int = np.stack([s.alpha(tau_int) for s in schedules], axis=1)
    b_int = np.stack([s.beta(tau_int) for s in schedules], axis=1)
    a_half = np.stack([s.alpha(tau_half) for s in schedules], axis=1)
    return a_int[:, :, None], b_int[:, :, None], a_half[:, :, None]


def leapfrog_ensemble(problem, schedules, config, momenta):
    """Integrate ``R`` independent trajectories from ``phi = 0``.

    Parameters
    ----------
    problem : IsingProblem
    schedules : Schedule or sequence of Schedule
        One schedule shared by all rows, or one per row.
    config : MdConfig
    momenta : array_like, shape (R, N)
        Initial momenta.

    Returns
    -------
    EnsembleResult
        Final state at ``tau = 1`` (momenta at the last half step), the
        trailing-window average of ``phi`` and any recorded samples.

    Raises
    ------
    DivergenceError
        If fluxes or momenta become non-finite; checked every
        ``DIVERGENCE_CHECK_EVERY`` steps and at the end.
    """
    P = np.array(momenta, dtype=np.float64, ndmin=2)
    R, n = P.shape
    if n != problem.n_sites:
        raise ContractViolation(f"momenta have {n} sites, problem has {problem.n_sites}")
    if not isinstance(schedules, (list, tuple)):
        schedules = [schedules] * R
    if len(schedules) != R:
        raise ContractViolation("need one schedule per trajectory")

    steps = config.steps
    M = config.potential_power
    ts = config.time_scale
    window = config.window_steps
    stride = config.record_stride
    a_int, b_int, a_half = _schedule_tables(schedules, steps)
    h2 = 2.0 * problem.fields
    has_fields = bool(np.any(h2))

    phi = np.zeros((R, n))
    samples = []
    # last `window` flux values; the average is taken as phi + mean(ring - phi) so
    # that a constant trajectory averages to itself exactly
    ring = np.zeros((window, R, n))
    first_avg = steps - window + 1  # phi^(m) for m >= first_avg enters the average

    def kick(phi_now, m):
        acc = problem.matvec(phi_now)
        if has_fields:
            acc += h2 * np.abs(phi_now)
        acc *= b_int[m]
        acc += (a_int[m] * M) * _ipow(phi_now, M - 1)
        return acc

    def record(m):
        if m == 0:
            phibar = phi.copy()
        else:
            count = min(window, m)
            idx = [(m - k) % window for k in range(count)]
            phibar = phi + (ring[idx] - phi).sum(axis=0) / count
        # momentum at integer time for measurement
        p_sync = P + 0.5 * ts * -kick(phi, m) if m else P.copy()
        samples.append(TrajectorySample(m / steps, phi.copy(), phibar, p_sync))

    with np.errstate(over="ignore", invalid="ignore"):
        if stride:
            record(0)
        # initial half step, printed form: 1/2 on the potential term only
        coupling0 = 0.5 * problem.matvec(phi) + 0.5 * h2 * np.abs(phi)
        P -= ts * (0.5 * a_int[0] * M * _ipow(phi, M - 1) + b_int[0] * coupling0)
        phi += ts * a_half[0] * P
        m = 1
        while True:
            if stride or m >= first_avg:
                ring[m % window] = phi
            if stride and m % stride == 0:
                record(m)
            if m % DIVERGENCE_CHECK_EVERY == 0 or m == steps:
                if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(P))):
                    raise DivergenceError(m)
            if m == steps:
                break
            # p^(m+1/2) -> p^(m+3/2) with the force at phi^(m)
            P -= ts * kick(phi, m)
            phi += ts * a_half[m] * P
            m += 1

    final = FluxState(phi, P, 1.0, False, ts)
    phibar = phi + (ring - phi).sum(axis=0) / window
    return EnsembleResult(final, phibar, window / steps, samples)


def leapfrog_run(problem, schedule, config, p0=None):
    """Single MD trajectory from ``phi = 0``.

    Momenta default to equiprobable +-1 drawn from ``config.seed``.

    Returns ``(FluxState, TimeAveragedFlux, samples)``.
    """
    n = problem.n_sites
    if p0 is None:
        p0 = random_spins(n, config.seed)
    p0 = np.asarray(p0, dtype=np.float64)
    if p0.shape != (n,):
        raise ContractViolation(f"p0 must have length {n}")
    res = leapfrog_ensemble(problem, schedule, config, p0[None, :])
    samples = [TrajectorySample(s.tau, s.phi_snapshot[0], s.phibar_snapshot[0],
                                s.mom_snapshot[0]) for s in res.samples]
    return res.state(0), res.average(0), samples


def write_trajectory_csv(path, samples):
    """Write samples as ``tau,site,phi,phibar`` rows; gzip when path ends in .gz."""
    path = str(path)
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "wt", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "site", "phi", "phibar"])
        for s in samples:
            for i, (ph, pb) in enumerate(zip(s.phi_snapshot.tolist(), s.phibar_snapshot.tolist())):
                writer.writerow([repr(s.tau), i, repr(ph), repr(pb)])
