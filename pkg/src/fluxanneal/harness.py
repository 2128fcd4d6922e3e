"""Experiment orchestration: MD preconditioning, hybrid pipelines, baselines.

A run takes one instance and one momentum seed, integrates the flux MD once
per requested step count, and evaluates every pipeline on the resulting
time-averaged fluxes:

* ``md``  -- project every site onto the sign of its averaged flux;
* ``hqa`` -- freeze all but the ``n`` most ambivalent sites, solve the reduced
  problem with a backend (warm-started from the projection), reconstruct.

Baselines (SA, tabu) run on the full instance with the same seeds.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import json
import math
import os
import time

import numpy as np

from . import subsolvers
from .errors import ContractViolation, FluxannealError, RemoteError
from .ising import (energy, gen_bimodal_complete, gen_uniform_spinglass, maxcut_offset,
                    maxcut_to_ising, mirror, parisi_reference_cut, read_instance)
from .md import MdConfig, Schedule, initial_momenta, leapfrog_ensemble, leapfrog_run, \
    md_hamiltonian
from .reducer import build_subproblem, make_partition, project_all, reconstruct, restrict
from .subsolvers import SaParams, TabuParams

__all__ = [
    "ProblemSource",
    "Instance",
    "MdSpec",
    "PipelineSpec",
    "BaselineSpec",
    "ExperimentSpec",
    "RunRecord",
    "Stats",
    "AggregateReport",
    "ExperimentResult",
    "run_md",
    "run_pipeline",
    "run_baseline",
    "run_experiment",
    "aggregate",
    "dominance_violations",
    "adiabaticity_sweep",
    "initial_condition_study",
    "reference_line",
    "write_results",
]

GENERATORS = ("bimodal-complete", "uniform-sg")


@dataclass(frozen=True)
class Instance:
    label: str
    seed: int | None
    mirrored: bool
    problem: object
    offset: float | None = None  # MAX-CUT offset C0, None for plain Ising problems

    @property
    def is_maxcut(self):
        return self.offset is not None


@dataclass(frozen=True)
class ProblemSource:
    """Where instances come from: a generator over seeds, or instance files.

    With ``mirror_pairing`` each instance is followed by its mirror (couplings
    negated).  Files are treated as MAX-CUT problems when ``maxcut`` is set.
    """

    generator: str | None = "uniform-sg"
    n: int = 0
    seeds: tuple = (0,)
    files: tuple = ()
    mirror_pairing: bool = False
    maxcut: bool = False
    j_range: tuple = (-1.0, 1.0)
    h_range: tuple = (-2.0, 2.0)

    def __post_init__(self):
        if not self.files:
            if self.generator not in GENERATORS:
                raise ContractViolation(f"unknown generator {self.generator!r}")
            if self.n < 2:
                raise ContractViolation("generated instances need n >= 2")

    def instances(self):
        base = []
        if self.files:
            for path in self.files:
                problem = read_instance(path)
                offset = maxcut_offset(problem) if self.maxcut else None
                base.append(Instance(os.path.basename(str(path)), None, False, problem, offset))
        else:
            for seed in self.seeds:
                if self.generator == "bimodal-complete":
                    problem, offset = maxcut_to_ising(gen_bimodal_complete(self.n, seed))
                else:
                    problem = gen_uniform_spinglass(self.n, seed, self.j_range, self.h_range)
                    offset = None
                base.append(Instance(f"{self.generator}-n{self.n}-s{seed}", seed, False,
                                     problem, offset))
        out = []
        for inst in base:
            out.append(inst)
            if self.mirror_pairing:
                off = None if inst.offset is None else -inst.offset
                out.append(Instance(inst.label + "-mirror", inst.seed, True,
                                    mirror(inst.problem), off))
        return out


@dataclass(frozen=True)
class MdSpec:
    schedule: Schedule = Schedule()
    steps: tuple = (50_000,)
    potential_power: int = 6
    window_steps: int = 100
    time_scale: float = 1.0

    def config(self, steps, seed, record_stride=0):
        return MdConfig(steps=steps, potential_power=self.potential_power,
                        window_steps=min(self.window_steps, steps), seed=seed,
                        record_stride=record_stride, time_scale=self.time_scale)


@dataclass(frozen=True)
class PipelineSpec:
    """``md`` (projection only) or ``hqa`` (projection + subsolver)."""

    kind: str = "md"
    n_ambivalent: int = 0
    backend: str = "tabu"
    params: object = None
    endpoint: str | None = None
    timeout: float = 30.0
    fallback: str | None = "tabu"
    postprocess: bool = False
    tie_epsilon: float = 0.0

    def __post_init__(self):
        if self.kind not in ("md", "hqa"):
            raise ContractViolation(f"unknown pipeline {self.kind!r}")
        if self.kind == "hqa":
            if self.backend not in ("brute", "sa", "tabu", "remote"):
                raise ContractViolation(f"unknown backend {self.backend!r}")
            if self.n_ambivalent < 0:
                raise ContractViolation("n_ambivalent must be non-negative")
            if self.backend == "remote" and not self.endpoint:
                raise ContractViolation("remote backend needs an endpoint")

    @property
    def name(self):
        if self.kind == "md":
            return "md"
        return f"hqa({self.backend},{self.n_ambivalent})"


@dataclass(frozen=True)
class BaselineSpec:
    kind: str = "sa"
    params: object = None

    def __post_init__(self):
        if self.kind not in ("sa", "tabu"):
            raise ContractViolation(f"unknown baseline {self.kind!r}")

    @property
    def name(self):
        return self.kind


@dataclass(frozen=True)
class ExperimentSpec:
    source: ProblemSource
    md: MdSpec = MdSpec()
    pipelines: tuple = (PipelineSpec(),)
    baselines: tuple = ()
    init_seeds: tuple = (0,)
    workers: int = 1


@dataclass
class RunRecord:
    instance: str
    instance_seed: int | None
    mirrored: bool
    init_seed: int
    solver: str
    energy: float | None
    cut: float | None
    md_steps: int
    wall_time: float
    flips: int = 0
    fallback: str | None = None
    error: str | None = None

    @property
    def ok(self):
        return self.error is None


def run_md(problem, md, steps, init_seed):
    """Time-averaged fluxes at tau = 1 for one momentum seed."""
    _, avg, _ = leapfrog_run(problem, md.schedule, md.config(steps, init_seed))
    return avg.phibar


def _solve_sub(sub_problem, pipe, warm):
    params = pipe.params
    try:
        return subsolvers.solve(sub_problem, pipe.backend, params, warm, pipe.endpoint,
                                pipe.timeout, pipe.postprocess), None
    except RemoteError as exc:
        if not pipe.fallback:
            raise
        result = subsolvers.solve(sub_problem, pipe.fallback, None, warm)
        return result, f"{pipe.fallback}: {type(exc).__name__}: {exc}"


def run_pipeline(problem, pipeline, init_seed, md=MdSpec(), md_steps=None, offset=None,
                 phibar=None):
    """Run one pipeline on one instance and return its :class:`RunRecord`.

    ``phibar`` may be supplied to reuse an MD run shared by several
    pipelines; otherwise MD is run here with ``init_seed``.  Instance fields of
    the record are left for the caller to fill in.
    """
    steps = md.steps[0] if md_steps is None else md_steps
    started = time.perf_counter()
    if phibar is None:
        phibar = run_md(problem, md, steps, init_seed)
    fallback = None
    flips = 0
    if pipeline.kind == "md" or pipeline.n_ambivalent == 0:
        s = project_all(phibar)
    else:
        if pipeline.n_ambivalent > problem.n_sites:
            raise ContractViolation(
                f"n_ambivalent={pipeline.n_ambivalent} exceeds problem size {problem.n_sites}")
        part = make_partition(phibar, pipeline.n_ambivalent, pipeline.tie_epsilon)
        sub = build_subproblem(problem, part)
        warm = restrict(part, project_all(phibar))
        result, fallback = _solve_sub(sub.base, pipeline, warm)
        flips = result.flips
        s = reconstruct(part, sub, result.spins)
    e = energy(problem, s)
    cut = None if offset is None else -0.5 * e + offset
    return RunRecord("", None, False, init_seed, pipeline.name, e, cut, steps,
                     time.perf_counter() - started, flips, fallback)


def run_baseline(problem, baseline, init_seed, offset=None):
    started = time.perf_counter()
    if baseline.kind == "sa":
        params = baseline.params or SaParams()
        params = SaParams(params.sweeps, params.beta_initial, params.beta_final, init_seed)
        result = subsolvers.simulated_annealing(problem, params)
    else:
        params = baseline.params or TabuParams()
        params = TabuParams(params.tenure, params.max_iterations, params.stall_limit, init_seed)
        result = subsolvers.tabu_search(problem, params)
    cut = None if offset is None else -0.5 * result.energy + offset
    return RunRecord("", None, False, init_seed, baseline.name, result.energy, cut, 0,
                     time.perf_counter() - started, result.flips)


def _failed(solver, init_seed, steps, exc):
    return RunRecord("", None, False, init_seed, solver, None, None, steps, 0.0,
                     error=f"{type(exc).__name__}: {exc}")


def _run_unit(args):
    """All runs for one (instance, init_seed) pair."""
    inst, init_seed, spec = args
    records = []
    for steps in spec.md.steps:
        md_started = time.perf_counter()
        try:
            phibar = run_md(inst.problem, spec.md, steps, init_seed)
        except FluxannealError as exc:
            records.extend(_failed(p.name, init_seed, steps, exc) for p in spec.pipelines)
            continue
        md_time = time.perf_counter() - md_started
        for pipe in spec.pipelines:
            try:
                rec = run_pipeline(inst.problem, pipe, init_seed, spec.md, steps, inst.offset,
                                   phibar=phibar)
                rec.wall_time += md_time
            except FluxannealError as exc:
                rec = _failed(pipe.name, init_seed, steps, exc)
            records.append(rec)
    for base in spec.baselines:
        try:
            records.append(run_baseline(inst.problem, base, init_seed, inst.offset))
        except FluxannealError as exc:
            records.append(_failed(base.name, init_seed, 0, exc))
    for rec in records:
        rec.instance, rec.instance_seed, rec.mirrored = inst.label, inst.seed, inst.mirrored
    return records


@dataclass
class Stats:
    mean: float
    std: float
    min: float
    max: float
    count: int

    @classmethod
    def of(cls, values):
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            return cls(math.nan, math.nan, math.nan, math.nan, 0)
        std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
        return cls(float(v.mean()), std, float(v.min()), float(v.max()), int(v.size))


@dataclass
class AggregateReport:
    """Per (solver, md_steps) statistics; the band is mean +- sample std."""

    energy: dict = field(default_factory=dict)
    cut: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        def table(d):
            return [{"solver": k[0], "md_steps": k[1], **asdict(v)} for k, v in sorted(d.items())]
        return {
            "energy": table(self.energy),
            "cut": table(self.cut),
            "failures": [{"solver": k[0], "md_steps": k[1], "count": v}
                         for k, v in sorted(self.failures.items())],
            "metadata": self.metadata,
        }


@dataclass
class ExperimentResult:
    records: list
    report: AggregateReport


def aggregate(records, metadata=None):
    """Group successful records by (solver, md_steps); count failures."""
    groups, cuts, failures = {}, {}, {}
    for rec in records:
        key = (rec.solver, rec.md_steps)
        if not rec.ok:
            failures[key] = failures.get(key, 0) + 1
            continue
        groups.setdefault(key, []).append(rec.energy)
        if rec.cut is not None:
            cuts.setdefault(key, []).append(rec.cut)
    return AggregateReport(
        energy={k: Stats.of(v) for k, v in groups.items()},
        cut={k: Stats.of(v) for k, v in cuts.items()},
        failures=failures,
        metadata=dict(metadata or {}),
    )


def run_experiment(spec):
    """Run every instance x init seed x step count x solver in ``spec``.

    Work is split per (instance, init seed) and optionally spread over
    ``spec.workers`` processes; records come back in a fixed order, so the
    output is deterministic apart from wall times.
    """
    instances = spec.source.instances()
    for pipe in spec.pipelines:
        if pipe.kind == "hqa":
            for inst in instances:
                if pipe.n_ambivalent > inst.problem.n_sites:
                    raise ContractViolation(
                        f"{pipe.name}: n_ambivalent exceeds size of {inst.label}")
    units = [(inst, seed, spec) for inst in instances for seed in spec.init_seeds]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(_run_unit, units))
    else:
        chunks = [_run_unit(u) for u in units]
    records = [r for chunk in chunks for r in chunk]
    meta = {
        "instances": [i.label for i in instances],
        "instance_seeds": [i.seed for i in instances],
        "init_seeds": list(spec.init_seeds),
        "md_steps": list(spec.md.steps),
        "schedule": list(spec.md.schedule.as_tuple()),
        "potential_power": spec.md.potential_power,
        "window_steps": spec.md.window_steps,
    }
    if instances and all(i.is_maxcut for i in instances):
        sizes = {i.problem.n_sites for i in instances}
        if len(sizes) == 1:
            meta["reference_cut"] = {"kind": "parisi_cut",
                                     "value": reference_line("parisi_cut", sizes.pop())}
    return ExperimentResult(records, aggregate(records, meta))


def dominance_violations(records, hqa_prefix="hqa", tol=1e-9):
    """(instance, init_seed, md_steps, solver) tuples where hqa beat md-only by losing."""
    md = {(r.instance, r.init_seed, r.md_steps): r.energy
          for r in records if r.ok and r.solver == "md"}
    bad = []
    for r in records:
        if r.ok and r.solver.startswith(hqa_prefix):
            ref = md.get((r.instance, r.init_seed, r.md_steps))
            if ref is not None and r.energy > ref + tol * max(1.0, abs(ref)):
                bad.append((r.instance, r.init_seed, r.md_steps, r.solver))
    return bad


def write_results(out_dir, result):
    """``runs.jsonl`` with one record per line plus ``aggregate.json``."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "runs.jsonl"), "w", encoding="utf-8") as fh:
        for rec in result.records:
            fh.write(json.dumps(asdict(rec)) + "\n")
    with open(os.path.join(out_dir, "aggregate.json"), "w", encoding="utf-8") as fh:
        json.dump(result.report.to_dict(), fh, indent=2)


def reference_line(kind, n):
    if kind != "parisi_cut":
        raise ContractViolation(f"unknown reference line {kind!r}")
    return parisi_reference_cut(n)


@dataclass
class AdiabaticityCell:
    kappa2: float
    steps: int
    mean_h: float
    std_h: float
    ratio: float


def adiabaticity_sweep(instance, kappa2_values, steps_values, n_inits, *,
                       schedule=Schedule(), potential_power=6, window_steps=100,
                       init_seeds=None, reference_kappa2=1.0):
    """Final H_MD over a grid of kappa2 and step counts.

    For each cell the mean of ``md_hamiltonian`` at tau = 1 over ``n_inits``
    momentum seeds is divided by the mean in the ``reference_kappa2``,
    largest-steps cell.  All (kappa2, seed) trajectories of one step count
    are integrated together as an ensemble.

    Returns a list of :class:`AdiabaticityCell`.
    """
    kappa2_values = [float(k) for k in kappa2_values]
    if any(not -1.0 <= k <= 1.0 for k in kappa2_values):
        raise ContractViolation("kappa2 values must lie in [-1, 1]")
    if reference_kappa2 not in kappa2_values:
        raise ContractViolation("reference kappa2 must be part of the sweep")
    seeds = list(init_seeds) if init_seeds is not None else list(range(n_inits))
    if len(seeds) != n_inits or n_inits < 1:
        raise ContractViolation("need n_inits >= 1 seeds")
    n = instance.n_sites
    scheds = [schedule.with_kappa2(k) for k in kappa2_values for _ in seeds]
    momenta = np.tile(initial_momenta(n, seeds), (len(kappa2_values), 1))
    raw = {}
    for steps in steps_values:
        cfg = MdConfig(steps=steps, potential_power=potential_power,
                       window_steps=min(window_steps, steps))
        res = leapfrog_ensemble(instance, scheds, cfg, momenta)
        for r, sch in enumerate(scheds):
            raw.setdefault((sch.kappa2, steps), []).append(
                md_hamiltonian(instance, res.state(r), sch, potential_power))
    best = float(np.mean(raw[(reference_kappa2, max(steps_values))]))
    cells = []
    for k in kappa2_values:
        for steps in steps_values:
            v = np.asarray(raw[(k, steps)])
            std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
            cells.append(AdiabaticityCell(k, steps, float(v.mean()), std, float(v.mean()) / best))
    return cells


def initial_condition_study(instance, n_inits, pipelines, md=MdSpec(), offset=None,
                            init_seeds=None):
    """Distribution over momentum seeds of each pipeline's energy (and cut).

    Returns ``{(solver, md_steps): {"energy": [...], "cut": [...] or None,
    "energy_stats": Stats, "cut_stats": Stats or None}}``.
    """
    seeds = list(init_seeds) if init_seeds is not None else list(range(n_inits))
    if len(seeds) != n_inits or n_inits < 1:
        raise ContractViolation("need n_inits >= 1 seeds")
    out = {}
    for steps in md.steps:
        for seed in seeds:
            phibar = run_md(instance, md, steps, seed)
            for pipe in pipelines:
                rec = run_pipeline(instance, pipe, seed, md, steps, offset, phibar=phibar)
                entry = out.setdefault((pipe.name, steps), {"energy": [], "cut": []})
                entry["energy"].append(rec.energy)
                if rec.cut is not None:
                    entry["cut"].append(rec.cut)
    for entry in out.values():
        entry["energy_stats"] = Stats.of(entry["energy"])
        if entry["cut"]:
            entry["cut_stats"] = Stats.of(entry["cut"])
        else:
            entry["cut"], entry["cut_stats"] = None, None
    return out
