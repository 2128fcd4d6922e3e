"""``fluxanneal`` command line: gen, run, sweep, inspect.

Exit codes: 0 success, 2 configuration error, 3 MD divergence,
4 remote failure with no fallback configured.
"""

import argparse
from dataclasses import asdict
import json
import os
import sys

import numpy as np

from .errors import ContractViolation, DivergenceError, RemoteError
from .harness import (GENERATORS, BaselineSpec, ExperimentSpec, MdSpec, PipelineSpec,
                      ProblemSource, adiabaticity_sweep, reference_line, run_experiment,
                      write_results)
from .ising import energy, write_instance
from .md import Schedule, leapfrog_run, md_hamiltonian, write_trajectory_csv
from .reducer import make_partition, partition_to_json, project_all
from .subsolvers import SaParams, TabuParams

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_REMOTE = 0, 2, 3, 4


def _int_list(text):
    try:
        return tuple(int(v.replace("_", "")) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _schedule(text):
    try:
        return Schedule.parse(text)
    except ContractViolation as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _add_source(p):
    g = p.add_argument_group("problem source")
    g.add_argument("--instance", action="append", default=[], metavar="FILE",
                   help="instance file (repeatable)")
    g.add_argument("--gen", choices=GENERATORS, help="generate instances instead of reading")
    g.add_argument("--n", type=int, default=0, help="number of sites for --gen")
    g.add_argument("--seed", type=int, default=0, help="first instance seed")
    g.add_argument("--instances", type=int, default=1,
                   help="number of generated instances (seeds seed..seed+K-1)")
    g.add_argument("--mirror-pairs", action="store_true",
                   help="pair each instance with its coupling-negated mirror")
    g.add_argument("--maxcut", action="store_true",
                   help="treat instance files as MAX-CUT (report cuts)")


def _add_md(p):
    g = p.add_argument_group("molecular dynamics")
    g.add_argument("--md-steps", type=_int_list, default=(50_000,),
                   help="MD steps 1/dtau, comma-separated for a sweep")
    g.add_argument("--potential-power", type=int, default=6)
    g.add_argument("--window", type=int, default=100, help="averaging window in steps")
    g.add_argument("--schedule", type=_schedule, default=Schedule(),
                   help="a_f,r1,r2,b_f,k1,k2")
    g.add_argument("--time-scale", type=float, default=1.0,
                   help="multiplier on the integration step (1 keeps g = dtau)")
    g.add_argument("--record-stride", type=int, default=0,
                   help="export a trajectory sample every this many steps")


def _source(args):
    if args.instance and args.gen:
        raise ContractViolation("use either --instance or --gen, not both")
    if args.instance:
        return ProblemSource(generator=None, files=tuple(args.instance),
                             mirror_pairing=args.mirror_pairs, maxcut=args.maxcut)
    if not args.gen:
        raise ContractViolation("need --instance FILE or --gen NAME")
    seeds = tuple(range(args.seed, args.seed + args.instances))
    return ProblemSource(generator=args.gen, n=args.n, seeds=seeds,
                         mirror_pairing=args.mirror_pairs)


def _md_spec(args):
    return MdSpec(schedule=args.schedule, steps=args.md_steps,
                  potential_power=args.potential_power, window_steps=args.window,
                  time_scale=args.time_scale)


def cmd_gen(args):
    src = _source(args)
    if args.instance:
        raise ContractViolation("gen needs --gen")
    os.makedirs(args.out, exist_ok=True)
    written = []
    for inst in src.instances():
        path = os.path.join(args.out, inst.label + ".ising")
        write_instance(path, inst.problem)
        written.append(path)
    print("\n".join(written))
    return EXIT_OK


def cmd_run(args):
    src = _source(args)
    md = _md_spec(args)
    pipelines = [PipelineSpec("md")]
    if args.pipeline == "hqa":
        params = None
        if args.backend == "sa":
            params = SaParams(sweeps=args.sa_sweeps)
        pipelines.append(PipelineSpec(
            "hqa", args.n_ambivalent, args.backend, params, args.endpoint, args.timeout,
            None if args.fallback == "none" else args.fallback, args.postprocess))
    baselines = []
    for name in filter(None, (args.baselines or "").split(",")):
        params = SaParams(sweeps=args.sa_sweeps) if name == "sa" else TabuParams()
        baselines.append(BaselineSpec(name, params))
    spec = ExperimentSpec(src, md, tuple(pipelines), tuple(baselines),
                          tuple(range(args.init_seed, args.init_seed + args.inits)),
                          args.workers)
    result = run_experiment(spec)
    write_results(args.out, result)
    if args.record_stride:
        inst = src.instances()[0]
        _, _, samples = leapfrog_run(inst.problem, md.schedule,
                                     md.config(md.steps[-1], args.init_seed, args.record_stride))
        write_trajectory_csv(os.path.join(args.out, "trajectory.csv.gz"), samples)
    for row in result.report.to_dict()["cut" if result.report.cut else "energy"]:
        print(f"{row['solver']:>16} steps={row['md_steps']:>8} mean={row['mean']:.6g} "
              f"std={row['std']:.3g} n={row['count']}")
    errors = [r.error for r in result.records if r.error]
    if any(e.startswith("DivergenceError") for e in errors):
        print(f"{len(errors)} runs failed; see runs.jsonl", file=sys.stderr)
        return EXIT_DIVERGENCE
    if any(e.startswith("Remote") or e.startswith("MalformedResponse") for e in errors):
        print("remote subsolver failed and no fallback was configured", file=sys.stderr)
        return EXIT_REMOTE
    return EXIT_OK


def cmd_sweep(args):
    src = _source(args)
    inst = src.instances()[0]
    cells = adiabaticity_sweep(inst.problem, args.kappa2, args.md_steps, args.inits,
                               schedule=args.schedule, potential_power=args.potential_power,
                               window_steps=args.window)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "adiabaticity.json"), "w", encoding="utf-8") as fh:
        json.dump({"instance": inst.label, "cells": [asdict(c) for c in cells]}, fh, indent=2)
    for c in cells:
        print(f"kappa2={c.kappa2:+.2f} steps={c.steps:>8} H={c.mean_h:.6g} ratio={c.ratio:.4f}")
    return EXIT_OK


def cmd_inspect(args):
    src = _source(args)
    inst = src.instances()[0]
    P = inst.problem
    info = {
        "instance": inst.label,
        "n_sites": P.n_sites,
        "storage": "sparse" if P.is_sparse else "dense",
        "couplings_nonzero": int(len(P.triplets()[0])),
        "fields_nonzero": int(np.count_nonzero(P.fields)),
    }
    if inst.is_maxcut:
        info["offset_c0"] = inst.offset
        info["parisi_reference_cut"] = reference_line("parisi_cut", P.n_sites)
    if args.run_md:
        md = _md_spec(args)
        cfg = md.config(md.steps[-1], args.init_seed, args.record_stride)
        state, avg, samples = leapfrog_run(P, md.schedule, cfg)
        s = project_all(avg.phibar)
        info["md_steps"] = cfg.steps
        info["md_hamiltonian"] = md_hamiltonian(P, state, md.schedule, cfg.potential_power)
        info["md_energy"] = energy(P, s)
        part = make_partition(avg.phibar, min(args.n_ambivalent, P.n_sites))
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            with open(os.path.join(args.out, "partition.json"), "w", encoding="utf-8") as fh:
                fh.write(partition_to_json(part))
            if samples:
                write_trajectory_csv(os.path.join(args.out, "trajectory.csv.gz"), samples)
    print(json.dumps(info, indent=2))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="fluxanneal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write generated instances to files")
    _add_source(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run MD / hybrid pipelines and baselines")
    _add_source(p)
    _add_md(p)
    p.add_argument("--pipeline", choices=("md", "hqa"), default="md",
                   help="hqa also runs md-only on the same seeds")
    p.add_argument("--n-ambivalent", type=int, default=0)
    p.add_argument("--backend", choices=("brute", "sa", "tabu", "remote"), default="tabu")
    p.add_argument("--endpoint", help="remote annealer base URL")
    p.add_argument("--timeout", type=float, default=30.0, help="remote timeout in seconds")
    p.add_argument("--fallback", choices=("none", "brute", "sa", "tabu"), default="tabu",
                   help="local backend used when the remote fails")
    p.add_argument("--postprocess", action="store_true",
                   help="greedy descent on remote samples")
    p.add_argument("--baselines", default="", help="comma list from {sa,tabu}")
    p.add_argument("--sa-sweeps", type=int, default=1000)
    p.add_argument("--inits", type=int, default=1, help="momentum seeds per instance")
    p.add_argument("--init-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="kappa2 adiabaticity sweep")
    _add_source(p)
    _add_md(p)
    p.add_argument("--kappa2", type=_float_list, default=(-1.0, 0.0, 1.0))
    p.add_argument("--inits", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("inspect", help="summarize an instance, optionally run MD")
    _add_source(p)
    _add_md(p)
    p.add_argument("--run-md", action="store_true")
    p.add_argument("--n-ambivalent", type=int, default=0)
    p.add_argument("--init-seed", type=int, default=0)
    p.add_argument("--out", help="directory for partition.json / trajectory.csv.gz")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContractViolation as exc:
        print(f"fluxanneal: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"fluxanneal: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except RemoteError as exc:
        print(f"fluxanneal: remote failure: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    except OSError as exc:
        print(f"fluxanneal: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
