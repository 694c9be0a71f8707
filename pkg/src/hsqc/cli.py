"""Command-line front end.

Every subcommand prints a JSON summary to stdout and diagnostics to stderr.
Measured wall-clock fields are isolated under "measured" keys so that fixed
seeds give byte-identical summaries otherwise.  Exit codes: 0 success,
1 contract violation, 2 usage error, 3 malformed instance file, 4 qubit cap
exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import dcqo, exact, instances, mts, pipeline, sa
from .errors import InstanceFormatError, QubitCapError, ValidationError
from .hubo import (
    HuboInstance,
    bitstring_to_spins,
    load_instance,
    save_instance,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_BAD_INSTANCE = 3
EXIT_CAP = 4

HSQC_CSV_HEADER = ["seed", "stage", "min_energy", "T_SA", "T_BFDCQO", "T_final", "T_total"]


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")


def _default_jobs() -> int:
    return os.cpu_count() or 1


def _build_map(args) -> instances.ConnectivityMap:
    topology = args.topology
    if topology == "heavy-hex":
        rows = args.rows if args.rows is not None else instances.CANONICAL_HEAVY_HEX[0]
        cols = args.cols if args.cols is not None else instances.CANONICAL_HEAVY_HEX[1]
        return instances.heavy_hex_map(rows, cols)
    if topology == "ring":
        if args.rows is None:
            raise ValidationError("ring topology takes its qubit count from --rows")
        return instances.ring_map(args.rows)
    if topology == "path":
        if args.rows is None:
            raise ValidationError("path topology takes its qubit count from --rows")
        return instances.path_map(args.rows)
    if topology.startswith("file:"):
        return instances.load_map(topology[len("file:"):])
    raise ValidationError(f"unknown topology {topology!r}")


def _cmd_generate(args) -> dict:
    cmap = _build_map(args)
    dist = instances.CouplingDistribution(clip=args.clip)
    inst = instances.generate_instance(
        cmap, args.swap_rounds, args.rho2, args.rho3, dist, args.seed,
        metadata={"topology": args.topology},
    )
    save_instance(inst, args.out)
    counts = inst.term_counts()
    return {
        "command": "generate",
        "out": str(args.out),
        "num_qubits": inst.num_vars,
        "term_counts": {"one_body": counts[1], "two_body": counts[2], "three_body": counts[3]},
        "reference_counts_156q": {"one_body": 156, "two_body": 125, "three_body": 616},
        "seed": args.seed,
    }


def _cmd_exact(args) -> dict:
    inst = load_instance(args.instance)
    result = exact.brute_force_ground_state(inst)
    if args.write_gs:
        meta = dict(inst.metadata)
        meta[pipeline.GROUND_STATE_KEY] = result.energy
        save_instance(HuboInstance(inst.num_vars, inst.terms, metadata=meta), args.instance)
    return {
        "command": "exact",
        "energy": result.energy,
        "bitstring": result.bitstring,
        "degeneracy": result.degeneracy,
        "wrote_ground_state": bool(args.write_gs),
    }


def _cmd_sa(args) -> dict:
    inst = load_instance(args.instance)
    params = sa.SaParams(n_sweep=args.sweeps, n_runs=args.runs, seed=args.seed)
    report = sa.anneal(inst, params, jobs=args.jobs, trace_path=args.trace)
    doc = {"command": "sa", **report.summary_dict()}
    if args.trace:
        doc["trace"] = str(args.trace)
    return doc


def _read_seed_bitstring(raw: str, num_vars: int):
    """File path, literal 0/1 string, or hex integer (bit i = qubit i)."""
    path = Path(raw)
    if path.exists():
        return bitstring_to_spins(path.read_text())
    if set(raw) <= {"0", "1"} and len(raw) == num_vars:
        return bitstring_to_spins(raw)
    try:
        value = int(raw, 16)
    except ValueError as exc:
        raise ValidationError(
            f"--seed-bitstring {raw!r} is neither a file, a length-{num_vars} 0/1 string, nor hex"
        ) from exc
    bits = [(value >> i) & 1 for i in range(num_vars)]
    return bitstring_to_spins("".join(str(b) for b in bits))


def _cmd_mts(args) -> dict:
    inst = load_instance(args.instance)
    warm = None
    if args.seed_bitstring is not None:
        warm = tuple(int(v) for v in _read_seed_bitstring(args.seed_bitstring, inst.num_vars))
    params = mts.MtsParams(
        population=args.pop,
        generations=args.gens,
        tabu_iterations=args.tabu_iters,
        tabu_length=args.tabu_len,
        mu_start=args.mu_start,
        mu_end=args.mu_end,
        seed=args.seed,
        warm_start=warm,
        target_energy=args.target,
    )
    report = mts.memetic_search(inst, params, jobs=args.jobs)
    return {"command": "mts", **report.summary_dict(),
            "stop_reason": report.artifacts["stop_reason"]}


def _cvar_default(args) -> int:
    return args.cvar if args.cvar is not None else max(args.shots // 10, 1)


def _cmd_dcqo(args) -> dict:
    inst = load_instance(args.instance)
    seed_spins = None
    if args.seed_bitstring is not None:
        seed_spins = _read_seed_bitstring(args.seed_bitstring, inst.num_vars)
    params = dcqo.DcqoParams(
        n_shots=args.shots,
        n_iter=args.iters,
        n_cvar=_cvar_default(args),
        n_trot=args.trotter,
        seed=args.seed,
        h_x=args.hx,
        bias_magnitude=args.bias_mag,
        n_sweep_loc=args.loc_sweeps,
    )
    report = dcqo.run(inst, seed_spins, params)
    doc = {"command": "dcqo", **report.summary_dict()}
    doc["sample_pool_size"] = len(report.artifacts["sample_pool"])
    return doc


def _final_params(args):
    if args.final == "mts":
        if args.gens == 0:
            return None
        return mts.MtsParams(
            population=args.pop,
            generations=args.gens,
            tabu_iterations=args.tabu_iters,
            tabu_length=args.tabu_len,
            mu_start=args.mu_start,
            mu_end=args.mu_end,
            target_energy=args.target,
        )
    if args.final_sweeps == 0 or args.final_runs == 0:
        return None
    return sa.SaParams(n_sweep=args.final_sweeps, n_runs=args.final_runs)


def _hsqc_csv_rows(summary: dict) -> list[list]:
    rows = []
    for trial in summary["per_trial"]:
        times = {"sa": 0.0, "dcqo": 0.0, "final": 0.0}
        for k, stage in enumerate(trial["stages"]):
            slot = "sa" if k == 0 else "dcqo" if k == 1 else "final"
            times[slot] = stage["model_time_s"]
        for stage in trial["stages"]:
            rows.append([
                trial["seed"], stage["stage"], repr(stage["best_energy"]),
                repr(times["sa"]), repr(times["dcqo"]), repr(times["final"]),
                repr(trial["total_model_time_s"]),
            ])
    return rows


def _cmd_hsqc(args) -> dict:
    inst = load_instance(args.instance)
    sa_params = sa.SaParams(n_sweep=args.sa_sweeps, n_runs=args.sa_runs)
    dcqo_params = dcqo.DcqoParams(
        n_shots=args.shots,
        n_iter=args.iters,
        n_cvar=_cvar_default(args),
        n_trot=args.trotter,
        h_x=args.hx,
        bias_magnitude=args.bias_mag,
        n_sweep_loc=args.loc_sweeps,
    )
    summary = pipeline.run_trials(
        inst, sa_params, dcqo_params, _final_params(args),
        trials=args.trials, seed=args.seed, jobs=args.jobs,
    )
    summary["command"] = "hsqc"
    summary["final"] = args.final
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(HSQC_CSV_HEADER)
            writer.writerows(_hsqc_csv_rows(summary))
        summary["csv"] = str(args.csv)
    return summary


def _cmd_tau(args) -> dict:
    estimate = pipeline.convergence_time(args.pgs, args.tf, args.confidence)
    return {
        "command": "tau",
        "p_gs": estimate.p_gs,
        "t_f_s": estimate.t_f,
        "confidence": estimate.confidence,
        "tau_s": estimate.tau,
    }


def _add_mts_flags(parser) -> None:
    parser.add_argument("--pop", type=int, default=8, help="population size")
    parser.add_argument("--gens", type=int, default=100, help="generation budget (0 skips the stage)")
    parser.add_argument("--tabu-iters", type=int, default=10, help="local search iterations")
    parser.add_argument("--tabu-len", type=int, default=10, help="tabu list length")
    parser.add_argument("--mu-start", type=float, default=0.1, help="initial mutation rate")
    parser.add_argument("--mu-end", type=float, default=0.001, help="final mutation rate")
    parser.add_argument("--target", type=float, default=None, help="early-stop energy")


def _add_dcqo_flags(parser) -> None:
    parser.add_argument("--shots", type=int, default=5000, help="measurement shots per iteration")
    parser.add_argument("--iters", type=int, default=1, help="feedback iterations")
    parser.add_argument("--cvar", type=int, default=None,
                        help="selection size for the bias update (default: shots // 10)")
    parser.add_argument("--trotter", type=int, default=1, help="digitized evolution steps")
    parser.add_argument("--hx", type=float, default=1.0, help="transverse field magnitude")
    parser.add_argument("--bias-mag", type=float, default=1.0, help="seed bias magnitude")
    parser.add_argument("--loc-sweeps", type=int, default=0, help="local refinement sweeps per iteration")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsqc",
        description="Hybrid sequential optimization for spin-form polynomial instances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a topology-aware instance")
    p.add_argument("--topology", default="heavy-hex",
                   help="heavy-hex | ring | path | file:<path> (ring/path size via --rows)")
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--swap-rounds", type=int, default=2)
    p.add_argument("--rho2", type=int, default=1)
    p.add_argument("--rho3", type=int, default=6)
    p.add_argument("--clip", type=float, default=instances.DEFAULT_COUPLING_CLIP)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_generate)

    p = sub.add_parser("exact", help="exhaustive ground state (capped qubit count)")
    p.add_argument("instance")
    p.add_argument("--write-gs", action="store_true",
                   help="store the ground-state energy in the instance metadata")
    p.set_defaults(handler=_cmd_exact)

    p = sub.add_parser("sa", help="simulated annealing")
    p.add_argument("instance")
    p.add_argument("--sweeps", type=int, required=True)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", default=None, help="CSV trace path")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(handler=_cmd_sa)

    p = sub.add_parser("mts", help="memetic tabu search")
    p.add_argument("instance")
    _add_mts_flags(p)
    p.add_argument("--seed-bitstring", default=None,
                   help="warm start: file, 0/1 string, or hex (bit i = variable i)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(handler=_cmd_mts)

    p = sub.add_parser("dcqo", help="bias-field counterdiabatic stage on the emulator")
    p.add_argument("instance")
    _add_dcqo_flags(p)
    p.add_argument("--seed-bitstring", default=None,
                   help="bias seed: file, 0/1 string, or hex (bit i = variable i)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_dcqo)

    p = sub.add_parser("hsqc", help="full three-stage pipeline")
    p.add_argument("instance")
    p.add_argument("--final", choices=("mts", "sa"), default="mts")
    p.add_argument("--sa-sweeps", type=int, default=1000)
    p.add_argument("--sa-runs", type=int, default=100)
    _add_dcqo_flags(p)
    _add_mts_flags(p)
    p.add_argument("--final-sweeps", type=int, default=1000,
                   help="annealing-final sweep budget (0 skips the stage)")
    p.add_argument("--final-runs", type=int, default=100)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--csv", default=None, help="per (trial, stage) CSV path")
    p.set_defaults(handler=_cmd_hsqc)

    p = sub.add_parser("tau", help="convergence-time formula")
    p.add_argument("--pgs", type=float, required=True)
    p.add_argument("--tf", type=float, required=True)
    p.add_argument("--confidence", type=float, default=pipeline.DEFAULT_CONFIDENCE)
    p.set_defaults(handler=_cmd_tau)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = args.handler(args)
    except InstanceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INSTANCE
    except QubitCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _emit(doc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
