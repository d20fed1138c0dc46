"""Command-line harness: ``gabor-polar <command>``.

Exit codes: 0 success, 2 validation error, 3 search budget exceeded,
4 reconstruction failure (the report is still written).
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io as gio
from .core import make_rng
from .framegen import assemble_frame, measure, random_window
from .phasegraph import (
    NotRegularError,
    build_edges,
    component_bound,
    spectral_gap,
)
from .recover import (
    OrderingError,
    SubspacePrior,
    reconstruct,
    reconstruct_subspace,
)
from .settools import (
    BudgetExceededError,
    IndexSet,
    beta,
    check_pseudorandom,
    density,
    fourier_bias,
)

EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET, EXIT_RECONSTRUCTION = 0, 2, 3, 4


class CLIError(Exception):
    def __init__(self, message, code=EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise CLIError(f"cannot read {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise CLIError(f"{path}: invalid JSON ({err.msg})") from None


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _load_frame(path):
    return gio.frame_from_descriptor(_load_json(path))


def cmd_construct(args):
    desc = _load_json(args.config)
    if args.seed is not None:
        desc = {k: v for k, v in desc.items() if k != "g"} | {"seed": args.seed}
    frame = gio.frame_from_descriptor(desc)
    with _output(args.out) as fh:
        gio.dump_json(gio.frame_to_json(frame), fh)
    return EXIT_OK


def cmd_measure(args):
    frame = _load_frame(args.frame)
    x = gio.signal_from_json(_load_json(args.signal))
    if x.size != frame.M:
        raise CLIError(f"signal has length {x.size}, frame expects {frame.M}")
    with _output(args.out) as fh:
        gio.write_measurements(measure(frame, x), fh)
    return EXIT_OK


def cmd_reconstruct(args):
    frame = _load_frame(args.frame)
    try:
        with open(args.measurements, newline="") as fh:
            b = gio.read_measurements(fh)
    except OSError as err:
        raise CLIError(f"cannot read {args.measurements}: {err.strerror}") from None
    t0 = time.perf_counter()
    try:
        result = reconstruct(frame, b, method=args.method)
    except OrderingError as err:
        raise CLIError(str(err)) from None
    report = {"schema_version": gio.SCHEMA_VERSION, **result.to_json()}
    report["timing"] = {**report["timing"], "total": time.perf_counter() - t0}
    with _output(args.out) as fh:
        gio.dump_json(report, fh)
    return EXIT_OK if result.success else EXIT_RECONSTRUCTION


def _set_from_args(args):
    if args.set is not None:
        return IndexSet.from_json(_load_json(args.set))
    if args.modulus is None or args.members is None:
        raise CLIError("give --set FILE or both --modulus and --members")
    try:
        members = [int(v) for v in args.members.split(",") if v.strip()]
    except ValueError:
        raise CLIError("--members must be comma-separated integers") from None
    return IndexSet(args.modulus, tuple(sorted(members)))


def cmd_bias(args):
    try:
        A = _set_from_args(args)
    except ValueError as err:
        raise CLIError(f"invalid set: {err}") from None
    report = {"modulus": A.modulus, "size": len(A), "density": density(A),
              "bias": fourier_bias(A)}
    if args.c is not None and len(A):
        report["c"] = args.c
        report["pseudorandom"] = check_pseudorandom(A, args.c)
    with _output(args.out) as fh:
        gio.dump_json(report, fh)
    return EXIT_OK


def cmd_beta(args):
    if not args.C > 3:
        raise CLIError("C must exceed 3")
    mode = "exhaustive" if args.mode == "exhaustive" else "randomized"
    try:
        res = beta(args.M, args.C, mode=mode, trials=args.trials, seed=args.seed)
    except BudgetExceededError as err:
        raise CLIError(f"{err} (try --mode randomized)", EXIT_BUDGET) from None
    report = res.to_json()
    report["label"] = {"exact": "exact", "upper_bound": "upper bound",
                       "unknown": "unknown"}[res.status]
    if res.value is not None:
        report["measurement_count"] = args.C * args.M * (1 + 3 * res.value)
    with _output(args.out) as fh:
        gio.dump_json(report, fh)
    return EXIT_OK


def cmd_spectral_gap(args):
    frame = _load_frame(args.frame)
    graph = build_edges(frame.lattice, frame.Q, frame.P)
    try:
        rep = spectral_gap(graph, args.structure)
    except NotRegularError as err:
        raise CLIError(str(err)) from None
    with _output(args.out) as fh:
        gio.dump_json(rep.to_json(), fh)
    return EXIT_OK


def _random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _run_trial(cfg, lattice, Q, P, trial_seed, gap):
    t0 = time.perf_counter()
    M = cfg["M"]
    g = random_window(M, [trial_seed, 0])
    frame = assemble_frame(g, lattice, Q, P)
    rng = make_rng([trial_seed, 1])
    sub = cfg.get("subspace")
    if sub:
        d = int(sub["d"])
        W = _random_complex(rng, (M, d))
        x = W @ _random_complex(rng, d)
        b = measure(frame, x)
        res = reconstruct_subspace(frame, SubspacePrior(W), b, method=cfg["method"], truth=x)
    else:
        x = _random_complex(rng, M)
        b = measure(frame, x)
        res = reconstruct(frame, b, method=cfg["method"], truth=x)
    norm = float(np.linalg.norm(x))
    rel = None if res.residual is None else res.residual / norm
    tol = float(cfg.get("tolerance", 1e-6))
    ok = res.success and rel is not None and rel <= tol
    bound = None
    if gap:
        bound = component_bound(len(lattice), gap, res.flagged_vertices)
    return {
        "seed": int(trial_seed),
        "status": res.status,
        "within_tolerance": bool(ok),
        "phase_distance": res.residual,
        "relative_error": rel,
        "component_size": res.component_size,
        "component_bound": bound,
        "flagged_vertices": res.flagged_vertices,
        "measurement_count": len(b),
        "timing": {"wall_clock": time.perf_counter() - t0},
    }


def run_experiment(cfg: dict) -> dict:
    """Run a seeded sweep described by ``cfg``; see README for the schema."""
    if cfg.get("schema_version", gio.SCHEMA_VERSION) != gio.SCHEMA_VERSION:
        raise gio.SchemaError("unsupported schema_version")
    for key in ("M", "C", "Q", "P", "trials", "seed"):
        if key not in cfg:
            raise gio.SchemaError(f"missing field {key!r}")
    C = float(cfg["C"])
    if not C > 3:
        raise gio.SchemaError("C must exceed 3")
    cfg = {"method": "sync", **cfg}
    if cfg["method"] not in ("sync", "propagate"):
        raise gio.SchemaError(f"unknown method {cfg['method']!r}")
    t0 = time.perf_counter()
    lattice, Q, P, info = gio.resolve_sets(cfg)
    graph = build_edges(lattice, Q, P)
    try:
        gap = spectral_gap(graph).gap
    except NotRegularError:
        gap = None
    c = (C - 3) / (C - 1)
    closed_form = len(lattice) * (1 + 3 * len(Q) * len(P))
    seeds = np.random.SeedSequence(cfg["seed"]).generate_state(int(cfg["trials"]))
    trials = []
    for i, s in enumerate(seeds):
        try:
            rec = _run_trial(cfg, lattice, Q, P, int(s), gap)
        except Exception as err:  # recorded per trial; the sweep continues
            rec = {"seed": int(s), "status": f"error: {type(err).__name__}: {err}",
                   "within_tolerance": False, "timing": {}}
        rec["trial"] = i
        trials.append(rec)
    succeeded = sum(r["within_tolerance"] for r in trials)
    return {
        "schema_version": gio.SCHEMA_VERSION,
        "config": cfg,
        "M": lattice.M,
        "lattice_size": len(lattice),
        "T": list(lattice.T.members),
        "F": list(lattice.F.members),
        "Q": list(Q.members),
        "P": list(P.members),
        "sets": info,
        "pseudorandom": {"c": c, "Q": check_pseudorandom(Q, c), "P": check_pseudorandom(P, c)},
        "spectral_gap": gap,
        "measurement_count": closed_form,
        "trials": trials,
        "summary": {"trials": len(trials), "succeeded": int(succeeded),
                    "success_rate": succeeded / len(trials) if trials else None},
        "timing": {"wall_clock": time.perf_counter() - t0},
    }


TRIAL_CSV_COLUMNS = ["trial", "seed", "status", "within_tolerance", "phase_distance",
                     "relative_error", "component_size", "component_bound",
                     "measurement_count"]


def write_trial_csv(report, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRIAL_CSV_COLUMNS)
    for r in report["trials"]:
        w.writerow([r.get(col) for col in TRIAL_CSV_COLUMNS])


def cmd_experiment(args):
    cfg = _load_json(args.config)
    if not isinstance(cfg, dict):
        raise CLIError("experiment config must be a JSON object")
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.method is not None:
        cfg["method"] = args.method
    report = run_experiment(cfg)
    with _output(args.out) as fh:
        gio.dump_json(report, fh)
    if args.out not in (None, "-"):
        with open(Path(args.out).with_suffix(".csv"), "w", newline="") as fh:
            write_trial_csv(report, fh)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gabor-polar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="frame descriptor -> frame file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("measure", help="frame + signal -> measurement CSV")
    p.add_argument("--frame", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("reconstruct", help="frame + measurements -> reconstruction JSON")
    p.add_argument("--frame", required=True)
    p.add_argument("--measurements", required=True)
    p.add_argument("--method", choices=["propagate", "sync"], default="sync")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("bias", help="Fourier bias of a subset of Z_M")
    p.add_argument("--set")
    p.add_argument("--modulus", type=int)
    p.add_argument("--members")
    p.add_argument("--c", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("beta", help="search for beta(M, C)")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--mode", choices=["exhaustive", "randomized", "montecarlo"],
                   default="exhaustive")
    p.add_argument("--trials", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_beta)

    p = sub.add_parser("spectral-gap", help="spectral gap of a frame's phase graph")
    p.add_argument("--frame", required=True)
    p.add_argument("--structure", choices=["auto", "dense"], default="auto")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectral_gap)

    p = sub.add_parser("experiment", help="seeded reconstruction sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["propagate", "sync"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CLIError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except BudgetExceededError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as err:  # schema and validation errors from the library
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
