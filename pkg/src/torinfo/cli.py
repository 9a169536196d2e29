"""Command-line front end: ``estimate``, ``vicsek`` and ``experiment``.

Exit codes: 0 ok, 2 input error, 3 parameter error, 4 runtime failure.
Results go to stdout; diagnostics and telemetry to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .estimators import EstimatorSpec, METRIC_ROLES, estimate
from .harness.io import resolve_output, save_trajectory, write_records_csv
from .harness.plans import PlanError, bundled_plans, load_plan, parse_number
from .harness.runners import resolve_workers, run_plan
from .index import BACKENDS
from .space import PeriodicSpace, PointCloud
from .validation import as_periods
from .vicsek import VicsekConfig, extract_records, simulate

EXIT_OK, EXIT_INPUT, EXIT_PARAM, EXIT_RUNTIME = 0, 2, 3, 4

log = logging.getLogger("torinfo")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _input_error(msg):
    return CliError(msg, EXIT_INPUT)


def _param_error(msg):
    return CliError(msg, EXIT_PARAM)


# ---------------------------------------------------------------- estimate

def read_table(path: str):
    """Headered numeric CSV; ``-`` reads stdin."""
    try:
        fh = sys.stdin if path == "-" else open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise _input_error(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise _input_error(f"{path} is empty") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise _input_error(f"{path}:{lineno}: expected {len(header)} fields, "
                                   f"got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise _input_error(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise _input_error(f"{path} has a header but no data rows")
    data = np.array(rows)
    if not np.all(np.isfinite(data)):
        raise _input_error(f"{path} contains non-finite values")
    return header, data


def parse_rolespec(spec: Optional[str], header: Sequence[str], metric: str):
    """``role=col[+col...]`` entries separated by commas; columns are header
    names or 0-based indices. Returns ``(columns_used, roles)`` where roles
    index into ``columns_used``."""
    names = METRIC_ROLES[metric]
    if not spec:
        if len(header) < len(names):
            raise _param_error(f"{metric} needs {len(names)} columns, "
                               f"input has {len(header)}")
        spec = ",".join(f"{r}={i}" for i, r in enumerate(names[:-1]))
        spec += f",{names[-1]}=" + "+".join(str(i) for i in range(len(names) - 1, len(header)))
    roles: Dict[str, List[int]] = {}
    used: List[int] = []
    for entry in spec.split(","):
        if not entry.strip():
            continue
        role, sep, cols = entry.partition("=")
        role = role.strip().lower()
        if not sep or role not in names:
            raise _param_error(f"bad role entry {entry.strip()!r}; roles for "
                               f"{metric} are {', '.join(names)}")
        if role in roles:
            raise _param_error(f"role {role!r} given twice")
        idx = []
        for col in cols.split("+"):
            col = col.strip()
            if col in header:
                c = header.index(col)
            elif col.isdigit() and int(col) < len(header):
                c = int(col)
            else:
                raise _param_error(f"column {col!r} not found in input "
                                   f"(columns: {', '.join(header)})")
            if c in used:
                raise _param_error(f"column {header[c]!r} used by more than one role")
            used.append(c)
            idx.append(len(used) - 1)
        roles[role] = idx
    missing = [r for r in names if r not in roles]
    if missing:
        raise _param_error(f"missing role(s) {', '.join(missing)} in --columns")
    return used, roles


def cmd_estimate(args) -> int:
    header, data = read_table(args.input)
    used, roles = parse_rolespec(args.columns, header, args.metric)
    try:
        if args.period is None:
            periods = as_periods(None, len(header))
        else:
            tokens = [t for t in args.period.split(",")]
            periods = as_periods(tokens, len(header))
    except ValueError as exc:
        raise _param_error(f"--period: {exc}") from None
    if any(p is not None and not p > 0 for p in periods):
        raise _param_error("--period entries must be positive or 'none'")
    space = PeriodicSpace(len(used), tuple(periods[c] for c in used))
    cloud = PointCloud(data[:, used], space)
    try:
        spec = EstimatorSpec(args.metric, k=args.k, roles=roles,
                             backend=args.backend, seed=args.seed)
        result = estimate(cloud, spec, track_memory=args.telemetry is not None)
    except (ValueError, TypeError) as exc:
        raise _param_error(str(exc)) from None
    print(f"{result.value:.6f}")
    if args.telemetry is not None:
        record = dict(result.as_dict(), input=args.input, seed=args.seed,
                      threads=resolve_workers(args.threads), version=__version__)
        line = json.dumps(record, sort_keys=True)
        if args.telemetry == "-":
            print(line, file=sys.stderr)
        else:
            with open(args.telemetry, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
    return EXIT_OK


# ------------------------------------------------------------------ vicsek

RECORD_COLUMNS = {
    "mi": ("theta_i", "theta_j"),
    "te": ("theta_i_next", "theta_i", "theta_j"),
    "gte": ("theta_i_next", "theta_i", "consensus_i"),
}


def cmd_vicsek(args) -> int:
    try:
        cfg = VicsekConfig(M=args.M, rho=args.rho, s=args.s, eta=args.eta,
                           tau=args.tau, r_int=args.r_int, seed=args.seed)
    except ValueError as exc:
        raise _param_error(str(exc)) from None
    traj = simulate(cfg, aligned=args.aligned)
    rec = extract_records(traj)
    prefix = str(resolve_output(args.out))
    paths = []
    for metric, cols in RECORD_COLUMNS.items():
        paths.append(write_records_csv(f"{prefix}_{metric}.csv",
                                       getattr(rec, metric), cols))
    if args.trajectory:
        paths.append(save_trajectory(resolve_output(args.trajectory), traj))
    summary = {
        "M": cfg.M, "rho": cfg.rho, "s": cfg.s, "eta": cfg.eta, "tau": cfg.tau,
        "r_int": cfg.r_int, "seed": cfg.seed, "L": cfg.L,
        "mean_phi": float(np.mean(traj.order)),
        "N_I": rec.n_interactions,
        "mi_records": int(rec.mi.shape[0]),
        "te_records": int(rec.te.shape[0]),
        "gte_records": int(rec.gte.shape[0]),
    }
    summary_path = Path(f"{prefix}_summary.csv")
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(summary.keys())
        writer.writerow(repr(v) if isinstance(v, float) else v for v in summary.values())
    for key, value in summary.items():
        print(f"{key}={value}")
    for p in paths + [summary_path]:
        log.info("wrote %s", p)
    return EXIT_OK


# -------------------------------------------------------------- experiment

def cmd_experiment(args) -> int:
    if args.list:
        for name in bundled_plans():
            print(name)
        return EXIT_OK
    if not args.plan:
        raise _param_error("--plan is required (or use --list)")
    try:
        plan = load_plan(args.plan)
    except PlanError as exc:
        raise _input_error(f"{args.plan}: {exc}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise _input_error(str(exc)) from None
    if args.output:
        plan.output = args.output
    if args.threads is not None:
        plan.workers = args.threads
    try:
        rows = run_plan(plan, allow_full_scale=args.full_scale)
    except PermissionError as exc:
        raise _param_error(str(exc)) from None
    if plan.output:
        print(resolve_output(plan.output))
    else:
        for row in rows:
            print(json.dumps(row, default=str))
    return EXIT_OK


# -------------------------------------------------------------------- main

def _threads(text):
    if text.strip().lower() == "auto":
        return 0
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1 or 'auto'")
    return value


def _angle(text):
    try:
        return parse_number(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torinfo", description="Nearest-neighbour MI/TE/GTE estimation "
        "for periodic data, Vicsek simulation and experiment runs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="more diagnostics on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate MI, TE or GTE from a CSV")
    est.add_argument("--metric", required=True, choices=sorted(METRIC_ROLES))
    est.add_argument("--input", required=True, help="headered CSV, '-' for stdin")
    est.add_argument("--columns", help="role spec, e.g. 'w=a,x=b,y=c+d'; "
                     "columns by name or 0-based index")
    est.add_argument("--period", help="per-column periods ('2pi,none,...') or one "
                     "value for all columns; default none")
    est.add_argument("--k", type=int, default=3)
    est.add_argument("--backend", default="vp", choices=sorted(BACKENDS))
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--threads", type=_threads, default=None)
    est.add_argument("--telemetry", nargs="?", const="-", default=None,
                     metavar="FILE", help="append a JSON-lines record "
                     "(stderr when FILE is omitted)")
    est.set_defaults(func=cmd_estimate)

    vic = sub.add_parser("vicsek", help="simulate and dump heading records")
    vic.add_argument("--M", type=int, default=1000)
    vic.add_argument("--rho", type=float, default=0.25)
    vic.add_argument("--s", type=float, default=0.1)
    vic.add_argument("--eta", type=_angle, required=True)
    vic.add_argument("--tau", type=int, default=5000)
    vic.add_argument("--r-int", type=float, default=1.0)
    vic.add_argument("--seed", type=int, default=0)
    vic.add_argument("--aligned", type=_angle, metavar="ANGLE",
                     help="start every particle with this heading instead of "
                     "uniformly random headings")
    vic.add_argument("--out", required=True, metavar="PREFIX")
    vic.add_argument("--trajectory", metavar="FILE",
                     help="also write the binary trajectory cache")
    vic.add_argument("--threads", type=_threads, default=None)
    vic.set_defaults(func=cmd_vicsek)

    exp = sub.add_parser("experiment", help="run an experiment plan")
    exp.add_argument("--plan", help="plan file or bundled plan name")
    exp.add_argument("--list", action="store_true", help="list bundled plans")
    exp.add_argument("--output", help="override the plan's output path")
    exp.add_argument("--full-scale", action="store_true",
                     help="allow plans marked full_scale")
    exp.add_argument("--threads", type=_threads, default=None)
    exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s",
                        level=logging.WARNING - 10 * min(args.verbose, 2))
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (MemoryError, RuntimeError, FloatingPointError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
