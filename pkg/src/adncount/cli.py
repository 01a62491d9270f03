"""Command-line interface.

Subcommands: generate (topology JSON), run (single counting execution),
sweep (parameter grid to CSV/JSON), check-tables (tree-count self check),
check-bound (delta * n^4 envelope over an exported sweep).

Exit codes: 0 success, 2 usage or parameter error, 3 round limit hit.
All output is a pure function of the flags and seeds.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys

from . import experiment
from .dynamics import DynamicsSchedule, ScheduleParams
from .errors import CountingError, RoundLimitExceeded
from .protocol import ProtocolConfig, count
from .topology import gnp, path, star, tree_to_topology
from .trees import (
    RANRUT_VARIANTS,
    SubtreeDistribution,
    check_tables,
    prune,
    ranrut,
    sizes_table,
)

_FAMILY_ALIASES = {"tree": "random-tree"}


def _family(value: str) -> str:
    return _FAMILY_ALIASES.get(value, value)


def _parse_T(value: str):
    if value == "inf":
        return math.inf
    try:
        T = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"T must be a positive integer or 'inf', got {value!r}")
    if T < 1:
        raise argparse.ArgumentTypeError("T must be >= 1")
    return T


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adncount",
        description="Incremental counting on anonymous dynamic networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit one topology snapshot as JSON")
    g.add_argument("--family", required=True,
                   choices=["tree", "random-tree", "star", "path", "gnp"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--delta", type=int, default=None)
    g.add_argument("--p", type=float, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--ranrut-variant", choices=list(RANRUT_VARIANTS),
                   default="paper-literal")
    g.add_argument("--out", default=None, help="output file (default stdout)")

    r = sub.add_parser("run", help="run one counting execution")
    r.add_argument("--family", required=True,
                   choices=["tree", "random-tree", "star", "path", "gnp"])
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--delta", type=int, default=None)
    r.add_argument("--T", type=_parse_T, default=math.inf)
    r.add_argument("--p", type=float, default=None)
    r.add_argument("--c", type=float, default=1.01)
    r.add_argument("--mode", choices=["experimental", "theoretical"],
                   default="experimental")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-rounds", type=int, default=None)
    r.add_argument("--json", action="store_true", help="print the full record as JSON")

    s = sub.add_parser("sweep", help="run a parameter sweep")
    source = s.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", help="SweepSpec JSON file")
    source.add_argument("--grid", choices=["tree", "random-tree", "star", "path", "gnp"],
                        help="one family's standard study grid")
    s.add_argument("--full", action="store_true",
                   help="with --grid: n up to 75 and 100 repetitions instead "
                        "of the desk-scale n <= 30 with 10")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out-csv", default=None)
    s.add_argument("--out-json", default=None)

    t = sub.add_parser("check-tables", help="verify tree counts against enumeration")
    t.add_argument("--n-max", type=int, default=8)

    b = sub.add_parser("check-bound", help="check mean rounds against delta * n^4")
    b.add_argument("--in-json", required=True, help="exported sweep JSON")

    return parser


def _cmd_generate(args) -> int:
    family = _family(args.family)
    n = args.n
    delta = args.delta
    rng = random.Random(args.seed)
    if family == "star":
        topo = star(n)
    elif family == "path":
        topo = path(n)
    elif family == "gnp":
        if args.p is None:
            raise CountingError("gnp requires --p")
        topo = gnp(n, args.p, rng)
    else:
        if delta is None:
            raise CountingError("random-tree requires --delta")
        dist = SubtreeDistribution(sizes_table(n), n) if n > 2 else None
        tree = ranrut(n, dist, rng, args.ranrut_variant)
        tree = prune(tree, delta, rng)
        topo = tree_to_topology(tree)
    text = json.dumps(topo.to_json_dict()) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_run(args) -> int:
    family = _family(args.family)
    delta = args.delta
    if delta is None and family in ("star", "gnp"):
        delta = args.n - 1
    if delta is None:
        raise CountingError(f"{family} requires --delta")
    params = ScheduleParams(
        family=family, n=args.n, delta=delta, T=args.T, seed=args.seed, p=args.p
    )
    config = ProtocolConfig(
        c=args.c,
        mode=args.mode,
        max_rounds=args.max_rounds,
        disconnection_tolerant=(family == "gnp"),
    )
    schedule = DynamicsSchedule(params)
    status = 0
    try:
        record = count(schedule, config)
    except RoundLimitExceeded as exc:
        record = exc.record
        status = 3
    if args.json:
        sys.stdout.write(json.dumps(record.to_json_dict()) + "\n")
    else:
        sys.stdout.write(
            f"estimate: {record.estimate}\n"
            f"status: {record.status}\n"
            f"rounds_total: {record.rounds_total} "
            f"(collection {record.rounds_collection}, "
            f"verification {record.rounds_verification}, "
            f"notification {record.rounds_notification})\n"
        )
    return status


def _cmd_sweep(args) -> int:
    if args.grid:
        spec = experiment.standard_grid(_family(args.grid), full=args.full)
    else:
        with open(args.spec) as fh:
            spec = experiment.SweepSpec.from_json_dict(json.load(fh))
    result = experiment.run_sweep(spec, workers=args.workers)
    if args.out_csv:
        experiment.export_csv(result, args.out_csv)
    if args.out_json:
        experiment.export_json(result, args.out_json)
    if not args.out_csv and not args.out_json:
        sys.stdout.write(experiment.csv_text(result))
    return 0


def _cmd_check_tables(args) -> int:
    ok, lines = check_tables(args.n_max)
    sys.stdout.write("\n".join(lines) + "\n")
    return 0 if ok else 1


def _cmd_check_bound(args) -> int:
    result = experiment.load_json(args.in_json)
    rows = experiment.check_bound(result)
    for row in rows:
        s = row["setting"]
        mean = "n/a" if row["rounds_mean"] is None else repr(row["rounds_mean"])
        sys.stdout.write(
            f"{s.family} n={s.n} delta={s.delta} "
            f"T={'inf' if s.T == math.inf else s.T}"
            f"{'' if s.p is None else f' p={s.p!r}'}: "
            f"mean={mean} bound={row['bound']} within={row['within']}\n"
        )
    return 0


_DISPATCH = {
    "generate": _cmd_generate,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "check-tables": _cmd_check_tables,
    "check-bound": _cmd_check_bound,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except (CountingError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
