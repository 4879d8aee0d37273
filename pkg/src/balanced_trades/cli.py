"""Command-line front end.

Exit codes: 0 success, 1 domain or usage error, 2 budget exceeded.  Data
goes to stdout (or ``--output``); diagnostics and progress go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path

from . import pairings, robustness, trades
from .errors import BudgetExceeded, TradeError
from .io import dumps, load_sets, load_trade, parse_swaps


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


class Output:
    """A command result: JSON payload plus optional CSV rows."""

    def __init__(self, payload, rows=None, text=None, status=0):
        self.payload = payload
        self.rows = rows
        self.text = text
        self.status = status

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return dumps(self.payload)
        if fmt == "text":
            if self.text is not None:
                return self.text
            if isinstance(self.payload, dict):
                return "\n".join(f"{k}: {_scalar(v)}" for k, v in self.payload.items())
            return _scalar(self.payload)
        rows = self.rows
        if rows is None:
            rows = [self.payload] if isinstance(self.payload, dict) else [{"value": self.payload}]
        buf = _io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _scalar(v) for k, v in row.items()})
        return buf.getvalue().rstrip("\n")


def _scalar(value) -> str:
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, (dict, list)):
        return dumps(value)
    return str(value)


def _cmd_construct(args):
    trade = trades.construct_trade(load_sets(args.sets))
    return Output(trade.to_dict())


def _cmd_verify(args):
    return Output(trades.verify_trade(load_trade(args.trade), max_subsets=args.max_subsets))


def _cmd_canonical(args):
    return Output(trades.canonical_balanced_sets(args.v).to_dict())


def _cmd_mirror(args):
    return Output(trades.mirror_balanced_sets(args.v).to_dict())


def _cmd_enumerate(args):
    if args.count_only:
        n = pairings.enumerate_balanced_pairings(args.v, workers=args.threads)
        return Output(n, text=str(n))
    out = args.stream

    def emit(sets):
        out.write(dumps(sets.to_dict()) + "\n")

    n = pairings.enumerate_balanced_pairings(args.v, emit)
    print(f"{n} balanced pairings", file=sys.stderr)
    return None


def _cmd_bounds(args):
    b = pairings.count_bounds(args.v, exact=args.exact, workers=args.threads)
    return Output(b.to_dict())


def _cmd_worst_case(args):
    report = robustness.worst_case_discrepancy(load_sets(args.sets), args.p, max_sign_vectors=args.max_sign_vectors)
    d = report.to_dict()
    return Output(d, rows=[{"value": d["value"], "witness": d["witness"]}])


def _cmd_optimal(args):
    limit = None if args.long else args.max_pairings
    checkpoint = args.checkpoint
    if args.long and checkpoint is None:
        checkpoint = f"optimal-v{args.v}-p{args.p}.ckpt.json"
    progress = robustness.stderr_progress() if args.long else None
    result = robustness.search_optimal_pairings(
        args.v, args.p, max_pairings=limit, checkpoint=checkpoint, progress=progress
    )
    d = result.to_dict()
    rows = [
        {"rank": i + 1, "value": result.value, "pairs": s["pairs"]} for i, s in enumerate(d["optima"])
    ] or None
    if not result.optimal:
        print(
            f"budget exhausted after {result.examined} pairings; result is not proven optimal "
            "(use --long or raise --max-pairings)",
            file=sys.stderr,
        )
    return Output(d, rows=rows, status=0 if result.optimal else 2)


def _cmd_concat(args):
    sets, guarantee = robustness.build_concatenated(args.v, args.p)
    d = {"sets": sets.to_dict(), "guarantee": guarantee.to_dict()}
    if args.check:
        d["worst_case"] = robustness.worst_case_discrepancy(sets, args.p).value
    row = dict(guarantee.to_dict(), v=args.v, p=args.p)
    if args.check:
        row["worst_case"] = d["worst_case"]
    return Output(d, rows=[row])


def _cmd_lower_bounds(args):
    return Output(robustness.discrepancy_lower_bounds(args.t).to_dict())


def _cmd_swap(args):
    sets = load_sets(args.sets)
    swaps = robustness.SwapSet(tuple(parse_swaps(args.swaps)), args.p) if args.p else parse_swaps(args.swaps)
    after = robustness.apply_swaps(sets, swaps)
    return Output({"sets_after": after.to_dict(), "set_discrepancy": robustness.set_discrepancy(after)})


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="balanced-trades", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=func)
        return p

    p = add("construct", _cmd_construct, "build the minimal trade from a defining-sets file")
    p.add_argument("--sets", required=True)
    p = add("verify", _cmd_verify, "brute-force check of a trade file")
    p.add_argument("--trade", required=True)
    p.add_argument("--max-subsets", type=int, default=None, help="cap on C(v,t) (default 10^7)")
    p = add("canonical", _cmd_canonical, "canonical balanced defining sets {4i-3,4i},{4i-2,4i-1}")
    p.add_argument("--v", type=int, required=True)
    p = add("mirror", _cmd_mirror, "mirror-image balanced defining sets {i, v+1-i}")
    p.add_argument("--v", type=int, required=True)
    p = add("enumerate", _cmd_enumerate, "enumerate balanced pairings (JSON lines) or count them")
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--count-only", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p = add("bounds", _cmd_bounds, "lower bound and asymptotic upper estimate on the pairing count")
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--exact", action="store_true", help="also enumerate the exact count")
    p.add_argument("--threads", type=int, default=1)
    p = add("worst-case", _cmd_worst_case, "worst-case total set discrepancy with a witness")
    p.add_argument("--sets", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--max-sign-vectors", type=int, default=None)
    p = add("optimal", _cmd_optimal, "search the most swap-robust balanced pairings")
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--long", action="store_true", help="lift the pairing budget; checkpoint progress")
    p.add_argument("--max-pairings", type=int, default=robustness.DEFAULT_MAX_PAIRINGS)
    p.add_argument("--checkpoint", help="resumable state file (default with --long: optimal-v<V>-p<P>.ckpt.json)")
    p = add("concat", _cmd_concat, "concatenated construction and its guarantee")
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--check", action="store_true", help="also compute the exact worst case")
    p = add("lower-bounds", _cmd_lower_bounds, "lower bounds on worst-case discrepancy for strength t")
    p.add_argument("--t", type=int, required=True)
    p = add("swap", _cmd_swap, "apply a swap collection to defining sets")
    p.add_argument("--sets", required=True)
    p.add_argument("--swaps", required=True, help='e.g. "1,2;4,5" or "[[1,2],[4,5]]"')
    p.add_argument("--p", type=int, default=None, help="reject swaps of magnitude above p")
    return parser


def run(argv=None, stdout=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    target = None
    try:
        if args.output and args.func is _cmd_enumerate and not args.count_only:
            target = open(args.output, "w")
        args.stream = target or stdout
        result = args.func(args)
        if result is None:
            return 0
        text = result.render(args.format) + "\n"
        if args.output:
            Path(args.output).write_text(text)
        else:
            stdout.write(text)
        return result.status
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 2
    except TradeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        if target is not None:
            target.close()


def main() -> None:
    sys.exit(run())
