"""Command-line front end: solve one relaxation, sweep the theta grid,
or reproduce the multi-case gap table.

Exit codes: 0 success (sweep/table count per-point failures in their own
output), 1 input or capability error, 2 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .backends import CapabilityError, NoBackendError
from .conic import OPTIMAL
from .netcase import CaseError, NetworkCase, parse_matpower
from .report import (format_table, run_solve, run_sweep, run_table,
                     table_to_dict)
from .wopf import Relaxation, UnsupportedSizeError

DEFAULT_THETAS = (0.0, 3.0 * math.pi / 2.0)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; the CLI contract
    reserves 2 for solver failures, so remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_case(path: str) -> NetworkCase:
    p = Path(path)
    if not p.exists():
        raise CaseError(f"case file not found: {path}")
    return parse_matpower(p.read_text(), name=p.stem)


def _parse_thetas(raw: str, degrees: bool) -> tuple[float, ...]:
    vals = tuple(float(tk) for tk in raw.split(",") if tk.strip())
    if degrees:
        vals = tuple(math.radians(v) for v in vals)
    return vals


def _build_parser() -> _Parser:
    parser = _Parser(prog="w3cone")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve one relaxation of one case")
    ps.add_argument("--case", required=True, help="MATPOWER case file")
    ps.add_argument("--relax", required=True, choices=("pm", "kim", "sdp"))
    ps.add_argument("--theta", default=None,
                    help="comma list of angles for kim (radians)")
    ps.add_argument("--deg", action="store_true",
                    help="interpret --theta values as degrees")
    ps.add_argument("--r", type=float, default=1.0)
    ps.add_argument("--ref-obj", type=float, default=None,
                    help="reference objective in $/h for gap reporting")
    ps.add_argument("--tol", type=float, default=1e-8)
    ps.add_argument("--backend", default=None)
    ps.add_argument("--out", default=None, help="write the JSON report here")
    ps.set_defaults(func=cmd_solve)

    pw = sub.add_parser("sweep", help="theta1 x theta2 objective sweep")
    pw.add_argument("--case", required=True)
    pw.add_argument("--grid", type=int, default=32)
    pw.add_argument("--range", dest="range_", default="0:6.2831853",
                    help="lo:hi in radians, half-open grid")
    pw.add_argument("--r", type=float, default=1.0)
    pw.add_argument("--jobs", type=int, default=None)
    pw.add_argument("--tol", type=float, default=1e-8)
    pw.add_argument("--backend", default=None)
    pw.add_argument("--out", default=None, help="CSV path (default stdout)")
    pw.set_defaults(func=cmd_sweep)

    pt = sub.add_parser("table", help="gap table over several cases")
    pt.add_argument("--cases", required=True, nargs="+")
    pt.add_argument("--ref-objs", required=True,
                    help="comma list of reference objectives, one per case")
    pt.add_argument("--relaxations", default="pm,kim,sdp")
    pt.add_argument("--theta", default=None)
    pt.add_argument("--deg", action="store_true")
    pt.add_argument("--r", type=float, default=1.0)
    pt.add_argument("--tol", type=float, default=1e-8)
    pt.add_argument("--backend", default=None)
    pt.add_argument("--out", default=None, help="write machine-readable JSON")
    pt.set_defaults(func=cmd_table)
    return parser


def cmd_solve(args) -> int:
    case = _load_case(args.case)
    thetas = (DEFAULT_THETAS if args.theta is None
              else _parse_thetas(args.theta, args.deg))
    if args.relax == "kim":
        relax = Relaxation(kind="kim", thetas=thetas, r=args.r)
    else:
        relax = Relaxation(kind=args.relax)
    report = run_solve(case, relax, ref_obj=args.ref_obj,
                       backend=args.backend, tol=args.tol)
    text = json.dumps(report.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0 if report.status == OPTIMAL else 2


def cmd_sweep(args) -> int:
    case = _load_case(args.case)
    try:
        lo_s, hi_s = args.range_.split(":")
        lo, hi = float(lo_s), float(hi_s)
    except ValueError:
        raise CaseError(f"bad --range {args.range_!r}, expected lo:hi")
    if args.grid < 1 or hi <= lo:
        raise CaseError("sweep needs grid >= 1 and hi > lo")
    result = run_sweep(case, grid=args.grid, lo=lo, hi=hi, r=args.r,
                       jobs=args.jobs, backend=args.backend, tol=args.tol)
    csv = result.to_csv()
    if args.out:
        Path(args.out).write_text(csv)
    else:
        sys.stdout.write(csv)
    return 0


def cmd_table(args) -> int:
    cases = [_load_case(c) for c in args.cases]
    refs = [float(v) for v in args.ref_objs.split(",") if v.strip()]
    if len(refs) != len(cases):
        raise CaseError(f"{len(cases)} cases but {len(refs)} --ref-objs")
    relaxations = [k.strip() for k in args.relaxations.split(",") if k.strip()]
    for k in relaxations:
        if k not in ("pm", "kim", "sdp"):
            raise CaseError(f"unknown relaxation {k!r}")
    thetas = (DEFAULT_THETAS if args.theta is None
              else _parse_thetas(args.theta, args.deg))
    rows = run_table(cases, refs, relaxations, thetas, r=args.r,
                     backend=args.backend, tol=args.tol)
    for row in rows:
        for kind, cell in row.cells.items():
            if cell.status != "ok":
                print(f"warning: {row.case_name}/{kind}: {cell.status}",
                      file=sys.stderr)
    sys.stdout.write(format_table(rows, relaxations))
    if args.out:
        Path(args.out).write_text(
            json.dumps(table_to_dict(rows, relaxations), indent=2) + "\n")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (CaseError, UnsupportedSizeError, CapabilityError, NoBackendError,
            OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
