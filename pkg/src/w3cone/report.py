"""Experiment runners: single-relaxation solve reports, theta-grid sweeps,
and multi-case gap tables."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import diagnostics
from .backends import CapabilityError, get_backend
from .conic import OPTIMAL, SolverConfig
from .netcase import NetworkCase, enumerate_triangles
from .wopf import Relaxation, build

# Benchmark library release the bundled cases follow; reported in outputs
# because the source experiments did not pin one.
PGLIB_VERSION = "v21"


@dataclass
class SolveReport:
    case_name: str
    relaxation: str
    status: str
    objective: float
    gap_percent: float | None
    solve_time_s: float
    iterations: int
    backend: str
    pglib_version: str
    triangles: list
    activity: dict

    def to_dict(self) -> dict:
        return {
            "case_name": self.case_name,
            "relaxation": self.relaxation,
            "status": self.status,
            "objective": self.objective,
            "gap_percent": self.gap_percent,
            "solve_time_s": self.solve_time_s,
            "iterations": self.iterations,
            "backend": self.backend,
            "pglib_version": self.pglib_version,
            "triangles": [t.to_dict() for t in self.triangles],
            "activity": self.activity,
        }


def run_solve(case: NetworkCase, relaxation: Relaxation,
              ref_obj: float | None = None, backend: str | None = None,
              tol: float = 1e-8, diag_tol: float = 1e-5) -> SolveReport:
    """Build, solve and diagnose one relaxation of one case."""
    be = get_backend(backend) if isinstance(backend, (str, type(None))) else backend
    program, index_map = build(case, relaxation)
    if program.psd_blocks and not getattr(be, "supports_psd", False):
        raise CapabilityError(f"backend {be.name!r} has no PSD cone support")
    sol = be.solve(program, SolverConfig(tol=tol))

    gap = None
    tri_diags = []
    activity_summary: dict = {}
    if sol.status == OPTIMAL:
        if ref_obj is not None:
            gap = diagnostics.gap_percent(sol.objective, ref_obj)
        triangles = enumerate_triangles(case)
        tri_diags = diagnostics.triangle_diagnostics(
            sol, program, index_map, triangles, tol=diag_tol)
        acts = diagnostics.activity_report(sol, program, tol=diag_tol)
        activity_summary = {
            "n_blocks": len(acts),
            "n_active": sum(1 for a in acts if a.active),
            "active_labels": sorted(a.label for a in acts if a.active),
        }
    return SolveReport(
        case_name=case.name, relaxation=relaxation.describe(),
        status=sol.status, objective=sol.objective, gap_percent=gap,
        solve_time_s=sol.solve_time_s, iterations=sol.iterations,
        backend=sol.backend, pglib_version=PGLIB_VERSION,
        triangles=tri_diags, activity=activity_summary)


# ---------------------------------------------------------------------------
# theta sweep

@dataclass
class SweepRow:
    theta1: float
    theta2: float
    objective: float
    status: str
    solve_time_s: float


@dataclass
class SweepResult:
    case_name: str
    grid: int
    lo: float
    hi: float
    r: float
    backend: str
    rows: list[SweepRow]

    def best(self) -> SweepRow | None:
        """Maximum-objective row (tightest bound); lexicographically
        smallest (theta1, theta2) among exact ties."""
        best = None
        for row in self.rows:
            if row.status != OPTIMAL:
                continue
            if best is None or row.objective > best.objective:
                best = row
        return best

    def to_csv(self) -> str:
        lines = [
            "# theta-grid sweep of the kim+pm relaxation; objective column "
            "is the relaxation bound in $/h (not a gap)",
            f"# case={self.case_name} grid={self.grid} "
            f"range={self.lo:.10g}:{self.hi:.10g} r={self.r:.10g} "
            f"backend={self.backend} pglib={PGLIB_VERSION}",
            "theta1,theta2,objective,status,solve_time_s",
        ]
        for row in self.rows:
            lines.append(f"{row.theta1:.10g},{row.theta2:.10g},"
                         f"{row.objective:.10g},{row.status},"
                         f"{row.solve_time_s:.6f}")
        b = self.best()
        if b is not None:
            lines.append(f"# best,{b.theta1:.10g},{b.theta2:.10g},"
                         f"{b.objective:.10g}")
        return "\n".join(lines) + "\n"


def _sweep_point(args) -> tuple[int, float, str, float]:
    case, th1, th2, r, backend, tol, k = args
    relax = Relaxation(kind="kim", thetas=(th1, th2), r=r)
    program, _ = build(case, relax)
    be = get_backend(backend)
    sol = be.solve(program, SolverConfig(tol=tol))
    return k, sol.objective, sol.status, sol.solve_time_s


def run_sweep(case: NetworkCase, grid: int = 32, lo: float = 0.0,
              hi: float = 6.2831853, r: float = 1.0, jobs: int | None = None,
              backend: str | None = None, tol: float = 1e-8) -> SweepResult:
    """Solve the kim+pm relaxation on a grid x grid half-open theta lattice,
    in parallel across grid points."""
    be_name = backend
    step = (hi - lo) / grid
    points = [(lo + a * step, lo + b * step)
              for a in range(grid) for b in range(grid)]
    tasks = [(case, th1, th2, r, be_name, tol, k)
             for k, (th1, th2) in enumerate(points)]
    results: list[tuple[float, str, float]] = [None] * len(points)  # type: ignore

    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for k, obj, status, t in pool.map(_sweep_point, tasks,
                                              chunksize=16):
                results[k] = (obj, status, t)
    else:
        for task in tasks:
            k, obj, status, t = _sweep_point(task)
            results[k] = (obj, status, t)

    rows = [SweepRow(th1, th2, obj, status, t)
            for (th1, th2), (obj, status, t) in zip(points, results)]
    resolved = get_backend(be_name).name
    return SweepResult(case_name=case.name, grid=grid, lo=lo, hi=hi, r=r,
                       backend=resolved, rows=rows)


# ---------------------------------------------------------------------------
# gap table

@dataclass
class TableCell:
    status: str            # "ok" | "unsupported" | solver status
    objective: float | None
    gap_percent: float | None


@dataclass
class TableRow:
    case_name: str
    ref_obj: float
    cells: dict[str, TableCell]


def run_table(cases: list[NetworkCase], ref_objs: list[float],
              relaxations: list[str], thetas: tuple[float, ...],
              r: float = 1.0, backend: str | None = None,
              tol: float = 1e-8) -> list[TableRow]:
    """Gap per (case, relaxation); SDP cells degrade to 'unsupported' when
    the backend lacks PSD cones."""
    if len(cases) != len(ref_objs):
        raise ValueError(f"{len(cases)} cases but {len(ref_objs)} "
                         "reference objectives")
    out = []
    for case, ref in zip(cases, ref_objs):
        cells = {}
        for kind in relaxations:
            relax = (Relaxation(kind="kim", thetas=thetas, r=r)
                     if kind == "kim" else Relaxation(kind=kind))
            try:
                rep = run_solve(case, relax, ref_obj=ref, backend=backend,
                                tol=tol)
            except CapabilityError:
                cells[kind] = TableCell("unsupported", None, None)
                continue
            if rep.status == OPTIMAL:
                cells[kind] = TableCell("ok", rep.objective, rep.gap_percent)
            else:
                cells[kind] = TableCell(rep.status, None, None)
        out.append(TableRow(case_name=case.name, ref_obj=ref, cells=cells))
    return out


def format_table(rows: list[TableRow], relaxations: list[str]) -> str:
    headers = ["case", "ref $/h"] + [f"{k} %gap" for k in relaxations]
    table = []
    for row in rows:
        line = [row.case_name, f"{row.ref_obj:.2f}"]
        for k in relaxations:
            cell = row.cells[k]
            line.append(f"{cell.gap_percent:.2f}" if cell.status == "ok"
                        else cell.status)
        table.append(line)
    widths = [max(len(h), *(len(r[i]) for r in table))
              for i, h in enumerate(headers)]
    def fmt(vals):
        return "  ".join(v.ljust(w) for v, w in zip(vals, widths))
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in table)
    return "\n".join(lines) + "\n"


def table_to_dict(rows: list[TableRow], relaxations: list[str]) -> dict:
    return {
        "pglib_version": PGLIB_VERSION,
        "relaxations": list(relaxations),
        "rows": [{
            "case_name": row.case_name,
            "ref_obj": row.ref_obj,
            "cells": {k: {"status": c.status, "objective": c.objective,
                          "gap_percent": c.gap_percent}
                      for k, c in row.cells.items()},
        } for row in rows],
    }
