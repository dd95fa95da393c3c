"""Solver-agnostic conic program representation and feasibility checking.

A program is a set of real variables with box bounds, sparse linear rows
(two-sided), second-order cone blocks  ||u|| <= t, rotated cones
||u||^2 <= 2 t1 t2, and real symmetric PSD blocks, under a linear
minimization objective. Affine expressions are sparse (terms, constant)
pairs. Solver backends consume this structure; see ``backends``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

INF = float("inf")

# Solution status codes
OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"
ITERATION_LIMIT = "iteration_limit"


class ContractViolation(ValueError):
    """A builder call broke the program construction contract."""


@dataclass(frozen=True)
class AffExpr:
    """Sparse affine expression: sum(coeff * x[idx]) + const."""
    terms: tuple[tuple[int, float], ...]
    const: float = 0.0

    @classmethod
    def of(cls, coeffs: dict[int, float], const: float = 0.0) -> "AffExpr":
        items = tuple(sorted((i, float(c)) for i, c in coeffs.items() if c != 0.0))
        return cls(terms=items, const=float(const))

    @classmethod
    def var(cls, idx: int, coeff: float = 1.0) -> "AffExpr":
        return cls(terms=((idx, float(coeff)),), const=0.0)

    @classmethod
    def constant(cls, value: float) -> "AffExpr":
        return cls(terms=(), const=float(value))

    def evaluate(self, x: np.ndarray) -> float:
        return self.const + sum(c * x[i] for i, c in self.terms)

    def max_index(self) -> int:
        return max((i for i, _ in self.terms), default=-1)


@dataclass(frozen=True)
class LinearRow:
    expr: AffExpr
    lb: float
    ub: float
    label: str = ""


@dataclass(frozen=True)
class ConeBlock:
    exprs: tuple[AffExpr, ...]
    label: str = ""


@dataclass(frozen=True)
class PsdBlock:
    dim: int
    exprs: tuple[AffExpr, ...]   # lower triangle, row-major
    label: str = ""

    def matrix(self, x: np.ndarray) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        it = iter(self.exprs)
        for r in range(self.dim):
            for c in range(r + 1):
                v = next(it).evaluate(x)
                m[r, c] = v
                m[c, r] = v
        return m


@dataclass
class SolverConfig:
    tol: float = 1e-8
    max_iters: int = 200
    verbose: bool = False


@dataclass
class Solution:
    status: str
    objective: float
    x: np.ndarray | None
    solve_time_s: float
    iterations: int
    backend: str = ""


class ConicProgram:
    """Mutable conic program builder; treat as immutable once built."""

    def __init__(self):
        self.n_vars = 0
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.linear_rows: list[LinearRow] = []
        self.soc_blocks: list[ConeBlock] = []
        self.rsoc_blocks: list[ConeBlock] = []
        self.psd_blocks: list[PsdBlock] = []
        self.objective: dict[int, float] = {}
        self.objective_const = 0.0

    # -- construction ------------------------------------------------------

    def add_variable(self, lb: float = -INF, ub: float = INF) -> int:
        if lb > ub:
            raise ContractViolation(f"variable bounds inverted: [{lb}, {ub}]")
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.n_vars += 1
        return self.n_vars - 1

    def _check_expr(self, e: AffExpr):
        if e.max_index() >= self.n_vars:
            raise ContractViolation(
                f"expression references variable {e.max_index()} "
                f">= n_vars {self.n_vars}")

    def add_linear(self, expr: AffExpr, lb: float = -INF, ub: float = INF,
                   label: str = "") -> int:
        self._check_expr(expr)
        if lb > ub:
            raise ContractViolation(f"row bounds inverted: [{lb}, {ub}]")
        self.linear_rows.append(LinearRow(expr, float(lb), float(ub), label))
        return len(self.linear_rows) - 1

    def add_soc(self, exprs: list[AffExpr], label: str = "") -> int:
        """||(exprs[1:])|| <= exprs[0]."""
        if len(exprs) < 2:
            raise ContractViolation("SOC block needs >= 2 expressions")
        for e in exprs:
            self._check_expr(e)
        self.soc_blocks.append(ConeBlock(tuple(exprs), label))
        return len(self.soc_blocks) - 1

    def add_rsoc(self, exprs: list[AffExpr], label: str = "") -> int:
        """||(exprs[2:])||^2 <= 2 * exprs[0] * exprs[1], both factors >= 0."""
        if len(exprs) < 3:
            raise ContractViolation("rotated SOC block needs >= 3 expressions")
        for e in exprs:
            self._check_expr(e)
        self.rsoc_blocks.append(ConeBlock(tuple(exprs), label))
        return len(self.rsoc_blocks) - 1

    def add_psd(self, dim: int, exprs: list[AffExpr], label: str = "") -> int:
        """Lower triangle (row-major) of a dim x dim symmetric matrix
        required PSD."""
        want = dim * (dim + 1) // 2
        if len(exprs) != want:
            raise ContractViolation(
                f"PSD block dim {dim} needs {want} expressions, got {len(exprs)}")
        for e in exprs:
            self._check_expr(e)
        self.psd_blocks.append(PsdBlock(dim, tuple(exprs), label))
        return len(self.psd_blocks) - 1

    def set_objective(self, coeffs: dict[int, float], const: float = 0.0):
        for i in coeffs:
            if i >= self.n_vars:
                raise ContractViolation(f"objective references variable {i}")
        self.objective = {i: float(c) for i, c in coeffs.items() if c != 0.0}
        self.objective_const = float(const)

    def objective_value(self, x: np.ndarray) -> float:
        return self.objective_const + sum(c * x[i] for i, c in self.objective.items())

    # -- feasibility -------------------------------------------------------

    def check_point(self, x: np.ndarray, tol: float = 1e-8) -> "PointReport":
        """Worst violation per row/block; feasible iff all <= tol."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_vars,):
            raise ContractViolation(
                f"point has shape {x.shape}, expected ({self.n_vars},)")
        bound_viol = 0.0
        for i in range(self.n_vars):
            bound_viol = max(bound_viol, self.lb[i] - x[i], x[i] - self.ub[i])
        rows = []
        for row in self.linear_rows:
            v = row.expr.evaluate(x)
            rows.append(max(row.lb - v, v - row.ub, 0.0))
        socs = []
        for blk in self.soc_blocks:
            vals = [e.evaluate(x) for e in blk.exprs]
            socs.append(max(math.hypot(*vals[1:]) - vals[0], 0.0))
        rsocs = []
        for blk in self.rsoc_blocks:
            vals = [e.evaluate(x) for e in blk.exprs]
            t1, t2, u = vals[0], vals[1], vals[2:]
            # degree-1 residual of the equivalent plain cone
            # ||(t1 - t2, sqrt(2) u)|| <= t1 + t2; same feasible set,
            # scales like the SOC residual
            lhs = math.hypot(t1 - t2, *(math.sqrt(2.0) * v for v in u))
            rsocs.append(max(lhs - (t1 + t2), 0.0))
        psds = []
        for blk in self.psd_blocks:
            lam_min = float(np.linalg.eigvalsh(blk.matrix(x))[0])
            psds.append(max(-lam_min, 0.0))
        worst = max([bound_viol] + rows + socs + rsocs + psds + [0.0])
        return PointReport(feasible=worst <= tol, worst_violation=worst,
                           bound_violation=bound_viol, linear=rows,
                           soc=socs, rsoc=rsocs, psd=psds, tol=tol)

    # -- debug dump --------------------------------------------------------

    def to_json_dict(self) -> dict:
        """Deterministic plain-data dump for golden-file comparison."""
        def expr_d(e: AffExpr):
            return {"terms": [[i, c] for i, c in e.terms], "const": e.const}

        return {
            "n_vars": self.n_vars,
            "lb": list(self.lb),
            "ub": list(self.ub),
            "linear_rows": [{"expr": expr_d(r.expr), "lb": r.lb, "ub": r.ub,
                             "label": r.label} for r in self.linear_rows],
            "soc_blocks": [{"exprs": [expr_d(e) for e in b.exprs],
                            "label": b.label} for b in self.soc_blocks],
            "rsoc_blocks": [{"exprs": [expr_d(e) for e in b.exprs],
                             "label": b.label} for b in self.rsoc_blocks],
            "psd_blocks": [{"dim": b.dim, "exprs": [expr_d(e) for e in b.exprs],
                            "label": b.label} for b in self.psd_blocks],
            "objective": {"coeffs": [[i, c] for i, c in
                                     sorted(self.objective.items())],
                          "const": self.objective_const},
        }

    def dump_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1, sort_keys=True)


@dataclass
class PointReport:
    feasible: bool
    worst_violation: float
    bound_violation: float
    linear: list[float]
    soc: list[float]
    rsoc: list[float]
    psd: list[float]
    tol: float
