"""Conic solver backends.

All backends consume the same lowered form: minimize q'x subject to
A x + s = b with s in a product of zero / nonnegative / second-order /
PSD-triangle cones, assembled in that order. Rotated cones are rewritten
as plain second-order cones; two-sided rows become one or two one-sided
rows; PSD blocks are scaled-vectorized per the backend's convention.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .conic import (AffExpr, ConicProgram, Solution, SolverConfig,
                    INFEASIBLE, ITERATION_LIMIT, NUMERICAL_FAILURE,
                    OPTIMAL, UNBOUNDED)

SQRT2 = math.sqrt(2.0)


class CapabilityError(RuntimeError):
    """The selected backend cannot handle a cone type in the program."""


class NoBackendError(RuntimeError):
    """No usable solver backend is importable."""


@dataclass
class _Lowered:
    rows: list            # list of (coeff dict, const) with s = const - a.x
    n_eq: int
    n_nonneg: int
    soc_dims: list[int]
    psd_dims: list[int]
    psd_row_start: int


def _neg_expr(e: AffExpr):
    """Row of A and entry of b such that s = b - A x equals e(x)."""
    return ({i: -c for i, c in e.terms}, e.const)


def _lower(program: ConicProgram) -> tuple[_Lowered, np.ndarray]:
    rows: list = []
    # zero cone: equality rows
    eq_rows = []
    ineq_rows = []
    for row in program.linear_rows:
        if row.lb == row.ub:
            coeffs = {i: c for i, c in row.expr.terms}
            eq_rows.append((coeffs, row.lb - row.expr.const))
        else:
            if row.ub != math.inf:
                # s = ub - e(x) >= 0
                coeffs = {i: c for i, c in row.expr.terms}
                ineq_rows.append((coeffs, row.ub - row.expr.const))
            if row.lb != -math.inf:
                # s = e(x) - lb >= 0
                coeffs = {i: -c for i, c in row.expr.terms}
                ineq_rows.append((coeffs, row.expr.const - row.lb))
    for i in range(program.n_vars):
        if program.ub[i] != math.inf:
            ineq_rows.append(({i: 1.0}, program.ub[i]))
        if program.lb[i] != -math.inf:
            ineq_rows.append(({i: -1.0}, -program.lb[i]))

    rows.extend(eq_rows)
    rows.extend(ineq_rows)

    soc_dims = []
    for blk in program.soc_blocks:
        for e in blk.exprs:
            rows.append(_neg_expr(e))
        soc_dims.append(len(blk.exprs))
    for blk in program.rsoc_blocks:
        # ||u||^2 <= 2 t1 t2  <=>  ||(t1 - t2, sqrt(2) u)|| <= t1 + t2
        t1, t2 = blk.exprs[0], blk.exprs[1]
        plus = _combine(t1, t2, 1.0)
        minus = _combine(t1, t2, -1.0)
        rows.append(_neg_expr(plus))
        rows.append(_neg_expr(minus))
        for e in blk.exprs[2:]:
            rows.append(_neg_expr(_scaled(e, SQRT2)))
        soc_dims.append(len(blk.exprs))

    psd_row_start = len(rows)
    psd_dims = [blk.dim for blk in program.psd_blocks]

    lowered = _Lowered(rows=rows, n_eq=len(eq_rows), n_nonneg=len(ineq_rows),
                       soc_dims=soc_dims, psd_dims=psd_dims,
                       psd_row_start=psd_row_start)
    q = np.zeros(program.n_vars)
    for i, c in program.objective.items():
        q[i] = c
    return lowered, q


def _combine(a: AffExpr, b: AffExpr, sign: float) -> AffExpr:
    coeffs: dict[int, float] = {}
    for i, c in a.terms:
        coeffs[i] = coeffs.get(i, 0.0) + c
    for i, c in b.terms:
        coeffs[i] = coeffs.get(i, 0.0) + sign * c
    return AffExpr.of(coeffs, a.const + sign * b.const)


def _scaled(e: AffExpr, s: float) -> AffExpr:
    return AffExpr.of({i: s * c for i, c in e.terms}, s * e.const)


def _build_matrix(rows, n_vars) -> tuple[sp.csc_matrix, np.ndarray]:
    data, ri, ci = [], [], []
    b = np.zeros(len(rows))
    for r, (coeffs, const) in enumerate(rows):
        b[r] = const
        for j, v in coeffs.items():
            ri.append(r)
            ci.append(j)
            data.append(v)
    A = sp.csc_matrix((data, (ri, ci)), shape=(len(rows), n_vars))
    return A, b


def _psd_rows_lower_rowmajor(blk) -> list:
    """PSD block rows in lower-triangle row-major svec order (off-diagonal
    scaled by sqrt(2)); matches Clarabel's triangle convention."""
    rows = []
    it = iter(blk.exprs)
    for r in range(blk.dim):
        for c in range(r + 1):
            e = next(it)
            rows.append(_neg_expr(e if r == c else _scaled(e, SQRT2)))
    return rows


def _psd_rows_lower_colmajor(blk) -> list:
    """SCS convention: lower triangle column-major, off-diagonal sqrt(2)."""
    lut = {}
    it = iter(blk.exprs)
    for r in range(blk.dim):
        for c in range(r + 1):
            lut[(r, c)] = next(it)
    rows = []
    for c in range(blk.dim):
        for r in range(c, blk.dim):
            e = lut[(r, c)]
            rows.append(_neg_expr(e if r == c else _scaled(e, SQRT2)))
    return rows


class ClarabelBackend:
    """Interior-point backend; supports SOC and PSD cones."""

    name = "clarabel"
    supports_psd = True

    def solve(self, program: ConicProgram, config: SolverConfig | None = None
              ) -> Solution:
        import clarabel

        config = config or SolverConfig()
        lowered, q = _lower(program)
        rows = list(lowered.rows)
        cones = []
        if lowered.n_eq:
            cones.append(clarabel.ZeroConeT(lowered.n_eq))
        if lowered.n_nonneg:
            cones.append(clarabel.NonnegativeConeT(lowered.n_nonneg))
        for d in lowered.soc_dims:
            cones.append(clarabel.SecondOrderConeT(d))
        for blk in program.psd_blocks:
            rows.extend(_psd_rows_lower_rowmajor(blk))
            cones.append(clarabel.PSDTriangleConeT(blk.dim))

        A, b = _build_matrix(rows, program.n_vars)
        P = sp.csc_matrix((program.n_vars, program.n_vars))
        settings = clarabel.DefaultSettings()
        settings.verbose = config.verbose
        settings.max_iter = config.max_iters
        settings.tol_feas = config.tol
        settings.tol_gap_abs = config.tol
        settings.tol_gap_rel = config.tol
        solver = clarabel.DefaultSolver(P, q, A, b, cones, settings)
        t0 = time.perf_counter()
        res = solver.solve()
        elapsed = time.perf_counter() - t0

        status_name = str(res.status)
        x = np.array(res.x) if res.x is not None else None
        status = self._map_status(status_name, program, x)
        obj = (program.objective_value(x)
               if x is not None and status == OPTIMAL else float("nan"))
        return Solution(status=status, objective=obj, x=x,
                        solve_time_s=elapsed, iterations=int(res.iterations),
                        backend=self.name)

    @staticmethod
    def _map_status(name: str, program: ConicProgram, x) -> str:
        if "PrimalInfeasible" in name:
            return INFEASIBLE
        if "DualInfeasible" in name:
            return UNBOUNDED
        if name.endswith("Solved"):
            # AlmostSolved: accept the point only if it actually satisfies
            # the program to the documented solve tolerance.
            if name == "Solved":
                return OPTIMAL
            if x is not None and program.check_point(x, tol=1e-6).feasible:
                return OPTIMAL
            return NUMERICAL_FAILURE
        if "MaxIterations" in name:
            return ITERATION_LIMIT
        return NUMERICAL_FAILURE


class ScsBackend:
    """First-order (ADMM) backend; slower but PSD-capable; useful as a
    cross-check of the interior-point results."""

    name = "scs"
    supports_psd = True

    def solve(self, program: ConicProgram, config: SolverConfig | None = None
              ) -> Solution:
        import scs

        config = config or SolverConfig()
        lowered, q = _lower(program)
        rows = list(lowered.rows)
        cone: dict = {}
        if lowered.n_eq:
            cone["z"] = lowered.n_eq
        if lowered.n_nonneg:
            cone["l"] = lowered.n_nonneg
        if lowered.soc_dims:
            cone["q"] = lowered.soc_dims
        if program.psd_blocks:
            cone["s"] = [blk.dim for blk in program.psd_blocks]
            for blk in program.psd_blocks:
                rows.extend(_psd_rows_lower_colmajor(blk))

        A, b = _build_matrix(rows, program.n_vars)
        t0 = time.perf_counter()
        solver = scs.SCS(dict(A=A, b=b, c=q), cone,
                         eps_abs=max(config.tol, 1e-9),
                         eps_rel=max(config.tol, 1e-9),
                         max_iters=max(config.max_iters, 50000),
                         verbose=config.verbose)
        out = solver.solve()
        elapsed = time.perf_counter() - t0
        info = out["info"]
        raw = info["status"]
        x = np.asarray(out["x"]) if out.get("x") is not None else None
        if raw == "solved":
            status = OPTIMAL
        elif "infeasible" in raw:
            status = INFEASIBLE
        elif "unbounded" in raw:
            status = UNBOUNDED
        elif "inaccurate" in raw:
            status = (OPTIMAL if x is not None
                      and program.check_point(x, tol=1e-6).feasible
                      else ITERATION_LIMIT)
        else:
            status = NUMERICAL_FAILURE
        obj = (program.objective_value(x)
               if x is not None and status == OPTIMAL else float("nan"))
        return Solution(status=status, objective=obj, x=x,
                        solve_time_s=elapsed, iterations=int(info["iter"]),
                        backend=self.name)


_REGISTRY: dict[str, object] = {}


def register_backend(name: str, factory) -> None:
    _REGISTRY[name] = factory


def available_backends() -> list[str]:
    out = []
    for name in _REGISTRY:
        try:
            get_backend(name)
            out.append(name)
        except NoBackendError:
            pass
    return out


def get_backend(name: str | None = None):
    """Instantiate a backend by name, or the first importable one in
    preference order (clarabel, then scs)."""
    if name is not None:
        if name not in _REGISTRY:
            raise NoBackendError(f"unknown backend {name!r}; "
                                 f"registered: {sorted(_REGISTRY)}")
        try:
            return _REGISTRY[name]()
        except ImportError as e:
            raise NoBackendError(f"backend {name!r} not importable: {e}") from e
    for candidate in ("clarabel", "scs"):
        try:
            return _REGISTRY[candidate]()
        except (ImportError, NoBackendError):
            continue
    raise NoBackendError("no conic solver backend available")


def _clarabel_factory():
    import clarabel  # noqa: F401  (probe import)
    return ClarabelBackend()


def _scs_factory():
    import scs  # noqa: F401
    return ScsBackend()


register_backend("clarabel", _clarabel_factory)
register_backend("scs", _scs_factory)


def solve(program: ConicProgram, config: SolverConfig | None = None,
          backend: str | None = None) -> Solution:
    """Solve a program with the selected (or default) backend.

    Raises CapabilityError when the program has PSD blocks but the backend
    cannot handle them.
    """
    if backend is None or isinstance(backend, str):
        be = get_backend(backend)
    else:
        be = backend
    if program.psd_blocks and not getattr(be, "supports_psd", False):
        raise CapabilityError(
            f"backend {be.name!r} has no PSD cone support")
    return be.solve(program, config)
