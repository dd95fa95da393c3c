"""Post-solve analysis: cycle-law residuals, rank-1 certification,
constraint activity, and optimality-gap arithmetic.

The cycle residuals come from the defining complex identity
conj(W_pk) * W_qk = W_kk * conj(W_pq) for each apex k of a triangle; on any
rank-1 block all six real residuals vanish, which together with tight
principal minors certifies a physically meaningful voltage profile.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .conic import ConicProgram, Solution
from .kimcuts import HermitianBlock3
from .netcase import Triangle
from .wopf import WIndexMap


def kvl_residuals(block: HermitianBlock3) -> tuple[float, ...]:
    """Six real residuals (re, im per apex 1, 2, 3) of the lifted cycle law."""
    w12 = complex(block.w12re, block.w12im)
    w13 = complex(block.w13re, block.w13im)
    w23 = complex(block.w23re, block.w23im)
    # apex k with remaining pair (p, q): conj(W_pk) W_qk - W_kk conj(W_pq)
    r1 = w12 * w13.conjugate() - block.w11 * w23.conjugate()
    r2 = w12.conjugate() * w23.conjugate() - block.w22 * w13.conjugate()
    r3 = w13.conjugate() * w23 - block.w33 * w12.conjugate()
    return (r1.real, r1.imag, r2.real, r2.imag, r3.real, r3.imag)


def pm_residuals(block: HermitianBlock3) -> tuple[float, float, float]:
    """W_ii * W_jj - |W_ij|^2 per pair; nonnegative on feasible points,
    zero when the principal-minor cone is tight."""
    return (block.w11 * block.w22 - block.w12re ** 2 - block.w12im ** 2,
            block.w11 * block.w33 - block.w13re ** 2 - block.w13im ** 2,
            block.w22 * block.w33 - block.w23re ** 2 - block.w23im ** 2)


def rank1_check(block: HermitianBlock3, tol: float = 1e-5
                ) -> tuple[bool, float]:
    """True iff all principal minors are tight and all cycle residuals
    vanish within tol; also returns the worst absolute residual."""
    worst = max(abs(v) for v in pm_residuals(block))
    worst = max(worst, max(abs(v) for v in kvl_residuals(block)))
    return worst <= tol, worst


def reconstruct_voltages(block: HermitianBlock3) -> np.ndarray:
    """Voltage triple consistent with a rank-1 block, anchoring the first
    bus at angle zero (the block is gauge invariant)."""
    mags = [math.sqrt(max(v, 0.0)) for v in (block.w11, block.w22, block.w33)]
    # theta_p - theta_q = atan2(Wpq_im, Wpq_re)
    th1 = 0.0
    th2 = th1 - math.atan2(block.w12im, block.w12re)
    th3 = th1 - math.atan2(block.w13im, block.w13re)
    return np.array([mags[0] * cmath.exp(1j * th1),
                     mags[1] * cmath.exp(1j * th2),
                     mags[2] * cmath.exp(1j * th3)])


def gap_percent(relax_obj: float, reference_obj: float) -> float:
    """100 * (reference - relaxation) / reference."""
    if reference_obj <= 0:
        raise ValueError(f"reference objective must be positive, "
                         f"got {reference_obj}")
    return 100.0 * (reference_obj - relax_obj) / reference_obj


@dataclass
class BlockActivity:
    kind: str      # "soc" | "rsoc" | "linear"
    index: int
    label: str
    slack: float
    active: bool


def activity_report(sol: Solution, p: ConicProgram, tol: float = 1e-5
                    ) -> list[BlockActivity]:
    """Slack of every labeled cone and one-sided linear row; a block is
    active when its slack is within tol of zero."""
    if sol.x is None:
        raise ValueError("activity report needs a solution point")
    x = sol.x
    out = []
    for idx, blk in enumerate(p.soc_blocks):
        vals = [e.evaluate(x) for e in blk.exprs]
        slack = vals[0] - math.hypot(*vals[1:])
        out.append(BlockActivity("soc", idx, blk.label, slack, slack <= tol))
    for idx, blk in enumerate(p.rsoc_blocks):
        vals = [e.evaluate(x) for e in blk.exprs]
        slack = 2.0 * vals[0] * vals[1] - sum(v * v for v in vals[2:])
        out.append(BlockActivity("rsoc", idx, blk.label, slack, slack <= tol))
    for idx, row in enumerate(p.linear_rows):
        if row.lb == row.ub or not row.label:
            continue
        v = row.expr.evaluate(x)
        slack = min(v - row.lb if row.lb != -math.inf else math.inf,
                    row.ub - v if row.ub != math.inf else math.inf)
        out.append(BlockActivity("linear", idx, row.label, slack, slack <= tol))
    return out


def extract_block(x: np.ndarray, m: WIndexMap, tri: Triangle) -> HermitianBlock3:
    """The 3x3 lifted block of one triangle from a solution vector."""
    i, j, k = tri.buses
    re12, im12 = m.w_off[(i, j)]
    re13, im13 = m.w_off[(i, k)]
    re23, im23 = m.w_off[(j, k)]
    return HermitianBlock3(
        w11=float(x[m.w_diag[i]]), w22=float(x[m.w_diag[j]]),
        w33=float(x[m.w_diag[k]]),
        w12re=float(x[re12]), w12im=float(x[im12]),
        w13re=float(x[re13]), w13im=float(x[im13]),
        w23re=float(x[re23]), w23im=float(x[im23]))


@dataclass
class TriangleDiagnostics:
    triangle: Triangle
    bus_ids: tuple[int, int, int]
    kvl_residuals: tuple[float, ...]
    pm_residuals: tuple[float, float, float]
    kim_slacks: dict[str, float]
    rank1_certified: bool
    worst_residual: float

    def to_dict(self) -> dict:
        return {
            "buses": list(self.bus_ids),
            "kvl_residuals": list(self.kvl_residuals),
            "pm_residuals": list(self.pm_residuals),
            "kim_slacks": dict(sorted(self.kim_slacks.items())),
            "rank1_certified": self.rank1_certified,
            "worst_residual": self.worst_residual,
        }


def triangle_diagnostics(sol: Solution, p: ConicProgram, m: WIndexMap,
                         triangles: list[Triangle], tol: float = 1e-5
                         ) -> list[TriangleDiagnostics]:
    """Per-triangle residuals plus the slack of any attached cuts."""
    if sol.x is None:
        raise ValueError("triangle diagnostics need a solution point")
    activity = activity_report(sol, p, tol)
    out = []
    for tri in triangles:
        ids = tuple(m.bus_ids[b] for b in tri.buses)
        tag = f"tri({ids[0]},{ids[1]},{ids[2]})"
        block = extract_block(sol.x, m, tri)
        certified, worst = rank1_check(block, tol)
        slacks = {a.label: a.slack for a in activity
                  if tag in a.label and a.label.startswith(("kim/", "frob/"))}
        out.append(TriangleDiagnostics(
            triangle=tri, bus_ids=ids,
            kvl_residuals=kvl_residuals(block),
            pm_residuals=pm_residuals(block),
            kim_slacks=slacks,
            rank1_certified=certified,
            worst_residual=worst))
    return out
