"""Constraint families for a 3x3 Hermitian PSD block in the lifted
voltage-product space.

Three families are generated over the nine real components
(w11, w22, w33, w12re, w12im, w13re, w13im, w23re, w23im), with the
convention W_pq = U_p * conj(U_q) for p < q:

* the three 2x2 principal-minor cones |W_pq|^2 <= W_pp * W_qq,
* a (partition, r, theta)-parameterized cone family that couples all three
  off-diagonal entries and is tight on every rank-1 block,
* the companion linear rows asserting nonnegativity of the cone budget.

Every symbolic row is cross-checked against ``eval_kim``, a direct complex
evaluator of the underlying inner-product inequality, so a transcription
error in either representation cannot survive the test suite.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

SYMBOLS = ("w11", "w22", "w33",
           "w12re", "w12im", "w13re", "w13im", "w23re", "w23im")


@dataclass(frozen=True)
class HermitianBlock3:
    """Candidate values of a 3x3 Hermitian block; PSD-ness is what the
    generated cuts test, so no intrinsic invariant is enforced."""
    w11: float
    w22: float
    w33: float
    w12re: float
    w12im: float
    w13re: float
    w13im: float
    w23re: float
    w23im: float

    @classmethod
    def from_voltages(cls, u: np.ndarray) -> "HermitianBlock3":
        """Rank-1 block W = u u^H from a complex voltage triple."""
        w12 = u[0] * np.conj(u[1])
        w13 = u[0] * np.conj(u[2])
        w23 = u[1] * np.conj(u[2])
        return cls(abs(u[0]) ** 2, abs(u[1]) ** 2, abs(u[2]) ** 2,
                   w12.real, w12.imag, w13.real, w13.imag,
                   w23.real, w23.imag)

    @classmethod
    def from_matrix(cls, w: np.ndarray) -> "HermitianBlock3":
        return cls(w[0, 0].real, w[1, 1].real, w[2, 2].real,
                   w[0, 1].real, w[0, 1].imag,
                   w[0, 2].real, w[0, 2].imag,
                   w[1, 2].real, w[1, 2].imag)

    def to_matrix(self) -> np.ndarray:
        w12 = complex(self.w12re, self.w12im)
        w13 = complex(self.w13re, self.w13im)
        w23 = complex(self.w23re, self.w23im)
        return np.array([[self.w11, w12, w13],
                         [np.conj(w12), self.w22, w23],
                         [np.conj(w13), np.conj(w23), self.w33]])

    def value(self, symbol: str) -> float:
        return getattr(self, symbol)


@dataclass(frozen=True)
class KimCutParams:
    """One member of the parameterized family: which diagonal entry plays
    the scalar partition block, plus the direction (r, theta)."""
    partition: int     # 1, 2 or 3
    r: float           # >= 0
    theta: float       # radians

    def __post_init__(self):
        if self.partition not in (1, 2, 3):
            raise ValueError(f"partition must be 1, 2 or 3, got {self.partition}")
        if self.r < 0:
            raise ValueError(f"r must be nonnegative, got {self.r}")


class SymExpr:
    """Sparse linear expression over the 9-symbol alphabet."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict[str, float] | None = None):
        clean = {}
        for sym, c in (coeffs or {}).items():
            if sym not in SYMBOLS:
                raise ValueError(f"unknown symbol {sym!r}")
            if c != 0.0:
                clean[sym] = float(c)
        self.coeffs = clean

    def evaluate(self, block: HermitianBlock3) -> float:
        return sum(c * block.value(sym) for sym, c in self.coeffs.items())

    def __eq__(self, other):
        return isinstance(other, SymExpr) and self.coeffs == other.coeffs

    def __repr__(self):
        terms = " + ".join(f"{c:g}*{s}" for s, c in sorted(self.coeffs.items()))
        return f"SymExpr({terms or '0'})"


@dataclass(frozen=True)
class CutRow:
    """Symbolic carrier for one constraint over a HermitianBlock3.

    kind="soc": u1^2 + u2^2 <= budget[0] * budget[1], with budget[0] the
    scalar partition entry and budget[1] the linear budget expression.
    kind="linear": single expression required >= 0.
    """
    kind: str                      # "soc" | "linear"
    u: tuple[SymExpr, ...]         # () for linear rows
    budget: tuple[SymExpr, ...]    # (alpha, frob) for soc; (expr,) for linear
    label: str

    def evaluate(self, block: HermitianBlock3) -> tuple[float, float]:
        """(lhs, rhs) for soc rows; (value, 0.0) for linear rows."""
        if self.kind == "soc":
            lhs = sum(e.evaluate(block) ** 2 for e in self.u)
            rhs = self.budget[0].evaluate(block) * self.budget[1].evaluate(block)
            return lhs, rhs
        return self.budget[0].evaluate(block), 0.0


# (alpha symbol, first off-diagonal of the partition column, second one,
# budget diagonal pair, budget cross term) per partition
_PAIRS = {1: ("w12re", "w12im"), 2: ("w13re", "w13im"), 3: ("w23re", "w23im")}


def pm_soc_rows() -> tuple[CutRow, CutRow, CutRow]:
    """The three principal-minor cones |W_pq|^2 <= W_pp * W_qq, emitted as
    rotated-SOC-compatible (u, budget-pair) rows."""
    rows = ((("w12re", "w12im"), "w11", "w22", "pm/12"),
            (("w13re", "w13im"), "w11", "w33", "pm/13"),
            (("w23re", "w23im"), "w22", "w33", "pm/23"))
    out = []
    for (ure, uim), d1, d2, label in rows:
        out.append(CutRow(
            kind="soc",
            u=(SymExpr({ure: 1.0}), SymExpr({uim: 1.0})),
            budget=(SymExpr({d1: 1.0}), SymExpr({d2: 1.0})),
            label=label))
    return tuple(out)


def _family_terms(p: KimCutParams):
    """u1, u2 and budget coefficients for each partition choice.

    The sign patterns follow from expanding |c^H a|^2 <= alpha * (C . A)
    with c = (1, r e^{j theta}) and the partition column a / block A read
    off the 3x3 Hermitian matrix; ``eval_kim`` recomputes the same two
    sides directly in complex arithmetic.
    """
    r, th = p.r, p.theta
    rc, rs = r * math.cos(th), r * math.sin(th)
    if p.partition == 1:
        u1 = SymExpr({"w12re": 1.0, "w13re": rc, "w13im": -rs})
        u2 = SymExpr({"w12im": 1.0, "w13im": rc, "w13re": rs})
        alpha = SymExpr({"w11": 1.0})
        frob = SymExpr({"w22": 1.0, "w33": r * r,
                        "w23re": 2 * rc, "w23im": -2 * rs})
    elif p.partition == 2:
        u1 = SymExpr({"w12re": 1.0, "w23re": rc, "w23im": -rs})
        u2 = SymExpr({"w12im": 1.0, "w23im": -rc, "w23re": -rs})
        alpha = SymExpr({"w22": 1.0})
        frob = SymExpr({"w11": 1.0, "w33": r * r,
                        "w13re": 2 * rc, "w13im": -2 * rs})
    else:
        u1 = SymExpr({"w13re": 1.0, "w23re": rc, "w23im": rs})
        u2 = SymExpr({"w13im": 1.0, "w23im": rc, "w23re": -rs})
        alpha = SymExpr({"w33": 1.0})
        frob = SymExpr({"w11": 1.0, "w22": r * r,
                        "w12re": 2 * rc, "w12im": -2 * rs})
    return u1, u2, alpha, frob


def kim_soc_row(p: KimCutParams) -> CutRow:
    """The parameterized cone for one (partition, r, theta) choice."""
    u1, u2, alpha, frob = _family_terms(p)
    label = f"kim/part={p.partition}/r={p.r:g}/theta={p.theta:.3f}"
    return CutRow(kind="soc", u=(u1, u2), budget=(alpha, frob), label=label)


def frobenius_row(p: KimCutParams) -> CutRow:
    """Nonnegativity of the cone budget (the inner product of two PSD
    matrices), required alongside each parameterized cone."""
    _, _, _, frob = _family_terms(p)
    label = f"frob/part={p.partition}/r={p.r:g}/theta={p.theta:.3f}"
    return CutRow(kind="linear", u=(), budget=(frob,), label=label)


def eval_kim(block: HermitianBlock3, p: KimCutParams) -> tuple[float, float]:
    """Direct numeric evaluation of |c^H a|^2 and alpha * (C . A) via the
    complex partition, independent of the symbolic rows."""
    w = block.to_matrix()
    order = {1: (0, 1, 2), 2: (1, 0, 2), 3: (2, 0, 1)}[p.partition]
    ai, bi, ci = order
    alpha = w[ai, ai].real
    a_col = np.array([w[bi, ai], w[ci, ai]])
    a_blk = np.array([[w[bi, bi], w[bi, ci]], [w[ci, bi], w[ci, ci]]])
    c = np.array([1.0, p.r * cmath.exp(1j * p.theta)])
    lhs = abs(np.vdot(c, a_col)) ** 2
    big_c = np.outer(c, c.conj())
    rhs = alpha * (big_c.conj() * a_blk).sum().real
    return float(lhs), float(rhs)
