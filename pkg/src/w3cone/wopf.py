"""Bus-injection OPF relaxations over the lifted voltage-product variables.

Variables: W_ii (squared magnitudes), (W_ij^re, W_ij^im) per connected bus
pair with the convention W_ij = U_i * conj(U_j) for i < j, generator
outputs, per-branch-side flows, and one cost epigraph variable per
generator. The base feasible set carries the pi-model flow definitions,
nodal balance, operating bounds, thermal and angle-difference limits, and
the quadratic-cost epigraphs. On top of it:

* PM mode adds the 2x2 principal-minor cone per pair,
* KIM mode additionally instantiates the 3x3 cone family on every triangle,
* SDP mode drops the pair cones and asserts the full Hermitian W matrix PSD
  through its real 2n x 2n embedding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .conic import AffExpr, ConicProgram, INF
from .kimcuts import KimCutParams, frobenius_row, kim_soc_row
from .netcase import NetworkCase, Triangle, branch_admittance, enumerate_triangles


class UnsupportedSizeError(ValueError):
    """Dense SDP requested beyond the configured bus-count limit."""


@dataclass
class WIndexMap:
    """IR variable indices for every model symbol."""
    bus_ids: tuple[int, ...]                       # external labels by index
    w_diag: list[int]                              # bus -> W_ii variable
    w_off: dict[tuple[int, int], tuple[int, int]]  # (i<j) -> (re, im)
    pg: dict[int, int]                             # gen id -> variable
    qg: dict[int, int]
    flow: dict[tuple[int, str], tuple[int, int]]   # (branch, side) -> (P, Q)
    cost_epi: dict[int, int]                       # gen id -> epigraph var


@dataclass(frozen=True)
class Relaxation:
    """Which relaxation to build: pm, kim (with angle samples), or sdp."""
    kind: str
    thetas: tuple[float, ...] = ()
    r: float = 1.0

    def __post_init__(self):
        if self.kind not in ("pm", "kim", "sdp"):
            raise ValueError(f"unknown relaxation kind {self.kind!r}")
        if self.kind == "kim" and len(self.thetas) == 0:
            raise ValueError("kim relaxation needs at least one theta")
        if self.r < 0:
            raise ValueError("r must be nonnegative")

    def describe(self) -> str:
        if self.kind == "kim":
            ths = ",".join(f"{t:.6g}" for t in self.thetas)
            return f"kim(theta=[{ths}], r={self.r:g})"
        return self.kind


def _branch_coeffs(br):
    """Real coefficients of the pi-model flow equations.

    from side: P = a1*W_ff - u*wr_ft + v*wi_ft ; Q = b1*W_ff - v*wr_ft - u*wi_ft
    to side:   P = g*W_tt - u2*wr_ft - v2*wi_ft ; Q = b2*W_tt - v2*wr_ft + u2*wi_ft
    with (wr_ft, wi_ft) oriented from->to.
    """
    y, sh_f, sh_t, _ = branch_admittance(br)
    g, b = y.real, y.imag
    bc2 = br.b_charge / 2.0
    tau, sg = br.tap, br.shift
    cs, sn = math.cos(sg), math.sin(sg)
    a1 = g / (tau * tau)
    b1 = -(b + bc2) / (tau * tau)
    u = (g * cs - b * sn) / tau
    v = -(g * sn + b * cs) / tau
    u2 = (g * cs + b * sn) / tau
    v2 = (g * sn - b * cs) / tau
    b2 = -(b + bc2)
    return a1, b1, u, v, g, b2, u2, v2


def build_base(case: NetworkCase, pm_cones: bool = True
               ) -> tuple[ConicProgram, WIndexMap]:
    """Base feasible set; with ``pm_cones`` the principal-minor cone is
    added for every connected pair (the PM relaxation)."""
    p = ConicProgram()
    n = case.n_bus

    w_diag = [p.add_variable(b.vmin ** 2, b.vmax ** 2) for b in case.buses]

    pairs: dict[tuple[int, int], tuple[int, int]] = {}
    for _, br in case.in_service_branches():
        i, j = sorted((br.from_bus, br.to_bus))
        if (i, j) not in pairs:
            vv = case.buses[i].vmax * case.buses[j].vmax
            # wr >= 0 is valid because angle limits are clamped inside +-90deg
            wr = p.add_variable(0.0, vv)
            wi = p.add_variable(-vv, vv)
            pairs[(i, j)] = (wr, wi)

    pg, qg, epi = {}, {}, {}
    for gid, g in case.in_service_gens():
        pg[gid] = p.add_variable(g.pmin, g.pmax)
        qg[gid] = p.add_variable(g.qmin, g.qmax)

    flow: dict[tuple[int, str], tuple[int, int]] = {}
    p_bal = [dict() for _ in range(n)]
    q_bal = [dict() for _ in range(n)]

    for bid, br in case.in_service_branches():
        f, t = br.from_bus, br.to_bus
        i, j = sorted((f, t))
        s = 1.0 if f == i else -1.0   # wi_ft = s * wi_stored
        wr, wi = pairs[(i, j)]
        a1, b1, u, v, g_, b2, u2, v2 = _branch_coeffs(br)

        pf = p.add_variable()
        qf = p.add_variable()
        pt = p.add_variable()
        qt = p.add_variable()
        flow[(bid, "from")] = (pf, qf)
        flow[(bid, "to")] = (pt, qt)

        p.add_linear(AffExpr.of({pf: 1.0, w_diag[f]: -a1, wr: u, wi: -v * s}),
                     0.0, 0.0, label=f"flow/p_fr/br{bid}")
        p.add_linear(AffExpr.of({qf: 1.0, w_diag[f]: -b1, wr: v, wi: u * s}),
                     0.0, 0.0, label=f"flow/q_fr/br{bid}")
        p.add_linear(AffExpr.of({pt: 1.0, w_diag[t]: -g_, wr: u2, wi: v2 * s}),
                     0.0, 0.0, label=f"flow/p_to/br{bid}")
        p.add_linear(AffExpr.of({qt: 1.0, w_diag[t]: -b2, wr: v2, wi: -u2 * s}),
                     0.0, 0.0, label=f"flow/q_to/br{bid}")

        for bus, pv, qv in ((f, pf, qf), (t, pt, qt)):
            p_bal[bus][pv] = p_bal[bus].get(pv, 0.0) + 1.0
            q_bal[bus][qv] = q_bal[bus].get(qv, 0.0) + 1.0

        if br.rate_a > 0:
            for side, (pv, qv) in (("fr", (pf, qf)), ("to", (pt, qt))):
                p.add_soc([AffExpr.constant(br.rate_a),
                           AffExpr.var(pv), AffExpr.var(qv)],
                          label=f"thermal/{side}/br{bid}")

        # angle-difference rows in the branch orientation
        p.add_linear(AffExpr.of({wr: math.tan(br.angmax), wi: -s}), 0.0, INF,
                     label=f"angle/max/br{bid}")
        p.add_linear(AffExpr.of({wi: s, wr: -math.tan(br.angmin)}), 0.0, INF,
                     label=f"angle/min/br{bid}")

    for k, bus in enumerate(case.buses):
        prow = dict(p_bal[k])
        prow[w_diag[k]] = prow.get(w_diag[k], 0.0) + bus.gs
        qrow = dict(q_bal[k])
        qrow[w_diag[k]] = qrow.get(w_diag[k], 0.0) - bus.bs
        for gid, g in case.in_service_gens():
            if g.bus == k:
                prow[pg[gid]] = prow.get(pg[gid], 0.0) - 1.0
                qrow[qg[gid]] = qrow.get(qg[gid], 0.0) - 1.0
        p.add_linear(AffExpr.of(prow), -bus.pd, -bus.pd,
                     label=f"balance/p/bus{bus.id}")
        p.add_linear(AffExpr.of(qrow), -bus.qd, -bus.qd,
                     label=f"balance/q/bus{bus.id}")

    if pm_cones:
        for (i, j), (wr, wi) in sorted(pairs.items()):
            ei, ej = case.buses[i].id, case.buses[j].id
            p.add_rsoc([AffExpr.var(w_diag[i], 0.5), AffExpr.var(w_diag[j]),
                        AffExpr.var(wr), AffExpr.var(wi)],
                       label=f"pm/pair({ei},{ej})")

    obj = {}
    for gid, g in case.in_service_gens():
        c2, c1, c0 = g.cost_pu(case.base_mva)
        e = p.add_variable()
        epi[gid] = e
        if c2 > 0:
            p.add_rsoc([AffExpr.of({e: 1.0, pg[gid]: -c1}, -c0),
                        AffExpr.constant(0.5),
                        AffExpr.var(pg[gid], math.sqrt(c2))],
                       label=f"cost/gen{gid}")
        else:
            p.add_linear(AffExpr.of({e: 1.0, pg[gid]: -c1}), c0, INF,
                         label=f"cost/gen{gid}")
        obj[e] = 1.0
    p.set_objective(obj)

    m = WIndexMap(bus_ids=tuple(b.id for b in case.buses), w_diag=w_diag,
                  w_off=pairs, pg=pg, qg=qg, flow=flow, cost_epi=epi)
    return p, m


# symbol -> (which pair / diagonal of the triangle)
_SYM_SLOT = {
    "w11": ("diag", 0), "w22": ("diag", 1), "w33": ("diag", 2),
    "w12re": ("re", 0, 1), "w12im": ("im", 0, 1),
    "w13re": ("re", 0, 2), "w13im": ("im", 0, 2),
    "w23re": ("re", 1, 2), "w23im": ("im", 1, 2),
}


def _bind(sym_expr, tri: Triangle, m: WIndexMap) -> AffExpr:
    """Bind a 9-symbol expression to IR variables of one triangle."""
    coeffs: dict[int, float] = {}
    for sym, c in sym_expr.coeffs.items():
        slot = _SYM_SLOT[sym]
        if slot[0] == "diag":
            idx = m.w_diag[tri.buses[slot[1]]]
        else:
            pair = (tri.buses[slot[1]], tri.buses[slot[2]])
            if pair not in m.w_off:
                raise KeyError(f"pair {pair} has no lifted variables")
            idx = m.w_off[pair][0 if slot[0] == "re" else 1]
        coeffs[idx] = coeffs.get(idx, 0.0) + c
    return AffExpr.of(coeffs)


def attach_kim(p: ConicProgram, m: WIndexMap, triangles: list[Triangle],
               thetas: list[float], r: float = 1.0) -> ConicProgram:
    """Instantiate the 3x3 cone family on each triangle: one cone and one
    budget-nonnegativity row per (triangle, partition, theta)."""
    seen = []
    for th in thetas:
        if th not in seen:
            seen.append(th)
    for tri in triangles:
        ei, ej, ek = (m.bus_ids[b] for b in tri.buses)
        for part in (1, 2, 3):
            for th in seen:
                params = KimCutParams(partition=part, r=r, theta=th)
                soc = kim_soc_row(params)
                frob = frobenius_row(params)
                tag = f"tri({ei},{ej},{ek})/part={part}/theta={th:.3f}"
                alpha = _bind(soc.budget[0], tri, m)
                budget = _bind(soc.budget[1], tri, m)
                u_exprs = [_bind(e, tri, m) for e in soc.u]
                p.add_rsoc([_half(alpha), budget] + u_exprs,
                           label=f"kim/{tag}")
                p.add_linear(_bind(frob.budget[0], tri, m), 0.0, INF,
                             label=f"frob/{tag}")
    return p


def _half(e: AffExpr) -> AffExpr:
    return AffExpr.of({i: 0.5 * c for i, c in e.terms}, 0.5 * e.const)


def build_sdp(case: NetworkCase, dense_limit: int = 30
              ) -> tuple[ConicProgram, WIndexMap]:
    """Base set plus the full n x n Hermitian PSD requirement via the real
    [[Wre, -Wim], [Wim, Wre]] embedding; pair cones omitted (implied)."""
    n = case.n_bus
    if n > dense_limit:
        raise UnsupportedSizeError(
            f"{n} buses exceeds the dense SDP limit of {dense_limit}")
    p, m = build_base(case, pm_cones=False)

    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in m.w_off:
                vv = case.buses[i].vmax * case.buses[j].vmax
                # fill-in pair: no angle constraint, either sign possible
                wr = p.add_variable(-vv, vv)
                wi = p.add_variable(-vv, vv)
                m.w_off[(i, j)] = (wr, wi)

    def wre(a: int, b: int) -> AffExpr:
        if a == b:
            return AffExpr.var(m.w_diag[a])
        i, j = min(a, b), max(a, b)
        return AffExpr.var(m.w_off[(i, j)][0])

    def wim(a: int, b: int) -> AffExpr:
        # antisymmetric imaginary part: Wim[a, b] = -Wim[b, a], zero diag
        if a == b:
            return AffExpr.constant(0.0)
        i, j = min(a, b), max(a, b)
        return AffExpr.var(m.w_off[(i, j)][1], 1.0 if a == i else -1.0)

    exprs = []
    d = 2 * n
    for row in range(d):
        for col in range(row + 1):
            if row < n:
                exprs.append(wre(row, col))
            elif col < n:
                exprs.append(wim(row - n, col))
            else:
                exprs.append(wre(row - n, col - n))
    p.add_psd(d, exprs, label="psd/W")
    return p, m


def build(case: NetworkCase, relaxation: Relaxation, dense_limit: int = 30
          ) -> tuple[ConicProgram, WIndexMap]:
    """Build the requested relaxation of a case."""
    if relaxation.kind == "sdp":
        return build_sdp(case, dense_limit=dense_limit)
    p, m = build_base(case)
    if relaxation.kind == "kim":
        attach_kim(p, m, enumerate_triangles(case),
                   list(relaxation.thetas), relaxation.r)
    return p, m
