"""Cycle-law residuals, rank-1 certification, gaps, and activity reports."""

import math

import numpy as np
import pytest

import w3cone
from w3cone import diagnostics as dg
from w3cone.backends import solve
from w3cone.conic import AffExpr, ConicProgram, OPTIMAL
from w3cone.kimcuts import HermitianBlock3, KimCutParams, kim_soc_row

UNIFORM = HermitianBlock3(1, 1, 1, 1, 0, 1, 0, 1, 0)
IDENTITY = HermitianBlock3(1, 1, 1, 0, 0, 0, 0, 0, 0)


def test_kvl_zero_on_uniform():
    assert dg.kvl_residuals(UNIFORM) == (0, 0, 0, 0, 0, 0)


def test_kvl_zero_on_random_rank1(rng):
    for _ in range(1000):
        u = rng.normal(size=3) + 1j * rng.normal(size=3)
        res = dg.kvl_residuals(HermitianBlock3.from_voltages(u))
        assert max(abs(v) for v in res) <= 1e-12 * (1 + np.abs(u).max() ** 4)


def test_kvl_apex3_example():
    blk = HermitianBlock3(1, 1, 1, 1, 0, 0, 0, 0, 0)
    res = dg.kvl_residuals(blk)
    assert res[4] == pytest.approx(-1.0)     # apex-3 real component


def test_identity_combination_matches_cut_residual(rng):
    # algebraic identity: the theta=0, r=1 cut residual on partition 3
    # decomposes into the two principal-minor residuals plus twice the
    # apex-3 real cycle residual, for arbitrary Hermitian blocks
    row = kim_soc_row(KimCutParams(3, 1.0, 0.0))
    for _ in range(500):
        vals = rng.normal(size=9)
        blk = HermitianBlock3(*vals)
        lhs, rhs = row.evaluate(blk)
        pm = dg.pm_residuals(blk)
        kvl = dg.kvl_residuals(blk)
        combo = -pm[1] - pm[2] + 2 * kvl[4]
        assert lhs - rhs == pytest.approx(combo, abs=1e-9 * (1 + abs(rhs)))


def test_rank1_check():
    assert dg.rank1_check(UNIFORM, tol=1e-9)[0]
    ok, worst = dg.rank1_check(IDENTITY, tol=1e-9)
    assert not ok and worst == pytest.approx(1.0)


def test_reconstruction_oracle(rng):
    for _ in range(200):
        u = rng.normal(size=3) + 1j * rng.normal(size=3)
        u *= np.exp(-1j * np.angle(u[0]))
        blk = HermitianBlock3.from_voltages(u)
        ok, _ = dg.rank1_check(blk, tol=1e-9)
        assert ok
        v = dg.reconstruct_voltages(blk)
        rebuilt = HermitianBlock3.from_voltages(v)
        for sym in ("w11", "w22", "w33", "w12re", "w12im", "w13re", "w13im",
                    "w23re", "w23im"):
            assert rebuilt.value(sym) == pytest.approx(blk.value(sym),
                                                       abs=1e-7, rel=1e-7)


def test_gap_percent():
    assert dg.gap_percent(5790.5, 5812.64) == pytest.approx(0.38, abs=0.005)
    assert dg.gap_percent(123.4, 123.4) == 0.0
    assert dg.gap_percent(2175.7, 2178.08) == pytest.approx(0.11, abs=0.005)
    with pytest.raises(ValueError):
        dg.gap_percent(1.0, 0.0)


def test_activity_report_tight_and_slack():
    p = ConicProgram()
    t = p.add_variable(0.0, 10.0)
    p.add_soc([AffExpr.var(t), AffExpr.constant(1.0)], label="cone")
    p.add_linear(AffExpr.var(t), 0.0, w3cone.conic.INF, label="floor")
    p.set_objective({t: 1.0})
    sol = solve(p)
    assert sol.status == OPTIMAL
    acts = {a.label: a for a in dg.activity_report(sol, p, tol=1e-5)}
    assert acts["cone"].active                       # t = 1 = ||1||
    assert not acts["floor"].active                  # slack 1
    assert acts["floor"].slack == pytest.approx(1.0, abs=1e-6)


def test_triangle_diagnostics_case3_kim(case3):
    relax = w3cone.Relaxation(kind="kim", thetas=(0.0, 4.71238898))
    program, m = w3cone.build(case3, relax)
    sol = solve(program)
    assert sol.status == OPTIMAL
    tris = w3cone.enumerate_triangles(case3)
    diags = dg.triangle_diagnostics(sol, program, m, tris, tol=1e-5)
    assert len(diags) == 1
    d = diags[0]
    assert d.bus_ids == (1, 2, 3)
    assert len(d.kim_slacks) == 12            # 6 cones + 6 budget rows
    assert all(v >= -1e-6 for v in d.pm_residuals)
    assert isinstance(d.rank1_certified, bool)
    j = d.to_dict()
    assert set(j) == {"buses", "kvl_residuals", "pm_residuals", "kim_slacks",
                      "rank1_certified", "worst_residual"}


def test_rank1_certification_on_case14_sdp(case14):
    program, m = w3cone.build(case14, w3cone.Relaxation(kind="sdp"))
    sol = solve(program)
    assert sol.status == OPTIMAL
    for tri in w3cone.enumerate_triangles(case14):
        blk = dg.extract_block(sol.x, m, tri)
        ok, worst = dg.rank1_check(blk, tol=1e-5)
        assert ok, (tri.buses, worst)


def test_gap_ladder_non_increasing(case3):
    ref = 5812.64
    gaps = []
    for relax in (w3cone.Relaxation(kind="pm"),
                  w3cone.Relaxation(kind="kim", thetas=(0.0, 4.71238898)),
                  w3cone.Relaxation(kind="sdp")):
        rep = w3cone.run_solve(case3, relax, ref_obj=ref)
        gaps.append(rep.gap_percent)
    assert gaps[0] >= gaps[1] >= gaps[2]


def test_activity_agrees_with_pm_residuals(case3):
    # the activity report's pm-cone slacks and the per-triangle residuals
    # are two views of the same quantity
    relax = w3cone.Relaxation(kind="kim", thetas=(0.0, 4.71238898))
    program, m = w3cone.build(case3, relax)
    sol = solve(program)
    tris = w3cone.enumerate_triangles(case3)
    d = dg.triangle_diagnostics(sol, program, m, tris, tol=1e-5)[0]
    acts = {a.label: a for a in dg.activity_report(sol, program, tol=1e-5)}
    pair_labels = ["pm/pair(1,2)", "pm/pair(1,3)", "pm/pair(2,3)"]
    for resid, label in zip(d.pm_residuals, pair_labels):
        assert acts[label].slack == pytest.approx(resid, abs=1e-9)
        assert acts[label].active == (resid <= 1e-5)
