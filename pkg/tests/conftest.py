import math
from pathlib import Path

import numpy as np
import pytest

import w3cone

CASES_DIR = Path(__file__).resolve().parent.parent / "cases"

TABLE_REFS = {
    "pglib_opf_case3_lmbd": 5812.64,
    "pglib_opf_case5_pjm": 17551.89,
    "pglib_opf_case14_ieee": 2178.08,
}


def load_case(stem: str) -> w3cone.NetworkCase:
    return w3cone.parse_matpower((CASES_DIR / f"{stem}.m").read_text(), stem)


@pytest.fixture(scope="session")
def case3():
    return load_case("pglib_opf_case3_lmbd")


@pytest.fixture(scope="session")
def case5():
    return load_case("pglib_opf_case5_pjm")


@pytest.fixture(scope="session")
def case14():
    return load_case("pglib_opf_case14_ieee")


@pytest.fixture()
def rng():
    return np.random.default_rng(w3cone.default_seed())


# A small two-bus system with generation at both ends, loose generator
# boxes and no thermal limit; used by the feasible-point mapping tests.
TWO_BUS_TEXT = """
function mpc = twobus
mpc.version = '2';
mpc.baseMVA = 100.0;
mpc.bus = [
  1 3 40.0 10.0 0.0 0.0 1 1.0 0.0 230.0 1 1.10 0.90;
  2 1 60.0 20.0 5.0 -8.0 1 1.0 0.0 230.0 1 1.10 0.90;
];
mpc.gen = [
  1 0 0 2000 -2000 1.0 100.0 1 2000 -2000;
  2 0 0 2000 -2000 1.0 100.0 1 2000 -2000;
];
mpc.gencost = [
  2 0 0 3 0.04 11.0 3.0;
  2 0 0 3 0.00 27.5 0.0;
];
mpc.branch = [
  1 2 0.01 0.10 0.04 0.0 0.0 0.0 0.0 0.0 1 -30 30;
];
"""

# Fully connected three-bus system with a transformer branch (tap and
# shift) so the flow-equation oracle exercises the off-nominal model.
THREE_BUS_TEXT = """
function mpc = threebus
mpc.version = '2';
mpc.baseMVA = 100.0;
mpc.bus = [
  1 3 50.0 20.0 0.0  0.0 1 1.0 0.0 230.0 1 1.10 0.90;
  2 1 80.0 30.0 0.0  4.0 1 1.0 0.0 230.0 1 1.10 0.90;
  3 1 30.0 10.0 2.0  0.0 1 1.0 0.0 230.0 1 1.10 0.90;
];
mpc.gen = [
  1 0 0 3000 -3000 1.0 100.0 1 3000 -3000;
  2 0 0 3000 -3000 1.0 100.0 1 3000 -3000;
  3 0 0 3000 -3000 1.0 100.0 1 3000 -3000;
];
mpc.gencost = [
  2 0 0 3 0.02 10.0 0.0;
  2 0 0 3 0.00 20.0 0.0;
  2 0 0 3 0.01 15.0 1.0;
];
mpc.branch = [
  1 2 0.010 0.080 0.020 0.0 0.0 0.0 0.0   0.0  1 -30 30;
  2 3 0.020 0.150 0.000 0.0 0.0 0.0 0.0   0.0  1 -30 30;
  3 1 0.005 0.060 0.030 0.0 0.0 0.0 1.05  30.0 1 -30 30;
];
"""


@pytest.fixture(scope="session")
def twobus():
    return w3cone.parse_matpower(TWO_BUS_TEXT, "twobus")


@pytest.fixture(scope="session")
def threebus():
    return w3cone.parse_matpower(THREE_BUS_TEXT, "threebus")


def random_voltages(case, rng, angle_margin=0.9):
    """Voltage phasors inside the case's magnitude bounds, with branch
    angle differences strictly inside the limits (tree-consistent angles
    scaled into range)."""
    n = case.n_bus
    mags = np.array([rng.uniform(b.vmin + 1e-3, b.vmax - 1e-3)
                     for b in case.buses])
    for _ in range(200):
        angs = rng.uniform(-0.25, 0.25, size=n)
        angs[0] = 0.0
        ok = True
        for _, br in case.in_service_branches():
            d = angs[br.from_bus] - angs[br.to_bus]
            if not (br.angmin * angle_margin < d < br.angmax * angle_margin):
                ok = False
                break
        if ok:
            return mags * np.exp(1j * angs)
    raise RuntimeError("could not sample an in-limits angle profile")


def ac_branch_flows(case, u):
    """Exact pi-model complex flows per in-service branch id."""
    flows = {}
    for bid, br in case.in_service_branches():
        y, sh_f, sh_t, tap_c = w3cone.branch_admittance(br)
        f, t = br.from_bus, br.to_bus
        tau2 = abs(tap_c) ** 2
        w_ff = abs(u[f]) ** 2
        w_tt = abs(u[t]) ** 2
        w_ft = u[f] * np.conj(u[t])
        s_f = np.conj(y + sh_f) * w_ff / tau2 - np.conj(y) * w_ft / tap_c
        s_t = (np.conj(y + sh_t) * w_tt
               - np.conj(y) * np.conj(w_ft) / np.conj(tap_c))
        flows[bid] = (s_f, s_t)
    return flows
