"""MATPOWER case parsing, per-unit network model, and triangle enumeration.

The parser targets the numeric-matrix subset of the MATPOWER format used by
the PGLib-OPF benchmark files: whitespace/semicolon separated matrices,
``%`` comments, scientific notation. No MATLAB expression evaluation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

# Angle-difference limits are clamped inside (-90, 90) degrees so that the
# linearized angle constraints in the lifted space stay valid (wr >= 0).
ANGLE_CLAMP_RAD = math.radians(89.9)


class CaseError(ValueError):
    """Malformed or inconsistent case data."""


class UnsupportedFeatureError(CaseError):
    """Case uses a MATPOWER feature outside the supported subset."""


@dataclass(frozen=True)
class Bus:
    id: int            # external label from the file
    pd: float          # active demand, p.u.
    qd: float          # reactive demand, p.u.
    gs: float          # shunt conductance, p.u.
    bs: float          # shunt susceptance, p.u.
    vmin: float        # voltage magnitude lower bound, p.u.
    vmax: float        # voltage magnitude upper bound, p.u.


@dataclass(frozen=True)
class Branch:
    from_bus: int      # internal index
    to_bus: int        # internal index
    r: float
    x: float
    b_charge: float    # total line-charging susceptance, p.u.
    tap: float         # ratio, 1.0 when the file stores 0
    shift: float       # phase shift, radians
    rate_a: float      # apparent-power limit, p.u.; 0 = unlimited
    angmin: float      # radians, clamped
    angmax: float      # radians, clamped
    status: int


@dataclass(frozen=True)
class Generator:
    bus: int           # internal index
    pmin: float
    pmax: float
    qmin: float
    qmax: float
    cost_c2: float     # $/h per MW^2 (file units, against MW)
    cost_c1: float     # $/h per MW
    cost_c0: float     # $/h
    status: int

    def cost_pu(self, base_mva: float) -> tuple[float, float, float]:
        """Cost coefficients rescaled so the polynomial evaluates in $/h
        against per-unit power."""
        return (self.cost_c2 * base_mva * base_mva,
                self.cost_c1 * base_mva,
                self.cost_c0)


@dataclass(frozen=True)
class Triangle:
    buses: tuple[int, int, int]        # internal indices, i < j < k
    branch_ids: tuple[int, int, int]   # realizing pairs (i,j), (i,k), (j,k)


@dataclass(frozen=True)
class NetworkCase:
    name: str
    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    gens: tuple[Generator, ...]

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def in_service_branches(self):
        return [(i, b) for i, b in enumerate(self.branches) if b.status]

    def in_service_gens(self):
        return [(i, g) for i, g in enumerate(self.gens) if g.status]

    def to_dict(self) -> dict:
        """Canonical plain-data form, deterministic field order."""
        return {
            "name": self.name,
            "base_mva": self.base_mva,
            "buses": [[b.id, b.pd, b.qd, b.gs, b.bs, b.vmin, b.vmax]
                      for b in self.buses],
            "branches": [[br.from_bus, br.to_bus, br.r, br.x, br.b_charge,
                          br.tap, br.shift, br.rate_a, br.angmin, br.angmax,
                          br.status] for br in self.branches],
            "gens": [[g.bus, g.pmin, g.pmax, g.qmin, g.qmax,
                      g.cost_c2, g.cost_c1, g.cost_c0, g.status]
                     for g in self.gens],
        }


# ---------------------------------------------------------------------------
# parsing

_MATRIX_RE = re.compile(r"mpc\.(\w+)\s*=\s*\[(.*?)\];", re.DOTALL)
_SCALAR_RE = re.compile(r"mpc\.baseMVA\s*=\s*([0-9eE.+-]+)\s*;")


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("%")[0] for line in text.splitlines())


def _parse_matrix(body: str, section: str) -> list[list[float]]:
    rows = []
    for rownum, chunk in enumerate(body.split(";"), start=1):
        toks = chunk.split()
        if not toks:
            continue
        try:
            rows.append([float(t) for t in toks])
        except ValueError as e:
            raise CaseError(f"{section} row {rownum}: {e}") from None
    return rows


def _require_columns(rows, n, section):
    for rownum, row in enumerate(rows, start=1):
        if len(row) < n:
            raise CaseError(
                f"{section} row {rownum} has {len(row)} columns, expected >= {n}")


def parse_matpower(text: str, name: str = "case") -> NetworkCase:
    """Parse MATPOWER case text into a validated per-unit NetworkCase."""
    stripped = _strip_comments(text)
    m = _SCALAR_RE.search(stripped)
    if m is None:
        raise CaseError("missing mpc.baseMVA")
    base = float(m.group(1))
    if base <= 0:
        raise CaseError(f"baseMVA must be positive, got {base}")

    sections = {name_: body for name_, body in _MATRIX_RE.findall(stripped)}
    for required in ("bus", "gen", "branch"):
        if required not in sections:
            raise CaseError(f"missing mpc.{required} section")

    bus_rows = _parse_matrix(sections["bus"], "bus")
    gen_rows = _parse_matrix(sections["gen"], "gen")
    branch_rows = _parse_matrix(sections["branch"], "branch")
    _require_columns(bus_rows, 13, "bus")
    _require_columns(gen_rows, 10, "gen")
    _require_columns(branch_rows, 13, "branch")

    cost_rows: list[list[float]] = []
    if "gencost" in sections:
        cost_rows = _parse_matrix(sections["gencost"], "gencost")
        _require_columns(cost_rows, 4, "gencost")

    buses = []
    index_of = {}
    for row in bus_rows:
        ext = int(row[0])
        if ext in index_of:
            raise CaseError(f"duplicate bus id {ext}")
        index_of[ext] = len(buses)
        buses.append(Bus(id=ext, pd=row[2] / base, qd=row[3] / base,
                         gs=row[4] / base, bs=row[5] / base,
                         vmin=row[12], vmax=row[11]))

    branches = []
    for rownum, row in enumerate(branch_rows, start=1):
        f_ext, t_ext = int(row[0]), int(row[1])
        if f_ext not in index_of or t_ext not in index_of:
            raise CaseError(f"branch row {rownum} references unknown bus")
        angmin, angmax = _clamp_angles(row[11], row[12])
        branches.append(Branch(
            from_bus=index_of[f_ext], to_bus=index_of[t_ext],
            r=row[2], x=row[3], b_charge=row[4],
            tap=row[8] if row[8] != 0.0 else 1.0,
            shift=math.radians(row[9]),
            rate_a=row[5] / base,
            angmin=angmin, angmax=angmax,
            status=int(row[10])))

    gens = []
    for rownum, row in enumerate(gen_rows, start=1):
        ext = int(row[0])
        if ext not in index_of:
            raise CaseError(f"gen row {rownum} references unknown bus {ext}")
        c2 = c1 = c0 = 0.0
        if cost_rows:
            if rownum - 1 >= len(cost_rows):
                raise CaseError(f"gencost has no row for generator {rownum}")
            c2, c1, c0 = _poly_cost(cost_rows[rownum - 1], rownum)
        gens.append(Generator(
            bus=index_of[ext],
            pmin=row[9] / base, pmax=row[8] / base,
            qmin=row[4] / base, qmax=row[3] / base,
            cost_c2=c2, cost_c1=c1, cost_c0=c0,
            status=int(row[7])))

    case = NetworkCase(name=name, base_mva=base, buses=tuple(buses),
                       branches=tuple(branches), gens=tuple(gens))
    validate_case(case)
    return case


def _clamp_angles(angmin_deg: float, angmax_deg: float) -> tuple[float, float]:
    # MATPOWER: (0, 0) or a bound of >=360 degrees means unconstrained.
    if angmin_deg == 0.0 and angmax_deg == 0.0:
        return -ANGLE_CLAMP_RAD, ANGLE_CLAMP_RAD
    lo = -ANGLE_CLAMP_RAD if angmin_deg <= -360 else math.radians(angmin_deg)
    hi = ANGLE_CLAMP_RAD if angmax_deg >= 360 else math.radians(angmax_deg)
    lo = max(lo, -ANGLE_CLAMP_RAD)
    hi = min(hi, ANGLE_CLAMP_RAD)
    return lo, hi


def _poly_cost(row: list[float], gen_num: int) -> tuple[float, float, float]:
    model = int(row[0])
    if model == 1:
        raise UnsupportedFeatureError(
            f"generator {gen_num}: piecewise-linear cost model not supported")
    if model != 2:
        raise CaseError(f"generator {gen_num}: unknown cost model {model}")
    ncoef = int(row[3])
    coefs = row[4:4 + ncoef]
    if len(coefs) != ncoef:
        raise CaseError(f"gencost row {gen_num}: expected {ncoef} coefficients")
    padded = [0.0] * (3 - len(coefs)) + list(coefs) if ncoef <= 3 else None
    if padded is None:
        # higher-order polynomial: only degree <= 2 supported
        if any(c != 0.0 for c in coefs[:-3]):
            raise UnsupportedFeatureError(
                f"generator {gen_num}: polynomial cost degree > 2")
        padded = coefs[-3:]
    return padded[0], padded[1], padded[2]


def validate_case(case: NetworkCase) -> None:
    """Check the model invariants; raise CaseError listing all violations."""
    problems = []
    for i, b in enumerate(case.buses):
        if not (0 < b.vmin <= b.vmax):
            problems.append(f"bus {b.id}: need 0 < vmin <= vmax, got "
                            f"[{b.vmin}, {b.vmax}]")
    n = case.n_bus
    for i, br in enumerate(case.branches):
        if br.r * br.r + br.x * br.x <= 0:
            problems.append(f"branch {i}: series impedance is zero")
        if br.tap <= 0:
            problems.append(f"branch {i}: tap must be positive")
        if not (0 <= br.from_bus < n and 0 <= br.to_bus < n):
            problems.append(f"branch {i}: endpoint out of range")
        if not (-math.pi / 2 < br.angmin <= 0 <= br.angmax < math.pi / 2):
            problems.append(f"branch {i}: angle limits "
                            f"[{br.angmin}, {br.angmax}] outside (-pi/2, pi/2)")
    for i, g in enumerate(case.gens):
        if g.pmin > g.pmax or g.qmin > g.qmax:
            problems.append(f"gen {i}: inverted box bounds")
        if g.cost_c2 < 0:
            problems.append(f"gen {i}: negative quadratic cost")
        if not (0 <= g.bus < n):
            problems.append(f"gen {i}: bus index out of range")
    if not any(g.status for g in case.gens):
        problems.append("no in-service generator")
    if problems:
        raise CaseError("; ".join(problems))


# ---------------------------------------------------------------------------
# derived quantities

def branch_admittance(br: Branch) -> tuple[complex, complex, complex, complex]:
    """Pi-model quantities: series admittance, from/to shunt admittances,
    complex tap ratio tau*exp(j*shift)."""
    y_series = 1.0 / complex(br.r, br.x)
    shunt = complex(0.0, br.b_charge / 2.0)
    tap_complex = br.tap * complex(math.cos(br.shift), math.sin(br.shift))
    return y_series, shunt, shunt, tap_complex


def enumerate_triangles(case: NetworkCase) -> list[Triangle]:
    """All bus triples whose three pairs are each spanned by an in-service
    branch, sorted lexicographically. Parallel branches contribute a single
    triangle per triple; the lowest branch id per pair is recorded."""
    first_branch: dict[tuple[int, int], int] = {}
    adj: dict[int, set[int]] = {}
    for bid, br in case.in_service_branches():
        i, j = sorted((br.from_bus, br.to_bus))
        if i == j:
            continue
        if (i, j) not in first_branch:
            first_branch[(i, j)] = bid
        adj.setdefault(i, set()).add(j)
        adj.setdefault(j, set()).add(i)

    triangles = []
    for (i, j) in sorted(first_branch):
        common = adj.get(i, set()) & adj.get(j, set())
        for k in sorted(c for c in common if c > j):
            triangles.append(Triangle(
                buses=(i, j, k),
                branch_ids=(first_branch[(i, j)], first_branch[(i, k)],
                            first_branch[(j, k)])))
    return triangles
