"""SOC and SDP relaxations of AC optimal power flow in the lifted
voltage-product space, with parameterized 3-cycle cone cuts."""

import os

__version__ = "0.1.0"

# Randomized tests seed from here; override with the environment variable.
SEED_ENV_VAR = "W3CONE_SEED"
DEFAULT_SEED = 0xC0FFEE


def default_seed() -> int:
    """Seed for randomized checks: W3CONE_SEED if set, else the default."""
    raw = os.environ.get(SEED_ENV_VAR)
    return int(raw, 0) if raw else DEFAULT_SEED


from .netcase import (Bus, Branch, CaseError, Generator, NetworkCase,  # noqa: E402
                      Triangle, UnsupportedFeatureError, branch_admittance,
                      enumerate_triangles, parse_matpower)
from .conic import (AffExpr, ConicProgram, Solution, SolverConfig,  # noqa: E402
                    OPTIMAL, INFEASIBLE, UNBOUNDED, NUMERICAL_FAILURE,
                    ITERATION_LIMIT)
from .kimcuts import (CutRow, HermitianBlock3, KimCutParams, SymExpr,  # noqa: E402
                      eval_kim, frobenius_row, kim_soc_row, pm_soc_rows)
from .backends import (CapabilityError, NoBackendError,  # noqa: E402
                       available_backends, get_backend, register_backend,
                       solve)
from .wopf import (Relaxation, UnsupportedSizeError, WIndexMap,  # noqa: E402
                   attach_kim, build, build_base, build_sdp)
from . import diagnostics  # noqa: E402
from .report import (PGLIB_VERSION, SolveReport, run_solve, run_sweep,  # noqa: E402
                     run_table)
