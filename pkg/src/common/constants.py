"""
constants.py - LSFEM solver and benchmark defaults
==================================================
THIS IS THE SINGLE SOURCE OF TRUTH.
Every module imports its defaults from here. Nobody hardcodes values.

Usage: from common.constants import DEFAULT_TOL, CSV_HEADER
"""

# ============================================================
# FORMULATIONS AND DEGREES
# ============================================================

FORMULATION_L2 = "l2"               # J_0: unweighted functional, S_{1,0} x S_1^2
FORMULATION_WEIGHTED = "weighted"   # J_h: h_K^2 on the PDE residual, S_{k,0} x S_{k-1}^2
FORMULATIONS = (FORMULATION_L2, FORMULATION_WEIGHTED)

MAX_DEGREE = 3
DEGREES = {
    FORMULATION_L2: (1,),
    FORMULATION_WEIGHTED: (2, 3),
}

# first-order residual weight: ||tau - grad v||^2 or ||A^{1/2}(tau - grad v)||^2
FLUX_WEIGHT_IDENTITY = "identity"
FLUX_WEIGHT_COEFFICIENT = "coefficient"     # uniformly elliptic A only
FLUX_WEIGHTS = (FLUX_WEIGHT_IDENTITY, FLUX_WEIGHT_COEFFICIENT)

MODE_UNIFORM = "uniform"
MODE_ADAPTIVE = "adaptive"
MODES = (MODE_UNIFORM, MODE_ADAPTIVE)

# ============================================================
# QUADRATURE
# ============================================================
#
# assembly rule degree   = 2k + ASSEMBLY_QUAD_MARGIN
# norm/estimator degree  = 2k + NORM_QUAD_MARGIN
#
# Estimator and exact-error integrals MUST share one rule, otherwise the
# estimator/error identity only holds up to quadrature error.

ASSEMBLY_QUAD_MARGIN = 4
NORM_QUAD_MARGIN = 6
MIN_QUAD_DEGREE = 1
MAX_QUAD_DEGREE = 12

# ============================================================
# LINEAR SOLVER
# ============================================================

SOLVER_AUTO = "auto"        # direct below DIRECT_THRESHOLD free DOFs, CG above
SOLVER_DIRECT = "direct"
SOLVER_CG = "cg"
SOLVER_METHODS = (SOLVER_AUTO, SOLVER_DIRECT, SOLVER_CG)

DEFAULT_TOL = 1e-10         # relative residual for CG
DEFAULT_MAX_ITER = 50_000
DIRECT_THRESHOLD = 250_000  # free DOFs; covers desk-scale uniform and adaptive runs
DEFAULT_CHECK_SAMPLES = 0   # seeded random perturbations checked after each solve

ASSEMBLY_CHUNK = 4096       # elements per vectorised assembly block

# ============================================================
# ADAPTIVITY
# ============================================================

DEFAULT_THETA = 0.5         # Dorfler bulk fraction
DEFAULT_ADAPT_LEVELS = 20
DEFAULT_MAX_DOFS = 150_000

# ============================================================
# PROBLEM EVALUATION
# ============================================================

SINGULAR_RADIUS = 1e-14     # singular exact fields refuse r below this

# ============================================================
# REPORTING
# ============================================================

UNIFORM_RATE_WINDOW = 3     # last m levels used for a uniform rate
ADAPTIVE_RATE_WINDOW = 5    # last m levels used for a DOF-slope rate
DEFAULT_LEVELS = 6
DEFAULT_START_LEVEL = 1

CSV_DIGITS = 17             # enough to round-trip a float64 exactly

# Norm columns, in CSV order. Each gets a rate_<name> column.
NORM_COLUMNS = ("ls", "l2u", "h1u", "l2sigma", "wbh2A", "wbh2")

CSV_HEADER = (
    "level", "dofs", "nodes", "hmax",
    "ls", "eta", "l2u", "h1u", "l2sigma", "wbh2A", "wbh2",
    "rate_ls", "rate_l2u", "rate_h1u", "rate_l2sigma", "rate_wbh2A", "rate_wbh2",
)
INT_COLUMNS = ("level", "dofs", "nodes")

# ============================================================
# CLI EXIT CODES
# ============================================================

EXIT_OK = 0
EXIT_SOLVER_FAILURE = 1
EXIT_USAGE = 2

assert len(CSV_HEADER) == 4 + 7 + len(NORM_COLUMNS), \
    f"CSV header has {len(CSV_HEADER)} columns"
