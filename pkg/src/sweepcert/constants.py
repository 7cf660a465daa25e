"""Numerical tolerances and defaults used throughout sweepcert."""

# Model consistency
WEIGHT_SUM_TOLERANCE = 1e-9  # step() rejects weights further than this from 1
COMPLETENESS_TOLERANCE = 1e-12
INVERTIBILITY_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-12
NORM_DRIFT_GUARD = 1e-8  # run_ensemble integrity check before renormalizing
NEAR_SINGULAR_NORM = 1e-14
FOCK_SINGULAR_THRESHOLD = 1e-14  # |phi_i| below this -> density is +inf

# Finite differences
DEFAULT_FD_STEP = 1e-6
FD_DISAGREEMENT_TOLERANCE = 1e-6  # relative; larger step-halving gaps raise the flag

# Quadrature
DEFAULT_QUAD_TOL = 1e-10
DEFAULT_QUAD_REL_TOL = 1e-10
QUAD_SUBDIVISION_LIMIT = 200

# Monte Carlo
MAX_NONFINITE_FRACTION = 1e-4  # 0.01% of samples

# Certification
DEFAULT_MARGIN_FLOOR = 1e-9
DEFAULT_EXCLUSION_RADIUS = 1e-3
MAX_RESAMPLE_FRACTION = 1e-3  # 0.1% of points
MAX_RECORDED_VIOLATIONS = 100
TREND_SLACK_STD_ERRORS = 3.0
DEFAULT_SPHERE_FAMILY = (0.05, 0.1, 0.2, 0.3)
DEFAULT_INTERVAL_FAMILY = (1.0, 2.0, 4.0, 8.0)
DEFAULT_HALF_LINE_UPPER = 1e3

# Cell-cycle beta search
BETA_QUALIFY_THRESHOLD = -1e-9
BETA_GRID_DECADES = 2  # log grid spans beta_max * [10^-2, 1]

# Random stream indices reserved by the CLI
STREAM_CERTIFY_POINTS = 1
STREAM_INTEGRABILITY = 2
STREAM_ENSEMBLE = 3
STREAM_FOCK_PROXIMITY = 4
STREAM_VALIDATE = 5

# Ensembles
DEFAULT_BLOCK_SIZE = 512

# Exit codes
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_INCONCLUSIVE = 3
