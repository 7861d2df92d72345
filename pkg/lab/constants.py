SCHEMA_VERSION = "1.0"

DEFAULT_BUDGET = 100_000_000

# Pooled searches charge the shared budget counter once per this many polymers.
BUDGET_CHECK_INTERVAL = 1024

# Dirichlet ratio sin((2L+1)k/2) / sin(k/2) is replaced by its limit below this |k|.
DIRICHLET_ZERO_TOLERANCE = 1e-12

# Torus convolution switches from direct summation to FFT above this many sites.
TORUS_TRANSFORM_THRESHOLD = 4096

MIN_GREEN_GRID = 8
DEFAULT_MIN_GREEN_GRID = 64
GREEN_GRID_DECAY_LENGTHS = 40

ROOT_BRACKET_LOWER = 1e-12

# Faxen profile
ASYMPTOTIC_SWITCH = 50.0
ASYMPTOTIC_AUDIT_BAND = 5.0
SADDLE_SWITCH = 6.0
PROFILE_TAIL_LOG = 40.0

# Exit codes used by the `polylab` command
EXIT_PRECONDITION = 2
EXIT_BUDGET = 3
EXIT_USAGE = 64
