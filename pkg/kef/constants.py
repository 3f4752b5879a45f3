"""Project-wide constants for kef."""

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8
QUAD_LIMIT = 200
# quad error estimates above this multiple of the requested tolerance are failures
QUAD_FAILURE_FACTOR = 1e3

# below this jump size infinite-activity integrands are replaced by their Taylor term
SMALL_JUMP_TAYLOR_CUTOFF = 1e-3

DEFAULT_STEP = 1e-3
DEFAULT_EPS = 1e-4
DEFAULT_SEED = 20240601

SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
SPLITMIX_MUL1 = 0xBF58476D1CE4E5B9
SPLITMIX_MUL2 = 0x94D049BB133111EB
UINT64_MASK = 0xFFFFFFFFFFFFFFFF

DEFAULT_TOLERANCES = {
    "cf": 1e-9,
    "laplace": 1e-6,
    "density-laplace": 1e-8,
    "mu": 1e-7,
    "mu-fm": 1e-7,
    "mu-fv": 1e-9,
    "density-diff": 1e-8,
    "generator": 1e-8,
}

EQUATIONS = tuple(DEFAULT_TOLERANCES)

# 99% two-sided Kolmogorov quantile, threshold = KS_C99 / sqrt(n)
KS_C99 = 1.63
MC_SE_MULTIPLIER = 4.0
BATCH_MEANS_GROUPS = 20

ML_SERIES_LIMIT = -5.0
ML_SERIES_MAX_TERM = 1e4
ML_DENSITY_MAX_TERM = 1e7
ML_MAX_TERMS = 2000

HYP2F1_SERIES_RADIUS = 0.9
HYP2F1_MAX_TERMS = 200_000

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_FAIL = 4

THREADS_ENV = "KEF_THREADS"
