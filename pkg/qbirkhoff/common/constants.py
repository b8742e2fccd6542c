import os
import enum

debug = False

## VERSIONING ##
tool_name = "qbirkhoff"
version = "0.1.0"
schema_version = 1

## PATHS & FILENAMES ##
dir_log = None # set by --log-dir
log_error = "error.log"
log_normal = "activity.log"
log_debug = "debug.log"
log_max_bytes = 1024 * 1024
log_backups = 2

## GEVREY CORE
factorial_exact_limit = 20 # exact integer factorials up to 20!
log_gamma_switch = 30.0 # gamma_fn evaluates via exp(log Gamma) above this
binomial_power = 7 / 6

## APPROXIMATION
varsigma = 0.01 # lower quadrature endpoint
sup_t_cap = 1e12
sup_scan_points = 400
sup_max_iter = 200
sup_xtol = 1e-12
kappa_ratio = 2.0
validity_grid_points = 200
quad_limit = 200

class DeltaKind(enum.Enum):
    #: (1+t)^n, n >= 1
    polynomial = "polynomial"
    #: exp(t^a / a)
    sub_exponential = "sub_exponential"
    #: exp(t^(1/sigma) / (1 + log^gamma(1+t)))
    log_tempered = "log_tempered"
    #: (1+t)^s Delta(t)
    product_with_power = "product_with_power"

## NONRESONANCE
resonance_tol = 1e-14 # |<k,omega>| below this counts as exact resonance
max_shell_vectors = 5000000
richardson_step = 1e-4
richardson_rtol = 1e-3

## SYMBOLS & RECURSION
frequency_match_tol = 1e-10
truncation_eta = 1.0
tolerance = 1e-10
reality_tol = 1e-10

class FrequencyMode(enum.Enum):
    #: divide whole Taylor coefficients by <omega(I0), k>
    constant = "constant"
    #: multiply by the Taylor expansion of <omega(I), k>^-1 about I0
    reciprocal_taylor = "reciprocal_taylor"

class Stage(enum.Enum):
    config = "config"
    validity = "validity"
    nonresonance = "nonresonance"
    recursion = "recursion"
    diagnostics = "diagnostics"

class ExitCode(enum.Enum):
    Success = 0
    HardError = 1
    ToleranceExceeded = 2
    UsageError = 3

## PIPELINE
worker_limit = 4
seed = 0
full_coeffs = False
timing = False
plot_series = ("decay", "growth", "divisors", "residuals")

def log_path(name):
    "Full path of a log file, or None when file logging is off"
    if not dir_log:
        return None
    return os.path.join(dir_log, name)
