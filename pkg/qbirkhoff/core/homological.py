"""
The homological equation (1/i) L_omega u = f on the torus and Fourier decay diagnostics
"""
import math
import itertools
import logging

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from qbirkhoff.common import constants, exceptions
from qbirkhoff.core import gevrey, symbols, approximation
from qbirkhoff.core.nonresonance import FrequencySpec, is_resonant, l1

log = logging.getLogger(__name__)
log_i = log.info
log_d = log.debug
log_w = log.warning
log_e = log.error
log_c = log.critical

FrequencyMode = constants.FrequencyMode

def reciprocal_series(coeffs, n, degree):
    """
    Formal reciprocal of a polynomial sum_e c_e x^e with c_0 != 0, truncated at total degree `degree`.

    Params:
        coeffs -- dict exponent -> coefficient

    Returns:
        dict exponent -> coefficient
    """
    zero = (0,) * n
    c0 = coeffs.get(zero, 0.0)
    if c0 == 0:
        raise exceptions.DomainError("reciprocal_series", "constant term vanishes")
    out = {zero: 1.0 / c0}
    active = [(e, c) for e, c in coeffs.items() if any(e) and c]
    for e in gevrey.enumerate_multi_indices(n, degree, 1):
        acc = 0.0
        for ep, c in active:
            if all(a <= b for a, b in zip(ep, e)):
                rest = tuple(b - a for a, b in zip(ep, e))
                if rest in out:
                    acc += c * out[rest]
        if acc:
            out[e] = -acc / c0
    return out

def _pairing(omega, k, t, degree, mode):
    "Taylor coefficients of <omega(I), k> about I0"
    n = len(k)
    if isinstance(omega, FrequencySpec):
        if mode == FrequencyMode.constant:
            return {(0,) * n: float(np.dot(omega.evaluate(None, t), k))}
        return omega.pairing_taylor(k, t, degree) or {(0,) * n: 0.0}
    return {(0,) * n: float(np.dot(omega, k))}

def _base_frequency(omega, t):
    if isinstance(omega, FrequencySpec):
        return omega.evaluate(None, t)
    return np.asarray(omega, dtype=float)

def _mode_tables(slice_):
    "k -> {gamma: c} for the nonzero modes of a single-order slice"
    out = {}
    for (k, g), c in slice_.order(0).items():
        if any(k):
            out.setdefault(k, {})[g] = c
    return out

def _check_slice(f, where):
    if not isinstance(f, symbols.TorusSymbol):
        raise exceptions.InputError(where, "expected a TorusSymbol slice")
    if f.h_order != 0:
        raise exceptions.ShapeError(where, "expected a single-order slice, got h_order={}".format(f.h_order))

def apply_operator(u, omega, mode=None, taylor_degree=None):
    """
    (1/i) L_omega u, i.e. every mode u_k multiplied by <omega(I), k> (truncated at the Taylor degree)
    """
    _check_slice(u, "apply_operator")
    mode = resolve_mode(omega, mode)
    M = u.taylor_degree if taylor_degree is None else taylor_degree
    out = {}
    for k, table in sorted(_mode_tables(u).items()):
        pair = _pairing(omega, k, u.t_value, M, mode)
        for g, c in table.items():
            for e, w in pair.items():
                b = tuple(x + y for x, y in zip(g, e))
                if sum(b) <= M:
                    out[(k, b)] = out.get((k, b), 0) + c * w
    return u.replace(orders=[out], taylor_degree=M)

def resolve_mode(omega, mode):
    if mode is None:
        if isinstance(omega, FrequencySpec) and not omega.is_constant:
            return FrequencyMode.reciprocal_taylor
        return FrequencyMode.constant
    return FrequencyMode(mode.value if isinstance(mode, FrequencyMode) else mode)

def default_grid(n, base_action):
    "A fixed angle grid at the base action"
    angles = (0.0, 0.7, 1.9, 3.3, 5.1) if n <= 2 else (0.0, 1.9, 4.4)
    return [(phi, tuple(base_action)) for phi in itertools.product(angles, repeat=n)]

@dataclass(frozen=True)
class HomologicalSolution:
    """
    Params:
        u -- zero-mean single-order solution
        worst_divisor -- smallest |<omega(I0), k>| over the active modes
        worst_k -- the mode attaining it
        residual_sup -- sup over the diagnostic grid of |(1/i) L_omega u - (f - mean)|
        mean -- the angle average removed from f
        mode -- FrequencyMode used
        validity_radius -- radius around I0 where the reciprocal expansion is trusted
    """
    u: symbols.TorusSymbol
    worst_divisor: float
    worst_k: tuple
    residual_sup: float
    mean: symbols.TorusSymbol = None
    mode: FrequencyMode = FrequencyMode.constant
    validity_radius: float = math.inf

    def as_dict(self):
        return {'worst_divisor': self.worst_divisor, 'worst_k': list(self.worst_k) if self.worst_k else None,
                'residual_sup': self.residual_sup, 'mode': self.mode.value,
                'validity_radius': self.validity_radius}


def solve_homological(f, omega, delta, kappa, mode=None, grid=None):
    """
    Solve (1/i) L_omega u = f - mean(f) with zero-mean u by dividing each Fourier mode by <omega, k>.

    Params:
        f -- single-order TorusSymbol slice
        omega -- frequency vector or FrequencySpec
        delta -- ApproximationFunction bounding the admissible divisors
        kappa -- every active mode needs |<omega(I0), k>| >= kappa/Delta(|k|); 0 disables the check
        mode -- FrequencyMode; reciprocal_taylor multiplies by the Taylor expansion of <omega(I), k>^-1
            about I0 truncated at the slice's Taylor degree
        grid -- (phi, I) points for the residual, default_grid() when None

    Returns:
        HomologicalSolution
    """
    _check_slice(f, "solve_homological")
    mode = resolve_mode(omega, mode)
    M = f.taylor_degree
    t = f.t_value
    w0 = _base_frequency(omega, t)
    if len(w0) != f.n:
        raise exceptions.ShapeError("solve_homological", "omega has length {}, expected {}".format(len(w0), f.n))
    mean = symbols.angle_average(f)
    if not mean.is_zero():
        log_d("solve_homological: projecting out a non-zero mean")

    out = {}
    worst, worst_k, radius = math.inf, None, math.inf
    for k, table in sorted(_mode_tables(f).items()):
        d0 = float(np.dot(w0, k))
        if is_resonant(d0, k, w0):
            raise exceptions.ResonanceError("solve_homological", k)
        bound = kappa / delta(l1(k)) if kappa else 0.0
        if abs(d0) < bound:
            raise exceptions.SmallDivisorError("solve_homological", k, abs(d0), bound)
        if abs(d0) < worst:
            worst, worst_k = abs(d0), k
        if mode == FrequencyMode.reciprocal_taylor:
            pair = _pairing(omega, k, t, M, mode)
            pair[(0,) * f.n] = d0
            recip = reciprocal_series(pair, f.n, M)
            lip = sum(abs(c) for e, c in pair.items() if any(e))
            if lip:
                radius = min(radius, abs(d0) / lip)
            for g, c in table.items():
                for e, r in recip.items():
                    b = tuple(x + y for x, y in zip(g, e))
                    if sum(b) <= M:
                        # the constant term divides so that degree 0 matches the constant mode bit for bit
                        v = c * r if any(e) else c / d0
                        out[(k, b)] = out.get((k, b), 0) + v
        else:
            for g, c in table.items():
                out[(k, g)] = c / d0
    u = f.replace(orders=[out])
    res = residual_sup(u, symbols.oscillating_part(f), omega, grid, mode)
    return HomologicalSolution(u, worst if worst_k else None, worst_k, res, mean, mode, radius)

def residual_sup(u, f, omega, grid=None, mode=None):
    """
    sup over grid of |(1/i) L_omega u - f|, with L_omega applied exactly per mode.

    Params:
        grid -- iterable of (phi, I); default_grid() when None
    """
    _check_slice(u, "residual_sup")
    _check_slice(f, "residual_sup")
    u.same_space(f)
    diff = symbols.sub(apply_operator(u, omega, mode, max(u.taylor_degree, f.taylor_degree)), f)
    if diff.is_zero():
        return 0.0
    grid = default_grid(u.n, u.base_action) if grid is None else grid
    return max(abs(symbols.evaluate(diff, phi, I)) for phi, I in grid)

## DECAY ##

@dataclass(frozen=True)
class DecayFit:
    """
    Fit of log max |f_k| at shell m against const - c m^(1/sigma).

    Params:
        sigma_hat -- fitted sigma
        c_hat -- fitted decay rate
        r_squared -- goodness of fit in [0, 1]
        radius_used -- largest shell used
        intercept -- fitted constant
        shells -- number of shells used
        decaying -- c_hat is positive beyond rounding
    """
    sigma_hat: float
    c_hat: float
    r_squared: float
    radius_used: int
    intercept: float = 0.0
    shells: int = 0
    decaying: bool = True
    series: tuple = field(default=(), repr=False)

    def as_dict(self):
        return {'sigma_hat': self.sigma_hat, 'c_hat': self.c_hat, 'r_squared': self.r_squared,
                'radius_used': self.radius_used, 'intercept': self.intercept, 'shells': self.shells,
                'decaying': self.decaying, 'series': [list(x) for x in self.series]}


def _linear_fit(x, y):
    "y ~ a - c x; returns (a, c, sse)"
    A = np.column_stack((np.ones_like(x), -x))
    coef, _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return float(coef[0]), float(coef[1]), float(r @ r)

def _shell_max(f, j):
    "shell_max at order j, or the largest over every order >= 1 when j is None"
    if j is not None:
        return symbols.shell_max(f, j)
    out = {}
    for i in range(1, f.h_order + 1):
        for m, v in symbols.shell_max(f, i).items():
            out[m] = max(out.get(m, 0.0), v)
    return dict(sorted(out.items()))

def decay_series(f, j=0, min_shell=2):
    "(m, log max |coefficient|) for the nonzero shells m >= min_shell"
    return tuple((m, math.log(v)) for m, v in _shell_max(f, j).items() if m >= min_shell and v > 0)

def fit_decay(f, sigma=None, constrained=False, j=0):
    """
    Least-squares fit of log max_{|k|_1 = m} |coefficient| against -c m^(1/sigma) + const over shells m >= 2.

    Params:
        f -- symbol (order j is used, every order >= 1 when j is None)
        sigma -- reference sigma; the exponent is held at 1/sigma when constrained
        constrained -- fit only (const, c)

    Returns:
        DecayFit
    """
    series = decay_series(f, j)
    if len(series) < 4:
        raise exceptions.FitError("fit_decay", "need >= 4 shells with |k|_1 >= 2, got {}".format(len(series)))
    m = np.array([s[0] for s in series], dtype=float)
    y = np.array([s[1] for s in series])
    sst = float(((y - y.mean()) ** 2).sum())

    def sse(b):
        return _linear_fit(m ** b, y)[2]

    if constrained:
        if sigma is None:
            raise exceptions.FitError("fit_decay", "a constrained fit needs sigma")
        b = 1 / sigma
    else:
        bs = np.linspace(0.05, 1.5, 59)
        errs = [sse(x) for x in bs]
        i = int(np.argmin(errs))
        lo, hi = bs[max(i - 1, 0)], bs[min(i + 1, len(bs) - 1)]
        res = optimize.minimize_scalar(sse, bounds=(lo, hi), method='bounded', options={'xatol': 1e-10})
        b = float(res.x) if res.fun <= errs[i] else float(bs[i])
    a, c, err = _linear_fit(m ** b, y)
    r2 = 1.0 if sst <= 1e-300 or err <= 1e-24 * max(1.0, sst) else max(0.0, 1 - err / sst)
    decaying = c > 1e-8
    if not decaying:
        log_d("fit_decay: coefficients are not decaying (c={})".format(c))
    return DecayFit(1 / b, c, r2, int(m.max()), a, len(series), decaying, series)

def optimal_decay_order(C, m, sigma):
    """
    Minimizer of N log C + sigma log N! - N log m: the continuous N* = (m/C)^(1/sigma)
    and the best integer N near it.

    Returns:
        (N*, integer N)
    """
    if C <= 0 or m <= 0:
        raise exceptions.DomainError("optimal_decay_order", "C and m must be positive")
    nstar = (m / C) ** (1 / sigma)
    cand = range(max(0, int(nstar) - 2), int(nstar) + 3)
    best = min(cand, key=lambda N: N * math.log(C) + sigma * gevrey.log_gamma(N + 1) - N * math.log(m))
    return nstar, best

def decay_bound(d0, C, m, sigma):
    "d0 C exp(-m^(1/sigma)/C)"
    return d0 * C * math.exp(-m ** (1 / sigma) / C)

## AMPLIFICATION ##

@dataclass(frozen=True)
class AmplificationConstant:
    """
    pi^2/6 2^n C0 C^(1+d) Gamma_s(1/C), s = |gamma| + n + 1, and the same with
    Gamma_s replaced by its exp(eta T^(1/sigma)) bound.
    """
    value: float
    bound: float
    s: float
    eta: float
    T: float

    def as_dict(self):
        return {'value': self.value, 'bound': self.bound, 's': self.s, 'eta': self.eta, 'T': self.T}


def amplification_constant(delta, n, C, C0, gamma_order, delta_order=0):
    if C <= 0:
        raise exceptions.DomainError("amplification_constant", "C must be positive")
    s = gamma_order + n + 1
    eta = 1 / C
    pre = math.pi ** 2 / 6 * 2 ** n * C0 * C ** (1 + delta_order)
    sup, _ = approximation.gamma_sup(delta, s, eta)
    lb = approximation.lemma_a7_bound(delta, s, eta)
    return AmplificationConstant(pre * sup, pre * lb.bound, s, eta, lb.T)

@dataclass(frozen=True)
class AmplificationReport:
    """
    Per shell m: ||u||_m / ||f||_m against Delta(m)/kappa.
    """
    ratios: dict
    limits: dict
    holds: bool

    def as_dict(self):
        return {'ratios': {str(m): v for m, v in sorted(self.ratios.items())},
                'limits': {str(m): v for m, v in sorted(self.limits.items())}, 'holds': self.holds}


def amplification_report(f, u, delta, kappa):
    fs, us = symbols.shell_norms(f), symbols.shell_norms(u)
    ratios, limits = {}, {}
    for m, fv in fs.items():
        if m == 0 or fv == 0:
            continue
        ratios[m] = us.get(m, 0.0) / fv
        limits[m] = delta(m) / kappa if kappa else math.inf
    holds = all(ratios[m] <= limits[m] * (1 + 1e-12) for m in ratios)
    return AmplificationReport(ratios, limits, holds)
