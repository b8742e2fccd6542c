"""
Approximation functions Delta, their validity conditions and the supremum Gamma_s(eta)
"""
import math
import logging
import warnings

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from qbirkhoff.common import constants, exceptions

log = logging.getLogger(__name__)
log_i = log.info
log_d = log.debug
log_w = log.warning
log_e = log.error
log_c = log.critical

DeltaKind = constants.DeltaKind

_param_names = {
    DeltaKind.polynomial: 'n',
    DeltaKind.sub_exponential: 'a',
    DeltaKind.log_tempered: 'gamma',
    DeltaKind.product_with_power: 's',
    }

@dataclass(frozen=True)
class ApproximationFunction:
    """
    A member of the built-in Delta family.

    Params:
        kind -- DeltaKind
        sigma -- the sigma validity is judged against (also the root used by log_tempered)
        exponent -- n, a, gamma or s depending on kind
        inner -- the wrapped Delta for product_with_power
    """
    kind: DeltaKind
    sigma: float
    exponent: float
    inner: "ApproximationFunction" = None

    def __post_init__(self):
        kind = self.kind
        if not isinstance(kind, DeltaKind):
            try:
                kind = DeltaKind(kind)
            except ValueError:
                raise exceptions.ConfigViolationError([("delta.kind", "unknown kind '{}'".format(kind))])
            object.__setattr__(self, 'kind', kind)
        where = "ApproximationFunction"
        if not self.sigma > 1:
            raise exceptions.InputError(where, "sigma must be > 1, got {}".format(self.sigma))
        x = self.exponent
        if kind == DeltaKind.polynomial and not x >= 0:
            raise exceptions.InputError(where, "polynomial exponent n must be >= 0, got {}".format(x))
        if kind == DeltaKind.sub_exponential and not x > 0:
            raise exceptions.InputError(where, "sub_exponential exponent a must be > 0, got {}".format(x))
        if kind == DeltaKind.log_tempered and not x > 1:
            raise exceptions.InputError(where, "log_tempered exponent gamma must be > 1, got {}".format(x))
        if kind == DeltaKind.product_with_power:
            if not x >= 1:
                raise exceptions.InputError(where, "product_with_power power s must be >= 1, got {}".format(x))
            if not isinstance(self.inner, ApproximationFunction):
                raise exceptions.InputError(where, "product_with_power needs an inner approximation function")
        elif self.inner is not None:
            raise exceptions.InputError(where, "only product_with_power takes an inner function")

    @classmethod
    def of(cls, kind, sigma, **params):
        """
        Build from keyword parameters, e.g. ApproximationFunction.of('polynomial', 2, n=3)
        or ApproximationFunction.of('product_with_power', 2, s=1, inner={'kind': 'polynomial', 'n': 1})
        """
        try:
            kind = DeltaKind(kind.value if isinstance(kind, DeltaKind) else kind)
        except ValueError:
            raise exceptions.ConfigViolationError([("delta.kind", "unknown kind '{}'".format(kind))])
        name = _param_names[kind]
        if name not in params:
            raise exceptions.InputError("ApproximationFunction.of",
                                        "missing parameter '{}' for {}".format(name, kind.value))
        inner = params.get('inner')
        if isinstance(inner, dict):
            inner = dict(inner)
            inner_kind = inner.pop('kind')
            inner = cls.of(inner_kind, inner.pop('sigma', sigma), **inner)
        return cls(kind, float(sigma), float(params[name]), inner)

    @property
    def params(self):
        d = {_param_names[self.kind]: self.exponent}
        if self.inner is not None:
            d['inner'] = self.inner.describe()
        return d

    def describe(self):
        "Plain dict form, accepted back by of()"
        d = {'kind': self.kind.value, 'sigma': self.sigma}
        d.update(self.params)
        return d

    def formula(self):
        "Human readable formula"
        x = self.exponent
        if self.kind == DeltaKind.polynomial:
            return "(1+t)^{:g}".format(x)
        if self.kind == DeltaKind.sub_exponential:
            return "exp(t^{0:g}/{0:g})".format(x)
        if self.kind == DeltaKind.log_tempered:
            return "exp(t^(1/{:g})/(1+log^{:g}(1+t)))".format(self.sigma, x)
        return "(1+t)^{:g} * {}".format(x, self.inner.formula())

    def log_value(self, t):
        "log Delta(t), no domain check"
        x = self.exponent
        if self.kind == DeltaKind.polynomial:
            return x * math.log1p(t)
        if self.kind == DeltaKind.sub_exponential:
            return t ** x / x
        if self.kind == DeltaKind.log_tempered:
            return t ** (1 / self.sigma) / (1 + math.log1p(t) ** x)
        return x * math.log1p(t) + self.inner.log_value(t)

    def __call__(self, t):
        return evaluate(self, t)


def _check_t(t):
    if t < 0 or math.isnan(t):
        raise exceptions.DomainError("evaluate", "t must be >= 0, got {}".format(t))

def _value(delta, t):
    if delta.kind == DeltaKind.polynomial:
        return (1.0 + t) ** delta.exponent
    if delta.kind == DeltaKind.product_with_power:
        return (1.0 + t) ** delta.exponent * _value(delta.inner, t)
    return math.exp(delta.log_value(t))

def evaluate(delta, t):
    "Delta(t) for t >= 0 (inf on overflow)"
    _check_t(t)
    if delta.log_value(t) >= 709.0:
        return math.inf
    return _value(delta, t)

def log_evaluate(delta, t):
    "log Delta(t) for t >= 0"
    _check_t(t)
    return delta.log_value(t)

## VALIDITY ##

def _log1p_tail(X, b):
    "Upper bound of int_X^inf log(1+t) t^(-1-b) dt, X >= 1"
    return X ** -b * (math.log(X) / b + 1 / b ** 2) + X ** (-1 - b) / (1 + b)

def _log_delta_tail(delta, X, b):
    """
    Upper bound of int_X^inf log Delta(t) t^(-1-b) dt for X >= e, inf when divergent
    """
    x = delta.exponent
    if delta.kind == DeltaKind.polynomial:
        return x * _log1p_tail(X, b)
    if delta.kind == DeltaKind.sub_exponential:
        if x >= b:
            return math.inf
        return X ** (x - b) / (x * (b - x))
    if delta.kind == DeltaKind.log_tempered:
        bd = 1 / delta.sigma
        if bd > b + 1e-15:
            return math.inf
        if abs(bd - b) <= 1e-15:
            # 1/(1 + log^g(1+t)) <= log(t)^-g
            return math.log(X) ** (1 - x) / (x - 1)
        return X ** (bd - b) / ((b - bd) * (1 + math.log1p(X) ** x))
    return x * _log1p_tail(X, b) + _log_delta_tail(delta.inner, X, b)

def _integral(fn, lo, hi):
    "int_lo^hi fn(t) dt through the substitution t = e^u"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        val, err = integrate.quad(lambda u: fn(math.exp(u)) * math.exp(u),
                                  math.log(lo), math.log(hi), limit=constants.quad_limit)
    ok = not caught and err <= 1e-6 * max(1.0, abs(val))
    return val, err, ok

@dataclass(frozen=True)
class ValidityReport:
    """
    Outcome of check_validity.

    Params:
        monotone_ratio_ok -- log Delta(t)/t^(1/sigma) non-increasing past its peak on the grid
        integral_value -- quadrature value plus analytic tail bound
        integral_converges -- quadrature converged and the tail bound is finite
        grid_used -- description of the grid
        tail_bound -- the analytic tail included in integral_value
        peak_t -- grid point where the ratio peaks
        sigma -- sigma the check was run against
    """
    monotone_ratio_ok: bool
    integral_value: float
    integral_converges: bool
    grid_used: str
    tail_bound: float = 0.0
    peak_t: float = 0.0
    sigma: float = 0.0

    @property
    def valid(self):
        return self.monotone_ratio_ok and self.integral_converges

    def as_dict(self):
        return {'monotone_ratio_ok': self.monotone_ratio_ok, 'integral_value': self.integral_value,
                'integral_converges': self.integral_converges, 'grid_used': self.grid_used,
                'tail_bound': self.tail_bound, 'peak_t': self.peak_t, 'sigma': self.sigma,
                'valid': self.valid}


def check_validity(delta, sigma=None, grid_max=1e8, tail_tol=1e-3):
    """
    Check that log Delta(t)/t^(1/sigma) decreases (past its peak) on a geometric grid and that
    int_varsigma^inf log Delta(t)/t^(1+1/sigma) dt is finite.

    Params:
        delta -- ApproximationFunction
        sigma -- defaults to delta.sigma
        grid_max -- right end of the monotonicity grid and of the first quadrature piece
        tail_tol -- the quadrature range grows (up to sup_t_cap) until tail/integral <= tail_tol

    Returns:
        ValidityReport
    """
    if not isinstance(delta, ApproximationFunction):
        raise exceptions.ConfigViolationError([("delta", "not an approximation function: {}".format(delta))])
    sigma = delta.sigma if sigma is None else sigma
    lo = constants.varsigma
    if not sigma > 1:
        raise exceptions.InputError("check_validity", "sigma must be > 1, got {}".format(sigma))
    if not grid_max > lo:
        raise exceptions.InputError("check_validity", "grid_max must exceed {}".format(lo))
    b = 1 / sigma

    grid = np.geomspace(lo, grid_max, constants.validity_grid_points)
    ratio = np.array([delta.log_value(t) / t ** b for t in grid])
    peak = int(np.argmax(ratio))
    after = ratio[peak:]
    rises = np.diff(after) > 1e-9 * np.maximum(np.abs(after[:-1]), 1e-300)
    monotone = bool(peak < len(grid) - 1 and not rises.any())

    fn = lambda t: delta.log_value(t) / t ** (1 + b)
    X = max(grid_max, math.e)
    value, _, ok = _integral(fn, lo, X)
    tail = _log_delta_tail(delta, X, b)
    while math.isfinite(tail) and tail > tail_tol * max(value, 1e-300) and X < constants.sup_t_cap:
        nX = min(X * 100, constants.sup_t_cap)
        piece, _, piece_ok = _integral(fn, X, nX)
        value += piece
        ok = ok and piece_ok
        X = nX
        tail = _log_delta_tail(delta, X, b)
    total = value + tail
    converges = bool(ok and math.isfinite(total) and total > 0)
    if not ok:
        log_w("Quadrature of the growth integral for {} did not converge cleanly".format(delta.formula()))
    grid_used = "geometric [{:g}, {:g}] x {}; quadrature to {:g} + analytic tail".format(
        lo, grid_max, constants.validity_grid_points, X)
    report = ValidityReport(monotone, total, converges, grid_used, tail, float(grid[peak]), sigma)
    log_d("Validity of {} at sigma={}: {}".format(delta.formula(), sigma, report.valid))
    return report

## SUPREMUM ##

def _log_objective(delta, s, eta, b):
    return lambda t: s * math.log1p(t) + delta.log_value(t) - eta * t ** b

def log_gamma_sup(delta, s, eta, sigma=None):
    """
    log Gamma_s(eta) and its argmax.

    Returns:
        (log value, argmax t)
    """
    if not eta > 0:
        raise exceptions.DomainError("gamma_sup", "eta must be > 0, got {}".format(eta))
    if s < 0:
        raise exceptions.DomainError("gamma_sup", "s must be >= 0, got {}".format(s))
    sigma = delta.sigma if sigma is None else sigma
    g = _log_objective(delta, s, eta, 1 / sigma)

    ts = np.concatenate(([0.0], np.geomspace(1e-8, constants.sup_t_cap, constants.sup_scan_points)))
    vals = np.array([g(t) for t in ts])
    i = int(np.argmax(vals))
    if i == len(ts) - 1:
        raise exceptions.NumericError("gamma_sup", "supremum not attained below t={:g}".format(constants.sup_t_cap),
                                      {'delta': delta.describe(), 's': s, 'eta': eta, 'last_value': float(vals[i])})
    best_t, best = float(ts[i]), float(vals[i])
    if 0 < i and vals[i] > vals[i - 1] and vals[i] > vals[i + 1]:
        res = optimize.minimize_scalar(lambda t: -g(t), bracket=(ts[i - 1], ts[i], ts[i + 1]), method='golden',
                                       options={'xtol': constants.sup_xtol, 'maxiter': constants.sup_max_iter})
        if not getattr(res, 'success', True):
            raise exceptions.NumericError("gamma_sup", "golden-section refinement did not converge",
                                          {'delta': delta.describe(), 's': s, 'eta': eta,
                                           'nit': int(getattr(res, 'nit', -1)),
                                           'bracket': [float(ts[i - 1]), float(ts[i + 1])]})
        if res.x >= 0 and -res.fun > best:
            best_t, best = float(res.x), float(-res.fun)
    return best, best_t

def gamma_sup(delta, s, eta, sigma=None):
    """
    Gamma_s(eta) = sup_t (1+t)^s Delta(t) exp(-eta t^(1/sigma)), located by a geometric scan
    and refined by golden-section search

    Returns:
        (value, argmax t)
    """
    v, t = log_gamma_sup(delta, s, eta, sigma)
    return (math.exp(v) if v < 709.0 else math.inf), t

@dataclass(frozen=True)
class LemmaBound:
    """
    Result of lemma_a7_bound.

    The exponent of the bound is reported raw (eta T^(1/sigma)) and decomposed as a + c*s with
    a = log Delta(T)/T^(1/sigma) and c = log(1+T)/T^(1/sigma).
    """
    T: float
    bound: float
    holds: bool
    log_bound: float
    gamma_sup: float
    log_gamma_sup: float
    argmax_t: float
    tail_integral: float
    a: float
    c: float
    eta_decomposed: float

    def __iter__(self):
        return iter((self.T, self.bound, self.holds))

    def as_dict(self):
        return {'T': self.T, 'bound': self.bound, 'holds': self.holds, 'log_bound': self.log_bound,
                'gamma_sup': self.gamma_sup, 'log_gamma_sup': self.log_gamma_sup, 'argmax_t': self.argmax_t,
                'tail_integral': self.tail_integral, 'a': self.a, 'c': self.c, 'eta_decomposed': self.eta_decomposed}


def _weighted_tail(delta, s, T, b, kappa_ratio):
    "(1/log kappa) int_T^inf (log Delta + s log(1+t)) t^(-1-b) dt"
    X = max(T * 1e6, 1e6)
    fn = lambda t: (delta.log_value(t) + s * math.log1p(t)) / t ** (1 + b)
    value, _, _ = _integral(fn, T, X)
    tail = _log_delta_tail(delta, X, b) + s * _log1p_tail(X, b)
    return (value + tail) / math.log(kappa_ratio)

def lemma_a7_bound(delta, s, eta, kappa_ratio=None, sigma=None):
    """
    Find the smallest T >= varsigma with (1/log kappa) int_T^inf delta_s(t)/t^(1+1/sigma) dt <= eta,
    delta_s = log Delta + s log(1+t), and compare Gamma_s(eta) with exp(eta T^(1/sigma)).

    Returns:
        LemmaBound (iterates as (T, bound, holds))
    """
    kappa_ratio = constants.kappa_ratio if kappa_ratio is None else kappa_ratio
    if not 1 < kappa_ratio <= 2:
        raise exceptions.DomainError("lemma_a7_bound", "kappa_ratio must lie in (1, 2], got {}".format(kappa_ratio))
    if not eta > 0:
        raise exceptions.DomainError("lemma_a7_bound", "eta must be > 0, got {}".format(eta))
    sigma = delta.sigma if sigma is None else sigma
    b = 1 / sigma
    if not math.isfinite(_log_delta_tail(delta, 1e6, b)):
        raise exceptions.ValidityError("lemma_a7_bound",
                                       "growth integral of {} diverges at sigma={}".format(delta.formula(), sigma))

    lo = constants.varsigma
    F = lambda u: _weighted_tail(delta, s, math.exp(u), b, kappa_ratio) - eta
    ulo = math.log(lo)
    if F(ulo) <= 0:
        T = lo
    else:
        uhi = ulo
        while F(uhi) > 0:
            uhi += math.log(10)
            if uhi > 690:
                raise exceptions.NumericError("lemma_a7_bound", "no T found below 1e300",
                                              {'delta': delta.describe(), 's': s, 'eta': eta})
        T = math.exp(optimize.bisect(F, uhi - math.log(10), uhi, xtol=1e-10))
    tail_integral = _weighted_tail(delta, s, T, b, kappa_ratio)

    log_bound = eta * T ** b
    lsup, tstar = log_gamma_sup(delta, s, eta, sigma)
    holds = lsup <= log_bound + math.log1p(1e-9)
    a = delta.log_value(T) / T ** b
    c = math.log1p(T) / T ** b
    if not holds:
        log_w("Gamma_s bound fails for {} s={} eta={}: log sup {} > {}".format(
            delta.formula(), s, eta, lsup, log_bound))
    return LemmaBound(T, math.exp(log_bound) if log_bound < 709.0 else math.inf, holds, log_bound,
                      math.exp(lsup) if lsup < 709.0 else math.inf, lsup, tstar, tail_integral, a, c, a + c * s)
