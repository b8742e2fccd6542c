"Multi-indices, Gevrey index bookkeeping and Gamma/Beta special functions"
import math
import itertools
import logging

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from qbirkhoff.common import constants, exceptions

log = logging.getLogger(__name__)
log_i = log.info
log_d = log.debug
log_w = log.warning
log_e = log.error
log_c = log.critical

@dataclass(frozen=True)
class GevreyIndices:
    """
    The indices (sigma, mu, lambda, rho, rho_bar) fixing symbol classes.

    Params:
        sigma -- angle index, > 1
        mu -- action index, >= rho + 1
        lam -- time index, >= rho + 1
        rho -- >= sigma
        rho_bar -- lam*mu + sigma, computed when omitted
    """
    sigma: float
    mu: float
    lam: float
    rho: float
    rho_bar: float = None

    def __post_init__(self):
        where = "GevreyIndices"
        if not self.sigma > 1:
            raise exceptions.InputError(where, "sigma must be > 1, got {}".format(self.sigma))
        if not self.rho >= self.sigma:
            raise exceptions.InputError(where, "rho must be >= sigma, got rho={} sigma={}".format(self.rho, self.sigma))
        if not self.mu >= self.rho + 1:
            raise exceptions.InputError(where, "mu must be >= rho + 1, got mu={} rho={}".format(self.mu, self.rho))
        if not self.lam >= self.rho + 1:
            raise exceptions.InputError(where, "lambda must be >= rho + 1, got lambda={} rho={}".format(
                self.lam, self.rho))
        expected = self.lam * self.mu + self.sigma
        if self.rho_bar is None:
            object.__setattr__(self, 'rho_bar', expected)
        elif not math.isclose(self.rho_bar, expected, rel_tol=1e-12):
            raise exceptions.InputError(where, "rho_bar must equal lambda*mu + sigma = {}, got {}".format(
                expected, self.rho_bar))

    @property
    def symbol_class_exponent(self):
        "mu + sigma + lambda - 1, the factorial exponent of input symbols"
        return self.mu + self.sigma + self.lam - 1

    def as_dict(self):
        return {'sigma': self.sigma, 'mu': self.mu, 'lambda': self.lam,
                'rho': self.rho, 'rho_bar': self.rho_bar}


@dataclass(frozen=True)
class MultiIndex:
    """
    A vector of non-negative integers.
    Comparison operators implement the componentwise partial order.
    """
    entries: tuple = field(default=())

    def __post_init__(self):
        entries = tuple(int(x) for x in self.entries)
        if any(x < 0 for x in entries):
            raise exceptions.DomainError("MultiIndex", "entries must be non-negative: {}".format(entries))
        object.__setattr__(self, 'entries', entries)

    @classmethod
    def of(cls, value):
        "Coerce a tuple/list/MultiIndex"
        if isinstance(value, cls):
            return value
        return cls(tuple(value))

    @classmethod
    def zero(cls, n):
        return cls((0,) * n)

    @classmethod
    def unit(cls, n, i):
        e = [0] * n
        e[i] = 1
        return cls(tuple(e))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def order(self):
        "|gamma|"
        return sum(self.entries)

    @property
    def factorial(self):
        "gamma! as an exact int (or float above the exactness limit)"
        return multi_factorial(self.entries)

    def __le__(self, other):
        other = MultiIndex.of(other)
        self._check(other)
        return all(a <= b for a, b in zip(self.entries, other.entries))

    def __ge__(self, other):
        return MultiIndex.of(other).__le__(self)

    def __lt__(self, other):
        return self <= other and self != MultiIndex.of(other)

    def __gt__(self, other):
        return MultiIndex.of(other) < self

    def __add__(self, other):
        other = MultiIndex.of(other)
        self._check(other)
        return MultiIndex(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other):
        other = MultiIndex.of(other)
        if not other <= self:
            raise exceptions.DomainError("MultiIndex", "{} is not <= {}".format(other.entries, self.entries))
        return MultiIndex(tuple(a - b for a, b in zip(self.entries, other.entries)))

    def power(self, x):
        "x^gamma for a vector x"
        return power(x, self.entries)

    def _check(self, other):
        if len(other) != len(self):
            raise exceptions.ShapeError("MultiIndex", "length mismatch {} vs {}".format(len(self), len(other)))


def enumerate_multi_indices(n, max_order, min_order=0):
    """
    All multi-indices of length n with min_order <= |gamma| <= max_order, graded then lexicographic.

    Returns:
        list of tuples
    """
    out = []
    for order in range(min_order, max_order + 1):
        level = [g for g in itertools.product(range(order + 1), repeat=n) if sum(g) == order]
        out.extend(sorted(level, reverse=True))
    return out

def factorial(m):
    "m! exact for m <= factorial_exact_limit, float via log-Gamma above (inf once it overflows)"
    if m < 0:
        raise exceptions.DomainError("factorial", "negative argument {}".format(m))
    if m <= constants.factorial_exact_limit:
        return math.factorial(m)
    lg = log_factorial(m)
    return math.exp(lg) if lg < 709.0 else math.inf

def log_factorial(m):
    if m < 0:
        raise exceptions.DomainError("log_factorial", "negative argument {}".format(m))
    return float(special.gammaln(m + 1))

def multi_factorial(gamma):
    "gamma! = prod gamma_i!"
    out = 1
    for g in gamma:
        out *= factorial(g)
    return out

def log_multi_factorial(gamma):
    return math.fsum(log_factorial(g) for g in gamma)

def binomial(gamma, alpha):
    "Multi-index binomial prod C(gamma_i, alpha_i)"
    out = 1
    for g, a in zip(gamma, alpha):
        if a > g:
            return 0
        out *= math.comb(g, a)
    return out

def power(x, gamma):
    "x^gamma = prod x_i^gamma_i (0^0 = 1)"
    out = 1
    for xi, g in zip(x, gamma):
        if g:
            out = out * xi ** g
    return out

## SPECIAL FUNCTIONS ##

def _check_positive(where, *args):
    for a in args:
        if not a > 0 or math.isnan(a):
            raise exceptions.DomainError(where, "argument must be positive, got {}".format(a))

def log_gamma(x):
    "log Gamma(x) for x > 0"
    _check_positive("log_gamma", x)
    return float(special.gammaln(x))

def gamma_fn(x):
    """
    Gamma(x) for x > 0.
    Integers up to factorial_exact_limit + 1 are exact, large arguments go through log Gamma
    and overflow to inf instead of raising.
    """
    _check_positive("gamma_fn", x)
    if float(x).is_integer() and x <= constants.factorial_exact_limit + 1:
        return float(math.factorial(int(x) - 1))
    if x > constants.log_gamma_switch:
        lg = special.gammaln(x)
        return math.exp(lg) if lg < 709.0 else math.inf
    return float(special.gamma(x))

def gamma_plus(x):
    "Gamma(x) for x >= 1, 1 for x <= 1"
    return 1.0 if x <= 1 else gamma_fn(x)

def log_gamma_plus(x):
    return 0.0 if x <= 1 else log_gamma(x)

def log_beta(x, y):
    "log B(x, y), symmetric in its arguments"
    _check_positive("log_beta", x, y)
    a, b = (x, y) if x <= y else (y, x)
    return float(special.betaln(a, b))

def beta_fn(x, y):
    "B(x, y) = Gamma(x)Gamma(y)/Gamma(x+y), computed in log domain"
    _check_positive("beta_fn", x, y)
    return math.exp(log_beta(x, y))

## LEMMA HARNESSES ##

@dataclass(frozen=True)
class GammaBetaReport:
    """
    Worst case over a grid of the Gamma/Beta identity and the 1/y inequality.

    Params:
        points -- number of grid points
        max_identity_error -- max relative violation of Gamma(x)Gamma(y) = Gamma(x+y)B(x,y)
        violations -- points where Gamma(x)Gamma(y) > Gamma(x+y)/y beyond rounding
        min_slack -- smallest log(Gamma(x+y)/y) - log(Gamma(x)Gamma(y))
        worst_point -- (x, y) attaining min_slack
    """
    points: int
    max_identity_error: float
    violations: int
    min_slack: float
    worst_point: tuple

    def as_dict(self):
        return {'points': self.points, 'max_identity_error': self.max_identity_error,
                'violations': self.violations, 'min_slack': self.min_slack,
                'worst_point': list(self.worst_point)}


def check_gamma_beta_lemmas(grid, rtol=1e-12):
    """
    Verify Gamma(x)Gamma(y) = Gamma(x+y)B(x,y) and Gamma(x)Gamma(y) <= Gamma(x+y)/y pointwise.

    Params:
        grid -- iterable of (x, y) with x >= 1, y > 0
        rtol -- rounding allowance for the inequality

    Returns:
        GammaBetaReport
    """
    grid = list(grid)
    if not grid:
        raise exceptions.InputError("check_gamma_beta_lemmas", "grid is empty")
    max_err = 0.0
    violations = 0
    min_slack = math.inf
    worst = None
    for x, y in grid:
        if x < 1:
            raise exceptions.DomainError("check_gamma_beta_lemmas", "x must be >= 1, got {}".format(x))
        _check_positive("check_gamma_beta_lemmas", y)
        lhs = log_gamma(x) + log_gamma(y)
        lgxy = log_gamma(x + y)
        err = abs(math.expm1(lhs - lgxy - log_beta(x, y)))
        max_err = max(max_err, err)
        slack = lgxy - math.log(y) - lhs
        if slack < -rtol:
            violations += 1
        if slack < min_slack:
            min_slack, worst = slack, (x, y)
    log_d("Gamma/Beta check over {} points: identity error {:.3e}, {} violations".format(
        len(grid), max_err, violations))
    return GammaBetaReport(len(grid), max_err, violations, min_slack, worst)

def _log_binomial(a, b):
    return log_gamma(a + b + 1) - log_gamma(a + 1) - log_gamma(b + 1)

@dataclass(frozen=True)
class LemmaFitReport:
    """
    Result of an existence harness: ratios lhs/rhs over samples.

    Params:
        samples -- number of evaluated samples
        fitted_constant -- smallest constant making every sampled inequality hold
        worst_sample -- sample attaining it
        holds -- whether the supplied constant (if any) dominates every ratio
        ratios -- per-sample ratios in input order
    """
    samples: int
    fitted_constant: float
    worst_sample: tuple
    holds: bool
    ratios: tuple

    def as_dict(self):
        return {'samples': self.samples, 'fitted_constant': self.fitted_constant,
                'worst_sample': list(self.worst_sample), 'holds': self.holds}


def check_binomial_gamma_lemma(samples, indices, M=None):
    """
    Evaluate both sides of
    C(x1+y1,x1)^(7/6) C(x2+y2,x2)^(7/6) Gamma(mu x1 + lam x2 + p) Gamma(mu y1 + lam y2 + q)
        <= M Gamma(mu(x1+y1) + lam(x2+y2) + p + q) B(p,q)^(1/3)

    Params:
        samples -- iterable of (x1, y1, x2, y2, p, q), integers x_i, y_i >= 0 and p, q >= 1
        indices -- GevreyIndices supplying mu and lambda
        M -- constant to test; when None only the fit is reported

    Returns:
        LemmaFitReport, fitted_constant is the smallest admissible M on the samples
    """
    assert isinstance(indices, GevreyIndices)
    samples = [tuple(s) for s in samples]
    if not samples:
        raise exceptions.InputError("check_binomial_gamma_lemma", "no samples")
    if indices.mu < 8 or indices.rho < 7:
        log_w("Binomial Gamma lemma sampled outside mu >= 8, rho >= 7 (mu={}, rho={})".format(indices.mu, indices.rho))
    mu, lam = indices.mu, indices.lam
    ratios = []
    for s in samples:
        x1, y1, x2, y2, p, q = s
        if min(x1, y1, x2, y2) < 0 or p < 1 or q < 1:
            raise exceptions.DomainError("check_binomial_gamma_lemma", "sample out of range: {}".format(s))
        lhs = constants.binomial_power * (_log_binomial(x1, y1) + _log_binomial(x2, y2))
        lhs += log_gamma(mu * x1 + lam * x2 + p) + log_gamma(mu * y1 + lam * y2 + q)
        rhs = log_gamma(mu * (x1 + y1) + lam * (x2 + y2) + p + q) + log_beta(p, q) / 3
        ratios.append(math.exp(lhs - rhs))
    i = int(np.argmax(ratios))
    fitted = ratios[i]
    holds = True if M is None else all(r <= M * (1 + 1e-12) for r in ratios)
    return LemmaFitReport(len(samples), fitted, samples[i], holds, tuple(ratios))

def check_combinatorial_gamma_lemma(samples, indices):
    """
    Evaluate both sides of the combinatorial Gamma estimate used for the F_j1 bound:

        (gamma+alpha1)! beta1! delta1!/gamma! C(alpha,alpha1) C(beta,beta1) C(delta,delta1)
          * Gamma_+((mu-1)|gamma+alpha1| + (sigma-1)|beta1| + (lam-1)delta1 + (sigma+mu+lam-1)(r-1))
          * Gamma(mu|alpha-alpha1| + rho|gamma+beta-beta1| + lam(delta-delta1) + s rho_bar)
        <= 2^|gamma+alpha1| Gamma(mu|alpha| + rho|beta| + lam delta + (sigma+mu+lam-1)(|gamma|+r-1) + s rho_bar)

    Params:
        samples -- iterable of (alpha, alpha1, beta, beta1, delta, delta1, gamma, s, r)
            with multi-index alpha, alpha1, beta, beta1, gamma, integer delta, delta1, s >= 1, r >= 0
            and |gamma| + r >= 2
        indices -- GevreyIndices

    Returns:
        LemmaFitReport with fitted_constant = max lhs/rhs (<= 1 means no violation)
    """
    assert isinstance(indices, GevreyIndices)
    samples = list(samples)
    if not samples:
        raise exceptions.InputError("check_combinatorial_gamma_lemma", "no samples")
    sg, mu, lam, rho, rb = indices.sigma, indices.mu, indices.lam, indices.rho, indices.rho_bar
    e = indices.symbol_class_exponent
    ratios = []
    for sample in samples:
        alpha, alpha1, beta, beta1, delta, delta1, gamma, s, r = sample
        alpha, alpha1, beta, beta1, gamma = (MultiIndex.of(x) for x in (alpha, alpha1, beta, beta1, gamma))
        if not (alpha1 <= alpha and beta1 <= beta and 0 <= delta1 <= delta):
            raise exceptions.DomainError("check_combinatorial_gamma_lemma", "sub-indices must be <= their parents")
        if s < 1 or r < 0 or gamma.order + r < 2:
            raise exceptions.DomainError("check_combinatorial_gamma_lemma", "need s >= 1, r >= 0, |gamma|+r >= 2")
        ga1 = gamma + alpha1
        lhs = (log_multi_factorial(ga1) + log_multi_factorial(beta1) + log_factorial(delta1)
               - log_multi_factorial(gamma))
        lhs += math.log(binomial(alpha, alpha1)) + math.log(binomial(beta, beta1)) + math.log(math.comb(delta, delta1))
        lhs += log_gamma_plus((mu - 1) * ga1.order + (sg - 1) * beta1.order + (lam - 1) * delta1 + e * (r - 1))
        lhs += log_gamma(mu * (alpha - alpha1).order + rho * (gamma.order + (beta - beta1).order)
                         + lam * (delta - delta1) + s * rb)
        rhs = ga1.order * math.log(2) + log_gamma(mu * alpha.order + rho * beta.order + lam * delta
                                                  + e * (gamma.order + r - 1) + s * rb)
        ratios.append(math.exp(lhs - rhs))
    i = int(np.argmax(ratios))
    return LemmaFitReport(len(samples), ratios[i], tuple(samples[i]), ratios[i] <= 1 + 1e-12, tuple(ratios))

def stirling_power_ratio(x, rho):
    "x!^rho / Gamma(rho x) for x >= 1"
    if x < 1:
        raise exceptions.DomainError("stirling_power_ratio", "x must be >= 1, got {}".format(x))
    return math.exp(rho * log_gamma(x + 1) - log_gamma(rho * x))

def fit_stirling_constant(xs, rho):
    "Smallest C with x!^rho <= C^x Gamma(rho x) on the sampled xs"
    xs = list(xs)
    if not xs:
        raise exceptions.InputError("fit_stirling_constant", "no sample points")
    return max(math.exp((rho * log_gamma(x + 1) - log_gamma(rho * x)) / x) for x in xs)
