"""
The order-by-order normal form recursion: conjugator a and action-only normal form p0 with p o a = a o p0
"""
import math
import logging

from dataclasses import dataclass, field

import numpy as np
from scipy import special
from gevent import pool

from qbirkhoff.common import constants, exceptions
from qbirkhoff.core import gevrey, symbols, homological
from qbirkhoff.core.nonresonance import FrequencySpec
from qbirkhoff.core.symbols import TorusSymbol

log = logging.getLogger(__name__)
log_i = log.info
log_d = log.debug
log_w = log.warning
log_e = log.error
log_c = log.critical

FrequencyMode = constants.FrequencyMode


@dataclass(frozen=True)
class GrowthFit:
    """
    log |a_j| ~ rho_bar * log Gamma(j) + j log d + const over the nonzero conjugator orders

    Params:
        d_hat -- geometric rate
        rho_bar_hat -- factorial exponent
        orders_used -- the orders j entering the fit
        quality -- R^2
        intercept -- the fitted constant
    """
    d_hat: float
    rho_bar_hat: float
    orders_used: tuple
    quality: float
    intercept: float = 0.0

    def as_dict(self):
        return {'d_hat': self.d_hat, 'rho_bar_hat': self.rho_bar_hat, 'orders_used': list(self.orders_used),
                'quality': self.quality, 'intercept': self.intercept}


@dataclass(frozen=True)
class OrderStats:
    "What happened at recursion stage j (solving for a_{j-1})"
    j: int
    worst_divisor: float
    worst_k: tuple
    homological_residual: float
    clipped_mass: float
    rhs_norm: float

    def as_dict(self):
        return {'j': self.j, 'worst_divisor': self.worst_divisor,
                'worst_k': list(self.worst_k) if self.worst_k else None,
                'homological_residual': self.homological_residual, 'clipped_mass': self.clipped_mass,
                'rhs_norm': self.rhs_norm}


@dataclass(frozen=True)
class NormalFormResult:
    """
    Params:
        a -- conjugator, a_0 = 1, orders 1..N-1 mean-free
        p0 -- normal form, mode-0 only, p0_0 = K_0 and p0_1 = 0
        residual_norms -- j -> l1 norm of (p o a - a o p0)_j
        growth_fit -- GrowthFit of the conjugator norms, None with fewer than four nonzero orders
        per_order -- OrderStats for j = 2..N
        frequency -- FrequencySpec the divisions used
        mode -- FrequencyMode
        clipped_mass -- Fourier mass dropped inside the recursion
        conjugacy_clipped_mass -- Fourier mass dropped by the residual check
        imaginary -- j -> imaginary mass of p0_j
    """
    a: TorusSymbol
    p0: TorusSymbol
    residual_norms: dict
    growth_fit: GrowthFit = None
    per_order: tuple = ()
    frequency: FrequencySpec = None
    mode: FrequencyMode = FrequencyMode.constant
    clipped_mass: float = 0.0
    conjugacy_clipped_mass: float = 0.0
    imaginary: dict = field(default_factory=dict)

    @property
    def h_order(self):
        return self.p0.h_order

    @property
    def max_residual(self):
        return max(self.residual_norms.values()) if self.residual_norms else 0.0

    def as_dict(self, full=False):
        d = {
            'h_order': self.h_order,
            'mode': self.mode.value,
            'frequency': self.frequency.describe() if self.frequency else None,
            'a_norms': symbols.norms(self.a).as_dict(),
            'p0_norms': symbols.norms(self.p0).as_dict(),
            'residual_norms': {str(j): v for j, v in sorted(self.residual_norms.items())},
            'max_residual': self.max_residual,
            'growth_fit': self.growth_fit.as_dict() if self.growth_fit else None,
            'per_order': [s.as_dict() for s in self.per_order],
            'clipped_mass': self.clipped_mass,
            'conjugacy_clipped_mass': self.conjugacy_clipped_mass,
            'taylor_tail_mass': self.a.taylor_tail_mass + self.p0.taylor_tail_mass,
            'imaginary_mass': {str(j): v for j, v in sorted(self.imaginary.items())},
        }
        if full:
            d['a'] = self.a.as_dict()
            d['p0'] = self.p0.as_dict()
        return d


## RECURSION TERMS ##

def _zero_slice(like):
    return TorusSymbol(like.n, 0, like.fourier_radius, like.taylor_degree, like.base_action, like.t_value)

def _require(orders, s, where):
    if s >= len(orders) or orders[s] is None:
        raise exceptions.SequencingError(where, s)
    return orders[s]

def f_j1(p_orders, a_orders, j, fourier_radius=None, taylor_degree=None):
    """
    sum_{s=1}^{j-2} sum_{r+|gamma|=j-s} (1/gamma!) d_I^gamma p_r . D_phi^gamma a_s

    Params:
        p_orders -- input slices p_0, p_1, ... (missing orders count as zero)
        a_orders -- conjugator slices a_0 = 1, a_1, ..., a_{j-2} at least
        j -- stage, F_2 = 0

    Returns:
        single-order slice carrying the clipped mass of its products
    """
    if j < 2:
        raise exceptions.InputError("f_j1", "stage j={} < 2".format(j))
    like = p_orders[0]
    K = like.fourier_radius if fourier_radius is None else fourier_radius
    M = like.taylor_degree if taylor_degree is None else taylor_degree
    total = _zero_slice(like).replace(fourier_radius=K, taylor_degree=M)
    for s in range(1, j - 1):
        a_s = _require(a_orders, s, "f_j1")
        for r in range(j - s + 1):
            if r >= len(p_orders) or p_orders[r] is None or p_orders[r].is_zero():
                continue
            for gamma in gevrey.enumerate_multi_indices(like.n, j - s - r, j - s - r):
                term = symbols.bidifferential(p_orders[r], a_s, tuple(gamma), K, M)
                total = symbols.add(total, term)
    return total

def f_j2(a_orders, p0_orders, j, fourier_radius=None, taylor_degree=None):
    """
    sum_{s=1}^{j-2} a_s . p0_{j-s}

    Params:
        p0_orders -- normal form slices p0_0, ..., p0_{j-1} at least
    """
    if j < 2:
        raise exceptions.InputError("f_j2", "stage j={} < 2".format(j))
    like = _require(a_orders, 0, "f_j2")
    K = like.fourier_radius if fourier_radius is None else fourier_radius
    M = like.taylor_degree if taylor_degree is None else taylor_degree
    total = _zero_slice(like).replace(fourier_radius=K, taylor_degree=M)
    for s in range(1, j - 1):
        a_s = _require(a_orders, s, "f_j2")
        q = _require(p0_orders, j - s, "f_j2")
        total = symbols.add(total, symbols.multiply(a_s, q, K, M))
    return total

## DRIVER ##

def _check_input(p):
    if not isinstance(p, TorusSymbol):
        raise exceptions.InputError("run_recursion", "expected a TorusSymbol")
    if not p.slice(0).is_mode_zero():
        raise exceptions.InputError("run_recursion", "p_0 must depend on the actions only")
    if not p.slice(1).is_zero():
        raise exceptions.InputError("run_recursion", "p_1 must vanish")

def _frequency(p, omega):
    "omega = grad K_0, cross-checked against a supplied frequency at the base action"
    derived = FrequencySpec.from_gradient(p, 0) if p.taylor_degree >= 1 else None
    if omega is None:
        if derived is None:
            raise exceptions.InputError("run_recursion", "no frequency given and K_0 carries no gradient")
        return derived
    given = omega if isinstance(omega, FrequencySpec) else FrequencySpec.constant(omega, p.base_action)
    if given.dimension != p.n:
        raise exceptions.ShapeError("run_recursion", "frequency has dimension {}, expected {}".format(
            given.dimension, p.n))
    if derived is None:
        return given
    w_given = given.evaluate(p.base_action, p.t_value)
    w_derived = derived.evaluate(p.base_action, p.t_value)
    gap = float(np.max(np.abs(w_given - w_derived)))
    if gap > constants.frequency_match_tol * max(1.0, float(np.max(np.abs(w_derived)))):
        raise exceptions.InputError("run_recursion", "frequency {} differs from grad K_0 = {} by {:.3e}".format(
            w_given.tolist(), w_derived.tolist(), gap))
    return derived

def run_recursion(p, omega, delta, kappa, N=None, mode=None, taylor_degree=None, grid=None):
    """
    Solve c_j = 0 for j = 2..N: at stage j

        F_j = F_j1 - F_j2
        p0_j = mean(p_j + F_j1)
        f_j = p0_j - p_j - F_j
        a_{j-1} solves (1/i) L_omega a_{j-1} = f_j with zero mean

    Params:
        p -- input symbol, p_0 = K_0(I) mode-0 and p_1 = 0
        omega -- frequency vector or FrequencySpec cross-checked against grad K_0, or None
        delta -- ApproximationFunction
        kappa -- divisor constant, 0 disables the inline check
        N -- h-order, defaults to p.h_order
        mode -- FrequencyMode, defaults to reciprocal_taylor for action-dependent frequencies
        taylor_degree -- working Taylor degree, defaults to p.taylor_degree
        grid -- diagnostic (phi, I) points for the homological residuals

    Returns:
        NormalFormResult
    """
    _check_input(p)
    N = p.h_order if N is None else N
    M = p.taylor_degree if taylor_degree is None else taylor_degree
    if N < 0 or M < 0 or M > p.taylor_degree:
        raise exceptions.InputError("run_recursion", "invalid truncation N={} M={}".format(N, M))
    freq = _frequency(p, omega)
    if mode is None and M == 0:
        mode = FrequencyMode.constant
    work = p.with_truncation(taylor_degree=M)
    like = work.slice(0)
    K = p.fourier_radius

    p_orders = [p.slice(r) for r in range(N + 1)]
    work_orders = [work.slice(r) for r in range(N + 1)]
    a_orders = [TorusSymbol.constant(1.0, like)]
    p0_orders = [work_orders[0], _zero_slice(like)]
    stats = []
    clipped = 0.0
    used_mode = homological.resolve_mode(freq, mode)
    log_d("Recursion: n={} N={} K={} M={} mode={}".format(p.n, N, K, M, used_mode.value))
    for j in range(2, N + 1):
        F1 = f_j1(p_orders, a_orders, j, K, M)
        F2 = f_j2(a_orders, p0_orders, j, K, M)
        F = symbols.sub(F1, F2)
        pj = work_orders[j]
        p0_j = symbols.angle_average(symbols.add(pj, F1))
        if symbols.angle_average(symbols.add(pj, F)) != p0_j:
            raise exceptions.NumericError("run_recursion", "F_j2 is not mean-free at j={}".format(j))
        f_j = symbols.sub(symbols.sub(p0_j, pj), F)
        try:
            sol = homological.solve_homological(f_j, freq, delta, kappa, mode, grid)
        except exceptions.SmallDivisorError as e:
            raise e.with_order(j) from e
        a_orders.append(sol.u.replace(clipped_mass=0.0, taylor_tail_mass=0.0))
        p0_orders.append(p0_j.replace(clipped_mass=0.0, taylor_tail_mass=0.0))
        clipped += F1.clipped_mass + F2.clipped_mass
        stats.append(OrderStats(j, sol.worst_divisor, sol.worst_k, sol.residual_sup,
                                F1.clipped_mass + F2.clipped_mass, symbols.norms(f_j).total))
        log_d("Stage j={}: |f_j|={:.3e} worst divisor {}".format(j, stats[-1].rhs_norm, sol.worst_divisor))

    a = TorusSymbol.from_slices(a_orders, like, h_order=max(N - 1, 0))
    p0 = TorusSymbol.from_slices(p0_orders[:N + 1], like, h_order=N)
    base = NormalFormResult(a, p0, {}, None, tuple(stats), freq, used_mode, clipped)
    residuals, conj_clipped = _conjugacy(p, base)
    growth = None
    try:
        growth = fit_growth(a)
    except exceptions.FitError:
        pass
    result = NormalFormResult(a, p0, residuals, growth, tuple(stats), freq, used_mode, clipped, conj_clipped,
                              symbols.imaginary_mass(p0))
    log_i("Recursion to N={} done, max residual {:.3e}, clipped mass {:.3e}".format(
        N, result.max_residual, clipped))
    return result

## VERIFICATION ##

def conjugacy_residual(p, result, fourier_radius=None):
    """
    c = p o a - a o p0 recomputed from scratch, with the Fourier radius widened to K*N so that
    clipping cannot mask an error
    """
    N = result.p0.h_order
    M = result.a.taylor_degree
    K = p.fourier_radius * max(N, 1) if fourier_radius is None else fourier_radius
    left = symbols.compose(p, result.a, h_order=N, fourier_radius=K, taylor_degree=M)
    right = symbols.compose(result.a, result.p0, h_order=N, fourier_radius=K, taylor_degree=M)
    return symbols.sub(left, right)

def _conjugacy(p, result):
    c = conjugacy_residual(p, result)
    return symbols.norms(c).per_order, c.clipped_mass

def verify_conjugacy(p, result):
    "j -> l1 norm of (p o a - a o p0)_j for j <= N"
    return _conjugacy(p, result)[0]

## DIAGNOSTICS ##

def _norm_series(source):
    if isinstance(source, NormalFormResult):
        source = source.a
    if isinstance(source, TorusSymbol):
        return symbols.norms(source).per_order
    if isinstance(source, dict):
        return dict(source)
    return {j: v for j, v in enumerate(source)}

def fit_growth(source):
    """
    Least-squares fit of log |a_j| against rho_bar * log Gamma(j) + j log d + const.

    Params:
        source -- NormalFormResult, conjugator symbol, mapping j -> norm or a norm sequence indexed by j

    Returns:
        GrowthFit
    """
    series = sorted((j, v) for j, v in _norm_series(source).items() if j >= 1 and v > 0)
    if len(series) < 4:
        raise exceptions.FitError("fit_growth", "need at least 4 nonzero orders, got {}".format(len(series)))
    j = np.array([s[0] for s in series], dtype=float)
    y = np.log(np.array([s[1] for s in series], dtype=float))
    A = np.column_stack([special.gammaln(j), j, np.ones_like(j)])
    coef = np.linalg.lstsq(A, y, rcond=None)[0]
    fitted = A @ coef
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    quality = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return GrowthFit(float(math.exp(coef[1])), float(coef[0]), tuple(int(x) for x in j), quality, float(coef[2]))


@dataclass(frozen=True)
class TruncationEval:
    """
    Params:
        value -- sum_{j <= J_used} K_j(I) h^j with J from the eta h^(-1/rho_bar) rule
        J_used -- that J
        last_term -- |K_J(I)| h^J
        J_smallest -- J at the smallest nonzero term
        value_smallest -- the sum up to J_smallest
        last_term_smallest -- the smallest term
    """
    value: complex
    J_used: int
    last_term: float
    J_smallest: int
    value_smallest: complex
    last_term_smallest: float
    terms: tuple = ()

    def __iter__(self):
        return iter((self.value, self.J_used, self.last_term))

    def as_dict(self):
        return {'value': [self.value.real, self.value.imag], 'J_used': self.J_used, 'last_term': self.last_term,
                'J_smallest': self.J_smallest, 'value_smallest': [self.value_smallest.real, self.value_smallest.imag],
                'last_term_smallest': self.last_term_smallest}

def optimal_truncation_eval(p0, I, t, h, eta=None, rho_bar=1.0):
    """
    Evaluate the normal form sum_j K_j(I) h^j truncated at J = min(floor(eta h^(-1/rho_bar)), N) and,
    alongside, at the smallest term.
    """
    if h <= 0:
        raise exceptions.DomainError("optimal_truncation_eval", "h must be positive")
    if not p0.is_mode_zero():
        raise exceptions.InputError("optimal_truncation_eval", "p0 must be mode-0")
    if t != p0.t_value:
        log_w("optimal_truncation_eval: t={} differs from the symbol's t={}".format(t, p0.t_value))
    eta = constants.truncation_eta if eta is None else eta
    N = p0.h_order
    phi = (0.0,) * p0.n
    values = [symbols.evaluate(p0.slice(j), phi, I) for j in range(N + 1)]
    terms = [abs(v) * h ** j for j, v in enumerate(values)]

    # h^(-1/rho_bar) overflows for tiny h, so compare in logs before forming it
    log_rule = math.log(eta) - math.log(h) / rho_bar if eta > 0 else -math.inf
    if log_rule >= math.log(N + 1):
        J = N
    else:
        J = min(int(math.floor(eta * h ** (-1.0 / rho_bar))), N)
    nonzero = [(terms[j], j) for j in range(1, N + 1) if terms[j] > 0]
    J_small = min(nonzero)[1] if nonzero else N

    def partial(upto):
        acc, hj = 0j, 1.0
        for j in range(upto + 1):
            acc += values[j] * hj
            hj *= h
        return acc

    return TruncationEval(partial(J), J, terms[J], J_small, partial(J_small), terms[J_small], tuple(terms))

def imaginary_mass(result):
    "j -> sum of |Im| of the normal form coefficients"
    return symbols.imaginary_mass(result.p0)


@dataclass(frozen=True)
class ClassEnvelope:
    """
    Smallest C0 with |p_j| <= C0^(j+1) (j!)^e over the nonzero orders, e = mu + sigma + lam - 1
    """
    C0: float
    exponent: float
    per_order: dict

    def as_dict(self):
        return {'C0': self.C0, 'exponent': self.exponent,
                'per_order': {str(j): v for j, v in sorted(self.per_order.items())}}

def class_envelope_fit(symbol, indices):
    e = indices.symbol_class_exponent
    per = {}
    for j, v in symbols.norms(symbol).per_order.items():
        if v > 0:
            per[j] = math.exp((math.log(v) - e * gevrey.log_gamma(j + 1)) / (j + 1))
    return ClassEnvelope(max(per.values()) if per else 0.0, e, per)

## BATCH ##


@dataclass(frozen=True)
class BatchEntry:
    action: tuple
    result: NormalFormResult = None
    error: dict = None

    def values(self):
        "K_j at the action"
        if self.result is None:
            return ()
        z = (0,) * len(self.action)
        return tuple(self.result.p0.coeff(j, z, z) for j in range(self.result.p0.h_order + 1))

    def as_dict(self):
        d = {'action': list(self.action), 'error': self.error}
        if self.result is not None:
            d['normal_form'] = [[v.real, v.imag] for v in self.values()]
            d['max_residual'] = self.result.max_residual
        return d

def _batch_one(args):
    p, I, delta, kappa, N = args
    try:
        q = symbols.recenter(p, I)
        return BatchEntry(I, run_recursion(q, None, delta, kappa, N, FrequencyMode.constant, taylor_degree=0))
    except exceptions.CoreError as e:
        log_d("Batch action {} failed: {}".format(I, e.msg))
        return BatchEntry(I, None, e.detail())

def batch_over_grid(p, grid, delta, kappa, N=None):
    """
    Rerun the recursion at every flagged action of a NonresonantGrid, re-expanded about that action
    and carried at Taylor degree 0. Failures are recorded per action.
    """
    if p.taylor_degree < 1:
        raise exceptions.InputError("batch_over_grid", "K_0 needs Taylor degree >= 1 to supply the frequency")
    actions = grid.nonresonant_actions
    workers = pool.Pool(constants.worker_limit)
    entries = list(workers.imap(_batch_one, [(p, I, delta, kappa, N) for I in actions]))
    log_i("Batch over {} actions, {} failed".format(len(entries), sum(1 for e in entries if e.error)))
    return entries
