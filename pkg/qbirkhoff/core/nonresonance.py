"""
Frequency maps, lattice shells and small-divisor scans
"""
import math
import itertools
import logging

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from gevent import pool

from qbirkhoff.common import constants, exceptions
from qbirkhoff.core import gevrey

log = logging.getLogger(__name__)
log_i = log.info
log_d = log.debug
log_w = log.warning
log_e = log.error
log_c = log.critical

def _as_vector(x, where="vector"):
    try:
        return tuple(float(v) for v in x)
    except TypeError:
        raise exceptions.InputError(where, "expected a vector, got {}".format(x))

@dataclass(frozen=True)
class FrequencySpec:
    """
    The frequency map I -> omega(I; t) as n polynomials in (I - I0) whose coefficients are
    polynomials in t (ascending coefficient tuples).

    Params:
        dimension -- n
        base_action -- I0
        components -- per component a tuple of (exponent, t_coeffs) terms
        form -- 'constant' or 'polynomial'
    """
    dimension: int
    base_action: tuple
    components: tuple
    form: str = "polynomial"

    def __post_init__(self):
        n = self.dimension
        where = "FrequencySpec"
        if n < 1:
            raise exceptions.InputError(where, "dimension must be >= 1")
        if len(self.base_action) != n:
            raise exceptions.ShapeError(where, "base action has length {}, expected {}".format(
                len(self.base_action), n))
        if len(self.components) != n:
            raise exceptions.ShapeError(where, "{} components given for dimension {}".format(len(self.components), n))
        for comp in self.components:
            for e, c in comp:
                if len(e) != n or any(x < 0 for x in e):
                    raise exceptions.ShapeError(where, "bad exponent {}".format(e))
                if not c:
                    raise exceptions.InputError(where, "empty t-coefficient list for exponent {}".format(e))

    @classmethod
    def constant(cls, omega, base_action=None, t_coeffs=None):
        """
        A constant frequency vector, optionally t-dependent.

        Params:
            omega -- the vector at t = 0 (ignored when t_coeffs is given)
            t_coeffs -- per component ascending t-polynomial coefficients
        """
        omega = _as_vector(omega, "FrequencySpec.constant")
        n = len(omega)
        base_action = (0.0,) * n if base_action is None else _as_vector(base_action)
        zero = (0,) * n
        if t_coeffs is None:
            t_coeffs = [(w,) for w in omega]
        comps = tuple(((zero, tuple(float(x) for x in c)),) for c in t_coeffs)
        return cls(n, base_action, comps, "constant")

    @classmethod
    def polynomial(cls, components, base_action):
        """
        Params:
            components -- per component a mapping exponent -> coefficient or t-coefficient list
            base_action -- I0
        """
        base_action = _as_vector(base_action)
        comps = []
        for comp in components:
            terms = []
            for e, c in sorted(comp.items() if isinstance(comp, dict) else comp):
                c = (float(c),) if isinstance(c, (int, float)) else tuple(float(x) for x in c)
                terms.append((tuple(int(x) for x in e), c))
            comps.append(tuple(terms))
        return cls(len(base_action), base_action, tuple(comps), "polynomial")

    @classmethod
    def from_gradient(cls, symbol, order=0):
        """
        omega = grad K_0 as a polynomial map, K_0 being the mode-0 Taylor polynomial at the given order
        of a TorusSymbol
        """
        n = symbol.n
        comps = [dict() for _ in range(n)]
        for (k, g), c in sorted(symbol.order(order).items()):
            if any(k):
                raise exceptions.InputError("FrequencySpec.from_gradient", "order {} is not mode-0".format(order))
            if abs(c.imag) > constants.reality_tol * max(1.0, abs(c)):
                raise exceptions.InputError("FrequencySpec.from_gradient", "complex coefficient {} at {}".format(c, g))
            for i in range(n):
                if g[i]:
                    e = tuple(x - (1 if j == i else 0) for j, x in enumerate(g))
                    comps[i][e] = comps[i].get(e, 0.0) + c.real * g[i]
        comps = [c if c else {(0,) * n: 0.0} for c in comps]
        return cls.polynomial(comps, symbol.base_action)

    @property
    def is_constant(self):
        "True when omega has no I-dependence"
        return all(not any(e) for comp in self.components for e, _ in comp)

    @property
    def is_t_dependent(self):
        return any(len(c) > 1 for comp in self.components for _, c in comp)

    def at_t(self, t):
        "The same map with its t-polynomials evaluated at t"
        comps = tuple(tuple((e, (float(P.polyval(t, c)),)) for e, c in comp) for comp in self.components)
        return FrequencySpec(self.dimension, self.base_action, comps, self.form)

    def evaluate(self, I=None, t=0.0):
        "omega(I; t) as a numpy array (I defaults to the base action)"
        I = self.base_action if I is None else I
        if len(I) != self.dimension:
            raise exceptions.ShapeError("FrequencySpec.evaluate", "action has length {}".format(len(I)))
        d = [a - b for a, b in zip(I, self.base_action)]
        return np.array([sum(P.polyval(t, c) * gevrey.power(d, e) for e, c in comp) for comp in self.components])

    def pairing_taylor(self, k, t=0.0, max_degree=None):
        """
        Taylor coefficients of <omega(I; t), k> in (I - I0).

        Returns:
            dict exponent -> real, truncated at total degree max_degree
        """
        out = {}
        for ki, comp in zip(k, self.components):
            if not ki:
                continue
            for e, c in comp:
                if max_degree is not None and sum(e) > max_degree:
                    continue
                out[e] = out.get(e, 0.0) + ki * float(P.polyval(t, c))
        return out

    def lipschitz_bound(self, k, t=0.0):
        "Bound L of |<omega(I) - omega(I0), k>| <= L r on |I - I0|_inf <= r <= 1"
        return sum(abs(c) for e, c in self.pairing_taylor(k, t).items() if any(e))

    def describe(self):
        comps = [[{'exponent': list(e), 'coeffs': list(c)} for e, c in comp] for comp in self.components]
        return {'form': self.form, 'dimension': self.dimension, 'base_action': list(self.base_action),
                'components': comps}


## LATTICE ##

def shell_size(n, m):
    "Number of k in Z^n with |k|_1 = m"
    if m == 0:
        return 1
    return sum(2 ** i * math.comb(n, i) * math.comb(m - 1, i - 1) for i in range(1, min(n, m) + 1))

def _abs_parts(n, m):
    if n == 1:
        yield (m,)
        return
    for first in range(m, -1, -1):
        for rest in _abs_parts(n - 1, m - first):
            yield (first,) + rest

def enumerate_shell(n, m):
    """
    Every k in Z^n with |k|_1 = m, exactly once, in a fixed order.

    Returns:
        list of integer tuples
    """
    if n < 1 or m < 1:
        raise exceptions.InputError("enumerate_shell", "need n >= 1 and m >= 1, got n={} m={}".format(n, m))
    size = shell_size(n, m)
    if size > constants.max_shell_vectors:
        raise exceptions.SizeError("enumerate_shell", "shell n={} m={} holds {} vectors".format(n, m, size))
    out = []
    for parts in _abs_parts(n, m):
        nz = [i for i, p in enumerate(parts) if p]
        for signs in itertools.product((1, -1), repeat=len(nz)):
            k = list(parts)
            for i, s in zip(nz, signs):
                k[i] *= s
            out.append(tuple(k))
    return out

def enumerate_ball(n, K):
    "All k != 0 with |k|_1 <= K, shell by shell"
    out = []
    for m in range(1, K + 1):
        out.extend(enumerate_shell(n, m))
    return out

def canonical(k):
    "The representative of +-k whose first nonzero entry is positive"
    for x in k:
        if x:
            return tuple(k) if x > 0 else tuple(-y for y in k)
    return tuple(k)

def l1(k):
    return sum(abs(x) for x in k)

## DIVISOR SCAN ##

@dataclass(frozen=True)
class DivisorReport:
    """
    Worst small divisors up to radius K.

    Params:
        k_radius -- K
        kappa_max_per_shell -- m -> min over |k|_1 = m of |<k,omega>| Delta(m)
        worst_k -- arg-min of |<k,omega>| Delta(|k|_1), sign-normalized
        verdict -- every shell minimum >= kappa (True when no kappa was given)
        diophantine_tau_fit -- max over shells m >= 2 of log(1/min |<k,omega>|)/log m
        kappa_max -- the largest kappa for which the condition holds up to K
        shell_min_divisor -- m -> min |<k,omega>| over the shell
        shell_worst_k -- m -> arg-min in the shell
    """
    k_radius: int
    kappa_max_per_shell: dict
    worst_k: tuple
    verdict: bool
    diophantine_tau_fit: float
    kappa_max: float
    kappa: float = None
    omega: tuple = ()
    shell_min_divisor: dict = field(default_factory=dict)
    shell_worst_k: dict = field(default_factory=dict)

    def as_dict(self):
        return {'k_radius': self.k_radius,
                'kappa_max_per_shell': {str(m): v for m, v in sorted(self.kappa_max_per_shell.items())},
                'shell_min_divisor': {str(m): v for m, v in sorted(self.shell_min_divisor.items())},
                'shell_worst_k': {str(m): list(v) for m, v in sorted(self.shell_worst_k.items())},
                'worst_k': list(self.worst_k), 'verdict': self.verdict,
                'diophantine_tau_fit': self.diophantine_tau_fit, 'kappa_max': self.kappa_max,
                'kappa': self.kappa, 'omega': list(self.omega),
                'label': "verified up to |k|_1 <= {}".format(self.k_radius)}


def is_resonant(divisor, k, omega):
    return abs(divisor) <= constants.resonance_tol * max(1.0, l1(k) * max(abs(w) for w in omega))

def scan_divisors(omega, delta, K, kappa=None):
    """
    min over 0 < |k|_1 <= K of |<k,omega>| Delta(|k|_1), with per-shell minima.

    Params:
        omega -- frequency vector
        delta -- ApproximationFunction
        K -- radius
        kappa -- when given, the verdict compares every shell minimum against it

    Returns:
        DivisorReport
    """
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 1 or not np.any(omega):
        raise exceptions.InputError("scan_divisors", "omega must be a non-zero vector")
    if K < 1:
        raise exceptions.InputError("scan_divisors", "K must be >= 1")
    n = len(omega)
    per_shell, shell_min, shell_k = {}, {}, {}
    worst, worst_k, tau = math.inf, None, None
    for m in range(1, K + 1):
        ks = np.array(enumerate_shell(n, m), dtype=np.int64)
        dots = np.abs(ks @ omega)
        i = int(np.argmin(dots))
        k = canonical(ks[i].tolist())
        if is_resonant(dots[i], k, omega):
            raise exceptions.ResonanceError("scan_divisors", k)
        d = float(dots[i])
        shell_min[m], shell_k[m] = d, k
        per_shell[m] = d * delta(m)
        if per_shell[m] < worst:
            worst, worst_k = per_shell[m], k
        if m >= 2:
            x = math.log(1 / d) / math.log(m)
            tau = x if tau is None else max(tau, x)
    verdict = True if kappa is None else all(v >= kappa for v in per_shell.values())
    return DivisorReport(K, per_shell, worst_k, verdict, tau, worst, kappa,
                         tuple(float(w) for w in omega), shell_min, shell_k)

@dataclass(frozen=True)
class NonresonantGrid:
    """
    A flagged grid of actions standing in for the nonresonant set.

    Params:
        actions -- action vectors
        flags -- True where the divisor condition holds up to K
        t_value -- t
        kappa_max -- per action, None where resonant
        k_radius -- K
        kappa -- tested kappa
    """
    actions: tuple
    flags: tuple
    t_value: float
    kappa_max: tuple = ()
    k_radius: int = 0
    kappa: float = 0.0

    @property
    def nonresonant_actions(self):
        return tuple(a for a, f in zip(self.actions, self.flags) if f)

    def as_dict(self):
        return {'actions': [list(a) for a in self.actions], 'flags': list(self.flags), 't_value': self.t_value,
                'kappa_max': list(self.kappa_max), 'k_radius': self.k_radius, 'kappa': self.kappa,
                'label': "finite grid discretization of the nonresonant set, verified up to |k|_1 <= {}".format(
                    self.k_radius)}


def _flag_action(args):
    freq, delta, kappa, K, I, t = args
    omega = freq.evaluate(I, t)
    try:
        report = scan_divisors(omega, delta, K, kappa)
    except exceptions.ResonanceError as e:
        log_d("Action {} resonant at k={}".format(I, e.k))
        return False, None
    return report.kappa_max >= kappa, report.kappa_max

def mark_nonresonant_grid(freq, delta, kappa, K, actions, t=0.0):
    """
    Flag the actions whose frequency omega(I; t) satisfies the divisor condition with kappa up to K.
    Resonant actions are flagged False, the grid never aborts.

    Returns:
        NonresonantGrid
    """
    assert isinstance(freq, FrequencySpec)
    actions = tuple(tuple(float(x) for x in a) for a in actions)
    p = pool.Pool(constants.worker_limit)
    results = list(p.imap(_flag_action, [(freq, delta, kappa, K, I, t) for I in actions]))
    flags = tuple(bool(f) for f, _ in results)
    kmax = tuple(v for _, v in results)
    log_d("Nonresonant grid at t={}: {}/{} actions flagged".format(t, sum(flags), len(flags)))
    return NonresonantGrid(actions, flags, float(t), kmax, K, kappa)

## DERIVATIVE PROBE ##

def _central(f, x, orders, steps):
    "Tensor-product central difference of the given orders"
    active = [(i, o) for i, o in enumerate(orders) if o]
    if not active:
        return f(x)
    total = 0.0
    stencils = [[(j, (-1) ** j * math.comb(o, j)) for j in range(o + 1)] for _, o in active]
    for combo in itertools.product(*stencils):
        y = list(x)
        w = 1.0
        for (i, o), (j, c) in zip(active, combo):
            y[i] = x[i] + (o / 2 - j) * steps[i]
            w *= c
        total += w * f(y)
    for i, o in active:
        total /= steps[i] ** o
    return total

def lemma_envelope(C0, alpha_order, delta_order, alpha_factorial, delta_factorial, k_norm, delta, rho):
    "C0^(|a|+d+1) a! d! max_j ((|a|+d-j)!^rho |k|^j Delta(|k|)^(j+1))"
    tot = alpha_order + delta_order
    D = delta(k_norm)
    best = max(gevrey.factorial(tot - j) ** rho * k_norm ** j * D ** (j + 1) for j in range(tot + 1))
    return C0 ** (tot + 1) * alpha_factorial * delta_factorial * best

@dataclass(frozen=True)
class ProbeRow:
    alpha: tuple
    delta_order: int
    value: float
    envelope: float
    ratio: float
    richardson_ok: bool
    direct_bound: float = None

    def as_dict(self):
        return {'alpha': list(self.alpha), 'delta_order': self.delta_order, 'value': self.value,
                'envelope': self.envelope, 'ratio': self.ratio, 'richardson_ok': self.richardson_ok,
                'direct_bound': self.direct_bound}


def divisor_derivative_probe(freq, delta, k, orders, t=0.0, step=None, C0=1.0, rho=1.0, kappa=None):
    """
    Finite-difference magnitudes of D_I^alpha D_t^delta <omega(I;t),k>^-1 at the base action,
    compared with the envelope C0^(|a|+d+1) a! d! max_j((|a|+d-j)!^rho |k|^j Delta^(j+1)(|k|)).

    Params:
        orders -- multi-indices of length n (no t-derivative) or n+1 (last entry is the t order),
            |alpha| + delta <= 3
        step -- finite-difference step, default richardson_step * (1 + |I0|)
        kappa -- when given, the zero order row also carries the direct bound Delta(|k|)/kappa

    Returns:
        list of ProbeRow
    """
    assert isinstance(freq, FrequencySpec)
    n = freq.dimension
    k = tuple(int(x) for x in k)
    if len(k) != n:
        raise exceptions.ShapeError("divisor_derivative_probe", "k has length {}, expected {}".format(len(k), n))
    I0 = freq.base_action
    base = float(np.dot(freq.evaluate(I0, t), k))
    if is_resonant(base, k, freq.evaluate(I0, t)):
        raise exceptions.ResonanceError("divisor_derivative_probe", k)
    if step is None:
        step = constants.richardson_step * (1 + max(abs(x) for x in I0))

    def f(y):
        return 1.0 / float(np.dot(freq.evaluate(y[:n], y[n]), k))

    x0 = list(I0) + [t]
    rows = []
    for o in orders:
        o = tuple(o)
        if len(o) == n:
            o = o + (0,)
        if len(o) != n + 1:
            raise exceptions.ShapeError("divisor_derivative_probe", "order {} has wrong length".format(o))
        alpha, d = gevrey.MultiIndex(o[:n]), o[n]
        if alpha.order + d > 3:
            raise exceptions.InputError("divisor_derivative_probe", "orders above 3 are not probed: {}".format(o))
        coarse = _central(f, x0, o, [step] * (n + 1))
        fine = _central(f, x0, o, [step / 2] * (n + 1))
        value = fine + (fine - coarse) / 3 if alpha.order + d else fine
        scale = max(abs(fine), abs(coarse))
        ok = abs(fine - coarse) <= constants.richardson_rtol * scale or scale == 0.0 or not (alpha.order + d)
        if not ok:
            log_w("Richardson disagreement for order {} at k={}: {} vs {}".format(o, k, coarse, fine))
        env = lemma_envelope(C0, alpha.order, d, alpha.factorial, gevrey.factorial(d), l1(k), delta, rho)
        direct = delta(l1(k)) / kappa if (kappa and not alpha.order + d) else None
        rows.append(ProbeRow(alpha.entries, d, abs(value), env, abs(value) / env, ok, direct))
    return rows

## CONTINUED FRACTIONS ##

def continued_fraction(x, depth=12, eps=1e-12):
    "Leading partial quotients [a0; a1, a2, ...] of x"
    out = []
    for _ in range(depth):
        a = math.floor(x)
        out.append(int(a))
        rem = x - a
        if rem < eps:
            break
        x = 1 / rem
    return out

def convergents(x, depth=12):
    "Successive convergents p/q of x as (p, q) pairs"
    out = []
    p0, q0, p1, q1 = 1, 0, 0, 1
    for a in continued_fraction(x, depth):
        p0, p1 = a * p0 + p1, p0
        q0, q1 = a * q0 + q1, q0
        out.append((p0, q0))
    return out
