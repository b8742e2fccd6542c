"""
Truncated h-series of Fourier-Taylor coefficient tables on T^n x D and their composition product
"""
import cmath
import math
import functools
import logging

from dataclasses import dataclass
from types import MappingProxyType

from qbirkhoff.common import exceptions
from qbirkhoff.core import gevrey

log = logging.getLogger(__name__)
log_i = log.info
log_d = log.debug
log_w = log.warning
log_e = log.error
log_c = log.critical

PLAIN = "plain"
D = "D"

@functools.lru_cache(maxsize=256)
def _multi_indices(n, max_order):
    return tuple(gevrey.enumerate_multi_indices(n, max_order))

def _l1(k):
    return sum(abs(x) for x in k)

class TorusSymbol:
    """
    A semiclassical symbol sum_j h^j p_j(phi, I) truncated at h^N, each p_j a sparse table
    (k, gamma) -> complex of Fourier modes |k|_1 <= K times monomials (I - I0)^gamma, |gamma| <= M.
    Absent entries are zero. Instances are immutable.

    Params:
        n -- torus dimension
        h_order -- N
        fourier_radius -- K
        taylor_degree -- M
        base_action -- I0
        t_value -- the frozen time parameter
        orders -- list of N+1 mappings (k, gamma) -> complex
        clipped_mass -- magnitude dropped by the Fourier clamp when this symbol was produced
        taylor_tail_mass -- magnitude dropped by the Taylor clamp when this symbol was produced
    """

    __slots__ = ('n', 'h_order', 'fourier_radius', 'taylor_degree', 'base_action', 't_value',
                 '_orders', 'clipped_mass', 'taylor_tail_mass')

    def __init__(self, n, h_order, fourier_radius, taylor_degree, base_action=None, t_value=0.0,
                 orders=None, clipped_mass=0.0, taylor_tail_mass=0.0, check=True):
        if n < 1 or h_order < 0 or fourier_radius < 0 or taylor_degree < 0:
            raise exceptions.InputError("TorusSymbol", "invalid shape n={} N={} K={} M={}".format(
                n, h_order, fourier_radius, taylor_degree))
        base_action = (0.0,) * n if base_action is None else tuple(float(x) for x in base_action)
        if len(base_action) != n:
            raise exceptions.ShapeError("TorusSymbol", "base action has length {}, expected {}".format(
                len(base_action), n))
        object.__setattr__(self, 'n', int(n))
        object.__setattr__(self, 'h_order', int(h_order))
        object.__setattr__(self, 'fourier_radius', int(fourier_radius))
        object.__setattr__(self, 'taylor_degree', int(taylor_degree))
        object.__setattr__(self, 'base_action', base_action)
        object.__setattr__(self, 't_value', float(t_value))
        object.__setattr__(self, 'clipped_mass', float(clipped_mass))
        object.__setattr__(self, 'taylor_tail_mass', float(taylor_tail_mass))
        data = [dict() for _ in range(h_order + 1)]
        for j, d in enumerate(orders or ()):
            if j > h_order:
                if any(d.values()):
                    raise exceptions.InputError("TorusSymbol", "order {} exceeds h_order {}".format(j, h_order))
                continue
            for (k, g), c in d.items():
                k, g = tuple(int(x) for x in k), tuple(int(x) for x in g)
                if check:
                    self._check_entry(j, k, g)
                c = complex(c)
                if c != 0:
                    data[j][(k, g)] = c
        object.__setattr__(self, '_orders', tuple(MappingProxyType(d) for d in data))

    def __setattr__(self, name, value):
        raise AttributeError("TorusSymbol is immutable")

    def _check_entry(self, j, k, g):
        if len(k) != self.n or len(g) != self.n:
            raise exceptions.ShapeError("TorusSymbol", "entry ({}, {}, {}) does not match n={}".format(j, k, g, self.n))
        if any(x < 0 for x in g):
            raise exceptions.InputError("TorusSymbol", "negative Taylor exponent {}".format(g))
        if _l1(k) > self.fourier_radius:
            raise exceptions.InputError("TorusSymbol", "mode {} outside radius {}".format(k, self.fourier_radius))
        if sum(g) > self.taylor_degree:
            raise exceptions.InputError("TorusSymbol", "exponent {} exceeds degree {}".format(g, self.taylor_degree))

    ## CONSTRUCTION ##

    @classmethod
    def zero(cls, n, h_order, fourier_radius, taylor_degree, base_action=None, t_value=0.0):
        return cls(n, h_order, fourier_radius, taylor_degree, base_action, t_value)

    @classmethod
    def constant(cls, value, like):
        "The symbol value*h^0 with the shape of `like`"
        z = (0,) * like.n
        return like.replace(orders=[{(z, z): value}])

    @classmethod
    def from_terms(cls, terms, n, h_order, fourier_radius, taylor_degree, base_action=None, t_value=0.0):
        """
        Params:
            terms -- iterable of (j, k, gamma, coefficient); repeated keys add up
        """
        orders = [dict() for _ in range(h_order + 1)]
        for j, k, g, c in terms:
            if not 0 <= j <= h_order:
                raise exceptions.InputError("TorusSymbol", "order {} outside 0..{}".format(j, h_order))
            key = (tuple(int(x) for x in k), tuple(int(x) for x in g))
            orders[j][key] = orders[j].get(key, 0) + complex(c)
        return cls(n, h_order, fourier_radius, taylor_degree, base_action, t_value, orders)

    @classmethod
    def from_slices(cls, slices, like, h_order=None):
        "Stack single-order slices (h_order 0 symbols, None for zero) into orders 0..len-1"
        h_order = len(slices) - 1 if h_order is None else h_order
        orders = [dict(s.order(0)) if s is not None else {} for s in slices]
        clipped = sum(s.clipped_mass for s in slices if s is not None)
        tail = sum(s.taylor_tail_mass for s in slices if s is not None)
        return cls(like.n, h_order, like.fourier_radius, like.taylor_degree, like.base_action, like.t_value,
                   orders, clipped, tail)

    def replace(self, orders=None, h_order=None, fourier_radius=None, taylor_degree=None,
                clipped_mass=None, taylor_tail_mass=None):
        "Copy with some attributes replaced (entries must still fit)"
        return TorusSymbol(self.n,
                           self.h_order if h_order is None else h_order,
                           self.fourier_radius if fourier_radius is None else fourier_radius,
                           self.taylor_degree if taylor_degree is None else taylor_degree,
                           self.base_action, self.t_value,
                           self._orders if orders is None else orders,
                           self.clipped_mass if clipped_mass is None else clipped_mass,
                           self.taylor_tail_mass if taylor_tail_mass is None else taylor_tail_mass)

    def with_truncation(self, h_order=None, fourier_radius=None, taylor_degree=None):
        "Re-truncate, accumulating whatever is dropped into the clipped-mass diagnostics"
        N = self.h_order if h_order is None else h_order
        K = self.fourier_radius if fourier_radius is None else fourier_radius
        M = self.taylor_degree if taylor_degree is None else taylor_degree
        orders = [dict() for _ in range(N + 1)]
        clipped, tail = self.clipped_mass, self.taylor_tail_mass
        for j, d in enumerate(self._orders[:N + 1]):
            for (k, g), c in d.items():
                if _l1(k) > K:
                    clipped += abs(c)
                elif sum(g) > M:
                    tail += abs(c)
                else:
                    orders[j][(k, g)] = c
        return TorusSymbol(self.n, N, K, M, self.base_action, self.t_value, orders, clipped, tail, check=False)

    ## ACCESS ##

    def order(self, j):
        "Read-only mapping (k, gamma) -> coefficient of p_j (empty beyond h_order)"
        if 0 <= j <= self.h_order:
            return self._orders[j]
        return MappingProxyType({})

    def slice(self, j):
        "p_j as a single-order symbol"
        return TorusSymbol(self.n, 0, self.fourier_radius, self.taylor_degree, self.base_action, self.t_value,
                           [self.order(j)], check=False)

    def coeff(self, j, k, gamma):
        return self.order(j).get((tuple(k), tuple(gamma)), 0j)

    def entries(self):
        "Sorted (j, k, gamma, coefficient) tuples"
        for j, d in enumerate(self._orders):
            for (k, g) in sorted(d):
                yield j, k, g, d[(k, g)]

    def modes(self, j=None):
        orders = self._orders if j is None else [self.order(j)]
        return sorted({k for d in orders for k, _ in d})

    def is_zero(self):
        return not any(self._orders)

    def is_mode_zero(self):
        "True when every entry has k = 0"
        return all(not any(k) for d in self._orders for k, _ in d)

    def same_space(self, other):
        if not isinstance(other, TorusSymbol):
            raise exceptions.ShapeError("TorusSymbol", "not a symbol: {}".format(type(other)))
        if other.n != self.n:
            raise exceptions.ShapeError("TorusSymbol", "dimension mismatch {} vs {}".format(self.n, other.n))
        if other.base_action != self.base_action:
            raise exceptions.ShapeError("TorusSymbol", "base action mismatch {} vs {}".format(
                self.base_action, other.base_action))
        if other.t_value != self.t_value:
            raise exceptions.ShapeError("TorusSymbol", "t mismatch {} vs {}".format(self.t_value, other.t_value))

    def __eq__(self, other):
        if not isinstance(other, TorusSymbol):
            return NotImplemented
        return (self.n, self.h_order, self.fourier_radius, self.taylor_degree, self.base_action, self.t_value) == \
            (other.n, other.h_order, other.fourier_radius, other.taylor_degree, other.base_action, other.t_value) and \
            [dict(d) for d in self._orders] == [dict(d) for d in other._orders]

    __hash__ = None

    def __repr__(self):
        return "<TorusSymbol n={} N={} K={} M={} entries={}>".format(
            self.n, self.h_order, self.fourier_radius, self.taylor_degree, sum(len(d) for d in self._orders))

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __neg__(self):
        return scale(self, -1)

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return compose(self, other)

    ## SERIALIZATION ##

    def to_records(self):
        "Flat [j, k, gamma, re, im] records in sorted order"
        return [[j, list(k), list(g), c.real, c.imag] for j, k, g, c in self.entries()]

    @classmethod
    def from_records(cls, records, n, h_order, fourier_radius, taylor_degree, base_action=None, t_value=0.0):
        return cls.from_terms(((j, k, g, complex(re, im)) for j, k, g, re, im in records),
                              n, h_order, fourier_radius, taylor_degree, base_action, t_value)

    def header(self):
        return {'n': self.n, 'h_order': self.h_order, 'fourier_radius': self.fourier_radius,
                'taylor_degree': self.taylor_degree, 'base_action': list(self.base_action), 't_value': self.t_value}

    def as_dict(self):
        d = self.header()
        d['records'] = self.to_records()
        d['clipped_mass'] = self.clipped_mass
        d['taylor_tail_mass'] = self.taylor_tail_mass
        return d

    @classmethod
    def from_dict(cls, d):
        s = cls.from_records(d['records'], d['n'], d['h_order'], d['fourier_radius'], d['taylor_degree'],
                             d['base_action'], d['t_value'])
        return s.replace(clipped_mass=d.get('clipped_mass', 0.0), taylor_tail_mass=d.get('taylor_tail_mass', 0.0))


## COEFFICIENT TABLE KERNELS ##

def _d_action(d, gamma):
    if not any(gamma):
        return dict(d)
    out = {}
    for (k, b), c in d.items():
        if all(x >= y for x, y in zip(b, gamma)):
            w = 1
            for x, y in zip(b, gamma):
                for i in range(y):
                    w *= x - i
            out[(k, tuple(x - y for x, y in zip(b, gamma)))] = c * w
    return out

def _d_angle(d, gamma, convention=D):
    if not any(gamma):
        return dict(d)
    unit = 1 if convention == D else 1j ** sum(gamma)
    out = {}
    for (k, b), c in d.items():
        w = gevrey.power(k, gamma)
        if w:
            out[(k, b)] = c * (w * unit)
    return out

def _product(dp, dq, K, M, into, weight=1.0):
    """
    Collect the terms of weight * dp * dq into `into` (key -> list of terms).

    Returns:
        (fourier dropped, taylor dropped) term lists for the caller to sum
    """
    clipped, tail = {}, {}
    for (kp, bp), cp in dp.items():
        for (kq, bq), cq in dq.items():
            k = tuple(x + y for x, y in zip(kp, kq))
            b = tuple(x + y for x, y in zip(bp, bq))
            if _l1(k) > K:
                target = clipped
            elif sum(b) > M:
                target = tail
            else:
                target = into
            target.setdefault((k, b), []).append(cp * cq * weight)
    return clipped, tail

def _settle(terms):
    "Correctly rounded sums, so the result does not depend on accumulation order"
    out = {}
    for key, cs in terms.items():
        c = complex(math.fsum(x.real for x in cs), math.fsum(x.imag for x in cs))
        if c != 0:
            out[key] = c
    return out

def _mass(terms):
    return math.fsum(abs(c) for c in _settle(terms).values())

## ALGEBRA ##

def add(p, q):
    "p + q, truncations unified to the max"
    p.same_space(q)
    N = max(p.h_order, q.h_order)
    orders = []
    for j in range(N + 1):
        d = dict(p.order(j))
        for key, c in q.order(j).items():
            d[key] = d.get(key, 0) + c
        orders.append(d)
    return TorusSymbol(p.n, N, max(p.fourier_radius, q.fourier_radius), max(p.taylor_degree, q.taylor_degree),
                       p.base_action, p.t_value, orders, p.clipped_mass + q.clipped_mass,
                       p.taylor_tail_mass + q.taylor_tail_mass, check=False)

def scale(p, c):
    "c * p"
    return p.replace(orders=[{key: v * c for key, v in p.order(j).items()} for j in range(p.h_order + 1)])

def sub(p, q):
    return add(p, scale(q, -1))

def deriv_action(p, gamma):
    "d_I^gamma p, exact on the Taylor monomials"
    gamma = tuple(gevrey.MultiIndex.of(gamma))
    if len(gamma) != p.n:
        raise exceptions.ShapeError("deriv_action", "gamma has length {}, expected {}".format(len(gamma), p.n))
    return p.replace(orders=[_d_action(p.order(j), gamma) for j in range(p.h_order + 1)])

def deriv_angle(p, gamma, convention=D):
    """
    Angle derivative per Fourier mode: multiplies mode k by k^gamma (D = -i d_phi)
    or by (ik)^gamma (plain d_phi)
    """
    gamma = tuple(gevrey.MultiIndex.of(gamma))
    if len(gamma) != p.n:
        raise exceptions.ShapeError("deriv_angle", "gamma has length {}, expected {}".format(len(gamma), p.n))
    if convention not in (D, PLAIN):
        raise exceptions.InputError("deriv_angle", "unknown convention '{}'".format(convention))
    return p.replace(orders=[_d_angle(p.order(j), gamma, convention) for j in range(p.h_order + 1)])

def bidifferential(p, q, gamma, fourier_radius=None, taylor_degree=None):
    """
    (1/gamma!) d_I^gamma p . D_phi^gamma q for single-order slices.

    Returns:
        single-order symbol carrying its clipped mass
    """
    p.same_space(q)
    K = max(p.fourier_radius, q.fourier_radius) if fourier_radius is None else fourier_radius
    M = max(p.taylor_degree, q.taylor_degree) if taylor_degree is None else taylor_degree
    gamma = tuple(gamma)
    out = {}
    clipped, tail = _product(_d_action(p.order(0), gamma), _d_angle(q.order(0), gamma), K, M, out,
                             1.0 / gevrey.multi_factorial(gamma))
    return TorusSymbol(p.n, 0, K, M, p.base_action, p.t_value, [_settle(out)],
                       _mass(clipped), _mass(tail), check=False)

def multiply(p, q, fourier_radius=None, taylor_degree=None):
    "Pointwise product of single-order slices"
    return bidifferential(p, q, (0,) * p.n, fourier_radius, taylor_degree)

def compose(p, q, h_order=None, fourier_radius=None, taylor_degree=None):
    """
    The composition product

        c_j = sum_{r+s+|gamma|=j} (1/gamma!) d_I^gamma p_r . D_phi^gamma q_s

    with D = -i d_phi acting on the second factor. Modes add; entries beyond the Fourier radius
    or the Taylor degree are dropped and their magnitude recorded in clipped_mass / taylor_tail_mass.

    Params:
        h_order -- default min of the two h-orders
        fourier_radius -- default max of the two radii
        taylor_degree -- default max of the two degrees
    """
    p.same_space(q)
    N = min(p.h_order, q.h_order) if h_order is None else h_order
    K = max(p.fourier_radius, q.fourier_radius) if fourier_radius is None else fourier_radius
    M = max(p.taylor_degree, q.taylor_degree) if taylor_degree is None else taylor_degree
    n = p.n
    orders = [dict() for _ in range(N + 1)]
    clipped = [dict() for _ in range(N + 1)]
    tail = [dict() for _ in range(N + 1)]
    dp_cache, dq_cache = {}, {}
    for r in range(min(p.h_order, N) + 1):
        pr = p.order(r)
        if not pr:
            continue
        for s in range(min(q.h_order, N - r) + 1):
            qs = q.order(s)
            if not qs:
                continue
            for gamma in _multi_indices(n, min(N - r - s, p.taylor_degree)):
                if (r, gamma) not in dp_cache:
                    dp_cache[(r, gamma)] = _d_action(pr, gamma)
                if (s, gamma) not in dq_cache:
                    dq_cache[(s, gamma)] = _d_angle(qs, gamma)
                A, B = dp_cache[(r, gamma)], dq_cache[(s, gamma)]
                if not A or not B:
                    continue
                j = r + s + sum(gamma)
                c, t = _product(A, B, K, M, orders[j], 1.0 / gevrey.multi_factorial(gamma))
                for src, dst in ((c, clipped[j]), (t, tail[j])):
                    for key, v in src.items():
                        dst.setdefault(key, []).extend(v)
    cm = sum(_mass(d) for d in clipped) + p.clipped_mass + q.clipped_mass
    tm = sum(_mass(d) for d in tail) + p.taylor_tail_mass + q.taylor_tail_mass
    if cm > 0:
        log_d("compose: clipped mass {:.3e} beyond radius {}".format(cm, K))
    return TorusSymbol(n, N, K, M, p.base_action, p.t_value, [_settle(d) for d in orders], cm, tm, check=False)

def angle_average(p):
    "The k = 0 part"
    return p.replace(orders=[{(k, g): c for (k, g), c in p.order(j).items() if not any(k)}
                             for j in range(p.h_order + 1)])

def oscillating_part(p):
    "The k != 0 part"
    return p.replace(orders=[{(k, g): c for (k, g), c in p.order(j).items() if any(k)}
                             for j in range(p.h_order + 1)])

def evaluate(p, phi, I, h=1.0, radius=None):
    """
    sum_j h^j sum_(k,gamma) c (I - I0)^gamma e^(i<k,phi>), summed in sorted entry order.

    Params:
        radius -- when given, |I - I0|_inf must not exceed it
    """
    if len(phi) != p.n or len(I) != p.n:
        raise exceptions.ShapeError("evaluate", "point has wrong dimension")
    d = [a - b for a, b in zip(I, p.base_action)]
    if radius is not None and max(abs(x) for x in d) > radius:
        raise exceptions.DomainError("evaluate", "action {} outside the validity radius {}".format(I, radius))
    total = 0j
    hj = 1.0
    for j in range(p.h_order + 1):
        acc = 0j
        for (k, g) in sorted(p.order(j)):
            acc += p.order(j)[(k, g)] * gevrey.power(d, g) * cmath.exp(1j * sum(a * b for a, b in zip(k, phi)))
        total += hj * acc
        hj *= h
    return total

@dataclass(frozen=True)
class SymbolNorm:
    """
    Per-order l1 norms of the coefficient tables.

    Params:
        per_order -- j -> sum of |coefficients| at order j
        total -- sum over j
    """
    per_order: dict
    total: float

    def as_dict(self):
        return {'per_order': {str(j): v for j, v in sorted(self.per_order.items())}, 'total': self.total}


def norms(p):
    per = {j: math.fsum(abs(c) for c in p.order(j).values()) for j in range(p.h_order + 1)}
    return SymbolNorm(per, math.fsum(per.values()))

def shell_norms(p, j=0):
    "m -> sum of |coefficients| with |k|_1 = m at order j"
    out = {}
    for (k, g), c in p.order(j).items():
        m = _l1(k)
        out[m] = out.get(m, 0.0) + abs(c)
    return dict(sorted(out.items()))

def shell_max(p, j=0):
    "m -> max |coefficient| with |k|_1 = m at order j"
    out = {}
    for (k, g), c in p.order(j).items():
        m = _l1(k)
        out[m] = max(out.get(m, 0.0), abs(c))
    return dict(sorted(out.items()))

def is_real(p, tol=0.0):
    "coeff(j, -k, gamma) == conj(coeff(j, k, gamma)) for every entry, up to tol * |c|"
    for j in range(p.h_order + 1):
        d = p.order(j)
        for (k, g), c in d.items():
            other = d.get((tuple(-x for x in k), g), 0j)
            if abs(other - c.conjugate()) > tol * abs(c):
                return False
    return True

def imaginary_mass(p):
    "Sum of |Im c| over the mode-0 entries, per order"
    return {j: math.fsum(abs(c.imag) for (k, g), c in p.order(j).items() if not any(k)) for j in range(p.h_order + 1)}

def recenter(p, action):
    """
    Re-expand every Taylor polynomial about a new base action. Exact, since the tables are polynomials
    of degree <= M in (I - I0).
    """
    action = tuple(float(x) for x in action)
    if len(action) != p.n:
        raise exceptions.ShapeError("recenter", "action has length {}, expected {}".format(len(action), p.n))
    shift = [a - b for a, b in zip(action, p.base_action)]
    orders = []
    for j in range(p.h_order + 1):
        terms = {}
        for (k, g), c in p.order(j).items():
            for beta in _multi_indices(p.n, sum(g)):
                if not all(x <= y for x, y in zip(beta, g)):
                    continue
                w = 1.0
                for x, y, s in zip(beta, g, shift):
                    w *= math.comb(y, x) * s ** (y - x)
                if w:
                    terms.setdefault((k, beta), []).append(c * w)
        orders.append(_settle(terms))
    return TorusSymbol(p.n, p.h_order, p.fourier_radius, p.taylor_degree, action, p.t_value, orders,
                       p.clipped_mass, p.taylor_tail_mass, check=False)
