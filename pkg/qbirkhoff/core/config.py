"""
Problem configuration: YAML file <-> validated ProblemConfig
"""
import logging

from dataclasses import dataclass, field

import yaml
from numpy.polynomial import polynomial as P

from qbirkhoff.common import constants, exceptions
from qbirkhoff.core import gevrey
from qbirkhoff.core.approximation import ApproximationFunction
from qbirkhoff.core.nonresonance import FrequencySpec
from qbirkhoff.core.symbols import TorusSymbol

log = logging.getLogger(__name__)
log_i = log.info
log_d = log.debug
log_w = log.warning
log_e = log.error
log_c = log.critical

FREQUENCY_GRADIENT = "gradient"

@dataclass(frozen=True)
class Truncation:
    N: int
    K: int
    M: int

@dataclass(frozen=True)
class SymbolTerm:
    """
    One coefficient of the input symbol.

    Params:
        j -- h-order
        k -- Fourier mode
        gamma -- exponent of (I - I0)
        coeffs -- ascending t-polynomial of complex coefficients (a single entry when t-independent)
    """
    j: int
    k: tuple
    gamma: tuple
    coeffs: tuple

    def at(self, t):
        return complex(P.polyval(t, self.coeffs)) if len(self.coeffs) > 1 else self.coeffs[0]

@dataclass(frozen=True)
class RunFlags:
    "Which stages and diagnostics the pipeline runs"
    validity: bool = True
    nonresonance: bool = True
    recursion: bool = True
    decay: bool = True
    growth: bool = True
    amplification: bool = False
    batch: bool = False
    mode: str = None

@dataclass(frozen=True)
class ProblemConfig:
    """
    Params:
        dimension -- n
        gevrey -- GevreyIndices
        delta -- ApproximationFunction
        kappa -- divisor constant
        frequency -- FrequencySpec, or None to take grad K_0
        base_action -- I0
        truncation -- (N, K, M)
        t_values -- the t's to run at
        symbol_terms -- tuple of SymbolTerm
        run -- RunFlags
        eta -- truncation rule constant
        h_values -- h's for the optimal truncation evaluation
        seed -- seed of the randomized suites
        tolerance -- residual tolerance of the exit status
        lemma_s -- s values for the Gamma_s bounds
        lemma_eta -- eta values for the Gamma_s bounds
        batch_actions -- actions for the per-torus batch
    """
    dimension: int
    gevrey: gevrey.GevreyIndices
    delta: ApproximationFunction
    kappa: float
    frequency: FrequencySpec
    base_action: tuple
    truncation: Truncation
    t_values: tuple
    symbol_terms: tuple
    run: RunFlags = field(default_factory=RunFlags)
    eta: float = constants.truncation_eta
    h_values: tuple = ()
    seed: int = constants.seed
    tolerance: float = constants.tolerance
    lemma_s: tuple = (0, 2, 5)
    lemma_eta: tuple = (0.5, 1.0)
    batch_actions: tuple = ()

    def symbol_at(self, t):
        "The input symbol with its t-polynomials evaluated"
        tr = self.truncation
        terms = [(s.j, s.k, s.gamma, s.at(t)) for s in self.symbol_terms]
        return TorusSymbol.from_terms(terms, self.dimension, tr.N, tr.K, tr.M, self.base_action, t)

    def frequency_at(self, t):
        if self.frequency is None:
            return FrequencySpec.from_gradient(self.symbol_at(t), 0)
        return self.frequency.at_t(t)

    @property
    def mode(self):
        return constants.FrequencyMode(self.run.mode) if self.run.mode else None

## PARSING ##

class _Checker:
    "Collects (field path, constraint) violations"

    def __init__(self):
        self.violations = []

    def add(self, path, why):
        self.violations.append((path, why))

    def get(self, d, key, path, kind, default=None, required=True):
        if not isinstance(d, dict) or key not in d or d[key] is None:
            if required:
                self.add(path, "required")
            return default
        v = d[key]
        if kind is float and isinstance(v, (int, float)) and not isinstance(v, bool):
            return float(v)
        if kind is int and isinstance(v, int) and not isinstance(v, bool):
            return v
        if kind in (bool, str, dict, list) and isinstance(v, kind):
            return v
        self.add(path, "expected {}, got {!r}".format(kind.__name__, v))
        return default

    def vector(self, v, path, n=None, kind=float):
        if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            self.add(path, "expected a list of numbers")
            return None
        if kind is int and not all(isinstance(x, int) for x in v):
            self.add(path, "expected integers")
            return None
        if n is not None and len(v) != n:
            self.add(path, "expected length {}, got {}".format(n, len(v)))
            return None
        return tuple(kind(x) for x in v)

    def complex_(self, v, path):
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return complex(float(v), 0.0)
        pair = self.vector(v, path, 2)
        return complex(*pair) if pair else None

def _gevrey(ck, raw):
    d = ck.get(raw, 'gevrey', 'gevrey', dict, {})
    vals = {k: ck.get(d, k, 'gevrey.' + k, float) for k in ('sigma', 'mu', 'lam', 'rho')}
    rho_bar = ck.get(d, 'rho_bar', 'gevrey.rho_bar', float, required=False)
    if any(v is None for v in vals.values()):
        return None
    try:
        return gevrey.GevreyIndices(rho_bar=rho_bar, **vals)
    except exceptions.InputError as e:
        ck.add('gevrey', e.msg)

def _delta(ck, raw, sigma, path='delta'):
    d = ck.get(raw, path.split('.')[-1], path, dict, {})
    kind = ck.get(d, 'kind', path + '.kind', str)
    if kind is None or sigma is None:
        return None
    params = {k: v for k, v in d.items() if k not in ('kind', 'inner', 'sigma')}
    own_sigma = d.get('sigma', sigma)
    if kind == constants.DeltaKind.sub_exponential.value and isinstance(own_sigma, (int, float)):
        a = params.get('a')
        sigma = own_sigma
        if isinstance(a, (int, float)) and not a < 1 / sigma:
            ck.add(path + '.a', "sub_exponential rule requires a < 1/sigma = {:g}, got {:g}".format(1 / sigma, a))
            return None
    if 'inner' in d:
        inner = _delta(ck, d, sigma, path + '.inner')
        if inner is None:
            return None
        params['inner'] = inner.describe()
    try:
        return ApproximationFunction.of(kind, d.get('sigma', sigma), **params)
    except exceptions.ConfigViolationError as e:
        for p, why in e.violations:
            ck.add(path + p[len('delta'):], why)
    except (exceptions.InputError, TypeError, ValueError) as e:
        ck.add(path, getattr(e, 'msg', str(e)))

def _frequency(ck, raw, n, base):
    d = ck.get(raw, 'frequency', 'frequency', dict, {'form': FREQUENCY_GRADIENT}, required=False)
    form = ck.get(d, 'form', 'frequency.form', str, FREQUENCY_GRADIENT, required=False)
    if form == FREQUENCY_GRADIENT or n is None or base is None:
        return None
    if form not in ("constant", "polynomial"):
        ck.add('frequency.form', "expected gradient, constant or polynomial, got '{}'".format(form))
        return None
    if form == "constant" and 'omega' in d:
        omega = ck.vector(d['omega'], 'frequency.omega', n)
        return FrequencySpec.constant(omega, base) if omega else None
    comps = ck.get(d, 'components', 'frequency.components', list, [])
    if len(comps) != n:
        ck.add('frequency.components', "expected {} components".format(n))
        return None
    out = []
    for i, comp in enumerate(comps):
        terms = []
        for q, term in enumerate(comp if isinstance(comp, list) else []):
            path = 'frequency.components[{}][{}]'.format(i, q)
            e = ck.vector(ck.get(term, 'exponent', path + '.exponent', list, []), path + '.exponent', n, int)
            c = ck.vector(ck.get(term, 'coeffs', path + '.coeffs', list, []), path + '.coeffs')
            if e is None or not c:
                ck.add(path, "needs an exponent and a non-empty coefficient list")
                continue
            if any(x < 0 for x in e) or (form == "constant" and any(e)):
                ck.add(path + '.exponent', "invalid exponent {}".format(list(e)))
                continue
            terms.append((e, c))
        out.append(terms)
    if form == "constant":
        return FrequencySpec(n, base, tuple(tuple(t) for t in out), "constant")
    return FrequencySpec.polynomial([dict(t) for t in out], base)

def _terms(ck, raw, n, tr):
    out = []
    for i, term in enumerate(ck.get(raw, 'symbol', 'symbol', list, [])):
        path = 'symbol[{}]'.format(i)
        j = ck.get(term, 'j', path + '.j', int)
        k = ck.vector(ck.get(term, 'k', path + '.k', list, []), path + '.k', n, int)
        g = ck.vector(ck.get(term, 'gamma', path + '.gamma', list, []), path + '.gamma', n, int)
        if isinstance(term, dict) and 't' in term:
            coeffs = [ck.complex_(c, '{}.t[{}]'.format(path, q)) for q, c in enumerate(term['t'] or [])]
            if not coeffs:
                ck.add(path + '.t', "empty t-polynomial")
        else:
            coeffs = [ck.complex_(term.get('c') if isinstance(term, dict) else None, path + '.c')]
        if j is None or k is None or g is None or any(c is None for c in coeffs) or not coeffs:
            continue
        if tr is not None:
            if not 0 <= j <= tr.N:
                ck.add(path + '.j', "order {} outside 0..N = {}".format(j, tr.N))
            if sum(abs(x) for x in k) > tr.K:
                ck.add(path + '.k', "|k|_1 = {} exceeds the Fourier radius K = {}".format(sum(abs(x) for x in k), tr.K))
            if any(x < 0 for x in g) or sum(g) > tr.M:
                ck.add(path + '.gamma', "exponent {} outside the Taylor degree M = {}".format(list(g), tr.M))
        if j == 0 and any(k):
            ck.add(path + '.k', "order 0 terms must be mode-0")
        if j == 1 and any(c != 0 for c in coeffs):
            ck.add(path + '.c', "order 1 terms must vanish")
        out.append(SymbolTerm(j, k, g, tuple(coeffs)))
    return tuple(out)

def _run_flags(ck, raw):
    d = ck.get(raw, 'run', 'run', dict, {}, required=False)
    defaults = RunFlags()
    vals = {}
    for name in ('validity', 'nonresonance', 'recursion', 'decay', 'growth', 'amplification', 'batch'):
        vals[name] = ck.get(d, name, 'run.' + name, bool, getattr(defaults, name), required=False)
    mode = ck.get(d, 'mode', 'run.mode', str, None, required=False)
    if mode is not None and mode not in [m.value for m in constants.FrequencyMode]:
        ck.add('run.mode', "unknown frequency mode '{}'".format(mode))
        mode = None
    return RunFlags(mode=mode, **vals)

def from_dict(raw):
    """
    Validate a plain mapping into a ProblemConfig

    Raises:
        ConfigViolationError listing every violation
    """
    ck = _Checker()
    if not isinstance(raw, dict):
        raise exceptions.ConfigViolationError([("", "top level must be a mapping")])
    n = ck.get(raw, 'dimension', 'dimension', int)
    if n is not None and n < 1:
        ck.add('dimension', "must be >= 1")
        n = None
    indices = _gevrey(ck, raw)
    delta = _delta(ck, raw, indices.sigma if indices else None)
    kappa = ck.get(raw, 'kappa', 'kappa', float)
    if kappa is not None and kappa < 0:
        ck.add('kappa', "must be >= 0")
    base = ck.vector(ck.get(raw, 'base_action', 'base_action', list, []), 'base_action', n)
    td = ck.get(raw, 'truncation', 'truncation', dict, {})
    N, K, M = (ck.get(td, x, 'truncation.' + x, int) for x in ('N', 'K', 'M'))
    tr = None
    if None not in (N, K, M):
        if min(N, K, M) < 0:
            ck.add('truncation', "N, K and M must be >= 0")
        else:
            tr = Truncation(N, K, M)
    t_values = ck.vector(ck.get(raw, 't_values', 't_values', list, [0.0], required=False), 't_values')
    if t_values is not None and not t_values:
        ck.add('t_values', "at least one t")
    freq = _frequency(ck, raw, n, base)
    terms = _terms(ck, raw, n, tr) if n is not None else ()
    flags = _run_flags(ck, raw)
    eta = ck.get(raw, 'eta', 'eta', float, constants.truncation_eta, required=False)
    if eta is not None and not eta > 0:
        ck.add('eta', "must be > 0")
    h_values = ck.vector(ck.get(raw, 'h_values', 'h_values', list, [], required=False), 'h_values')
    if h_values and min(h_values) <= 0:
        ck.add('h_values', "every h must be > 0")
    seed = ck.get(raw, 'seed', 'seed', int, constants.seed, required=False)
    tol = ck.get(raw, 'tolerance', 'tolerance', float, constants.tolerance, required=False)
    lemma_s = ck.vector(ck.get(raw, 'lemma_s', 'lemma_s', list, [0, 2, 5], required=False), 'lemma_s')
    lemma_eta = ck.vector(ck.get(raw, 'lemma_eta', 'lemma_eta', list, [0.5, 1.0], required=False), 'lemma_eta')
    if lemma_eta and min(lemma_eta) <= 0:
        ck.add('lemma_eta', "every eta must be > 0")
    actions = []
    for i, a in enumerate(ck.get(raw, 'batch_actions', 'batch_actions', list, [], required=False)):
        v = ck.vector(a, 'batch_actions[{}]'.format(i), n)
        if v:
            actions.append(v)
    known = {'dimension', 'gevrey', 'delta', 'kappa', 'frequency', 'base_action', 'truncation', 't_values',
             'symbol', 'run', 'eta', 'h_values', 'seed', 'tolerance', 'lemma_s', 'lemma_eta', 'batch_actions'}
    for key in sorted(set(raw) - known):
        ck.add(str(key), "unknown field")
    if ck.violations:
        raise exceptions.ConfigViolationError(ck.violations)
    return ProblemConfig(n, indices, delta, kappa, freq, base, tr, t_values, terms, flags, eta, h_values or (),
                         seed, tol, lemma_s, lemma_eta, tuple(actions))

def parse_config(path):
    """
    Read and validate a YAML problem configuration

    Raises:
        ConfigParseError with the line of the YAML error
        ConfigViolationError listing every violation
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        line = mark.line + 1 if mark is not None else None
        raise exceptions.ConfigParseError(path, line, getattr(e, 'problem', None) or str(e))
    except OSError as e:
        raise exceptions.ConfigParseError(path, None, e.strerror)
    log_d("Parsed config {}".format(path))
    return from_dict(raw)

## WRITING ##

def _pair(z):
    return [z.real, z.imag]

def to_dict(config):
    "Plain mapping accepted back by from_dict"
    c = config
    g = c.gevrey
    d = {
        'dimension': c.dimension,
        'gevrey': {'sigma': g.sigma, 'mu': g.mu, 'lam': g.lam, 'rho': g.rho, 'rho_bar': g.rho_bar},
        'delta': c.delta.describe(),
        'kappa': c.kappa,
        'base_action': list(c.base_action),
        'truncation': {'N': c.truncation.N, 'K': c.truncation.K, 'M': c.truncation.M},
        't_values': list(c.t_values),
        'symbol': [],
        'run': {k: getattr(c.run, k) for k in ('validity', 'nonresonance', 'recursion', 'decay', 'growth',
                                                'amplification', 'batch', 'mode')},
        'eta': c.eta,
        'h_values': list(c.h_values),
        'seed': c.seed,
        'tolerance': c.tolerance,
        'lemma_s': list(c.lemma_s),
        'lemma_eta': list(c.lemma_eta),
        'batch_actions': [list(a) for a in c.batch_actions],
    }
    if c.frequency is None:
        d['frequency'] = {'form': FREQUENCY_GRADIENT}
    else:
        d['frequency'] = {'form': c.frequency.form,
                          'components': [[{'exponent': list(e), 'coeffs': list(cs)} for e, cs in comp]
                                         for comp in c.frequency.components]}
    for s in c.symbol_terms:
        term = {'j': s.j, 'k': list(s.k), 'gamma': list(s.gamma)}
        if len(s.coeffs) == 1:
            term['c'] = _pair(s.coeffs[0])
        else:
            term['t'] = [_pair(x) for x in s.coeffs]
        d['symbol'].append(term)
    return d

def write_config(config, path):
    "Write a config that parse_config reads back equal"
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        yaml.safe_dump(to_dict(config), f, default_flow_style=None, sort_keys=False)
