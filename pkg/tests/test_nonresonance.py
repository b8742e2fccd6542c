"""test nonresonance module."""
import math
import itertools

import numpy as np
import pytest

from qbirkhoff.common import exceptions
from qbirkhoff.core import nonresonance
from qbirkhoff.core.approximation import ApproximationFunction
from qbirkhoff.core.nonresonance import FrequencySpec

GOLDEN = (1 + math.sqrt(5)) / 2


def _delta(n=1):
    return ApproximationFunction.of('polynomial', 2, n=n)


def _box_scan(omega, delta, K):
    "min of |<k,omega>| Delta(|k|_1) over the full box |k_i| <= K, 0 < |k|_1 <= K"
    best, best_k = math.inf, None
    for k in itertools.product(range(-K, K + 1), repeat=len(omega)):
        m = sum(abs(x) for x in k)
        if not 0 < m <= K:
            continue
        v = abs(float(np.dot(np.array(k, dtype=float), np.asarray(omega, dtype=float)))) * delta(m)
        if v < best:
            best, best_k = v, k
    return best, best_k


@pytest.mark.parametrize('n', [1, 2, 3])
def test_shell_enumeration_matches_box(n):
    """test shells hold exactly the box vectors of the given l1 norm."""
    for m in range(1, 9):
        expected = {k for k in itertools.product(range(-m, m + 1), repeat=n) if sum(abs(x) for x in k) == m}
        shell = nonresonance.enumerate_shell(n, m)
        assert len(shell) == len(expected) == nonresonance.shell_size(n, m)
        assert set(shell) == expected


def test_shell_examples():
    """test a few shell sizes and argument checks."""
    assert nonresonance.shell_size(2, 4) == 16
    assert nonresonance.shell_size(1, 7) == 2
    assert nonresonance.shell_size(3, 0) == 1
    assert len(nonresonance.enumerate_ball(2, 3)) == 4 + 8 + 12
    with pytest.raises(exceptions.InputError):
        nonresonance.enumerate_shell(0, 2)


def test_canonical():
    """test sign normalization."""
    assert nonresonance.canonical((-1, 2)) == (1, -2)
    assert nonresonance.canonical((0, -3, 1)) == (0, 3, -1)
    assert nonresonance.canonical((2, -1)) == (2, -1)
    assert nonresonance.l1((3, -4)) == 7


def test_scan_matches_exhaustive_box():
    """test the shell scan against a full box search for the golden mean frequency."""
    omega = (1.0, GOLDEN)
    delta = _delta()
    report = nonresonance.scan_divisors(omega, delta, 30)
    best, best_k = _box_scan(omega, delta, 30)
    assert report.kappa_max == pytest.approx(best, rel=1e-14)
    assert report.worst_k == nonresonance.canonical(best_k)
    assert report.verdict
    assert report.k_radius == 30
    assert len(report.kappa_max_per_shell) == 30
    assert 0.8 < report.diophantine_tau_fit < 1.0
    assert report.as_dict()['label'] == "verified up to |k|_1 <= 30"


def test_scan_shell_minima():
    """test per-shell minima against the box search restricted to one shell."""
    omega = (1.0, math.sqrt(2))
    delta = _delta(2)
    report = nonresonance.scan_divisors(omega, delta, 20)
    for m in (1, 5, 12, 20):
        vals = [abs(k[0] * omega[0] + k[1] * omega[1]) for k in nonresonance.enumerate_shell(2, m)]
        assert report.shell_min_divisor[m] == pytest.approx(min(vals), rel=1e-12)
        assert report.kappa_max_per_shell[m] == pytest.approx(min(vals) * delta(m), rel=1e-12)
    mins = [report.shell_min_divisor[m] for m in sorted(report.shell_min_divisor)]
    assert mins[-1] < mins[0]


def test_scan_resonance():
    """test an exact resonance names the offending k."""
    with pytest.raises(exceptions.ResonanceError) as e:
        nonresonance.scan_divisors((1.0, 1.0), _delta(), 5)
    assert e.value.k == (1, -1)
    assert e.value.detail()['k'] == [1, -1]


def test_scan_arguments():
    """test degenerate frequencies and radii are rejected."""
    with pytest.raises(exceptions.InputError):
        nonresonance.scan_divisors((0.0, 0.0), _delta(), 5)
    with pytest.raises(exceptions.InputError):
        nonresonance.scan_divisors((1.0, GOLDEN), _delta(), 0)


def test_scan_kappa_monotone():
    """test kappa_max cannot grow with K and grows with Delta."""
    omega = (1.0, GOLDEN)
    small = nonresonance.scan_divisors(omega, _delta(), 10)
    large = nonresonance.scan_divisors(omega, _delta(), 20)
    assert large.kappa_max <= small.kappa_max
    strong = nonresonance.scan_divisors(omega, _delta(2), 20)
    assert strong.kappa_max >= large.kappa_max


def test_scan_inclusion():
    """test a frequency passing with a polynomial Delta passes with a larger Delta."""
    omega = (1.0, GOLDEN)
    K = 15
    poly = _delta(1)
    kappa = nonresonance.scan_divisors(omega, poly, K).kappa_max
    wide = ApproximationFunction.of('product_with_power', 2, s=1, inner={'kind': 'polynomial', 'n': 1})
    assert nonresonance.scan_divisors(omega, wide, K, kappa).verdict


def test_verdict_against_kappa():
    """test the verdict compares every shell against kappa."""
    omega = (1.0, GOLDEN)
    report = nonresonance.scan_divisors(omega, _delta(), 10)
    assert nonresonance.scan_divisors(omega, _delta(), 10, report.kappa_max).verdict
    assert not nonresonance.scan_divisors(omega, _delta(), 10, report.kappa_max * 1.01).verdict


def test_frequency_spec_forms():
    """test constant, polynomial and gradient frequency maps."""
    c = FrequencySpec.constant((1.0, 2.0))
    assert c.is_constant and not c.is_t_dependent
    assert c.evaluate().tolist() == [1.0, 2.0]
    td = FrequencySpec.constant((1.0, 2.0), t_coeffs=[(1.0, 0.5), (2.0,)])
    assert td.is_t_dependent
    assert td.evaluate(t=2.0).tolist() == [2.0, 2.0]
    assert td.at_t(2.0).evaluate().tolist() == [2.0, 2.0]
    twist = FrequencySpec.polynomial([{(0, 0): 1.0}, {(0, 0): 1.6, (1, 0): 1.0}], (1.6, 0.0))
    assert not twist.is_constant
    assert twist.evaluate((1.7, 3.0))[1] == pytest.approx(1.7)
    assert twist.pairing_taylor((0, 1)) == {(0, 0): 1.6, (1, 0): 1.0}
    assert twist.lipschitz_bound((0, 2)) == 2.0
    assert twist.describe()['form'] == 'polynomial'
    with pytest.raises(exceptions.ShapeError):
        twist.evaluate((1.0,))
    with pytest.raises(exceptions.ShapeError):
        FrequencySpec(2, (0.0, 0.0), (((0, 0), (1.0,)),), "constant")


def test_frequency_from_gradient():
    """test omega = grad K_0 of a quadratic K_0."""
    from qbirkhoff.core.symbols import TorusSymbol
    z = (0,)
    p = TorusSymbol.from_terms([(0, z, (0,), GOLDEN ** 2 / 2), (0, z, (1,), GOLDEN), (0, z, (2,), 0.5)],
                               1, 2, 4, 2, (GOLDEN,))
    freq = FrequencySpec.from_gradient(p)
    assert freq.evaluate().tolist() == [GOLDEN]
    assert freq.evaluate((GOLDEN + 0.5,))[0] == pytest.approx(GOLDEN + 0.5)
    bad = TorusSymbol.from_terms([(0, (1,), (0,), 1.0)], 1, 0, 4, 2)
    with pytest.raises(exceptions.InputError):
        FrequencySpec.from_gradient(bad)


def _twist():
    return FrequencySpec.polynomial([{(0, 0): 1.0}, {(0, 0): 1.6, (1, 0): 1.0}], (1.6, 0.0))


def test_grid_matches_exhaustive_scan():
    """test grid flags for the twist map agree with a per-action box search."""
    freq = _twist()
    delta = _delta(2)
    kappa, K = 0.01, 15
    actions = [(1.5 + 0.02 * i, 0.0) for i in range(11)]
    grid = nonresonance.mark_nonresonant_grid(freq, delta, kappa, K, actions)
    expected = []
    for I in actions:
        best, _ = _box_scan(freq.evaluate(I), delta, K)
        expected.append(best >= kappa)
    assert list(grid.flags) == expected
    assert len(grid.nonresonant_actions) == sum(expected)
    assert grid.as_dict()['k_radius'] == K


def test_grid_flags_resonant_actions():
    """test actions on the diagonal of omega(I) = I are flagged without aborting."""
    freq = FrequencySpec.polynomial([{(0, 0): 1.0, (1, 0): 1.0}, {(0, 0): 1.0, (0, 1): 1.0}], (1.0, 1.0))
    actions = [(1.0, 1.0), (1.0, GOLDEN), (2.0, 2.0), (1.0, math.sqrt(2))]
    grid = nonresonance.mark_nonresonant_grid(freq, _delta(), 1e-3, 10, actions)
    assert grid.flags == (False, True, False, True)
    assert grid.kappa_max[0] is None


def test_grid_constant_frequency():
    """test a constant nonresonant frequency flags every action."""
    freq = FrequencySpec.constant((1.0, GOLDEN), (0.0, 0.0))
    grid = nonresonance.mark_nonresonant_grid(freq, _delta(), 0.1, 10, [(0.0, 0.0), (0.5, 0.5), (1.0, 2.0)])
    assert all(grid.flags)


def test_derivative_probe_twist():
    """test the first action derivative of 1/<omega, k> for the twist map."""
    rows = nonresonance.divisor_derivative_probe(_twist(), _delta(2), (0, 1), [(0, 0), (1, 0)], kappa=0.01)
    zero, first = rows
    assert zero.value == pytest.approx(1 / 1.6, rel=1e-12)
    assert zero.direct_bound == pytest.approx(_delta(2)(1) / 0.01)
    assert zero.value <= zero.direct_bound
    assert first.value == pytest.approx(1 / 1.6 ** 2, abs=1e-6)
    assert first.richardson_ok
    assert first.ratio == pytest.approx(first.value / first.envelope)


def test_derivative_probe_constant_frequency():
    """test derivatives vanish for a constant frequency."""
    freq = FrequencySpec.constant((1.0, GOLDEN), (0.5, 0.5))
    rows = nonresonance.divisor_derivative_probe(freq, _delta(), (1, -1), [(1, 0), (0, 2), (1, 1, 1)])
    assert [r.value for r in rows] == [0.0, 0.0, 0.0]


def test_derivative_probe_errors():
    """test resonant modes and excessive orders are rejected."""
    freq = FrequencySpec.constant((1.0, 1.0))
    with pytest.raises(exceptions.ResonanceError):
        nonresonance.divisor_derivative_probe(freq, _delta(), (1, -1), [(0, 0)])
    with pytest.raises(exceptions.InputError):
        nonresonance.divisor_derivative_probe(_twist(), _delta(), (0, 1), [(2, 2)])
    with pytest.raises(exceptions.ShapeError):
        nonresonance.divisor_derivative_probe(_twist(), _delta(), (0, 1, 0), [(0, 0)])


def test_lemma_envelope():
    """test the derivative envelope at order zero and one."""
    d = _delta()
    assert nonresonance.lemma_envelope(1.0, 0, 0, 1, 1, 3, d, 1.0) == d(3)
    assert nonresonance.lemma_envelope(2.0, 1, 0, 1, 1, 3, d, 1.0) == 4 * max(d(3), 3 * d(3) ** 2)


def test_continued_fractions():
    """test partial quotients and convergents of the golden mean."""
    assert nonresonance.continued_fraction(GOLDEN, 10) == [1] * 10
    assert nonresonance.continued_fraction(2.5) == [2, 2]
    assert nonresonance.convergents(GOLDEN, 6) == [(1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8)]
