"""test normalform module."""
import math

import numpy as np
import pytest
from scipy import special

from qbirkhoff.common import constants, exceptions
from qbirkhoff.core import nonresonance, normalform, symbols
from qbirkhoff.core.approximation import ApproximationFunction
from qbirkhoff.core.gevrey import GevreyIndices
from qbirkhoff.core.nonresonance import FrequencySpec
from qbirkhoff.core.symbols import TorusSymbol

GOLDEN = (1 + math.sqrt(5)) / 2
Z1 = (0,)
Z2 = (0, 0)
DELTA = ApproximationFunction.of('polynomial', 2, n=1)


def golden_instance(N=6, K=8, M=2):
    "K_0 = I^2/2 about I0 = golden mean, p_2 = cos(phi)"
    terms = [(0, Z1, (0,), GOLDEN ** 2 / 2), (0, Z1, (1,), GOLDEN), (0, Z1, (2,), 0.5),
             (2, (1,), (0,), 0.5), (2, (-1,), (0,), 0.5)]
    return TorusSymbol.from_terms(terms, 1, N, K, M, (GOLDEN,))


def torus2_instance(N=5, K=6, M=2):
    "omega = (1, sqrt 2 - 1) from a linear K_0, cosines in both angles at order 2"
    w = math.sqrt(2) - 1
    terms = [(0, Z2, (1, 0), 1.0), (0, Z2, (0, 1), w),
             (2, (1, 0), Z2, 0.5), (2, (-1, 0), Z2, 0.5),
             (2, (0, 1), Z2, 0.25), (2, (0, -1), Z2, 0.25)]
    return TorusSymbol.from_terms(terms, 2, N, K, M)


def test_golden_mean_conjugacy():
    """test p o a - a o p0 vanishes on the golden-mean instance."""
    p = golden_instance()
    result = normalform.run_recursion(p, None, DELTA, 0.1)
    assert result.mode == constants.FrequencyMode.reciprocal_taylor
    assert result.max_residual <= 1e-10 * symbols.norms(p).total
    assert result.clipped_mass == 0
    assert result.conjugacy_clipped_mass == 0
    assert result.p0.is_mode_zero()
    assert result.p0.slice(2).is_zero()
    assert result.p0.slice(1).is_zero()
    assert result.p0.slice(0) == p.slice(0)
    assert result.a.h_order == 5
    assert result.a.coeff(0, Z1, (0,)) == 1
    assert all(symbols.angle_average(result.a.slice(j)).is_zero() for j in range(1, 6))
    assert not result.a.slice(1).is_zero()
    assert [s.j for s in result.per_order] == [2, 3, 4, 5, 6]


def test_golden_mean_frequency_cross_check():
    """test a supplied frequency is checked against grad K_0."""
    p = golden_instance()
    result = normalform.run_recursion(p, (GOLDEN,), DELTA, 0.1)
    assert result.max_residual <= 1e-10 * symbols.norms(p).total
    with pytest.raises(exceptions.InputError):
        normalform.run_recursion(p, (1.0,), DELTA, 0.1)
    with pytest.raises(exceptions.ShapeError):
        normalform.run_recursion(p, (GOLDEN, 1.0), DELTA, 0.1)


def test_torus2_conjugacy():
    """test the residual on T^2 with a constant Diophantine frequency."""
    p = torus2_instance()
    kappa = 0.5 * nonresonance.scan_divisors((1.0, math.sqrt(2) - 1), DELTA, 6).kappa_max
    result = normalform.run_recursion(p, None, DELTA, kappa)
    assert result.mode == constants.FrequencyMode.constant
    assert result.max_residual <= 1e-10 * symbols.norms(p).total
    assert result.clipped_mass == 0
    assert result.conjugacy_clipped_mass == 0
    assert result.p0.is_mode_zero()
    assert normalform.verify_conjugacy(p, result) == result.residual_norms


def test_small_divisor_names_order():
    """test a divisor violation is tagged with the recursion stage."""
    with pytest.raises(exceptions.SmallDivisorError) as e:
        normalform.run_recursion(torus2_instance(), None, DELTA, 10.0)
    assert e.value.order == 2
    assert e.value.detail()['order'] == 2


def test_zero_perturbation_fixed_point():
    """test p = K_0 gives a = 1, p0 = p and exactly zero residuals."""
    p = TorusSymbol.from_terms([(0, Z1, (0,), 1.0), (0, Z1, (1,), GOLDEN), (0, Z1, (2,), 0.5)],
                               1, 5, 4, 2, (GOLDEN,))
    result = normalform.run_recursion(p, None, DELTA, 0.1)
    assert list(result.a.entries()) == [(0, Z1, Z1, 1 + 0j)]
    assert result.p0 == p
    assert set(result.residual_norms.values()) == {0.0}
    assert result.growth_fit is None


def test_input_checks():
    """test malformed inputs are rejected."""
    bad0 = TorusSymbol.from_terms([(0, (1,), (0,), 1.0), (0, Z1, (1,), 1.0)], 1, 3, 2, 2)
    with pytest.raises(exceptions.InputError):
        normalform.run_recursion(bad0, None, DELTA, 0.1)
    bad1 = TorusSymbol.from_terms([(0, Z1, (1,), 1.0), (1, (1,), (0,), 1.0)], 1, 3, 2, 2)
    with pytest.raises(exceptions.InputError):
        normalform.run_recursion(bad1, None, DELTA, 0.1)
    flat = TorusSymbol.from_terms([(0, Z1, (0,), 1.0), (2, (1,), (0,), 1.0)], 1, 3, 2, 0)
    with pytest.raises(exceptions.InputError):
        normalform.run_recursion(flat, None, DELTA, 0.1)
    with pytest.raises(exceptions.InputError):
        normalform.run_recursion("p", None, DELTA, 0.1)
    with pytest.raises(exceptions.InputError):
        normalform.run_recursion(golden_instance(), None, DELTA, 0.1, taylor_degree=3)


def test_f_j1_hand_expansion():
    """test the j = 3 term for K_0 = I^2/2, p_2 = 2 and a single-mode a_1."""
    c = 0.3 - 0.2j
    p = TorusSymbol.from_terms([(0, Z1, (2,), 0.5), (2, Z1, (0,), 2.0)], 1, 3, 4, 2)
    p_orders = [p.slice(r) for r in range(4)]
    one = TorusSymbol.constant(1.0, p.slice(0))
    a1 = TorusSymbol.from_terms([(0, (1,), (0,), c)], 1, 0, 4, 2)
    F1 = normalform.f_j1(p_orders, [one, a1], 3)
    [(j, k, g, v)] = list(F1.entries())
    assert (j, k, g) == (0, (1,), (0,))
    assert v == pytest.approx(2.5 * c, rel=1e-12)
    assert normalform.f_j1(p_orders, [one], 2).is_zero()


def test_f_j2():
    """test the j = 3 term a_1 . p0_2."""
    one = TorusSymbol.constant(1.0, TorusSymbol.zero(1, 0, 4, 2))
    a1 = TorusSymbol.from_terms([(0, (1,), (0,), 1.0)], 1, 0, 4, 2)
    p02 = TorusSymbol.from_terms([(0, Z1, (0,), 3.0)], 1, 0, 4, 2)
    F2 = normalform.f_j2([one, a1], [one, None, p02], 3)
    assert list(F2.entries()) == [(0, (1,), (0,), 3 + 0j)]


def test_recursion_term_errors():
    """test stage and prerequisite checks."""
    p = golden_instance()
    p_orders = [p.slice(r) for r in range(7)]
    one = TorusSymbol.constant(1.0, p.slice(0))
    with pytest.raises(exceptions.InputError):
        normalform.f_j1(p_orders, [one], 1)
    with pytest.raises(exceptions.SequencingError) as e:
        normalform.f_j1(p_orders, [one], 4)
    assert e.value.order == 1
    with pytest.raises(exceptions.SequencingError):
        normalform.f_j2([one, one], [one, None], 3)
    with pytest.raises(exceptions.InputError):
        normalform.f_j2([one], [one], 0)


def test_fit_growth_exact():
    """test exact d^j Gamma(j)^rho norms are recovered."""
    norms = {j: 0.5 * 3.0 ** j * math.exp(1.5 * special.gammaln(j)) for j in range(1, 11)}
    fit = normalform.fit_growth(norms)
    assert fit.rho_bar_hat == pytest.approx(1.5, rel=1e-8)
    assert fit.d_hat == pytest.approx(3.0, rel=1e-8)
    assert fit.quality == pytest.approx(1.0)
    assert fit.orders_used == tuple(range(1, 11))


def test_fit_growth_double_factorial():
    """test Gamma(2j) norms fit a factorial exponent near 2."""
    seq = [0.0] + [math.exp(special.gammaln(2 * j)) for j in range(1, 13)]
    fit = normalform.fit_growth(seq)
    assert 1.8 <= fit.rho_bar_hat <= 2.2


def test_fit_growth_errors():
    """test fewer than four nonzero orders is an error."""
    with pytest.raises(exceptions.FitError):
        normalform.fit_growth({1: 1.0, 2: 2.0, 3: 0.0, 4: 5.0})
    result = normalform.run_recursion(golden_instance(), None, DELTA, 0.1)
    assert normalform.fit_growth(result) == normalform.fit_growth(result.a)


def _factorial_normal_form(N=15):
    return TorusSymbol.from_terms([(j, Z1, Z1, float(math.factorial(j))) for j in range(N + 1)], 1, N, 0, 0)


def test_optimal_truncation_smallest_term():
    """test the smallest-term rule against a brute-force minimizer of j! h^j."""
    h = 0.1
    ev = normalform.optimal_truncation_eval(_factorial_normal_form(), (0.0,), 0.0, h, eta=1.05)
    brute = min(range(1, 16), key=lambda j: math.factorial(j) * h ** j)
    assert abs(ev.J_smallest - brute) <= 1
    assert ev.J_used == 10
    assert ev.value == pytest.approx(sum(math.factorial(j) * h ** j for j in range(11)))
    value, J, last = ev
    assert J == 10 and last == pytest.approx(math.factorial(10) * h ** 10)
    assert ev.as_dict()['J_smallest'] == ev.J_smallest


def test_optimal_truncation_rule_caps_at_n():
    """test the rule never exceeds the computed order and honours rho_bar."""
    ev = normalform.optimal_truncation_eval(_factorial_normal_form(6), (0.0,), 0.0, 0.01)
    assert ev.J_used == 6
    ev = normalform.optimal_truncation_eval(_factorial_normal_form(), (0.0,), 0.0, 0.04, eta=1.5, rho_bar=2.0)
    assert ev.J_used == 7
    ev = normalform.optimal_truncation_eval(_factorial_normal_form(), (0.0,), 0.0, 0.04, eta=1.5)
    assert ev.J_used == 15
    ev = normalform.optimal_truncation_eval(_factorial_normal_form(), (0.0,), 0.0, 1e-300, rho_bar=0.5)
    assert ev.J_used == 15


def test_optimal_truncation_errors():
    """test h and mode checks."""
    with pytest.raises(exceptions.DomainError):
        normalform.optimal_truncation_eval(_factorial_normal_form(), (0.0,), 0.0, 0.0)
    with pytest.raises(exceptions.InputError):
        normalform.optimal_truncation_eval(golden_instance(), (GOLDEN,), 0.0, 0.1)


def test_result_dict():
    """test the summary dict of a result."""
    result = normalform.run_recursion(golden_instance(), None, DELTA, 0.1)
    d = result.as_dict()
    assert d['h_order'] == 6
    assert d['mode'] == 'reciprocal_taylor'
    assert set(d['residual_norms']) == {str(j) for j in range(7)}
    assert 'a' not in d
    full = result.as_dict(full=True)
    assert TorusSymbol.from_dict(full['p0']) == result.p0
    assert set(normalform.imaginary_mass(result)) == set(range(7))


def test_class_envelope():
    """test the smallest C0 with |p_j| <= C0^(j+1) (j!)^e."""
    p = TorusSymbol.from_terms([(0, Z1, (0,), 1.0), (2, (1,), (0,), 8.0)], 1, 2, 2, 0)
    env = normalform.class_envelope_fit(p, GevreyIndices(2.0, 3.0, 3.0, 2.0))
    assert env.exponent == 7.0
    assert env.per_order[0] == pytest.approx(1.0)
    assert env.per_order[2] == pytest.approx((8.0 / 2 ** 7) ** (1 / 3))
    assert env.C0 == pytest.approx(1.0)


def test_batch_over_grid():
    """test per-action reruns agree with the main run at the base action."""
    p = golden_instance()
    main = normalform.run_recursion(p, None, DELTA, 0.1)
    freq = FrequencySpec.from_gradient(p)
    grid = nonresonance.mark_nonresonant_grid(freq, DELTA, 0.1, 8, [(GOLDEN,), (GOLDEN + 0.05,)])
    entries = normalform.batch_over_grid(p, grid, DELTA, 0.1)
    assert [e.action for e in entries] == [(GOLDEN,), (GOLDEN + 0.05,)]
    assert all(e.error is None for e in entries)
    base = entries[0].values()
    expected = [main.p0.coeff(j, Z1, Z1) for j in range(7)]
    assert np.allclose(base, expected, rtol=1e-12, atol=1e-14)
    assert entries[1].result.p0.base_action == (GOLDEN + 0.05,)
    assert entries[1].as_dict()['max_residual'] <= 1e-10


def test_batch_records_failures():
    """test a failing action is recorded instead of aborting."""
    p = torus2_instance()
    freq = FrequencySpec.from_gradient(p)
    grid = nonresonance.mark_nonresonant_grid(freq, DELTA, 1e-3, 6, [(0.0, 0.0)])
    entries = normalform.batch_over_grid(p, grid, DELTA, 10.0)
    assert entries[0].result is None
    assert entries[0].error['code'] == exceptions.SmallDivisorError.code
    assert entries[0].values() == ()
    flat = p.with_truncation(taylor_degree=0)
    with pytest.raises(exceptions.InputError):
        normalform.batch_over_grid(flat, grid, DELTA, 10.0)
