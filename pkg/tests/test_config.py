"""test config module."""
import math
import os

import pytest

from qbirkhoff.common import constants, exceptions
from qbirkhoff.core import config
from qbirkhoff.core.nonresonance import FrequencySpec

GOLDEN = (1 + math.sqrt(5)) / 2
CONFIGS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "configs")


def golden_raw(**over):
    raw = {
        'dimension': 1,
        'gevrey': {'sigma': 2.0, 'mu': 3.0, 'lam': 3.0, 'rho': 2.0},
        'delta': {'kind': 'polynomial', 'n': 1},
        'kappa': 0.1,
        'base_action': [GOLDEN],
        'truncation': {'N': 6, 'K': 8, 'M': 2},
        'symbol': [
            {'j': 0, 'k': [0], 'gamma': [0], 'c': GOLDEN ** 2 / 2},
            {'j': 0, 'k': [0], 'gamma': [1], 'c': GOLDEN},
            {'j': 0, 'k': [0], 'gamma': [2], 'c': 0.5},
            {'j': 2, 'k': [1], 'gamma': [0], 'c': [0.5, 0.0]},
            {'j': 2, 'k': [-1], 'gamma': [0], 'c': [0.5, 0.0]},
        ],
    }
    raw.update(over)
    return raw


def violations(raw):
    with pytest.raises(exceptions.ConfigViolationError) as e:
        config.from_dict(raw)
    return dict(e.value.violations)


def test_from_dict_defaults():
    """test a minimal config takes the documented defaults."""
    c = config.from_dict(golden_raw())
    assert c.dimension == 1
    assert c.truncation == config.Truncation(6, 8, 2)
    assert c.t_values == (0.0,)
    assert c.frequency is None
    assert c.run == config.RunFlags()
    assert c.mode is None
    assert c.eta == constants.truncation_eta
    assert c.tolerance == constants.tolerance
    assert c.gevrey.rho_bar == 3.0 * 3.0 + 2.0
    assert len(c.symbol_terms) == 5


def test_symbol_at():
    """test the symbol is assembled with its base action and t."""
    c = config.from_dict(golden_raw(t_values=[0.0, 0.5]))
    p = c.symbol_at(0.5)
    assert p.base_action == (GOLDEN,)
    assert p.t_value == 0.5
    assert p.coeff(2, (1,), (0,)) == 0.5
    assert c.frequency_at(0.0).evaluate((GOLDEN,)).tolist() == pytest.approx([GOLDEN])


def test_t_polynomial_terms():
    """test t-dependent coefficients are evaluated per t."""
    raw = golden_raw()
    raw['symbol'].append({'j': 3, 'k': [1], 'gamma': [0], 't': [1.0, [0.0, 2.0]]})
    c = config.from_dict(raw)
    assert c.symbol_at(0.0).coeff(3, (1,), (0,)) == 1
    assert c.symbol_at(0.5).coeff(3, (1,), (0,)) == pytest.approx(1 + 1j)


def test_constant_frequency():
    """test an explicit frequency vector."""
    c = config.from_dict(golden_raw(frequency={'form': 'constant', 'omega': [GOLDEN]}))
    assert isinstance(c.frequency, FrequencySpec)
    assert c.frequency.is_constant
    with pytest.raises(exceptions.ConfigViolationError):
        config.from_dict(golden_raw(frequency={'form': 'constant', 'omega': [1.0, 2.0]}))
    assert 'frequency.form' in violations(golden_raw(frequency={'form': 'spline'}))


def test_round_trip(tmp_path):
    """test write_config output reads back to the same config."""
    raw = golden_raw(t_values=[0.0, 0.25], h_values=[0.05], run={'amplification': True, 'mode': 'constant'},
                     batch_actions=[[GOLDEN], [1.7]])
    c = config.from_dict(raw)
    path = str(tmp_path / "golden.yaml")
    config.write_config(c, path)
    back = config.parse_config(path)
    assert config.to_dict(back) == config.to_dict(c)
    assert back.mode == constants.FrequencyMode.constant
    assert back.batch_actions == ((GOLDEN,), (1.7,))


def test_sub_exponential_rule():
    """test a >= 1/sigma is rejected with the field path."""
    v = violations(golden_raw(delta={'kind': 'sub_exponential', 'a': 0.6}))
    assert 'delta.a' in v
    assert "a < 1/sigma" in v['delta.a']
    assert config.from_dict(golden_raw(delta={'kind': 'sub_exponential', 'a': 0.3})).delta.exponent == 0.3


def test_fourier_radius_violation():
    """test a mode beyond K is named."""
    raw = golden_raw()
    raw['symbol'].append({'j': 2, 'k': [9], 'gamma': [0], 'c': 1.0})
    v = violations(raw)
    assert v['symbol[5].k'] == "|k|_1 = 9 exceeds the Fourier radius K = 8"


def test_order_zero_and_one_violations():
    """test p_0 must be mode-0 and p_1 must vanish."""
    raw = golden_raw()
    raw['symbol'] += [{'j': 0, 'k': [1], 'gamma': [0], 'c': 1.0}, {'j': 1, 'k': [1], 'gamma': [0], 'c': 1.0}]
    v = violations(raw)
    assert v['symbol[5].k'] == "order 0 terms must be mode-0"
    assert v['symbol[6].c'] == "order 1 terms must vanish"


def test_every_violation_is_listed():
    """test violations are collected rather than stopping at the first."""
    raw = golden_raw(kappa=-1.0, eta=0.0, extra=1)
    del raw['truncation']
    v = violations(raw)
    assert v['kappa'] == "must be >= 0"
    assert v['eta'] == "must be > 0"
    assert v['extra'] == "unknown field"
    assert v['truncation'] == "required"
    with pytest.raises(exceptions.ConfigViolationError):
        config.from_dict([1, 2])


@pytest.mark.parametrize("field, value", [
    ('dimension', 0),
    ('dimension', 'one'),
    ('base_action', [1.0, 2.0]),
    ('t_values', []),
    ('h_values', [0.1, -0.1]),
    ('run', {'mode': 'spectral'}),
])
def test_field_checks(field, value):
    """test single-field violations."""
    assert violations(golden_raw(**{field: value}))


def test_parse_error_line(tmp_path):
    """test YAML syntax errors carry the line."""
    path = tmp_path / "bad.yaml"
    path.write_text("dimension: 1\nkappa: 0.1\nsymbol: [\n  {j: 0\n", encoding='utf-8')
    with pytest.raises(exceptions.ConfigParseError) as e:
        config.parse_config(str(path))
    assert isinstance(e.value.line, int)
    assert e.value.line >= 3


def test_missing_file(tmp_path):
    """test an unreadable path."""
    with pytest.raises(exceptions.ConfigParseError) as e:
        config.parse_config(str(tmp_path / "nope.yaml"))
    assert e.value.line is None
    assert isinstance(e.value, exceptions.ConfigError)


@pytest.mark.parametrize("name, n", [("golden_mean.yaml", 1), ("torus2.yaml", 2), ("resonant.yaml", 2)])
def test_bundled_configs(name, n):
    """test the shipped configurations validate."""
    c = config.parse_config(os.path.join(CONFIGS, name))
    assert c.dimension == n
    assert c.symbol_at(c.t_values[0]).n == n
