"""test pipeline module."""
import math
import os

import pytest

from qbirkhoff.common import constants, exceptions, message
from qbirkhoff.core import config, pipeline

from tests.test_config import CONFIGS, golden_raw


def resonant_raw():
    return {
        'dimension': 2,
        'gevrey': {'sigma': 2.0, 'mu': 3.0, 'lam': 3.0, 'rho': 2.0},
        'delta': {'kind': 'polynomial', 'n': 1},
        'kappa': 0.01,
        'base_action': [0.0, 0.0],
        'truncation': {'N': 4, 'K': 3, 'M': 1},
        'symbol': [
            {'j': 0, 'k': [0, 0], 'gamma': [1, 0], 'c': 1.0},
            {'j': 0, 'k': [0, 0], 'gamma': [0, 1], 'c': 1.0},
            {'j': 2, 'k': [1, 0], 'gamma': [0, 0], 'c': 0.5},
            {'j': 2, 'k': [-1, 0], 'gamma': [0, 0], 'c': 0.5},
        ],
    }


@pytest.fixture(scope="module")
def golden_report():
    return pipeline.run_pipeline(config.from_dict(golden_raw(t_values=[0.0, 0.5], h_values=[0.05, 0.1])))


def test_golden_run_succeeds(golden_report):
    """test the golden-mean instance runs clean."""
    r = golden_report
    assert r.exit_code == constants.ExitCode.Success
    assert not r.hard_errors
    assert [x['t'] for x in r.runs] == [0.0, 0.5]
    assert [x['t'] for x in r.divisors] == [0.0, 0.5]
    for run in r.runs:
        assert run['relative_residual'] <= 1e-10
        assert run['clipped_mass'] == 0
        assert run['mode'] == 'reciprocal_taylor'
        assert [x['h'] for x in run['truncation']] == [0.05, 0.1]
        assert 'growth_series' in run
    assert r.validity['report']['valid']
    assert len(r.validity['gamma_bounds']) == 6


def test_report_is_reproducible(golden_report):
    """test two runs of one config serialize to identical bytes."""
    again = pipeline.run_pipeline(config.from_dict(golden_raw(t_values=[0.0, 0.5], h_values=[0.05, 0.1])))
    assert again.serialize() == golden_report.serialize()
    assert again.config_hash == golden_report.config_hash


def test_timing_is_opt_in():
    """test timings only appear when asked for."""
    c = config.from_dict(golden_raw(run={'decay': False, 'growth': False}))
    assert 'timing' not in pipeline.run_pipeline(c).data()
    timed = pipeline.run_pipeline(c, timing=True).data()
    assert set(timed['timing']['0.0']) >= {'recursion', 'nonresonance'}


def test_resonant_frequency_is_hard_error():
    """test omega = (1, 1) stops at the divisor scan with the resonant mode."""
    r = pipeline.run_pipeline(config.from_dict(resonant_raw()))
    assert r.exit_code == constants.ExitCode.HardError
    assert not r.runs
    [err] = r.hard_errors
    assert err['stage'] == 'nonresonance'
    assert err['detail']['code'] == exceptions.ResonanceError.code
    assert err['detail']['k'] == [1, -1]
    with pytest.raises(exceptions.SelectionError):
        pipeline.format_plot_data(r, 'residuals')


def test_small_divisor_is_hard_error():
    """test a kappa above the attainable constant fails the recursion."""
    raw = resonant_raw()
    raw['symbol'][1]['c'] = math.sqrt(2) - 1
    raw['kappa'] = 10.0
    r = pipeline.run_pipeline(config.from_dict(raw))
    assert r.exit_code == constants.ExitCode.HardError
    assert not r.divisors[0]['report']['verdict']
    [err] = r.hard_errors
    assert err['stage'] == 'recursion'
    assert err['detail']['order'] == 2


def test_clipping_exceeds_tolerance():
    """test modes clipped at a small Fourier radius raise the tolerance exit."""
    raw = golden_raw(truncation={'N': 5, 'K': 1, 'M': 2})
    r = pipeline.run_pipeline(config.from_dict(raw))
    assert r.exit_code == constants.ExitCode.ToleranceExceeded
    assert r.runs[0]['clipped_mass'] > 0


def test_invalid_delta_is_soft():
    """test a Delta failing its conditions is reported without failing the run."""
    raw = golden_raw(delta={'kind': 'sub_exponential', 'a': 0.6, 'sigma': 1.5})
    r = pipeline.run_pipeline(config.from_dict(raw))
    assert r.exit_code == constants.ExitCode.Success
    soft = [e for e in r.errors if e['stage'] == 'validity']
    assert soft
    assert not any(e['hard'] for e in soft)


def test_stage_flags():
    """test disabled stages leave their sections empty."""
    c = config.from_dict(golden_raw(run={'validity': False, 'recursion': False}))
    r = pipeline.run_pipeline(c)
    assert r.validity is None
    assert not r.runs
    assert len(r.divisors) == 1


def test_format_plot_data(golden_report):
    """test plot blocks carry one header per t."""
    text = pipeline.format_plot_data(golden_report, 'residuals')
    lines = text.splitlines()
    assert lines[0] == "# residuals (j, l1 norm of c_j) t=0.0"
    assert sum(1 for x in lines if x.startswith('#')) == 2
    assert lines[1].split()[0] == '0'
    for which in ('growth', 'divisors'):
        assert pipeline.format_plot_data(golden_report, which).startswith("# " + which)
    with pytest.raises(exceptions.SelectionError):
        pipeline.format_plot_data(golden_report, 'spectrum')


def test_emit_plot_data_from_saved_report(tmp_path, golden_report):
    """test a report read back from disk plots like the fresh one."""
    path = tmp_path / "report.json"
    path.write_bytes(golden_report.serialize())
    loaded = message.RunReport.load(str(path))
    assert loaded.exit_code == golden_report.exit_code
    out = tmp_path / "growth.txt"
    assert pipeline.emit_plot_data(loaded, 'growth', str(out)) == str(out)
    assert out.read_text(encoding='utf-8') == pipeline.format_plot_data(golden_report, 'growth')


def test_bundled_golden_mean_has_decay_series():
    """test the bundled golden-mean run fits the decay of the conjugator shells."""
    r = pipeline.run_pipeline(config.parse_config(os.path.join(CONFIGS, "golden_mean.yaml")))
    assert r.exit_code == constants.ExitCode.Success
    for run in r.runs:
        assert len(run['decay_series']) >= 4
        assert run['decay']['shells'] == len(run['decay_series'])
    assert not [e for e in r.errors if e['detail']['code'] == exceptions.FitError.code]
    text = pipeline.format_plot_data(r, 'decay')
    assert text.startswith("# decay")
    assert text.count('#') == 2


def test_bundled_torus2_converges():
    """test the bundled T^2 run clips nothing and meets the tolerance."""
    r = pipeline.run_pipeline(config.parse_config(os.path.join(CONFIGS, "torus2.yaml")))
    assert r.exit_code == constants.ExitCode.Success
    [run] = r.runs
    assert run['clipped_mass'] == 0
    assert run['relative_residual'] <= 1e-10
