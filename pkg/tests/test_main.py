"""test main module and the command interface."""
import json
from unittest import mock

import pytest

from qbirkhoff import main
from qbirkhoff.common import constants, exceptions
from qbirkhoff.core import config
from qbirkhoff.interface import commands

from tests.test_config import golden_raw


@pytest.fixture
def golden_path(tmp_path):
    path = str(tmp_path / "golden.yaml")
    config.write_config(config.from_dict(golden_raw()), path)
    return path


@pytest.fixture
def quiet():
    "keep the root logger and constants as they are"
    with mock.patch('qbirkhoff.common.utils.setup_logging'):
        with mock.patch.multiple(constants, debug=False, dir_log=constants.dir_log, seed=constants.seed,
                                 tolerance=constants.tolerance, full_coeffs=False, timing=False):
            yield


@pytest.mark.parametrize("argv, exit_code", [
    (['check', '--config', 'c.yaml'], constants.ExitCode.Success),
    (['run', '--config', 'c.yaml'], constants.ExitCode.ToleranceExceeded),
])
def test_dispatch_report_exit_code(argv, exit_code, quiet):
    """test report commands return the report's exit code."""
    report = mock.Mock(exit_code=exit_code)
    with mock.patch('qbirkhoff.main.commands') as m_commands:
        m_commands.check.return_value = report
        m_commands.run.return_value = report
        assert main.start(argv) == exit_code.value


def test_dispatch_props(quiet):
    """test a failing property suite raises the exit code."""
    with mock.patch('qbirkhoff.main.commands') as m_commands:
        m_commands.properties.return_value = [mock.Mock(passed=True), mock.Mock(passed=False)]
        assert main.start(['props', '--cases', '2']) == constants.ExitCode.ToleranceExceeded.value
        m_commands.properties.assert_called_once_with(None, 2, None)


@pytest.mark.parametrize("error, exit_code", [
    (exceptions.ConfigViolationError([('kappa', "must be >= 0")]), constants.ExitCode.UsageError),
    (exceptions.ConfigParseError("c.yaml", 3, "bad"), constants.ExitCode.UsageError),
    (exceptions.SelectionError('decay'), constants.ExitCode.UsageError),
    (exceptions.InputError("run_recursion", "bad"), constants.ExitCode.HardError),
])
def test_start_maps_errors(error, exit_code, quiet):
    """test errors map onto exit codes."""
    with mock.patch('qbirkhoff.main.commands') as m_commands, mock.patch('qbirkhoff.common.utils.sys'):
        m_commands.run.side_effect = error
        assert main.start(['run', '--config', 'c.yaml']) == exit_code.value


def test_start_missing_config(tmp_path, quiet):
    """test an unreadable config is a usage error."""
    with mock.patch('qbirkhoff.common.utils.sys'):
        assert main.start(['run', '--config', str(tmp_path / "nope.yaml")]) == constants.ExitCode.UsageError.value


def test_run_and_plot(tmp_path, golden_path, quiet):
    """test run writes a report that plot turns into data."""
    out = str(tmp_path / "report.json")
    assert main.start(['run', '--config', golden_path, '--out', out]) == 0
    with open(out, encoding='utf-8') as f:
        doc = json.load(f)
    assert doc['data']['report']['exit_code'] == 0
    data = str(tmp_path / "residuals.txt")
    assert main.start(['plot', '--report', out, '--which', 'residuals', '--out', data]) == 0
    with open(data, encoding='utf-8') as f:
        assert f.readline().startswith("# residuals")


def test_check_skips_recursion(tmp_path, golden_path):
    """test check only runs validity and the divisor scan."""
    out = str(tmp_path / "check.json")
    report = commands.check(golden_path, out)
    assert report.runs == []
    assert len(report.divisors) == 1
    assert report.validity is not None


def test_plot_bad_report(tmp_path):
    """test an unreadable report is a config error."""
    path = tmp_path / "broken.json"
    path.write_text("{", encoding='utf-8')
    with pytest.raises(exceptions.ConfigParseError):
        commands.plot(str(path), 'growth', str(tmp_path / "g.txt"))
