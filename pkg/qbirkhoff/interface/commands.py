import dataclasses

from qbirkhoff.common import exceptions, message, utils
from qbirkhoff.core import config as cfg, pipeline, props

def check(config_path, out=None):
    """
    Validity and nonresonance only

    Params:
        - config_path -- YAML problem configuration
        - out -- report path, stdout when None

    Returns:
        RunReport
    """
    config = cfg.parse_config(config_path)
    flags = dataclasses.replace(config.run, validity=True, nonresonance=True, recursion=False)
    config = dataclasses.replace(config, run=flags)
    report = pipeline.run_pipeline(config, timing=False)
    utils.write_text(out, report.serialize())
    return report

def run(config_path, out=None, tolerance=None, full=None, timing=None):
    """
    The full pipeline

    Params:
        - config_path -- YAML problem configuration
        - out -- report path, stdout when None
        - tolerance -- relative residual tolerance
        - full -- include full coefficient tables
        - timing -- record timings

    Returns:
        RunReport
    """
    config = cfg.parse_config(config_path)
    report = pipeline.run_pipeline(config, tolerance, full, timing)
    utils.write_text(out, report.serialize())
    return report

def properties(seed=None, cases=25, out=None):
    """
    Randomized property suites

    Returns:
        list of PropertyResult
    """
    results = props.run_properties(seed, cases)
    msg = message.List('properties', dict)
    for r in results:
        msg.append(r.as_dict())
    utils.write_text(out, msg.serialize(include_key=True))
    return results

def plot(report_path, which, out):
    """
    Emit one plot-ready data series of a report

    Params:
        - report_path -- report written by run
        - which -- decay, growth, divisors or residuals
        - out -- output file
    """
    try:
        report = message.RunReport.load(report_path)
    except (OSError, ValueError) as e:
        raise exceptions.ConfigParseError(report_path, None, str(e))
    return pipeline.emit_plot_data(report, which, out)
