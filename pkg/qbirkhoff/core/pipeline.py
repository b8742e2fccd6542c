"""
The batch pipeline: validity -> nonresonance -> recursion -> diagnostics per t, aggregated into a RunReport
"""
import math
import time
import logging

from gevent import pool

from qbirkhoff.common import constants, exceptions, message, utils
from qbirkhoff.core import approximation, config as cfg, homological, nonresonance, normalform, symbols

log = logging.getLogger(__name__)
log_i = log.info
log_d = log.debug
log_w = log.warning
log_e = log.error
log_c = log.critical

Stage = constants.Stage

class _Clock:
    "Per-stage wall-clock seconds, only kept when timing is on"

    def __init__(self, enabled):
        self.enabled = enabled
        self.times = {}
        self._start = None

    def start(self):
        self._start = time.perf_counter()

    def stop(self, stage):
        if self.enabled:
            self.times[stage.value] = self.times.get(stage.value, 0.0) + time.perf_counter() - self._start

def check_validity_stage(config, report):
    "Stage validity: Delta's growth and integrability conditions and the Gamma_s bounds"
    try:
        vr = approximation.check_validity(config.delta, config.gevrey.sigma)
        bounds = []
        for s in config.lemma_s:
            for eta in config.lemma_eta:
                bounds.append(approximation.lemma_a7_bound(config.delta, s, eta))
        report.set_validity(message.ValidityMessage(config.delta, vr, bounds))
        if not vr.valid:
            log_w("Delta {} fails the sigma-approximation conditions".format(config.delta.formula()))
            report.add_error(message.StageError(None, Stage.validity, exceptions.ValidityError(
                "check_validity", "Delta {} is not a sigma-approximation function".format(config.delta.formula()))))
    except exceptions.QBirkhoffError as e:
        log_w("Validity stage failed: {}".format(e.msg))
        report.add_error(message.StageError(None, Stage.validity, e))

def _divisors(config, freq, t):
    omega = freq.evaluate(config.base_action)
    rep = nonresonance.scan_divisors(omega, config.delta, config.truncation.K, config.kappa)
    conv = None
    if len(omega) == 2 and omega[0] != 0:
        conv = nonresonance.convergents(abs(omega[1] / omega[0]))
    if not rep.verdict:
        log_w("t={}: kappa={} exceeds the attainable {:.6e} up to K={}".format(
            t, config.kappa, rep.kappa_max, config.truncation.K))
    return message.DivisorMessage(t, rep, conv)

def _richest_order(p):
    "The perturbation order with the most nonzero shells"
    best, count = None, -1
    for j in range(2, p.h_order + 1):
        c = len([m for m, v in symbols.shell_max(p, j).items() if m >= 2 and v > 0])
        if c > count:
            best, count = j, c
    return best

def _diagnostics(config, p, result, t, errors):
    flags = config.run
    extra = {}
    norm_p = symbols.norms(p).total
    extra['relative_residual'] = result.max_residual / norm_p if norm_p else result.max_residual
    extra['class_envelope'] = normalform.class_envelope_fit(p, config.gevrey).as_dict()
    j = _richest_order(p)
    if flags.decay:
        # the conjugator fills the shells up to N - 1 even when p sits on shell 1
        extra['decay_series'] = [list(x) for x in homological.decay_series(result.a, None)]
        try:
            extra['decay'] = homological.fit_decay(result.a, config.gevrey.sigma, j=None).as_dict()
        except exceptions.FitError as e:
            errors.append(message.StageError(t, Stage.diagnostics, e))
    if flags.growth:
        extra['growth_series'] = [[i, math.log(v)] for i, v in sorted(symbols.norms(result.a).per_order.items())
                                  if i >= 1 and v > 0]
        if result.growth_fit is None:
            errors.append(message.StageError(t, Stage.diagnostics, exceptions.FitError(
                "fit_growth", "fewer than 4 nonzero conjugator orders")))
    if flags.amplification and j is not None:
        try:
            f = symbols.oscillating_part(p.slice(j))
            sol = homological.solve_homological(f, result.frequency, config.delta, config.kappa, result.mode)
            extra['amplification'] = homological.amplification_report(f, sol.u, config.delta, config.kappa).as_dict()
        except exceptions.CoreError as e:
            errors.append(message.StageError(t, Stage.diagnostics, e))
    if config.h_values:
        extra['truncation'] = [dict(h=h, **normalform.optimal_truncation_eval(
            result.p0, config.base_action, t, h, config.eta, config.gevrey.rho_bar).as_dict())
            for h in config.h_values]
    if flags.batch and config.batch_actions:
        try:
            freq = config.frequency_at(t)
            grid = nonresonance.mark_nonresonant_grid(freq, config.delta, config.kappa, config.truncation.K,
                                                      config.batch_actions, t)
            entries = normalform.batch_over_grid(p, grid, config.delta, config.kappa)
            extra['batch'] = {'grid': grid.as_dict(), 'entries': [e.as_dict() for e in entries]}
        except exceptions.CoreError as e:
            errors.append(message.StageError(t, Stage.diagnostics, e))
    return extra

def run_at(config, t, full=False, timing=False):
    """
    All stages at one t.

    Returns:
        dict with the DivisorMessage, the NormalFormMessage, the StageErrors and timings
    """
    out = {'t': t, 'divisors': None, 'run': None, 'errors': [], 'timing': None}
    clock = _Clock(timing)
    flags = config.run
    try:
        clock.start()
        p = config.symbol_at(t)
        freq = config.frequency_at(t)
        clock.stop(Stage.config)
    except exceptions.QBirkhoffError as e:
        out['errors'].append(message.StageError(t, Stage.config, e))
        return out

    if flags.nonresonance:
        clock.start()
        try:
            out['divisors'] = _divisors(config, freq, t)
        except exceptions.QBirkhoffError as e:
            log_e("t={}: {}".format(t, e.msg))
            out['errors'].append(message.StageError(t, Stage.nonresonance, e))
            return out
        finally:
            clock.stop(Stage.nonresonance)

    if not flags.recursion:
        out['timing'] = clock.times if timing else None
        return out
    clock.start()
    try:
        supplied = None if config.frequency is None else freq
        result = normalform.run_recursion(p, supplied, config.delta, config.kappa, config.truncation.N, config.mode)
    except exceptions.QBirkhoffError as e:
        log_e("t={}: {}".format(t, e.msg))
        out['errors'].append(message.StageError(t, Stage.recursion, e))
        return out
    finally:
        clock.stop(Stage.recursion)

    clock.start()
    extra = _diagnostics(config, p, result, t, out['errors'])
    clock.stop(Stage.diagnostics)
    out['run'] = message.NormalFormMessage(t, result, full, extra)
    out['timing'] = clock.times if timing else None
    return out

def _run_at(args):
    return run_at(*args)

def run_pipeline(config, tolerance=None, full=None, timing=None):
    """
    Run every stage for every t of the config.

    Params:
        tolerance -- relative residual tolerance, defaults to the config's
        full -- include full coefficient tables
        timing -- record wall-clock timings (reports are then no longer reproducible)

    Returns:
        RunReport with its exit code set
    """
    assert isinstance(config, cfg.ProblemConfig)
    tolerance = config.tolerance if tolerance is None else tolerance
    full = constants.full_coeffs if full is None else full
    timing = constants.timing if timing is None else timing
    raw = cfg.to_dict(config)
    report = message.RunReport(raw, utils.content_hash(raw))
    log_i("Running pipeline for {} t-values, config {}".format(len(config.t_values), report.config_hash[:12]))
    if config.run.validity:
        check_validity_stage(config, report)

    workers = pool.Pool(constants.worker_limit)
    outcomes = list(workers.imap(_run_at, [(config, t, full, timing) for t in config.t_values]))
    times = {}
    for o in outcomes:
        if o['divisors'] is not None:
            report.add_divisors(o['divisors'])
        if o['run'] is not None:
            report.add_run(o['run'])
        for e in o['errors']:
            report.add_error(e)
        if o['timing']:
            times[str(o['t'])] = o['timing']
    if timing:
        report.timing = times

    if report.hard_errors:
        report.exit_code = constants.ExitCode.HardError
    elif any(r['relative_residual'] > tolerance or r['clipped_mass'] > 0 for r in report.runs):
        report.exit_code = constants.ExitCode.ToleranceExceeded
    log_i("Pipeline done: {} runs, {} errors, exit {}".format(
        len(report.runs), len(report.errors), report.exit_code.name))
    return report

## PLOT DATA ##

_headers = {
    'decay': "decay (m = |k|_1, log max |coefficient|)",
    'growth': "growth (j, log l1 norm of a_j)",
    'divisors': "divisors (m = |k|_1, shell min |<k,omega>| * Delta(m))",
    'residuals': "residuals (j, l1 norm of c_j)",
}

def _rows(report, which):
    "(t, rows) blocks in t order"
    if which == 'divisors':
        for d in report.divisors:
            per = d['report']['kappa_max_per_shell']
            yield d['t'], sorted((int(m), v) for m, v in per.items())
        return
    for r in report.runs:
        if which == 'residuals':
            yield r['t'], sorted((int(j), v) for j, v in r['residual_norms'].items())
        elif which == 'decay' and 'decay_series' in r:
            yield r['t'], [tuple(x) for x in r['decay_series']]
        elif which == 'growth' and 'growth_series' in r:
            yield r['t'], [tuple(x) for x in r['growth_series']]

def format_plot_data(report, which):
    "Two-column text, one header line per t block"
    if which not in constants.plot_series:
        raise exceptions.SelectionError(which)
    if isinstance(report, dict):
        report = message.RunReport().from_json(report)
    blocks = [(t, rows) for t, rows in _rows(report, which) if rows]
    if not blocks:
        raise exceptions.SelectionError(which)
    lines = []
    for t, rows in blocks:
        lines.append("# {} t={!r}".format(_headers[which], t))
        lines.extend("{!r} {!r}".format(x, y) for x, y in rows)
    return "\n".join(lines) + "\n"

def emit_plot_data(report, which, path):
    "Write the requested series of a report as plot-ready text"
    text = format_plot_data(report, which)
    utils.write_text(path, text)
    log_i("Wrote {} series to {}".format(which, path))
    return path
