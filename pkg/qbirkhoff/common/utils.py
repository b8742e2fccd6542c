import os
import sys
import json
import hashlib
import argparse
import logging
import logging.handlers

from qbirkhoff.common import constants

log = logging.getLogger(__name__)
log_i = log.info
log_d = log.debug
log_w = log.warning
log_e = log.error
log_c = log.critical

def eprint(*args, **kwargs):
    "Prints to stderr"
    print(*args, file=sys.stderr, **kwargs)


## Core ##
def setup_logging():
    "Configures the root logger from constants"
    root = logging.getLogger()
    root.setLevel(logging.DEBUG)
    for h in list(root.handlers):
        root.removeHandler(h)
    fmt = logging.Formatter("%(asctime)s [%(levelname)s] %(name)s: %(message)s")

    stream = logging.StreamHandler(sys.stderr)
    stream.setLevel(logging.DEBUG if constants.debug else logging.INFO)
    stream.setFormatter(fmt)
    root.addHandler(stream)

    if constants.dir_log:
        os.makedirs(constants.dir_log, exist_ok=True)
        for name, level in ((constants.log_normal, logging.INFO),
                            (constants.log_error, logging.ERROR),
                            (constants.log_debug, logging.DEBUG)):
            if level == logging.DEBUG and not constants.debug:
                continue
            fh = logging.handlers.RotatingFileHandler(constants.log_path(name),
                                                      maxBytes=constants.log_max_bytes,
                                                      backupCount=constants.log_backups,
                                                      encoding='utf-8')
            fh.setLevel(level)
            fh.setFormatter(fmt)
            root.addHandler(fh)

def get_argparser():
    "Creates and returns a command-line arguments parser"
    parser = argparse.ArgumentParser(prog="qbirkhoff",
        description="Quantum Birkhoff normal forms of symbols on T^n x D under the sigma-Bruno-Russmann condition")

    parser.add_argument('-v', '--version', action='version',
                    version='qbirkhoff v{}'.format(constants.version))

    parser.add_argument('-d', '--debug', action='store_true',
                    help='Log debug messages')

    parser.add_argument('--log-dir',
                    help='Also write rotating log files into this directory')

    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    check = sub.add_parser('check', help='Validity and nonresonance checks only')
    run = sub.add_parser('run', help='Run the full normal form pipeline')
    props = sub.add_parser('props', help='Run randomized property suites')
    plot = sub.add_parser('plot', help='Emit plot-ready data series from a report')

    for p in (check, run):
        p.add_argument('--config', required=True, metavar='PATH',
                       help='Problem configuration (YAML)')
    for p in (check, run, props):
        p.add_argument('--out', metavar='PATH',
                       help='Write the report to this path instead of stdout')
    for p in (run, props):
        p.add_argument('--seed', type=int,
                       help='Seed for randomized suites')
    run.add_argument('--tolerance', type=float,
                     help='Residual tolerance (default {})'.format(constants.tolerance))
    run.add_argument('--full-coeffs', action='store_true',
                     help='Include full coefficient tables in the report')
    run.add_argument('--timing', action='store_true',
                     help='Record wall-clock timings (makes reports non-reproducible)')

    props.add_argument('--cases', type=int, default=25,
                       help='Random cases per property')

    plot.add_argument('--report', required=True, metavar='PATH',
                      help='Report produced by the run command')
    plot.add_argument('--which', required=True, choices=constants.plot_series,
                      help='Series to emit')
    plot.add_argument('--out', required=True, metavar='PATH',
                      help='Output data file')

    return parser

def parse_options(args):
    "Parses args from the command-line"
    assert isinstance(args, argparse.Namespace)

    constants.debug = args.debug
    if args.log_dir:
        constants.dir_log = args.log_dir
    if getattr(args, 'seed', None) is not None:
        constants.seed = args.seed
    if getattr(args, 'tolerance', None) is not None:
        constants.tolerance = args.tolerance
    if getattr(args, 'full_coeffs', False):
        constants.full_coeffs = True
    if getattr(args, 'timing', False):
        constants.timing = True

## SERIALIZATION ##
def to_json(obj):
    "Canonical JSON text: sorted keys, fixed indentation, shortest round-trip floats"
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"

def content_hash(obj):
    "sha256 of the canonical JSON form of obj"
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(',', ':')).encode('utf-8')).hexdigest()

def complex_pair(z):
    "[re, im] list of a complex number"
    z = complex(z)
    return [z.real, z.imag]

def write_text(path, text):
    "Writes text (or utf-8 bytes) to path, or stdout when path is None"
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)
