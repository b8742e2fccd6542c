import os, sys

if __package__ is None and not hasattr(sys, 'frozen'):
    # direct call of main.py
    path = os.path.realpath(os.path.abspath(__file__))
    sys.path.insert(0, os.path.dirname(os.path.dirname(path)))

from qbirkhoff.common import utils, constants, exceptions
from qbirkhoff.interface import commands

def dispatch(args):
    "Runs the selected command and returns its exit code"
    if args.command == 'check':
        report = commands.check(args.config, args.out)
        return report.exit_code
    if args.command == 'run':
        report = commands.run(args.config, args.out, args.tolerance)
        return report.exit_code
    if args.command == 'props':
        results = commands.properties(args.seed, args.cases, args.out)
        return constants.ExitCode.Success if all(r.passed for r in results) else constants.ExitCode.ToleranceExceeded
    commands.plot(args.report, args.which, args.out)
    return constants.ExitCode.Success

def start(argv=None):
    parser = utils.get_argparser()
    args = parser.parse_args(argv)
    utils.parse_options(args)
    utils.setup_logging()

    try:
        code = dispatch(args)
    except exceptions.ConfigError as e:
        e.log()
        code = constants.ExitCode.UsageError
    except exceptions.QBirkhoffError as e:
        e.log()
        code = constants.ExitCode.HardError
    return code.value

if __name__ == '__main__':
    sys.exit(start())
