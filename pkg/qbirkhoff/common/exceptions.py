"""exceptions module."""
import logging

log = logging.getLogger(__name__)
log_i = log.info
log_d = log.debug
log_w = log.warning
log_e = log.error
log_c = log.critical

_error_codes = []
def error_code(code):
    assert isinstance(code, int), "Error code must be of type int"
    assert code not in _error_codes, "Error code already used"
    _error_codes.append(code)
    def wrap(cls):
        cls.code = code
        cls.name = cls.__name__
        return cls
    return wrap

@error_code(100)
class QBirkhoffError(RuntimeError):
    """Base exception, all exceptions will derive from this."""

    def __init__(self, msg):
        """init func."""
        super().__init__(msg)
        self.msg = "[{}]{}: {}".format(self.code, self.__class__.__name__, msg)

    def log(self):
        "log exception"
        from qbirkhoff.common.utils import eprint
        log_e(self.msg)
        eprint(self.msg)

    def detail(self):
        "Structured description used by reports"
        return {'code': self.code, 'error': self.name, 'msg': self.msg}

# ## CORE -- CODE: 100+ ##

@error_code(101)
class CoreError(QBirkhoffError):
    """Base core exception, all core exceptions will derive from this.

    Params:
        where -- where the error occured
        message -- explanation of error
    """

    def __init__(self, where, message):
        """init func."""
        super().__init__("{}: {}".format(where, message))
        self.where = where

    def detail(self):
        d = super().detail()
        d['where'] = self.where
        return d


@error_code(102)
class InputError(CoreError):
    """Invalid input for an operation."""

    pass


@error_code(103)
class DomainError(InputError):
    """Argument outside the mathematical domain of a function."""

    pass


@error_code(104)
class SizeError(CoreError):
    """Requested enumeration is too large."""

    pass


@error_code(105)
class SequencingError(CoreError):
    """A prerequisite order of the recursion is not available.

    Params:
        where -- operation name
        order -- the missing order
    """

    def __init__(self, where, order):
        """init func."""
        super().__init__(where, "prerequisite order {} is not available".format(order))
        self.order = order

    # ## APPROXIMATION -- CODE: 200+ ##

@error_code(200)
class ApproximationError(CoreError):
    """Base approximation function exception."""

    pass


@error_code(201)
class ValidityError(ApproximationError):
    """Approximation function fails the growth or integrability conditions."""

    pass


@error_code(202)
class NumericError(CoreError):
    """A numeric procedure did not converge.

    Params:
        where -- operation name
        message -- explanation
        diagnostics -- dict of values at the point of failure
    """

    def __init__(self, where, message, diagnostics=None):
        """init func."""
        super().__init__(where, message)
        self.diagnostics = diagnostics or {}

    def detail(self):
        d = super().detail()
        d['diagnostics'] = self.diagnostics
        return d

    # ## SMALL DIVISORS -- CODE: 300+ ##

@error_code(300)
class ResonanceError(CoreError):
    """Exact resonance <k, omega> = 0.

    Params:
        where -- operation name
        k -- the resonant lattice vector
    """

    def __init__(self, where, k):
        """init func."""
        self.k = tuple(int(x) for x in k)
        super().__init__(where, "resonant frequency at k={}".format(self.k))

    def detail(self):
        d = super().detail()
        d['k'] = list(self.k)
        return d


@error_code(301)
class SmallDivisorError(CoreError):
    """Divisor smaller than the admissible bound kappa/Delta(|k|).

    Params:
        where -- operation name
        k -- the offending mode
        divisor -- |<omega, k>|
        bound -- kappa/Delta(|k|)
        order -- recursion order j, if any
    """

    def __init__(self, where, k, divisor, bound, order=None):
        """init func."""
        self.k = tuple(int(x) for x in k)
        self.divisor = divisor
        self.bound = bound
        self.order = order
        msg = "small divisor at k={}: |<omega,k>|={:.6e} < {:.6e}".format(self.k, divisor, bound)
        if order is not None:
            msg += " (order j={})".format(order)
        super().__init__(where, msg)

    def with_order(self, order):
        "Copy of this error tagged with a recursion order"
        return SmallDivisorError(self.where, self.k, self.divisor, self.bound, order)

    def detail(self):
        d = super().detail()
        d.update(k=list(self.k), divisor=self.divisor, bound=self.bound, order=self.order)
        return d

    # ## SYMBOLS -- CODE: 400+ ##

@error_code(400)
class ShapeError(CoreError):
    """Symbols with incompatible shape."""

    pass

    # ## FITTING -- CODE: 500+ ##

@error_code(500)
class FitError(CoreError):
    """Not enough data for a fit."""

    pass

    ## CONFIGURATION -- CODE: 600+ ##

@error_code(600)
class ConfigError(QBirkhoffError):
    """Base configuration exception"""
    pass

@error_code(601)
class ConfigParseError(ConfigError):
    "Configuration file could not be parsed"
    def __init__(self, path, line, error):
        self.line = line
        return super().__init__("Failed parsing config ({}) at line {}: {}".format(path, line, error))

@error_code(602)
class ConfigViolationError(ConfigError):
    "Configuration violates one or more constraints"
    def __init__(self, violations):
        self.violations = list(violations)
        lines = ["{}: {}".format(path, why) for path, why in self.violations]
        return super().__init__("Invalid config:\n\t" + "\n\t".join(lines))

    def detail(self):
        d = super().detail()
        d['violations'] = [list(x) for x in self.violations]
        return d

@error_code(603)
class SelectionError(ConfigError):
    "Requested series is not present"
    def __init__(self, which):
        self.which = which
        return super().__init__("Series not present in report: {}".format(which))
