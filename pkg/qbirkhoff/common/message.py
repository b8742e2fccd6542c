"Contains classes/functions used to encapsulate report structures"

import enum
import json
import math

import numpy as np

from qbirkhoff.common import constants, exceptions, utils

def plain(obj):
    "Convert obj to plain JSON-compatible values"
    if isinstance(obj, CoreMessage):
        return plain(obj.data())
    if isinstance(obj, dict):
        return {str(k.value if isinstance(k, enum.Enum) else k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(x) for x in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return utils.complex_pair(obj)
    if hasattr(obj, 'as_dict'):
        return plain(obj.as_dict())
    return obj

def finalize(msg_dict, name=constants.tool_name):
    "Finalize dict message before writing"
    enc = 'utf-8'
    msg = {
        'name': name,
        'version': constants.version,
        'schema_version': constants.schema_version,
        'data': plain(msg_dict)
        }

    return bytes(utils.to_json(msg), enc)

class CoreMessage:
    "Encapsulates return values from methods in the interface module"

    def __init__(self, key):
        self.key = key
        self._error = None

    def set_error(self, e):
        "Set an error message"
        assert isinstance(e, Error)
        self._error = e

    def data(self):
        "Implement in subclass. Must return a dict or list if intended to be serializable."
        raise NotImplementedError()

    def from_json(self, j):
        raise NotImplementedError()

    def json_friendly(self):
        "Serialize to JSON structure"
        d = self.data()
        assert isinstance(d, (dict, list)), "self.data() must return a dict or list!"
        if self._error:
            d[self._error.key] = self._error.data()
        return {self.key: plain(d)}

    def serialize(self, name=constants.tool_name):
        "Serialize this object to bytes"
        return finalize(self.json_friendly(), name)

class List(CoreMessage):
    """
    Encapsulates a list of objects of the same type
    """

    def __init__(self, key, type_):
        super().__init__(key)
        self._type = type_
        self.items = []

    def append(self, item):
        assert isinstance(item, self._type), "item must be a {}".format(self._type)
        d = item.data() if isinstance(item, CoreMessage) else item
        self.items.append(d)

    def data(self):
        return self.items

    def from_json(self, j):
        self.items = list(j)
        return self

    def serialize(self, name=constants.tool_name, include_key=False):
        "Serialize this object to bytes"
        if include_key:
            f = self.json_friendly
        else:
            f = self.data
        return finalize(f(), name)


class Message(CoreMessage):
    "An arbitrary remark"

    def __init__(self, msg):
        super().__init__('msg')
        self.msg = msg

    def data(self):
        return self.msg

    def from_json(self, j):
        self.msg = j
        return self

class Error(CoreMessage):
    "An error object"

    def __init__(self, error, msg):
        super().__init__('error')
        assert isinstance(msg, (Message, str))
        if isinstance(msg, str):
            msg = Message(msg)
        self.error = error
        self.msg = msg

    @classmethod
    def from_exception(cls, e):
        assert isinstance(e, exceptions.QBirkhoffError)
        return cls(e.code, e.msg)

    def data(self):
        return {'code': self.error, self.msg.key: self.msg.data()}

class StageError(CoreMessage):
    "An error surfaced by a pipeline stage at a given t"

    def __init__(self, t, stage, e):
        super().__init__('stage_error')
        assert isinstance(stage, constants.Stage)
        assert isinstance(e, exceptions.QBirkhoffError)
        self.t = t
        self.stage = stage
        self.exception = e

    @property
    def hard(self):
        "Failures of the nonresonance or recursion stages fail the run"
        if isinstance(self.exception, (exceptions.ResonanceError, exceptions.SmallDivisorError)):
            return True
        return self.stage in (constants.Stage.config, constants.Stage.nonresonance, constants.Stage.recursion)

    def data(self):
        return {'t': self.t, 'stage': self.stage.value, 'detail': self.exception.detail(), 'hard': self.hard}

class ValidityMessage(CoreMessage):
    "Approximation function validity plus the Gamma_s bounds computed for it"

    def __init__(self, delta, report, bounds=()):
        super().__init__('validity')
        self.delta = delta
        self.report = report
        self.bounds = list(bounds)

    def data(self):
        return {'delta': self.delta.describe(), 'report': self.report.as_dict(),
                'gamma_bounds': [b.as_dict() for b in self.bounds]}

class DivisorMessage(CoreMessage):
    "A divisor scan at one t"

    def __init__(self, t, report, convergents=None):
        super().__init__('divisors')
        self.t = t
        self.report = report
        self.convergents = convergents

    def data(self):
        d = {'t': self.t, 'report': self.report.as_dict()}
        if self.convergents is not None:
            d['convergents'] = [list(c) for c in self.convergents]
        return d

class NormalFormMessage(CoreMessage):
    "Recursion summary at one t"

    def __init__(self, t, result, full=False, extra=None):
        super().__init__('normal_form')
        self.t = t
        self.result = result
        self.full = full
        self.extra = extra or {}

    def data(self):
        d = {'t': self.t}
        d.update(self.result.as_dict(full=self.full))
        d.update(self.extra)
        return d

class RunReport(CoreMessage):
    """
    The pipeline report: config echo and hash, validity, divisor scans, per-t results, errors and exit code.
    Sections are kept as plain data so that a report read back from disk behaves like a fresh one.
    """

    def __init__(self, config=None, config_hash=None):
        super().__init__('report')
        self.config = plain(config) if config is not None else None
        self.config_hash = config_hash
        self.validity = None
        self.divisors = []
        self.runs = []
        self.errors = []
        self.timing = None
        self.exit_code = constants.ExitCode.Success
        self.extra = {}

    def set_validity(self, msg):
        assert isinstance(msg, ValidityMessage)
        self.validity = plain(msg.data())

    def add_divisors(self, msg):
        assert isinstance(msg, DivisorMessage)
        self.divisors.append(plain(msg.data()))

    def add_run(self, msg):
        assert isinstance(msg, NormalFormMessage)
        self.runs.append(plain(msg.data()))

    def add_error(self, msg):
        assert isinstance(msg, StageError)
        self.errors.append(plain(msg.data()))

    @property
    def hard_errors(self):
        return [e for e in self.errors if e['hard']]

    def data(self):
        d = {
            'config': self.config,
            'config_hash': self.config_hash,
            'validity': self.validity,
            'divisors': sorted(self.divisors, key=lambda x: x['t']),
            'runs': sorted(self.runs, key=lambda x: x['t']),
            'errors': sorted(self.errors, key=lambda x: (x['t'] if x['t'] is not None else -math.inf, x['stage'])),
            'exit_code': self.exit_code.value,
        }
        if self.timing is not None:
            d['timing'] = self.timing
        d.update(self.extra)
        return d

    def from_json(self, j):
        "Load from the finalized document or from its data part"
        if 'data' in j:
            j = j['data']
        j = j.get(self.key, j)
        self.config = j.get('config')
        self.config_hash = j.get('config_hash')
        self.validity = j.get('validity')
        self.divisors = list(j.get('divisors', []))
        self.runs = list(j.get('runs', []))
        self.errors = list(j.get('errors', []))
        self.timing = j.get('timing')
        self.exit_code = constants.ExitCode(j.get('exit_code', 0))
        return self

    @classmethod
    def load(cls, path):
        with open(path, 'r', encoding='utf-8') as f:
            return cls().from_json(json.load(f))
