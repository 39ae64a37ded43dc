#!/usr/bin/env python3

"""Sweep configuration: JSON file, per-experiment defaults and flag overrides.

Numbers may be written as arithmetic strings over ``pi``, ``e`` and
``sqrt(...)``; grids are lists or ``{"start", "stop", "num"}`` ranges with
both ends included.
"""

import ast
import copy
import hashlib
import json
import logging
import math
import operator
import os
from dataclasses import dataclass, field

import numpy as np

from twinsub import catalog
from twinsub import estimation
from twinsub import optics
from twinsub import subtraction
from twinsub.catalog import InputStateSpec
from twinsub.optics import LossSpec

logger = logging.getLogger(__name__)

EXPERIMENTS = ('phase_sweep', 'loss_sweep', 'n_scaling', 'table1', 'protocol_compare')
FORMATS = ('csv', 'json', 'h5')
SUBTRACTIONS = ('none',) + subtraction.PROTOCOLS

DEFAULT_TOLERANCE = 1e-9

DEFAULTS = {
    'phase_sweep': {
        'state': {'kind': 'subtracted_twin', 'n': 10, 'sign': '+'},
        'phi': {'start': '-pi/2', 'stop': 'pi/2', 'num': 181},
    },
    'loss_sweep': {
        'n': [10],
        't': [0.9, 0.95, 0.99, 1.0],
        'phi': [0.0],
    },
    'n_scaling': {
        'state': {'kind': 'twin_fock', 'n': 1},
        'n': {'start': 2, 'stop': 20, 'num': 19},
        'phi': [0.0],
        'subtraction': 'coherent_plus',
    },
    'table1': {
        'n': [8],
        'alpha': 'sqrt(8)',
        'r': 1.0,
        'phi': [0.0],
    },
    'protocol_compare': {
        'state': {'kind': 'twin_fock', 'n': 3},
        'phi': [0.0],
    },
}

COMMON = {
    'theta': 0.01,
    'route': 'linear',
    'bucket_bias': 0.5,
    'subtraction': 'none',
    'loss': {'t1': 1.0, 't2': 1.0},
    'placement': 'input',
    'output': {'dir': 'out', 'format': 'csv', 'name': None},
    'seed': 0,
    'strict': False,
    'jobs': None,
    'tolerance': DEFAULT_TOLERANCE,
}

KEYS = ('experiment', 'state', 'phi', 't', 'n', 'alpha', 'r', 'x') + tuple(COMMON)


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the offending key."""

    def __init__(self, message, field=None, line=None, column=None):
        self.field = field
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append('line %d, column %d' % (line, column))
        if field:
            where.append('field "%s"' % field)
        super().__init__('%s: %s' % (', '.join(where), message) if where else message)


# --- arithmetic strings ---

_BINARY = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {'pi': math.pi, 'e': math.e}
_FUNCTIONS = {'sqrt': math.sqrt}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
        return _BINARY[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
            and node.func.id in _FUNCTIONS and len(node.args) == 1 and not node.keywords:
        return _FUNCTIONS[node.func.id](_eval_node(node.args[0]))
    raise ValueError('unsupported expression element %s' % type(node).__name__)


def parse_number(value, field=None):
    """A JSON number, or an arithmetic string such as "-pi/2" or "sqrt(8)"."""
    if isinstance(value, bool):
        raise ConfigError('expected a number, got %r' % (value,), field)
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, str):
        try:
            return _eval_node(ast.parse(value.strip(), mode='eval'))
        except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as e:
            raise ConfigError('cannot evaluate %r (%s)' % (value, e), field)
    raise ConfigError('expected a number, got %r' % (value,), field)


def parse_int(value, field=None):
    number = parse_number(value, field)
    if float(number) != int(number):
        raise ConfigError('expected an integer, got %r' % (value,), field)
    return int(number)


def parse_int_list(input_):
    if input_ is None:
        return []
    return [parse_int(p) for p in input_.split(',')]


def parse_float_list(input_):
    if input_ is None:
        return []
    return [float(parse_number(p)) for p in input_.split(',')]


def parse_grid(value, field, integer=False):
    """List or inclusive {start, stop, num} range; must be nonempty and strictly increasing."""
    convert = parse_int if integer else (lambda v, f: float(parse_number(v, f)))
    if isinstance(value, dict):
        unknown = sorted(set(value) - {'start', 'stop', 'num'})
        if unknown:
            raise ConfigError('unknown range key(s) %s' % ', '.join(unknown), field)
        try:
            start = parse_number(value['start'], field + '.start')
            stop = parse_number(value['stop'], field + '.stop')
            num = parse_int(value['num'], field + '.num')
        except KeyError as e:
            raise ConfigError('range needs start, stop and num (missing %s)' % e, field)
        if num < 1:
            raise ConfigError('range needs num >= 1', field + '.num')
        points = np.linspace(start, stop, num)
        if integer:
            grid = [int(round(p)) for p in points]
            if any(abs(p - g) > 1e-9 for p, g in zip(points, grid)):
                raise ConfigError('range does not land on integers', field)
        else:
            grid = [float(p) for p in points]
    elif isinstance(value, (list, tuple)):
        grid = [convert(v, '%s[%d]' % (field, i)) for i, v in enumerate(value)]
    else:
        grid = [convert(value, field)]
    if not grid:
        raise ConfigError('grid must not be empty', field)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError('grid must be strictly increasing', field)
    return tuple(grid)


# --- raw documents ---

def load_config(path):
    """Raw config dictionary from a JSON file."""
    try:
        with open(path, 'r') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError('cannot read %s (%s)' % (path, e.strerror))
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, line=e.lineno, column=e.colno)
    if not isinstance(raw, dict):
        raise ConfigError('top level of %s must be an object' % path)
    return raw


def apply_overrides(raw, assignments):
    """Apply ``dotted.key=JSON`` assignments; bare words are taken as strings."""
    raw = copy.deepcopy(raw)
    for assignment in assignments or ():
        if '=' not in assignment:
            raise ConfigError('override %r is not of the form key=value' % assignment)
        key, text = assignment.split('=', 1)
        key = key.strip()
        if not key:
            raise ConfigError('override %r has an empty key' % assignment)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = raw
        parts = key.split('.')
        for i, part in enumerate(parts[:-1]):
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError('cannot set inside a non-object', '.'.join(parts[:i + 1]))
            node = child
        node[parts[-1]] = value
    return raw


def _merge(base, top):
    out = copy.deepcopy(base)
    for key, value in top.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != 'state':
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def resolve(raw, experiment=None):
    """Merge ``raw`` over the defaults of its experiment."""
    experiment = experiment or raw.get('experiment')
    if experiment is None:
        raise ConfigError('no experiment given', 'experiment')
    if experiment not in EXPERIMENTS:
        raise ConfigError('Invalid experiment "%s", expected one of %s'
                          % (experiment, ', '.join(EXPERIMENTS)), 'experiment')
    if raw.get('experiment') not in (None, experiment):
        raise ConfigError('config is for "%s" but "%s" was requested'
                          % (raw['experiment'], experiment), 'experiment')
    merged = _merge(_merge(COMMON, DEFAULTS[experiment]), raw)
    merged['experiment'] = experiment
    return merged


# --- validated config ---

@dataclass(frozen=True)
class OutputSpec:
    dir: str = 'out'
    format: str = 'csv'
    name: str = None

    def path(self, experiment):
        name = self.name or experiment
        return os.path.join(self.dir, '%s.%s' % (name, self.format))


@dataclass(frozen=True)
class SweepConfig:
    experiment: str
    state: InputStateSpec = None
    phi: tuple = (0.0,)
    t: tuple = ()
    n: tuple = ()
    alpha: complex = None
    r: float = None
    x: float = None
    theta: float = 0.01
    route: str = 'linear'
    bucket_bias: float = 0.5
    subtraction: str = 'none'
    loss: LossSpec = field(default_factory=LossSpec)
    placement: str = 'input'
    output: OutputSpec = field(default_factory=OutputSpec)
    seed: int = 0
    strict: bool = False
    jobs: int = None
    tolerance: float = DEFAULT_TOLERANCE
    raw: dict = field(default=None, compare=False, repr=False)

    @property
    def uses_subtraction(self):
        return self.subtraction != 'none' or self.experiment == 'protocol_compare'

    def digest(self):
        """SHA-256 of the canonical JSON of the resolved configuration."""
        text = json.dumps(self.raw, sort_keys=True, separators=(',', ':'), default=str)
        return hashlib.sha256(text.encode('utf-8')).hexdigest()


def _state_spec(value):
    if not isinstance(value, dict):
        raise ConfigError('state must be an object', 'state')
    value = dict(value)
    for key in ('n', 'n_max'):
        if key in value:
            value[key] = parse_int(value[key], 'state.' + key)
    for key in ('r', 'x', 'tail_tol'):
        if key in value:
            value[key] = float(parse_number(value[key], 'state.' + key))
    if 'alpha' in value:
        alpha = value['alpha']
        if isinstance(alpha, (list, tuple)):
            value['alpha'] = [float(parse_number(v, 'state.alpha')) for v in alpha]
        elif not isinstance(alpha, dict):
            value['alpha'] = parse_number(alpha, 'state.alpha')
    try:
        return InputStateSpec.from_dict(value)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e), 'state')


def _choice(value, choices, field):
    if value not in choices:
        raise ConfigError('Invalid value "%s", expected one of %s' % (value, ', '.join(choices)), field)
    return value


def from_dict(raw, experiment=None):
    """Validated SweepConfig from a raw (possibly partial) dictionary."""
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ConfigError('unknown key(s) %s' % ', '.join(unknown), unknown[0])
    merged = resolve(raw, experiment)
    kw = {'experiment': merged['experiment'], 'raw': merged}
    if merged.get('state') is not None:
        kw['state'] = _state_spec(merged['state'])
    kw['phi'] = parse_grid(merged['phi'], 'phi')
    if 't' in merged:
        kw['t'] = parse_grid(merged['t'], 't')
        if not all(0.0 <= t <= 1.0 for t in kw['t']):
            raise ConfigError('transmissions must lie in [0, 1]', 't')
    if 'n' in merged:
        kw['n'] = parse_grid(merged['n'], 'n', integer=True)
        if kw['n'][0] < 1:
            raise ConfigError('photon numbers must be >= 1', 'n')
    if merged.get('alpha') is not None:
        kw['alpha'] = complex(parse_number(merged['alpha'], 'alpha'))
    for key in ('r', 'x'):
        if merged.get(key) is not None:
            kw[key] = float(parse_number(merged[key], key))
    kw['theta'] = float(parse_number(merged['theta'], 'theta'))
    kw['route'] = _choice(merged['route'], subtraction.ROUTES, 'route')
    kw['bucket_bias'] = float(parse_number(merged['bucket_bias'], 'bucket_bias'))
    if not 0.0 <= kw['bucket_bias'] <= 1.0:
        raise ConfigError('bucket bias must lie in [0, 1]', 'bucket_bias')
    kw['subtraction'] = _choice(merged['subtraction'], SUBTRACTIONS, 'subtraction')
    kw['placement'] = _choice(merged['placement'], estimation.PLACEMENTS, 'placement')
    loss = merged['loss']
    if not isinstance(loss, dict) or set(loss) - {'t1', 't2'}:
        raise ConfigError('loss must be an object with t1 and t2', 'loss')
    try:
        kw['loss'] = LossSpec(float(parse_number(loss.get('t1', 1.0), 'loss.t1')),
                              float(parse_number(loss.get('t2', 1.0), 'loss.t2')))
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e), 'loss')
    out = merged['output']
    if not isinstance(out, dict) or set(out) - {'dir', 'format', 'name'}:
        raise ConfigError('output must be an object with dir, format and name', 'output')
    kw['output'] = OutputSpec(str(out.get('dir', 'out')),
                              _choice(out.get('format', 'csv'), FORMATS, 'output.format'),
                              out.get('name'))
    kw['seed'] = parse_int(merged['seed'], 'seed')
    if not isinstance(merged['strict'], bool):
        raise ConfigError('strict must be true or false', 'strict')
    kw['strict'] = merged['strict']
    if merged['jobs'] is not None:
        kw['jobs'] = parse_int(merged['jobs'], 'jobs')
        if kw['jobs'] < 1:
            raise ConfigError('jobs must be >= 1', 'jobs')
    kw['tolerance'] = float(parse_number(merged['tolerance'], 'tolerance'))
    if not kw['tolerance'] > 0.0:
        raise ConfigError('tolerance must be positive', 'tolerance')

    config = SweepConfig(**kw)
    if config.uses_subtraction and not 0.0 < config.theta <= optics.WEAK_TAP_LIMIT:
        raise ConfigError('tap angle must lie in (0, %g]' % optics.WEAK_TAP_LIMIT, 'theta')
    if config.experiment in ('phase_sweep', 'protocol_compare') and config.state is None:
        raise ConfigError('experiment needs a state', 'state')
    if config.experiment == 'n_scaling' and config.state.kind not in catalog.MIN_N:
        raise ConfigError('n_scaling needs a state kind with a photon number n', 'state.kind')
    if config.experiment == 'loss_sweep' and not config.t:
        raise ConfigError('loss sweep needs transmissions', 't')
    logger.debug('resolved %s configuration %s', config.experiment, config.digest()[:12])
    return config
