import json
import math

import pytest

from twinsub import config
from twinsub.config import ConfigError


@pytest.mark.parametrize('text, value', [
    ('pi', math.pi),
    ('-pi/2', -math.pi / 2),
    ('sqrt(8)', math.sqrt(8)),
    ('2*e**2', 2 * math.e ** 2),
    ('1e-3', 1e-3),
])
def test_parse_number(text, value):
    assert config.parse_number(text) == pytest.approx(value)


@pytest.mark.parametrize('text', ['__import__("os")', 'pi.real', 'sqrt(1, 2)', 'x + 1', '1/0', 'True'])
def test_parse_number_rejects(text):
    with pytest.raises(ConfigError):
        config.parse_number(text, 'phi')


def test_parse_number_rejects_booleans():
    with pytest.raises(ConfigError):
        config.parse_number(True)


def test_parse_lists():
    assert config.parse_int_list('5,10,15') == [5, 10, 15]
    assert config.parse_float_list('0,pi/2') == [0.0, pytest.approx(math.pi / 2)]
    with pytest.raises(ConfigError):
        config.parse_int_list('1.5')


def test_parse_grid():
    assert config.parse_grid([0, 'pi/4'], 'phi') == (0.0, pytest.approx(math.pi / 4))
    grid = config.parse_grid({'start': '-pi/2', 'stop': 'pi/2', 'num': 181}, 'phi')
    assert len(grid) == 181
    assert grid[0] == pytest.approx(-math.pi / 2)
    assert grid[-1] == pytest.approx(math.pi / 2)
    assert config.parse_grid({'start': 2, 'stop': 20, 'num': 19}, 'n', integer=True) == tuple(range(2, 21))
    assert config.parse_grid(0.5, 'phi') == (0.5,)


@pytest.mark.parametrize('value', [[], [0.2, 0.1], [0.1, 0.1], {'start': 0, 'stop': 1}, {'start': 0, 'stop': 1, 'num': 0}])
def test_parse_grid_rejects(value):
    with pytest.raises(ConfigError) as e:
        config.parse_grid(value, 'phi')
    assert e.value.field.startswith('phi')


def test_parse_grid_integer_range():
    with pytest.raises(ConfigError):
        config.parse_grid({'start': 1, 'stop': 2, 'num': 3}, 'n', integer=True)


def test_overrides():
    raw = config.apply_overrides({'state': {'kind': 'twin_fock', 'n': 3}},
                                 ['state.n=12', 'output.format=json', 'phi=[0, 0.5]', 'route=exact'])
    assert raw['state'] == {'kind': 'twin_fock', 'n': 12}
    assert raw['output'] == {'format': 'json'}
    assert raw['phi'] == [0, 0.5]
    assert raw['route'] == 'exact'
    with pytest.raises(ConfigError):
        config.apply_overrides({}, ['no_equals_sign'])
    with pytest.raises(ConfigError):
        config.apply_overrides({'theta': 0.1}, ['theta.x=1'])


def test_defaults():
    cfg = config.from_dict({}, 'phase_sweep')
    assert cfg.state.kind == 'subtracted_twin'
    assert cfg.state.n == 10
    assert len(cfg.phi) == 181
    assert cfg.theta == 0.01
    assert cfg.loss.is_lossless()
    assert cfg.output.path('phase_sweep').endswith('phase_sweep.csv')
    table = config.from_dict({}, 'table1')
    assert table.alpha == pytest.approx(complex(math.sqrt(8)))
    assert table.n == (8,)


def test_state_replaces_default_state():
    cfg = config.from_dict({'state': {'kind': 'noon', 'n': 4}}, 'phase_sweep')
    assert cfg.state.kind == 'noon'
    assert cfg.state.sign == '+'


def test_nested_defaults_merge():
    cfg = config.from_dict({'output': {'format': 'json'}, 'loss': {'t1': 0.9}}, 'loss_sweep')
    assert cfg.output.format == 'json'
    assert cfg.output.dir == 'out'
    assert (cfg.loss.t1, cfg.loss.t2) == (0.9, 1.0)


@pytest.mark.parametrize('raw, experiment, field', [
    ({'theta': 0.5, 'subtraction': 'bucket'}, 'phase_sweep', 'theta'),
    ({'theta': 0.0}, 'protocol_compare', 'theta'),
    ({'subtraction': 'magic'}, 'phase_sweep', 'subtraction'),
    ({'output': {'format': 'xlsx'}}, 'phase_sweep', 'output.format'),
    ({'loss': {'t1': 1.5}}, 'phase_sweep', 'loss'),
    ({'t': [0.5, 1.5]}, 'loss_sweep', 't'),
    ({'n': [0, 1]}, 'loss_sweep', 'n'),
    ({'state': {'kind': 'noon'}}, 'phase_sweep', 'state'),
    ({'state': {'kind': 'coherent_vacuum', 'alpha': 2}}, 'n_scaling', 'state.kind'),
    ({'jobs': 0}, 'table1', 'jobs'),
    ({'tolerance': -1}, 'table1', 'tolerance'),
    ({'strict': 'yes'}, 'table1', 'strict'),
    ({'colour': 'red'}, 'table1', 'colour'),
    ({'experiment': 'table1'}, 'loss_sweep', 'experiment'),
])
def test_invalid_configs(raw, experiment, field):
    with pytest.raises(ConfigError) as e:
        config.from_dict(raw, experiment)
    assert e.value.field == field
    assert field in str(e.value)


def test_large_theta_is_fine_without_subtraction():
    assert config.from_dict({'theta': 0.5}, 'phase_sweep').theta == 0.5


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        config.from_dict({}, 'bell_test')
    with pytest.raises(ConfigError):
        config.from_dict({})


def test_load_config_reports_position(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text('{\n  "experiment": "table1",\n  "n": [8,]\n}\n')
    with pytest.raises(ConfigError) as e:
        config.load_config(str(path))
    assert e.value.line == 3
    assert 'line 3' in str(e.value)


def test_load_config(tmp_path):
    path = tmp_path / 'ok.json'
    path.write_text(json.dumps({'experiment': 'loss_sweep', 't': [0.9]}))
    raw = config.load_config(str(path))
    cfg = config.from_dict(raw)
    assert cfg.experiment == 'loss_sweep'
    assert cfg.t == (0.9,)
    with pytest.raises(ConfigError):
        config.load_config(str(tmp_path / 'missing.json'))


def test_digest_is_stable():
    a = config.from_dict({'n': [5]}, 'loss_sweep')
    b = config.from_dict({'n': [5]}, 'loss_sweep')
    c = config.from_dict({'n': [6]}, 'loss_sweep')
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()
    assert len(a.digest()) == 64
