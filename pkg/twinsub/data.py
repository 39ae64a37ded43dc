#!/usr/bin/env python3

"""Result files: CSV, JSON and HDF5 tables plus the provenance manifest."""

import csv
import dataclasses
import io
import json
import logging
import math
import os
import platform
import subprocess
from fractions import Fraction

import h5py
import numpy as np
import scipy

import twinsub

logger = logging.getLogger(__name__)

CSV_VERSION = '# twinsub-csv v1'
JSON_VERSION = 'twinsub-json v1'
MANIFEST_VERSION = 'twinsub-manifest v1'


def _float(value):
    """Finite floats stay numbers; inf and nan become strings."""
    if math.isfinite(value):
        return value
    if math.isnan(value):
        return 'nan'
    return 'inf' if value > 0 else '-inf'


def jsonable(obj):
    """Plain JSON tree of ``obj`` with a stable field order."""
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return {'re': _float(obj.real), 'im': _float(obj.imag)}
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if hasattr(obj, '_asdict'):
        return {k: jsonable(v) for k, v in obj._asdict().items()}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if f.name != 'raw'}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        return [jsonable(v) for v in obj]
    return obj


class CustomJSONEncoder(json.JSONEncoder):
    def default(self, obj):
        converted = jsonable(obj)
        if converted is obj:
            return super().default(obj)
        return converted


def dump_json(obj, dst):
    json.dump(jsonable(obj), dst, indent=2, cls=CustomJSONEncoder, allow_nan=False)
    dst.write('\n')


def format_value(value):
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return '%.17g' % value
    if isinstance(value, (complex, np.complexfloating)):
        return '%.17g%+.17gj' % (value.real, value.imag)
    return str(value)


def write_csv(result, path):
    with open(path, 'w', newline='') as dst:
        dst.write('%s experiment=%s\n' % (CSV_VERSION, result.experiment))
        writer = csv.writer(dst, lineterminator='\n')
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([format_value(v) for v in row])


def read_csv(path):
    """(columns, rows) of a CSV written by ``write_csv``; cells stay strings."""
    with open(path, 'r', newline='') as src:
        header = src.readline()
        if not header.startswith(CSV_VERSION):
            raise ValueError('%s is not a %s file' % (path, CSV_VERSION))
        reader = csv.reader(src)
        columns = next(reader)
        return columns, [row for row in reader]


def write_json(result, path):
    doc = {
        'format': JSON_VERSION,
        'experiment': result.experiment,
        'columns': list(result.columns),
        'rows': [dict(zip(result.columns, row)) for row in result.rows],
        'checks': result.checks,
    }
    with open(path, 'w') as dst:
        dump_json(doc, dst)


def _column_array(values):
    if all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in values):
        return np.asarray(values, dtype=np.int64)
    if all(isinstance(v, (int, float, np.integer, np.floating)) for v in values):
        return np.asarray(values, dtype=np.float64)
    return np.asarray([format_value(v) for v in values], dtype=h5py.string_dtype())


def write_h5(result, path):
    with h5py.File(path, 'w') as dst:
        dst.attrs['format'] = 'twinsub-h5 v1'
        dst.attrs['experiment'] = result.experiment
        dst.attrs['columns'] = json.dumps(list(result.columns))
        dst.attrs['sources'] = json.dumps(result.sources, sort_keys=True)
        for k, name in enumerate(result.columns):
            dst.create_dataset(name, data=_column_array([row[k] for row in result.rows]))


def read_h5(path):
    """{column: array} of an HDF5 result file."""
    with h5py.File(path, 'r') as src:
        columns = json.loads(src.attrs['columns'])
        return {name: src[name][()] for name in columns}


WRITERS = {
    'csv': write_csv,
    'json': write_json,
    'h5': write_h5,
}


def last_commit():
    """Hash of the checked-out commit of the package, None outside a git tree."""
    code = list(twinsub.__path__)[0]
    try:
        out = subprocess.check_output('cd {}; git log -n1 --format=%H'.format(code), shell=True,
                                      stderr=subprocess.DEVNULL).decode('utf-8').strip()
    except subprocess.CalledProcessError:
        logger.info('Could not figure out the last commit')
        return None
    return out or None


def versions():
    return {
        'twinsub': twinsub.__version__,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'h5py': h5py.__version__,
    }


def manifest(result, config, outputs):
    return {
        'format': MANIFEST_VERSION,
        'experiment': result.experiment,
        'config_sha256': config.digest(),
        'config': config.raw,
        'versions': versions(),
        'git_commit': last_commit(),
        'outputs': [os.path.basename(p) for p in outputs],
        'columns': list(result.columns),
        'sources': result.sources,
        'rows': [dict(index=i, **params) for i, params in enumerate(result.row_params)],
        'checks': result.checks,
        'strict': config.strict,
        'failed_checks': len(result.failed),
        'metadata': result.metadata,
    }


def save(result, config):
    """Write the table in the configured format and its manifest; returns both paths."""
    out = config.output
    os.makedirs(out.dir, exist_ok=True)
    path = out.path(result.experiment)
    WRITERS[out.format](result, path)
    base = os.path.splitext(path)[0]
    manifest_path = base + '.manifest.json'
    buffer = io.StringIO()
    dump_json(manifest(result, config, [path]), buffer)
    with open(manifest_path, 'w') as dst:
        dst.write(buffer.getvalue())
    logger.info('wrote %s and %s', path, manifest_path)
    return path, manifest_path
