#!/usr/bin/env python3

"""Command-line front end.

    twinsub phase-sweep --config configs/phase_sweep.json --out results
    twinsub table1 --set n=[4,8] --format json --strict

Exit status: 0 on success, 2 for an invalid configuration, 3 when
``--strict`` is set and a numeric result disagrees with its reference.
"""

import argparse
import json
import logging
import sys

from termcolor import colored

import twinsub
from twinsub import config as sweep_config
from twinsub import data
from twinsub import estimation
from twinsub import fock
from twinsub import subtraction
from twinsub import sweeps

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISMATCH = 3

LOG_FORMAT = "%(name)s: %(asctime)s: %(message)s"
COMMANDS = ('phase-sweep', 'loss-sweep', 'n-scaling', 'table1', 'protocol-compare')

# parameter errors that surface only once the states are built
RUN_ERRORS = (fock.CutoffError, fock.ConditioningError, subtraction.TwinFormError,
              estimation.MixedStateError)

common = argparse.ArgumentParser(add_help=False)
common.add_argument('--config', default=None, help='JSON configuration file')
common.add_argument('--out', default=None, help='output directory')
common.add_argument('--name', default=None, help='output file stem (default: experiment name)')
common.add_argument('--format', default=None, choices=sweep_config.FORMATS)
common.add_argument('--strict', action='store_true',
                    help='exit with status %d if any check fails' % EXIT_MISMATCH)
common.add_argument('--jobs', default=None, type=int, help='worker processes (default: all cores)')
common.add_argument('--n', default=None, type=sweep_config.parse_int_list, help='photon numbers, e.g. 5,10,15')
common.add_argument('--t', default=None, type=sweep_config.parse_float_list, help='transmissions')
common.add_argument('--phi', default=None, type=sweep_config.parse_float_list,
                    help='phases in radians; write --phi=-0.5,0.5 when the list starts with a minus sign')
common.add_argument('--set', dest='assignments', action='append', default=[], metavar='KEY=JSON',
                    help='override any configuration field, e.g. state.n=12')
verbosity = common.add_mutually_exclusive_group()
verbosity.add_argument('--verbose', action='store_true')
verbosity.add_argument('--quiet', action='store_true')

parser = argparse.ArgumentParser(prog='twinsub', description=twinsub.__doc__)
parser.add_argument('--version', action='version', version='%(prog)s ' + twinsub.__version__)
subparsers = parser.add_subparsers(dest='command', metavar='command')
subparsers.required = True
for name in COMMANDS:
    subparsers.add_parser(name, parents=[common], help='run the %s experiment' % name.replace('-', '_'))


def flag_overrides(args):
    """Command-line flags as ``key=JSON`` assignments; explicit --set entries come last."""
    out = []
    for key, value in (('output.dir', args.out), ('output.name', args.name),
                       ('output.format', args.format), ('jobs', args.jobs),
                       ('n', args.n), ('t', args.t), ('phi', args.phi)):
        if value is not None:
            out.append('%s=%s' % (key, json.dumps(value)))
    if args.strict:
        out.append('strict=true')
    return out + list(args.assignments)


def summarize(result, cfg, paths):
    failed = result.failed
    if not result.checks:
        status = colored('no checks', 'yellow')
    elif failed:
        status = colored('%d of %d checks failed' % (len(failed), len(result.checks)), 'red')
    else:
        status = colored('all %d checks passed' % len(result.checks), 'green')
    print('%s: %d rows -> %s (%s)' % (cfg.experiment, len(result.rows), paths[0], status))
    for check in failed[:10]:
        print(colored('  %s: measured %.17g, expected %.17g (error %.3g > %.3g)'
                      % (check.name, check.measured, check.expected, check.error, check.tolerance),
                      'red'))
    if len(failed) > 10:
        print(colored('  ... and %d more' % (len(failed) - 10), 'red'))


def main(argv=None):
    args = parser.parse_args(argv)
    if args.verbose:
        logging.getLogger('twinsub').setLevel(logging.DEBUG)
    elif args.quiet:
        logging.getLogger('twinsub').setLevel(logging.WARNING)
    experiment = args.command.replace('-', '_')

    try:
        raw = sweep_config.load_config(args.config) if args.config else {}
        raw = sweep_config.apply_overrides(raw, flag_overrides(args))
        cfg = sweep_config.from_dict(raw, experiment)
    except sweep_config.ConfigError as e:
        logger.error('invalid configuration: %s', e)
        print(colored('invalid configuration: %s' % e, 'red'), file=sys.stderr)
        return EXIT_CONFIG

    commit = data.last_commit()
    if commit:
        logger.info('LAST COMMIT INFO: %s', commit)
    try:
        result = sweeps.run(cfg)
    except RUN_ERRORS as e:
        logger.error('cannot run %s: %s', experiment, e)
        print(colored('invalid parameters: %s' % e, 'red'), file=sys.stderr)
        return EXIT_CONFIG
    paths = data.save(result, cfg)
    if not args.quiet:
        summarize(result, cfg, paths)
    if cfg.strict and result.failed:
        logger.warning('%d checks failed in strict mode', len(result.failed))
        return EXIT_MISMATCH
    return EXIT_OK


def console_main():
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
    sys.exit(main())


if __name__ == '__main__':
    console_main()
