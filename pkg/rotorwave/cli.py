import os
import sys
import logging
import argparse

from importlib import import_module
from rotorwave import base, config, utils

logger = logging.getLogger('CONTROL')

COMMANDS = {
    'levels': 'rotorwave.commands.levels.LevelsCommand',
    'static': 'rotorwave.commands.static.StaticCommand',
    'dynamics': 'rotorwave.commands.dynamics.DynamicsCommand',
    'scaling': 'rotorwave.commands.scaling.ScalingCommand',
}


def resolve(name):
    module, cls = COMMANDS[name].rsplit('.', 1)
    return getattr(import_module(module), cls)


def start(name, run_config, threads, level, std):
    if std:
        logging.basicConfig(
            stream=sys.stdout,
            level=logging._nameToLevel[level],
        )
    else:
        os.makedirs(run_config.output.directory, exist_ok=True)
        logging.basicConfig(
            filename=os.path.join(run_config.output.directory,
                                  'rotorwave.log'),
            level=logging._nameToLevel[level],
        )

    command = resolve(name)(run_config, threads=threads)
    logger.info('Starting {} with {} thread(s)'.format(name, threads))
    return command.execute()


def get_parser():
    parser = argparse.ArgumentParser(prog='rotorwave', description='''
        Simulates THz-driven rotational dynamics of asymmetric-top
        molecules with exact thermal propagation and random phase wave
        functions, and reproduces their convergence statistics. Every
        command writes CSV tables and a JSON manifest named after the
        config hash.''')

    parser.add_argument(
        'command',
        choices=sorted(COMMANDS),
        help='Subcommand to run',
    )
    parser.add_argument(
        '-c',
        '--config',
        required=True,
        help='Configuration file of dotted "key = value" lines',
    )
    parser.add_argument(
        '--seed',
        type=int,
        help='Override rpwf.master_seed',
    )
    parser.add_argument(
        '-o',
        '--out',
        help='Override output.directory',
    )
    parser.add_argument(
        '-t',
        '--threads',
        help='Worker threads (default ${} or 1)'.format(utils.THREADS_ENV),
    )
    parser.add_argument(
        '-s',
        '--std',
        help='Log to stdout',
        action='store_true',
    )
    parser.add_argument(
        '-l',
        '--level',
        help='Set log level ({})'.format('|'.join(logging._nameToLevel)),
        default='INFO',
    )

    return parser


def run(argv=None):
    """Run one subcommand and return its exit code."""
    args = get_parser().parse_args(argv)

    try:
        run_config = config.load(args.config).with_overrides(
            seed=args.seed, out=args.out)
        try:
            threads = utils.resolve_threads(args.threads)
        except ValueError as e:
            raise base.ConfigException('threads', str(e))
    except base.ConfigException as e:
        sys.stderr.write('Invalid configuration: {}\n'.format(e))
        return base.EXIT_CONFIG

    try:
        start(args.command, run_config, threads, args.level, args.std)
    except base.RotorwaveException as e:
        logger.error('{} aborted: {}'.format(args.command, e))
        sys.stderr.write('{}\n'.format(e))
        return e.exit_code
    return base.EXIT_OK


def main():
    sys.exit(run())
