import os
import csv
import json
import time
import logging

from abc import ABC, abstractmethod
from contextlib import contextmanager

import rotorwave
from rotorwave import constants, utils

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_GUARD = 4


class RotorwaveException(Exception):
    exit_code = 1


class ConfigException(RotorwaveException):
    """Invalid configuration; ``path`` is the dotted key at fault."""

    exit_code = EXIT_CONFIG

    def __init__(self, path, message):
        super().__init__('{}: {}'.format(path, message))
        self.path = path


class NumericalException(RotorwaveException):
    exit_code = EXIT_NUMERICAL

    def __init__(self, message, realization=None):
        if realization is not None:
            message = '{} (realization {})'.format(message, realization)
        super().__init__(message)
        self.realization = realization


class NormDriftException(NumericalException):
    pass


class LeakageException(NumericalException):
    pass


class ConvergenceException(NumericalException):
    pass


class GuardException(RotorwaveException):
    exit_code = EXIT_GUARD


class AbstractCommand(ABC):
    """Base class of the ``rotorwave`` subcommands.

    A command owns the output bookkeeping of one run: every table it writes
    is named after the config hash and listed, with its SHA-256, in the JSON
    manifest written at the end of :meth:`execute`.

    :ivar logger: (:class:`logging.Logger`) -- command-specific logger
    :ivar config: (:class:`rotorwave.config.RunConfig`) -- validated config
    :ivar threads: (*int*) -- worker threads for fan-out stages

    """

    NAME = None

    def __init__(self, config, threads=1):

        self.logger = logging.getLogger(
            utils.snake_case(self.__class__.__name__).upper())
        self.config = config
        self.threads = threads
        self.config_hash = config.digest()
        self.out_dir = config.output.directory

        self._timings = {}
        self._warnings = []
        self._files = []
        self._results = {}

    @property
    def tag(self):
        return self.config_hash[:12]

    @contextmanager
    def stage(self, name):
        start = time.perf_counter()
        self.logger.info('Stage "{}" started'.format(name))
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self._timings[name] = self._timings.get(name, 0.0) + elapsed
            self.logger.info('Stage "{}" took {:.3f}s'.format(name, elapsed))

    def warn(self, message):
        self.logger.warning(message)
        self._warnings.append(message)

    def record(self, **kwargs):
        """Attach named results to the manifest."""
        self._results.update(kwargs)

    def write_table(self, stem, header, rows):
        """Write an RFC-4180 CSV table and register it in the manifest.

        :param stem: File stem; the command name and config tag are added
        :type stem: str

        :param header: Column names
        :type header: list of str

        :param rows: Row values; floats are written with 17 significant
            digits
        :type rows: iterable of sequences

        :return: Path of the written file
        :rtype: str

        """
        os.makedirs(self.out_dir, exist_ok=True)
        path = os.path.join(
            self.out_dir, '{}-{}-{}.csv'.format(self.NAME, stem, self.tag))

        with open(path, 'w', newline='', encoding='utf-8') as fd:
            writer = csv.writer(fd, lineterminator='\r\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([
                    utils.format_float(x) if isinstance(x, float) else x
                    for x in row
                ])

        self._files.append({
            'path': os.path.basename(path),
            'sha256': utils.sha256_file(path),
        })
        self.logger.info('Wrote {}'.format(path))
        return path

    def write_manifest(self, wall_time):
        path = os.path.join(self.out_dir, '{}-manifest-{}.json'.format(
            self.NAME, self.tag))
        manifest = {
            'command': self.NAME,
            'config_hash': self.config_hash,
            'config': self.config.dumps(),
            'constants': constants.table(),
            'tool_version': rotorwave.__version__,
            'created': utils.utctime().isoformat(),
            'wall_time_s': wall_time,
            'timings_s': self._timings,
            'warnings': self._warnings,
            'results': self._results,
            'files': self._files,
        }
        os.makedirs(self.out_dir, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as fd:
            json.dump(manifest, fd, indent=2, sort_keys=True)
            fd.write('\n')
        return path

    def execute(self):
        start = time.perf_counter()
        self.logger.info('Running {} (config {})'.format(self.NAME, self.tag))
        self.run()
        path = self.write_manifest(time.perf_counter() - start)
        self.logger.info('Manifest {}'.format(path))
        return path

    @abstractmethod
    def run(self):
        pass
