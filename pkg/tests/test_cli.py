#!/usr/bin/env python

"""Tests for the `rotorwave` command line."""

import os
import csv
import json
import shutil
import tempfile
import unittest

from rotorwave import base, cli, config, utils

LEVELS = """
levels.temperatures_K = 0.01, 5, 10, 15, 20
levels.scaling_range_K = 5, 20
levels.deviation_range_K = 5, 20
"""

STATIC = """
static.temperatures_K = 1, 2
rpwf.n_realizations = 8
rpwf.batches = 5
"""

DYNAMICS = """
ensemble.temperature_K = 0.5
propagation.dt_ps = 0.01
propagation.t_end_ps = 2
propagation.j_buffer = 6
rpwf.n_realizations = 4
dynamics.checkpoints = 2
dynamics.epsilon_window_ps = 2
dynamics.flatness_windows_ps = -12, -11
"""


class TestCli(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.out = os.path.join(self.tmp, 'out')

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def write_config(self, text):
        path = os.path.join(self.tmp, 'run.conf')
        with open(path, 'w') as fd:
            fd.write(text)
        return path

    def run_cli(self, command, text, *extra):
        path = self.write_config(text)
        return cli.run([command, '-c', path, '-o', self.out, '-s',
                        '-l', 'ERROR'] + list(extra))

    def manifest(self, command, text):
        digest = config.loads(text).with_overrides(out=self.out).digest()
        path = os.path.join(self.out, '{}-manifest-{}.json'.format(
            command, digest[:12]))
        with open(path) as fd:
            return json.load(fd)

    def read_table(self, name):
        with open(os.path.join(self.out, name), newline='') as fd:
            return list(csv.reader(fd))

    def test_000_parser(self):
        parser = cli.get_parser()
        args = parser.parse_args(['levels', '-c', 'x.conf', '--seed', '3'])
        self.assertEqual(args.command, 'levels')
        self.assertEqual(args.seed, 3)
        self.assertEqual(args.level, 'INFO')
        self.assertFalse(args.std)
        for name in cli.COMMANDS:
            self.assertEqual(cli.resolve(name).NAME, name)

    def test_001_levels(self):
        self.assertEqual(self.run_cli('levels', LEVELS), base.EXIT_OK)
        manifest = self.manifest('levels', LEVELS)
        self.assertEqual(manifest['command'], 'levels')
        self.assertEqual(manifest['warnings'], [])
        self.assertIn('level_count_slope', manifest['results'])

        contents = {}
        for entry in manifest['files']:
            path = os.path.join(self.out, entry['path'])
            self.assertEqual(utils.sha256_file(path), entry['sha256'])
            with open(path, 'rb') as fd:
                contents[entry['path']] = fd.read()

        table = self.read_table(manifest['files'][0]['path'])
        self.assertEqual(table[0][:2], ['temperature_K', 'N_E'])
        self.assertEqual(len(table), 6)
        self.assertEqual(table[1][1], '1')

        self.assertEqual(self.run_cli('levels', LEVELS), base.EXIT_OK)
        for name, data in contents.items():
            with open(os.path.join(self.out, name), 'rb') as fd:
                self.assertEqual(fd.read(), data, msg=name)

    def test_002_invalid_config(self):
        code = self.run_cli('levels', 'levels.temperatures_K = hot\n')
        self.assertEqual(code, base.EXIT_CONFIG)
        self.assertFalse(os.path.exists(self.out))

        code = self.run_cli('levels', LEVELS, '-t', '0')
        self.assertEqual(code, base.EXIT_CONFIG)
        self.assertFalse(os.path.exists(self.out))

        code = cli.run(['levels', '-c', os.path.join(self.tmp, 'missing')])
        self.assertEqual(code, base.EXIT_CONFIG)

        code = self.run_cli('levels', 'levels.count_cutoff = 1\n')
        self.assertEqual(code, base.EXIT_CONFIG)

        code = self.run_cli('dynamics', 'ensemble.temperature_K = 0.5\n'
                                        'propagation.t_end_ps = 2\n')
        self.assertEqual(code, base.EXIT_CONFIG)
        self.assertFalse(os.path.exists(self.out))

    def test_003_guard(self):
        text = ('ensemble.temperature_K = 2\n'
                'ensemble.exact_max_states = 1\n'
                'dynamics.methods = exact\n')
        self.assertEqual(self.run_cli('dynamics', text), base.EXIT_GUARD)

    def test_004_static(self):
        self.assertEqual(self.run_cli('static', STATIC, '-t', '2'),
                         base.EXIT_OK)
        manifest = self.manifest('static', STATIC)
        names = [f['path'] for f in manifest['files']]
        self.assertEqual(len(names), 3)
        self.assertTrue(names[0].startswith('static-exact-'))

        batches = self.read_table(names[1])
        self.assertEqual(len(batches), 1 + 2 * 5)
        errors = self.read_table(names[2])
        self.assertEqual(errors[0][4], 'orientation_mean_inverse')
        self.assertLess(manifest['results']['max_relative_energy_error'],
                        1e-10)

    def test_005_dynamics(self):
        self.assertEqual(self.run_cli('dynamics', DYNAMICS, '--seed', '5'),
                         base.EXIT_OK)
        digest = config.loads(DYNAMICS).with_overrides(
            seed=5, out=self.out).digest()
        with open(os.path.join(self.out, 'dynamics-manifest-{}.json'.format(
                digest[:12]))) as fd:
            manifest = json.load(fd)

        names = [f['path'].split('-' + digest[:12])[0]
                 for f in manifest['files']]
        self.assertEqual(names, ['dynamics-exact', 'dynamics-rpwf',
                                 'dynamics-rpwf-single0',
                                 'dynamics-epsilon'])
        results = manifest['results']
        self.assertGreaterEqual(results['epsilon'], 0.0)
        self.assertEqual(results['rpwf']['master_seed'], 5)
        self.assertLess(results['exact']['flatness'], 1e-10)

        epsilon = self.read_table(manifest['files'][3]['path'])
        self.assertEqual([row[0] for row in epsilon[1:]], ['2', '4'])

    def test_006_scaling(self):
        text = DYNAMICS + (
            'scaling.exact_max_states = 500\n'
            'rpwf.batches = 10\n'
            'scaling.static_temperatures_K = 1, 2, 3\n'
            'scaling.static_realizations = 2, 4, 8\n'
            'scaling.dynamic_temperatures_K = 0.5, 20\n'
            'scaling.dynamic_realizations = 1, 2, 4\n'
            'scaling.fixed_realizations = 2\n'
            'scaling.epsilon_target = 1\n')
        self.assertEqual(self.run_cli('scaling', text, '-t', '2'),
                         base.EXIT_OK)
        manifest = self.manifest('scaling', text)
        names = [f['path'].split('-')[1] for f in manifest['files']]
        self.assertEqual(names, ['static', 'static', 'dynamic', 'dynamic'])

        static = self.read_table(manifest['files'][0]['path'])
        self.assertEqual(len(static), 1 + 3 * 3)
        dynamic = self.read_table(manifest['files'][2]['path'])
        self.assertEqual([row[1] for row in dynamic[1:]], ['1', '2', '4'])

        self.assertEqual(len(manifest['warnings']), 1)
        self.assertIn('T=20.0 K', manifest['warnings'][0])
        self.assertEqual(manifest['results']['n_r_for_target_0.5K'], 1)
        self.assertIn('epsilon_exponent_0.5K', manifest['results'])


if __name__ == '__main__':
    unittest.main()
