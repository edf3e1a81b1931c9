#!/usr/bin/env python

"""Tests for `rotorwave.config`."""

import os
import tempfile
import unittest

from rotorwave import config, dynamics
from rotorwave.base import ConfigException

CUSTOM = """
# small driven run
molecule.mu_debye = 1.5
ensemble.temperature_K = 2.5   # kelvin
pulse.intensity_W_cm2 = 2e9
pulse.center_ps = -5.0
propagation.method = rk4
propagation.dt_ps = 0.005
rpwf.n_realizations = 16
rpwf.master_seed = 42
static.temperatures_K = 1, 2.5, 7
dynamics.methods = rpwf
dynamics.flatness_windows_ps = 60, 80, 100, 120
dynamics.checkpoints = 4, 8
scaling.epsilon_target = 1e-4
"""


class TestLoads(unittest.TestCase):

    def test_000_defaults(self):
        c = config.loads('')
        self.assertEqual(c, config.RunConfig())
        self.assertEqual(c.pulse.e0, config.WEAK_FIELD)
        self.assertIsNone(c.pulse.intensity_W_cm2)
        self.assertEqual(c.propagation_config(), dynamics.PropagationConfig())
        self.assertEqual(c.rotor().mu, 1.62)
        self.assertGreater(c.scaling.exact_max_states, 25527)

    def test_001_custom(self):
        c = config.loads(CUSTOM)
        self.assertEqual(c.ensemble.temperature_K, 2.5)
        self.assertIsNone(c.pulse.peak_field_MV_cm)
        self.assertAlmostEqual(c.pulse.e0, 1.23, delta=0.03)
        self.assertEqual(c.static.temperatures_K, [1.0, 2.5, 7.0])
        self.assertEqual(c.dynamics.methods, ['rpwf'])
        self.assertEqual(c.dynamics.windows, [(60.0, 80.0), (100.0, 120.0)])
        self.assertEqual(c.dynamics.checkpoints, [4, 8])

        spec = c.pulse_spec()
        self.assertEqual(spec.t_center, -5.0)
        self.assertAlmostEqual(spec.sigma, dynamics.DEFAULT_SIGMA)
        self.assertEqual(c.propagation_config().method, dynamics.RK4)

    def test_002_round_trip(self):
        for c in (config.RunConfig(), config.loads(CUSTOM)):
            self.assertEqual(config.loads(c.dumps()), c)
            self.assertEqual(config.loads(c.dumps()).digest(), c.digest())

    def test_003_pulse_exclusive(self):
        with self.assertRaises(ConfigException) as cm:
            config.loads('pulse.peak_field_MV_cm = 1.0\n'
                         'pulse.intensity_W_cm2 = 1e9\n')
        self.assertEqual(cm.exception.path, 'pulse')

    def test_004_error_paths(self):
        cases = [
            ('molecule.D_cm1 = 1', 'molecule.D_cm1'),
            ('laser.power = 1', 'laser.power'),
            ('ensemble.temperature_K = warm', 'ensemble.temperature_K'),
            ('ensemble.temperature_K = -1', 'ensemble.temperature_K'),
            ('rpwf.n_realizations = 2.5', 'rpwf.n_realizations'),
            ('rpwf.master_seed = -3', 'rpwf.master_seed'),
            ('\nensemble.temperature_K 4', 'line 2'),
            ('propagation.method = euler', 'propagation.method'),
            ('propagation.dt_ps = 0.003', 'propagation'),
            ('molecule.A_cm1 = 0.1', 'molecule'),
            ('dynamics.flatness_windows_ps = 1, 2, 3',
             'dynamics.flatness_windows_ps'),
            ('levels.scaling_range_K = 200, 20', 'levels.scaling_range_K'),
            ('static.temperatures_K = ', 'static.temperatures_K'),
            ('output.format = hdf5', 'output.format'),
            ('levels.count_cutoff = 1', 'levels.count_cutoff'),
            ('propagation.t_end_ps = 2', 'dynamics.epsilon_window_ps'),
            ('dynamics.epsilon_start_ps = -13',
             'dynamics.epsilon_window_ps'),
            ('dynamics.flatness_windows_ps = -20, -11',
             'dynamics.flatness_windows_ps'),
            ('scaling.exact_max_states = 0', 'scaling.exact_max_states'),
        ]
        for text, path in cases:
            with self.assertRaises(ConfigException, msg=text) as cm:
                config.loads(text)
            self.assertEqual(cm.exception.path, path, msg=text)

    def test_005_duplicate_key(self):
        with self.assertRaises(ConfigException) as cm:
            config.loads('rpwf.keep = 1\nrpwf.keep = 2\n')
        self.assertEqual(cm.exception.path, 'rpwf.keep')

    def test_006_cutoff_by_criterion(self):
        c = config.loads('levels.count_criterion = boltzmann\n'
                         'levels.count_cutoff = 1\n')
        self.assertEqual(c.levels.count_cutoff, 1.0)

    def test_007_windows_follow_sampling(self):
        c = config.loads('propagation.t_end_ps = 20\n'
                         'dynamics.epsilon_window_ps = 20\n'
                         'dynamics.flatness_windows_ps = -12.5, -12.4\n')
        self.assertEqual(c.dynamics.windows, [(-12.5, -12.4)])
        with self.assertRaises(ConfigException):
            config.loads('propagation.t_end_ps = 20.02\n'
                         'propagation.sample_every_ps = 0.05\n'
                         'dynamics.epsilon_window_ps = 20.02\n')


class TestRunConfig(unittest.TestCase):

    def test_000_digest(self):
        a = config.RunConfig()
        self.assertEqual(a.digest(), config.RunConfig().digest())
        self.assertEqual(len(a.digest()), 64)
        self.assertNotEqual(a.digest(), a.with_overrides(seed=1).digest())

    def test_001_overrides(self):
        c = config.RunConfig().with_overrides(seed=7, out='elsewhere')
        self.assertEqual(c.rpwf.master_seed, 7)
        self.assertEqual(c.output.directory, 'elsewhere')
        self.assertEqual(config.RunConfig().rpwf.master_seed, 0)
        with self.assertRaises(ConfigException):
            config.RunConfig().with_overrides(seed=-1)

    def test_002_dumps_omits_unset(self):
        text = config.RunConfig().dumps()
        self.assertNotIn('intensity_W_cm2', text)
        self.assertNotIn('epsilon_target', text)
        self.assertIn('pulse.peak_field_MV_cm = 1.2\n', text)


class TestLoad(unittest.TestCase):

    def test_000_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'run.conf')
            with open(path, 'w') as fd:
                fd.write(CUSTOM)
            self.assertEqual(config.load(path), config.loads(CUSTOM))

    def test_001_missing(self):
        with self.assertRaises(ConfigException) as cm:
            config.load('/nonexistent/rotorwave.conf')
        self.assertEqual(cm.exception.path, 'config')


if __name__ == '__main__':
    unittest.main()
