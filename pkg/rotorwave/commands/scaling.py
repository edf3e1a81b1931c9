import math

from rotorwave import analysis, dynamics, thermal
from rotorwave.base import AbstractCommand, GuardException
from rotorwave.commands.static import ERROR_HEADER

STATIC = 'static'
DYNAMIC = 'dynamic'
COLUMNS = (
    ('orientation', 'orientation_inverse_mean'),
    ('orientation_literal', 'orientation_mean_inverse'),
    ('alignment', 'alignment_inverse_mean'),
    ('alignment_literal', 'alignment_mean_inverse'),
)


def _fit_row(name, temperature, fit):
    return [name, temperature, fit.slope, fit.intercept, fit.r_squared,
            len(fit.x)]


FIT_HEADER = ['fit', 'temperature_K', 'slope', 'intercept', 'r_squared',
              'points']


class ScalingCommand(AbstractCommand):
    """Convergence of RPWF averages with N_r and temperature."""

    NAME = 'scaling'

    def run(self):
        parts = self.config.scaling.parts
        if STATIC in parts:
            self.run_static()
        if DYNAMIC in parts:
            self.run_dynamic()

    def run_static(self):
        config = self.config
        scaling = config.scaling
        with self.stage('static'):
            rows = analysis.static_error_scan(
                config.rotor(), scaling.static_temperatures_K,
                scaling.static_realizations, config.rpwf.batches,
                config.rpwf.master_seed, config.ensemble.population_cutoff,
                config.ensemble.jmax_ceiling, self.threads)

        self.write_table('static', ERROR_HEADER, [[
            r.temperature, r.n_r, r.batches, r.n_states,
            r.orientation_mean_inverse, r.orientation_inverse_mean,
            r.alignment_mean_inverse, r.alignment_inverse_mean,
        ] for r in rows])

        fits = []
        if len(scaling.static_realizations) < 3:
            self.warn('Fewer than 3 N_r values; no static slopes')
        else:
            for name, column in COLUMNS:
                per_T, cross = analysis.static_slopes(rows, column)
                for T, fit in per_T.items():
                    fits.append(_fit_row(name + '_vs_N_r', T, fit))
                if cross is not None:
                    fits.append(_fit_row(name + '_slope_vs_T_loglog', '',
                                         cross))
                    self.record(**{name + '_slope_exponent': cross.slope})
        self.write_table('static-fits', FIT_HEADER, fits)

    def run_dynamic(self):
        config = self.config
        scaling = config.scaling
        ens = config.ensemble
        rc = config.rotor()
        pulse = config.pulse_spec()
        cfg = config.propagation_config()
        window = config.dynamics.epsilon_window_ps
        start = config.dynamics.epsilon_start_ps

        grid = sorted(set(scaling.dynamic_realizations) |
                      {scaling.fixed_realizations})
        rows = []
        fits = []
        fixed = {}
        for T in scaling.dynamic_temperatures_K:
            ensemble = thermal.boltzmann_ensemble(
                rc, T, ens.population_cutoff, ens.jmax_ceiling)
            try:
                with self.stage('exact'):
                    exact = dynamics.exact_ensemble_run(
                        ensemble, pulse, cfg, threads=self.threads,
                        max_states=scaling.exact_max_states)
            except GuardException as e:
                self.warn('Skipping T={} K: {}'.format(T, e))
                continue

            with self.stage('rpwf'):
                run = dynamics.rpwf_ensemble_run(
                    ensemble, pulse, cfg, config.rpwf.master_seed,
                    grid[-1], threads=self.threads, checkpoints=grid,
                    keep=0)

            eps = {m: analysis.error_epsilon(t, exact, window, start)
                   for m, t in run.checkpoints.items()}
            for m in grid:
                rows.append([float(T), m, eps[m], math.sqrt(eps[m])])
            fixed[float(T)] = eps[scaling.fixed_realizations]

            scan = [m for m in scaling.dynamic_realizations if eps[m] > 0]
            if len(scan) >= 3:
                fit = analysis.loglog_fit(scan, [eps[m] for m in scan])
                fits.append(_fit_row('epsilon_vs_N_r_loglog', float(T), fit))
                self.record(**{'epsilon_exponent_{}K'.format(T): {
                    'epsilon': fit.slope,
                    'signal_error': fit.slope / 2.0,
                    'r_squared': fit.r_squared,
                }})

            target = scaling.epsilon_target
            if target is not None:
                reached = [m for m in grid if eps[m] < target]
                self.record(**{'n_r_for_target_{}K'.format(T):
                               reached[0] if reached else None})

        temps = [T for T in fixed if fixed[T] > 0]
        if len(temps) >= 3:
            fit = analysis.loglog_fit(temps, [fixed[T] for T in temps])
            fits.append(_fit_row('epsilon_vs_T_loglog', '', fit))
            self.record(epsilon_temperature_exponent=fit.slope)
        elif len(scaling.dynamic_temperatures_K) >= 3:
            self.warn('Only {} temperatures with an exact reference; no '
                      'epsilon-vs-T fit'.format(len(temps)))

        self.write_table('dynamic', ['temperature_K', 'n_r', 'epsilon',
                                     'sqrt_epsilon'], rows)
        self.write_table('dynamic-fits', FIT_HEADER, fits)
