from rotorwave import analysis, dynamics, thermal
from rotorwave.base import AbstractCommand

TRACE_HEADER = ['time_ps', 'orientation', 'alignment']


class DynamicsCommand(AbstractCommand):
    """Orientation and alignment traces of the exact and/or RPWF
    ensembles under one pulse."""

    NAME = 'dynamics'

    def run(self):
        config = self.config
        ens = config.ensemble
        methods = config.dynamics.methods

        with self.stage('ensemble'):
            ensemble = thermal.boltzmann_ensemble(
                config.rotor(), ens.temperature_K, ens.population_cutoff,
                ens.jmax_ceiling)
        pulse = config.pulse_spec()
        cfg = config.propagation_config()
        self.record(e0_MV_cm=pulse.e0, peak_field_MV_cm=pulse.peak_field,
                    n_states=ensemble.n_states)

        exact = None
        if dynamics.EXACT in methods:
            with self.stage('exact'):
                exact = dynamics.exact_ensemble_run(
                    ensemble, pulse, cfg, threads=self.threads,
                    max_states=ens.exact_max_states)
            self._write_trace('exact', exact)

        if dynamics.RPWF in methods:
            checkpoints = [x for x in config.dynamics.checkpoints
                           if x <= config.rpwf.n_realizations]
            with self.stage('rpwf'):
                run = dynamics.rpwf_ensemble_run(
                    ensemble, pulse, cfg, config.rpwf.master_seed,
                    config.rpwf.n_realizations, threads=self.threads,
                    checkpoints=checkpoints, keep=config.rpwf.keep)
            self._write_trace('rpwf', run.trace)
            for k, trace in sorted(run.singles.items()):
                self._write_trace('rpwf-single{}'.format(k), trace)

            if exact is not None:
                window = config.dynamics.epsilon_window_ps
                start = config.dynamics.epsilon_start_ps
                eps = analysis.error_epsilon(run.trace, exact, window, start)
                self.record(epsilon=eps)
                rows = [[m, analysis.error_epsilon(t, exact, window, start)]
                        for m, t in sorted(run.checkpoints.items())]
                rows.append([config.rpwf.n_realizations, eps])
                self.write_table('epsilon', ['n_r', 'epsilon'], rows)

    def _write_trace(self, stem, trace):
        self.write_table(stem, TRACE_HEADER, trace.rows())
        meta = dict(trace.metadata)
        for message in meta.pop('warnings', []):
            self.warn(message)
        windows = self.config.dynamics.windows
        if windows:
            meta['flatness'] = analysis.baseline_flatness(trace, windows)
        self.record(**{stem: meta})
