import numpy as np

from rotorwave import analysis, rpwf, thermal
from rotorwave.base import AbstractCommand
from rotorwave.operators import StaticObservables

ERROR_HEADER = [
    'temperature_K',
    'n_r',
    'batches',
    'n_states',
    'orientation_mean_inverse',
    'orientation_inverse_mean',
    'alignment_mean_inverse',
    'alignment_inverse_mean',
]


class StaticCommand(AbstractCommand):
    """Exact thermal observables next to RPWF batch averages."""

    NAME = 'static'

    def run(self):
        rc = self.config.rotor()
        ens = self.config.ensemble
        seed = self.config.rpwf.master_seed
        n_r = self.config.rpwf.n_realizations
        batches = self.config.rpwf.batches

        exact_rows = []
        batch_rows = []
        error_rows = []
        worst_energy = 0.0
        for T in self.config.static.temperatures_K:
            with self.stage('ensemble'):
                ensemble = thermal.boltzmann_ensemble(
                    rc, T, ens.population_cutoff, ens.jmax_ceiling)
                observables = StaticObservables(ensemble,
                                                threads=self.threads)
            cos, cos2, energy = observables.thermal()
            exact_rows.append([float(T), ensemble.n_states, cos, cos2,
                               energy, thermal.thermal_energy(ensemble)])

            with self.stage('realizations'):
                values = analysis.realization_values(
                    observables, seed, n_r, batches, self.threads)

            means = np.array([
                [rpwf.average_observable(rpwf.RealizationBatch(seed, v[b]))
                 for v in values]
                for b in range(batches)
            ])
            for b, (o, a, e) in enumerate(means.tolist()):
                batch_rows.append([float(T), b, n_r, o, a, e])
            worst_energy = max(worst_energy, float(np.max(
                np.abs(values[2] - energy))) / max(energy, 1e-300))

            row = analysis.error_row(T, n_r, ensemble.n_states,
                                     means[:, 0], means[:, 1])
            error_rows.append([
                row.temperature, row.n_r, row.batches, row.n_states,
                row.orientation_mean_inverse, row.orientation_inverse_mean,
                row.alignment_mean_inverse, row.alignment_inverse_mean,
            ])

        self.write_table('exact', [
            'temperature_K', 'n_states', 'orientation', 'alignment',
            'energy_cm1', 'thermal_energy_cm1'], exact_rows)
        self.write_table('batches', [
            'temperature_K', 'batch', 'n_r', 'orientation', 'alignment',
            'energy_cm1'], batch_rows)
        self.write_table('errors', ERROR_HEADER, error_rows)
        self.record(max_relative_energy_error=worst_energy)
