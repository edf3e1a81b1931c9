from rotorwave import analysis, thermal
from rotorwave.base import AbstractCommand
from rotorwave.constants import BOLTZMANN

HEADER = [
    'temperature_K',
    'N_E',
    'Z',
    'Z_classical',
    'mean_energy_cm1',
    'classical_energy_cm1',
    'deviation_cm1',
    'energy_ratio',
]


class LevelsCommand(AbstractCommand):
    """Level counts, partition functions and thermal energies over the
    configured temperature grid."""

    NAME = 'levels'

    def run(self):
        rc = self.config.rotor()
        levels = self.config.levels
        temps = levels.temperatures_K

        with self.stage('count'):
            counts = thermal.count_states(
                rc, temps, levels.count_cutoff, levels.count_criterion,
                self.config.ensemble.jmax_ceiling)

        with self.stage('partition'):
            sums = [thermal.partition_sums(rc, T, levels.partition_tolerance)
                    for T in temps]

        rows = []
        for count, s in zip(counts, sums):
            rows.append([
                count.temperature,
                count.N_E,
                s.Z,
                thermal.classical_partition_function(rc, s.temperature),
                s.mean_energy,
                s.classical_energy,
                s.deviation,
                s.mean_energy / (1.5 * BOLTZMANN * s.temperature),
            ])
        self.write_table('table', HEADER, rows)

        fits = []
        lo, hi = levels.scaling_range_K
        sel = [c for c in counts if lo <= c.temperature <= hi and c.N_E > 0]
        if len(sel) >= 3:
            fit = analysis.loglog_fit([c.temperature for c in sel],
                                      [c.N_E for c in sel])
            fits.append(['N_E_vs_T_loglog', fit.slope, fit.intercept,
                         fit.r_squared, len(sel)])
            self.record(level_count_slope=fit.slope,
                        level_count_r_squared=fit.r_squared)
        else:
            self.warn('Fewer than 3 temperatures in {}..{} K; no level-count '
                      'fit'.format(lo, hi))

        lo, hi = levels.deviation_range_K
        sel = [s for s in sums if lo <= s.temperature <= hi]
        if len(sel) >= 3:
            fit = analysis.linear_fit([1.0 / s.temperature for s in sel],
                                      [s.deviation for s in sel])
            fits.append(['deviation_vs_inverse_T', fit.slope, fit.intercept,
                         fit.r_squared, len(sel)])
            self.record(deviation_slope=fit.slope,
                        deviation_intercept=fit.intercept,
                        deviation_r_squared=fit.r_squared)
        else:
            self.warn('Fewer than 3 temperatures in {}..{} K; no deviation '
                      'fit'.format(lo, hi))

        self.write_table(
            'fits', ['fit', 'slope', 'intercept', 'r_squared', 'points'],
            fits)
        self.record(count_criterion=levels.count_criterion,
                    count_cutoff=levels.count_cutoff)
