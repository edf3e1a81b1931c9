"""Trace comparison, static error statistics and scaling fits."""

import logging

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from rotorwave import rpwf, thermal
from rotorwave.operators import StaticObservables
from rotorwave.utils import chunk_ranges

logger = logging.getLogger('ANALYSIS')

BOUND_TOL = 1e-9
DEFAULT_T_REV = 120.0
CHUNK = 256


@dataclass
class ObservableTrace:
    """Orientation <cos> and alignment <cos^2> sampled on a time grid (ps).

    ``metadata`` holds method, temperature, N_r, seed and pulse details.
    """

    times: np.ndarray = field(repr=False)
    orientation: np.ndarray = field(repr=False)
    alignment: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.orientation = np.asarray(self.orientation, dtype=float)
        self.alignment = np.asarray(self.alignment, dtype=float)
        if not (self.times.shape == self.orientation.shape ==
                self.alignment.shape):
            raise ValueError('Trace arrays differ in length')
        if np.any(np.diff(self.times) <= 0):
            raise ValueError('Trace times must be strictly increasing')
        if np.any(np.abs(self.orientation) > 1 + BOUND_TOL):
            raise ValueError('Orientation outside [-1, 1]')
        if np.any(self.alignment < -BOUND_TOL) or np.any(
                self.alignment > 1 + BOUND_TOL):
            raise ValueError('Alignment outside [0, 1]')

    def rows(self):
        return zip(self.times.tolist(), self.orientation.tolist(),
                   self.alignment.tolist())


@dataclass
class ScalingFit:
    """Ordinary least-squares line, on log-log axes when ``loglog``."""

    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    slope: float
    intercept: float
    r_squared: float
    loglog: bool = True


def _fit(x, y, loglog):
    if x.size < 3 or x.size != y.size:
        raise ValueError('A fit needs at least 3 paired points')
    u, v = (np.log(x), np.log(y)) if loglog else (x, y)
    slope, intercept = np.polyfit(u, v, 1)
    resid = v - (slope * u + intercept)
    ss_tot = float(np.sum((v - v.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return ScalingFit(x=x, y=y, slope=float(slope),
                      intercept=float(intercept), r_squared=min(r2, 1.0),
                      loglog=loglog)


def loglog_fit(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError('Log-log fit needs positive data')
    return _fit(x, y, True)


def linear_fit(x, y):
    """Least-squares line on linear axes; r_squared from
    :func:`scipy.stats.linregress`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fit = _fit(x, y, False)
    if np.ptp(y) > 0:
        fit.r_squared = float(stats.linregress(x, y).rvalue ** 2)
    return fit


def _window(trace, t0, t_rev):
    times = trace.times
    sel = (times >= t0 - 1e-9) & (times <= t0 + t_rev + 1e-9)
    return sel


def error_epsilon(rp, ex, T_rev=DEFAULT_T_REV, t0=0.0):
    """Time-averaged squared orientation difference,
    (1/T_rev) * integral over [t0, t0 + T_rev] of |S_rp - S_ex|^2 dt,
    by the trapezoidal rule on the sampling grid.
    """
    if rp.times.shape != ex.times.shape or not np.allclose(
            rp.times, ex.times, rtol=0, atol=1e-9):
        raise ValueError('Traces are sampled on different time grids')
    if T_rev <= 0:
        raise ValueError('T_rev must be positive, got {}'.format(T_rev))
    if t0 < rp.times[0] - 1e-9 or t0 + T_rev > rp.times[-1] + 1e-9:
        raise ValueError('Window [{}, {}] exceeds the trace span'.format(
            t0, t0 + T_rev))

    sel = _window(rp, t0, T_rev)
    diff = (rp.orientation[sel] - ex.orientation[sel]) ** 2
    return float(integrate.trapezoid(diff, rp.times[sel]) / T_rev)


def baseline_flatness(trace, windows):
    """Largest peak-to-peak orientation inside any of the windows."""
    windows = list(windows)
    if not windows:
        raise ValueError('No flatness windows given')
    worst = 0.0
    for lo, hi in windows:
        if lo >= hi or lo < trace.times[0] - 1e-9 or \
                hi > trace.times[-1] + 1e-9:
            raise ValueError('Window [{}, {}] outside the trace'.format(
                lo, hi))
        sel = (trace.times >= lo - 1e-9) & (trace.times <= hi + 1e-9)
        if np.any(sel):
            worst = max(worst, float(np.ptp(trace.orientation[sel])))
    return worst


@dataclass
class StaticErrorRow:
    """Batch statistics of realization-averaged static observables.

    ``*_mean_inverse`` is the batch mean of 1/|S - target|^2;
    ``*_inverse_mean`` is 1/mean(|S - target|^2).
    """

    temperature: float
    n_r: int
    batches: int
    n_states: int
    orientation_mean_inverse: float
    orientation_inverse_mean: float
    alignment_mean_inverse: float
    alignment_inverse_mean: float


def _static_batch(observables, master_seed, offset, n):
    ensemble = observables.ensemble
    out = np.empty((3, n))
    for start, stop in chunk_ranges(n, CHUNK):
        amps = rpwf.realization_matrix(
            ensemble, master_seed, range(offset + start, offset + stop))
        out[:, start:stop] = observables.expectations(amps)
    return out


def realization_values(observables, master_seed, n, batches, threads=1):
    """Static orientation, alignment and energy of every realization.

    Batch ``b`` holds realizations ``b * n ... (b + 1) * n - 1``.

    :return: three ``(batches, n)`` arrays
    :rtype: tuple of numpy.ndarray

    """
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(
            lambda b: _static_batch(observables, master_seed, b * n, n),
            range(batches)))
    values = np.stack(results, axis=1)
    return values[0], values[1], values[2]


def error_row(temperature, n_r, n_states, orientation, alignment):
    """Error statistics from per-batch means of orientation and
    alignment."""
    o = np.asarray(orientation) ** 2
    a = (np.asarray(alignment) - 1.0 / 3.0) ** 2
    with np.errstate(divide='ignore'):
        return StaticErrorRow(
            temperature=float(temperature),
            n_r=int(n_r),
            batches=o.size,
            n_states=int(n_states),
            orientation_mean_inverse=float(np.mean(1.0 / o)),
            orientation_inverse_mean=float(1.0 / np.mean(o)),
            alignment_mean_inverse=float(np.mean(1.0 / a)),
            alignment_inverse_mean=float(1.0 / np.mean(a)),
        )


def static_error_scan(rc, T_list, Nr_list, batches, master_seed,
                      cutoff=1e-3, jmax_ceiling=thermal.JMAX_CEILING,
                      threads=1):
    """Error statistics of RPWF static orientation (target 0) and
    alignment (target 1/3).

    Batch ``b`` at temperature T uses realizations
    ``b * max(Nr_list) ... (b + 1) * max(Nr_list) - 1``; the estimate for
    each N_r is the mean over the first N_r of them.

    :return: one row per (T, N_r)
    :rtype: list of :class:`StaticErrorRow`

    """
    Nr_list = sorted(int(x) for x in Nr_list)
    if batches < 1 or not Nr_list or Nr_list[0] < 1:
        raise ValueError('Batches and every N_r must be positive')
    nmax = Nr_list[-1]

    rows = []
    for T in T_list:
        ensemble = thermal.boltzmann_ensemble(rc, T, cutoff, jmax_ceiling)
        observables = StaticObservables(ensemble, threads=threads)
        logger.info('Static scan T={} K over {} states'.format(
            T, ensemble.n_states))

        cos, cos2, _ = realization_values(observables, master_seed, nmax,
                                          batches, threads)
        orient = np.cumsum(cos, axis=1)
        align = np.cumsum(cos2, axis=1)
        for n_r in Nr_list:
            rows.append(error_row(T, n_r, ensemble.n_states,
                                  orient[:, n_r - 1] / n_r,
                                  align[:, n_r - 1] / n_r))
    return rows


def static_slopes(rows, column='orientation_inverse_mean'):
    """Per-temperature slope of ``column`` against N_r, and the log-log fit
    of those slopes against temperature.

    :return: ``({T: ScalingFit}, ScalingFit or None)``
    :rtype: tuple

    """
    by_T = {}
    for row in rows:
        by_T.setdefault(row.temperature, []).append(row)

    per_T = {}
    for T, group in sorted(by_T.items()):
        per_T[T] = linear_fit([r.n_r for r in group],
                              [getattr(r, column) for r in group])

    cross = None
    temps = [T for T in per_T if per_T[T].slope > 0]
    if len(temps) >= 3:
        cross = loglog_fit(temps, [per_T[T].slope for T in temps])
    return per_T, cross
