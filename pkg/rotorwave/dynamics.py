"""THz pulse, unit conversions and time propagation.

States evolve under H(t) = H0 - mu E(t) cos(theta) in the asymmetric
eigenbasis of each (M, parity) sub-block. The field vanishes outside
+/- 10 sigma of the pulse center, so only that window is integrated step by
step; before and after it the observables follow in closed form from the
accumulated density matrix of each block.
"""

import math
import logging

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse

from rotorwave import rpwf
from rotorwave.analysis import ObservableTrace
from rotorwave.base import (GuardException, LeakageException,
                            NormDriftException, NumericalException)
from rotorwave.constants import (DEBYE_MV_CM, EPSILON_0, SPEED_OF_LIGHT_SI,
                                 TWO_PI_C)
from rotorwave.operators import BlockSet
from rotorwave.utils import chunk_ranges

logger = logging.getLogger('DYNAMICS')

SPLIT_STEP = 'split-step'
RK4 = 'rk4'
METHODS = (SPLIT_STEP, RK4)

EXACT = 'exact'
RPWF = 'rpwf'

CUTOFF_SIGMAS = 10.0
DEFAULT_FWHM = 1.0
DEFAULT_SIGMA = DEFAULT_FWHM / (2.0 * math.sqrt(math.log(2.0)))
DEFAULT_CENTER = -6.25
EXACT_MAX_STATES = 2000

CHUNK = 128
TIME_CHUNK = 512


@dataclass(frozen=True)
class PulseSpec:
    """Single-cycle pulse E0 exp(-((t - t_center)/sigma)^2)
    sin(2 pi carrier (t - t_center)).

    :param e0: Envelope amplitude in MV/cm
    :param carrier: Carrier frequency in THz
    :param sigma: Envelope width in ps
    :param t_center: Pulse center in ps
    """

    e0: float
    carrier: float = 0.5
    sigma: float = DEFAULT_SIGMA
    t_center: float = DEFAULT_CENTER

    def __post_init__(self):
        if self.e0 < 0:
            raise ValueError('Field amplitude must be non-negative, got '
                             '{}'.format(self.e0))
        if not self.sigma > 0:
            raise ValueError('Sigma must be positive, got {}'.format(
                self.sigma))
        if self.carrier < 0:
            raise ValueError('Carrier must be non-negative, got {}'.format(
                self.carrier))

    @classmethod
    def from_fwhm(cls, e0, fwhm=DEFAULT_FWHM, carrier=0.5,
                  t_center=DEFAULT_CENTER):
        if not fwhm > 0:
            raise ValueError('FWHM must be positive, got {}'.format(fwhm))
        return cls(e0=e0, carrier=carrier,
                   sigma=fwhm / (2.0 * math.sqrt(math.log(2.0))),
                   t_center=t_center)

    @property
    def window(self):
        half = CUTOFF_SIGMAS * self.sigma
        return self.t_center - half, self.t_center + half

    @property
    def peak_field(self):
        """Largest |E(t)| actually reached, in MV/cm."""
        if self.e0 == 0:
            return 0.0
        grid = np.linspace(self.t_center, self.t_center + 4 * self.sigma,
                           4001)
        values = np.abs(field_amplitude(grid, self))
        i = int(np.argmax(values))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]
        res = optimize.minimize_scalar(
            lambda t: -abs(field_amplitude(t, self)), bounds=(lo, hi),
            method='bounded', options={'xatol': 1e-12})
        return max(float(-res.fun), float(values[i]))


def field_amplitude(t, pulse):
    """Field in MV/cm at time(s) ``t`` (ps); zero outside the pulse
    window."""
    t = np.asarray(t, dtype=float)
    x = t - pulse.t_center
    e = pulse.e0 * np.exp(-(x / pulse.sigma) ** 2) * np.sin(
        2.0 * math.pi * pulse.carrier * x)
    e = np.where(np.abs(x) <= CUTOFF_SIGMAS * pulse.sigma, e, 0.0)
    return float(e) if e.ndim == 0 else e


def intensity_to_field(I0):
    """Peak field in MV/cm of a peak intensity in W/cm^2."""
    if I0 < 0:
        raise ValueError('Intensity must be non-negative, got {}'.format(I0))
    volts_per_m = math.sqrt(2.0 * I0 * 1e4 / (EPSILON_0 * SPEED_OF_LIGHT_SI))
    return volts_per_m / 1e8


def coupling_strength(mu, E):
    """mu E in cm^-1 for a dipole in Debye and a field in MV/cm."""
    return mu * E * DEBYE_MV_CM


@dataclass(frozen=True)
class PropagationConfig:
    dt: float = 0.002
    t_start: float = -12.5
    t_end: float = 125.0
    method: str = SPLIT_STEP
    norm_drift_tolerance: float = 1e-8
    sample_every: float = 0.05
    j_buffer: int = 20
    leakage_tolerance: float = 1e-6

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError('dt must be positive, got {}'.format(self.dt))
        if not self.t_end > self.t_start:
            raise ValueError('t_end must exceed t_start')
        if self.method not in METHODS:
            raise ValueError('Unknown propagation method "{}"'.format(
                self.method))
        if not self.sample_every > 0:
            raise ValueError('Sampling interval must be positive')
        if self.sample_every < self.dt:
            raise ValueError('Sampling interval is shorter than dt')
        ratio = self.sample_every / self.dt
        if abs(ratio - round(ratio)) > 1e-6:
            raise ValueError('Sampling interval {} is not a multiple of dt '
                             '{}'.format(self.sample_every, self.dt))
        if self.j_buffer < 0:
            raise ValueError('J buffer must be non-negative')
        if not (self.norm_drift_tolerance > 0 and
                self.leakage_tolerance > 0):
            raise ValueError('Tolerances must be positive')

    @property
    def steps_per_sample(self):
        return int(round(self.sample_every / self.dt))

    @property
    def n_samples(self):
        return int(math.floor(
            (self.t_end - self.t_start) / self.sample_every + 1e-9)) + 1

    @property
    def sample_span(self):
        """First and last sampled time."""
        return (self.t_start,
                self.t_start + self.sample_every * (self.n_samples - 1))


@dataclass
class TimeGrid:
    """Sampling grid; samples ``start..stop`` (inclusive) cover the pulse
    window and are propagated step by step."""

    times: np.ndarray = field(repr=False)
    start: int
    stop: int
    steps: int

    @property
    def has_window(self):
        return self.start <= self.stop

    @property
    def n_window(self):
        return max(0, self.stop - self.start + 1)

    @classmethod
    def build(cls, pulse, cfg):
        se = cfg.sample_every
        K = cfg.n_samples - 1
        times = cfg.t_start + se * np.arange(K + 1)

        w0, w1 = pulse.window
        if pulse.e0 == 0 or w1 <= times[0] or w0 >= times[-1]:
            return cls(times=times, start=K + 1, stop=K,
                       steps=cfg.steps_per_sample)
        start = max(0, int(math.floor((w0 - cfg.t_start) / se + 1e-9)))
        stop = min(K, int(math.ceil((w1 - cfg.t_start) / se - 1e-9)))
        return cls(times=times, start=start, stop=stop,
                   steps=cfg.steps_per_sample)


class AbstractPropagator(ABC):
    """Advances column states of one sub-block through the pulse window.

    :param block: Sub-block in the asymmetric eigenbasis
    :type block: :class:`rotorwave.operators.Block`

    :param pulse: Driving pulse
    :type pulse: :class:`PulseSpec`

    :param mu: Dipole in Debye
    :type mu: float

    :param dt: Time step in ps
    :type dt: float

    """

    NAME = None

    def __init__(self, block, pulse, mu, dt):
        self.block = block
        self.pulse = pulse
        self.mu = mu
        self.dt = dt
        self.omega = TWO_PI_C * block.energies

    def coupling(self, t):
        return coupling_strength(self.mu, field_amplitude(t, self.pulse))

    def free_phase(self, tau):
        return np.exp(-1j * self.omega * tau)[:, None]

    def advance(self, psi, t0, n_steps):
        for j in range(n_steps):
            psi = self.step(psi, t0 + j * self.dt)
        return psi

    @abstractmethod
    def step(self, psi, t):
        pass

    def expectations(self, psi):
        cos = np.real(np.einsum('ij,ij->j', psi.conj(), self.block.cos @ psi))
        cos2 = np.real(np.einsum('ij,ij->j', psi.conj(),
                                 self.block.cos2 @ psi))
        return cos, cos2

    def evolve(self, psi0, grid, tolerance, labels):
        """Propagate states given at ``grid.times[0]`` through the window.

        :return: per-sample window expectations ``(cos, cos2)`` of shape
            ``(n_window, n_columns)`` and the states at the last window
            sample, or at the grid start when there is no window
        :rtype: tuple

        :raises NormDriftException: when a column norm drifts by more than
            ``tolerance``

        """
        m = psi0.shape[1]
        cos = np.empty((grid.n_window, m))
        cos2 = np.empty((grid.n_window, m))
        if not grid.has_window:
            return cos, cos2, psi0

        times = grid.times
        psi = self.free_phase(times[grid.start] - times[0]) * psi0
        norm0 = np.sum(np.abs(psi) ** 2, axis=0)

        cos[0], cos2[0] = self.expectations(psi)
        for i in range(1, grid.n_window):
            psi = self.advance(psi, times[grid.start + i - 1], grid.steps)
            cos[i], cos2[i] = self.expectations(psi)

        drift = np.abs(np.sum(np.abs(psi) ** 2, axis=0) - norm0)
        worst = int(np.argmax(drift)) if m else 0
        if m and drift[worst] > tolerance:
            raise NormDriftException(
                'Norm drift {:.3e} exceeds {:.1e} in block M={} p={}'.format(
                    drift[worst], tolerance, self.block.M,
                    self.block.parity),
                realization=int(labels[worst]))
        return cos, cos2, psi


class SplitStepPropagator(AbstractPropagator):
    """Second-order split step: exact H0 half phases around a kick sampled
    at the step midpoint."""

    NAME = SPLIT_STEP

    def __init__(self, block, pulse, mu, dt):
        super().__init__(block, pulse, mu, dt)
        self.half = self.free_phase(0.5 * dt)
        self.lam, self.vectors = block.cos_eigensystem

    def step(self, psi, t):
        psi = self.half * psi
        g = self.coupling(t + 0.5 * self.dt)
        if g != 0:
            kick = np.exp(1j * TWO_PI_C * g * self.dt * self.lam)[:, None]
            psi = self.vectors @ (kick * (self.vectors.T @ psi))
        return self.half * psi


class RK4Propagator(AbstractPropagator):
    """Classical Runge-Kutta on the coupling in the interaction picture of
    H0."""

    NAME = RK4

    def __init__(self, block, pulse, mu, dt):
        super().__init__(block, pulse, mu, dt)
        self.half = self.free_phase(0.5 * dt)
        self.full = self.free_phase(dt)

    def _rhs(self, g, phase, y):
        if g == 0:
            return np.zeros_like(y)
        return 1j * TWO_PI_C * g * (phase.conj() * (
            self.block.cos @ (phase * y)))

    def step(self, psi, t):
        h = self.dt
        one = np.ones_like(self.half)
        g0 = self.coupling(t)
        g1 = self.coupling(t + 0.5 * h)
        g2 = self.coupling(t + h)

        k1 = self._rhs(g0, one, psi)
        k2 = self._rhs(g1, self.half, psi + 0.5 * h * k1)
        k3 = self._rhs(g1, self.half, psi + 0.5 * h * k2)
        k4 = self._rhs(g2, self.full, psi + h * k3)
        y = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return self.full * y


PROPAGATORS = {
    SPLIT_STEP: SplitStepPropagator,
    RK4: RK4Propagator,
}


def _free_expectation(op, omega, rho, taus):
    """Re Tr(rho(tau) op) under H0 alone, for ``rho`` given at tau = 0."""
    out = np.zeros(taus.size)
    if taus.size == 0:
        return out
    coo = op.tocoo()
    A = sparse.csr_matrix((coo.data * rho[coo.col, coo.row],
                           (coo.row, coo.col)), shape=op.shape)
    for start, stop in chunk_ranges(taus.size, TIME_CHUNK):
        U = np.exp(1j * np.outer(omega, taus[start:stop]))
        out[start:stop] = np.real(np.sum(U * (A @ U.conj()), axis=0))
    return out


def _assemble(block, grid, rho_pre, win_cos, win_cos2, rho_post):
    omega = TWO_PI_C * block.energies
    times = grid.times
    n = times.size
    orientation = np.empty(n)
    alignment = np.empty(n)

    pre = times[:min(grid.start, n)] - times[0]
    orientation[:pre.size] = _free_expectation(block.cos, omega, rho_pre, pre)
    alignment[:pre.size] = _free_expectation(block.cos2, omega, rho_pre, pre)
    if grid.has_window:
        orientation[grid.start:grid.stop + 1] = win_cos
        alignment[grid.start:grid.stop + 1] = win_cos2
        post = times[grid.stop + 1:] - times[grid.stop]
        orientation[grid.stop + 1:] = _free_expectation(
            block.cos, omega, rho_post, post)
        alignment[grid.stop + 1:] = _free_expectation(
            block.cos2, omega, rho_post, post)
    return orientation, alignment


@dataclass
class BlockColumns:
    """Column states restricted to one sub-block, each with a weight and a
    label (ensemble state index or realization index)."""

    block: object
    psi: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)


@dataclass
class StateVector:
    """Weighted column states over the sub-blocks of a propagation basis
    at time ``time`` (ps).

    Columns with equal labels in different blocks are pieces of one state.
    """

    blockset: BlockSet
    parts: list
    time: float

    def block_norms(self):
        return [np.sum(np.abs(p.psi) ** 2, axis=0) for p in self.parts]

    def norms(self):
        """Total norm per label."""
        out = {}
        for part, norms in zip(self.parts, self.block_norms()):
            for label, x in zip(part.labels.tolist(), norms.tolist()):
                out[label] = out.get(label, 0.0) + x
        return out

    def energy(self):
        return float(sum(
            p.weights @ (p.block.energies @ np.abs(p.psi) ** 2)
            for p in self.parts))

    def expectations(self):
        """Weighted orientation and alignment."""
        cos = 0.0
        cos2 = 0.0
        for p in self.parts:
            cos += float(p.weights @ np.real(np.einsum(
                'ij,ij->j', p.psi.conj(), p.block.cos @ p.psi)))
            cos2 += float(p.weights @ np.real(np.einsum(
                'ij,ij->j', p.psi.conj(), p.block.cos2 @ p.psi)))
        return cos, cos2


def _eigenstate_chunks(block, states, local, weights):
    for start, stop in chunk_ranges(states.size, CHUNK):
        m = stop - start
        psi = np.zeros((block.size, m), dtype=complex)
        psi[local[start:stop], np.arange(m)] = 1.0
        yield psi, weights[states[start:stop]], states[start:stop]


def _rpwf_columns(block, states, local, amps, start):
    """Block slice of realizations ``start, start + 1, ...`` held as the
    columns of ``amps``."""
    n = amps.shape[1]
    psi = np.zeros((block.size, n), dtype=complex)
    psi[local] = amps[states]
    return psi, np.ones(n), np.arange(start, start + n)


def eigenstate_vector(ensemble, blockset, time=None):
    """Every ensemble state as a unit column weighted by its population."""
    w = ensemble.states.weight
    parts = []
    for block, (states, local) in zip(blockset.blocks,
                                      blockset.scatter(ensemble)):
        for psi, c, labels in _eigenstate_chunks(block, states, local, w):
            parts.append(BlockColumns(block, psi, c, labels))
    return StateVector(blockset, parts, _initial_time(time))


def rpwf_vector(ensemble, blockset, master_seed, ks, time=None):
    """RPWF realizations ``ks``, each weighted 1 / len(ks)."""
    ks = list(ks)
    amps = rpwf.realization_matrix(ensemble, master_seed, ks)
    parts = []
    for block, (states, local) in zip(blockset.blocks,
                                      blockset.scatter(ensemble)):
        psi = np.zeros((block.size, len(ks)), dtype=complex)
        psi[local] = amps[states]
        parts.append(BlockColumns(block, psi, np.full(len(ks), 1 / len(ks)),
                                  np.array(ks)))
    return StateVector(blockset, parts, _initial_time(time))


def _initial_time(time):
    return PropagationConfig.t_start if time is None else float(time)


@dataclass
class _BlockTally:
    orientation: np.ndarray
    alignment: np.ndarray
    marks: dict
    kept: dict
    energy_before: float
    energy_after: float
    leakage: float
    worst: tuple
    final: list


class _BlockRunner:
    """Accumulates the observables of one sub-block over column chunks
    fed in realization (or state) order."""

    def __init__(self, block, grid, pulse, cfg, mu, top_J, marks=(),
                 keep=(), final_time=None):
        self.block = block
        self.grid = grid
        self.cfg = cfg
        self.marks = marks
        self.keep = keep
        self.final_time = final_time
        self.propagator = PROPAGATORS[cfg.method](block, pulse, mu, cfg.dt)

        n = block.size
        self.rho_pre = np.zeros((n, n), dtype=complex)
        self.rho_post = np.zeros((n, n), dtype=complex)
        self.win_cos = np.zeros(grid.n_window)
        self.win_cos2 = np.zeros(grid.n_window)
        self.top = block.J == top_J
        self.count = 0
        self.tally = _BlockTally(None, None, {}, {}, 0.0, 0.0, 0.0,
                                 (None, 0.0), [])

    def feed(self, psi0, c, labels):
        block, grid, tally = self.block, self.grid, self.tally
        try:
            cos, cos2, psi = self.propagator.evolve(
                psi0, grid, self.cfg.norm_drift_tolerance, labels)
        except NumericalException as e:
            logger.error('Propagation failed: {}'.format(e))
            raise

        pops0 = np.abs(psi0) ** 2
        pops = np.abs(psi) ** 2
        tally.energy_before += float(c @ (block.energies @ pops0))
        tally.energy_after += float(c @ (block.energies @ pops))
        if grid.has_window:
            leak = c * pops[self.top].sum(axis=0)
            tally.leakage += float(leak.sum())
            if leak.size and leak.max() > tally.worst[1]:
                i = int(np.argmax(leak))
                tally.worst = (int(labels[i]), float(leak[i]))

        self.rho_pre += (psi0 * c) @ psi0.conj().T
        self.rho_post += (psi * c) @ psi.conj().T
        self.win_cos += cos @ c
        self.win_cos2 += cos2 @ c

        for j, label in enumerate(labels.tolist()):
            if label in self.keep:
                tally.kept[label] = _assemble(
                    block, grid, np.outer(psi0[:, j], psi0[:, j].conj()),
                    cos[:, j], cos2[:, j],
                    np.outer(psi[:, j], psi[:, j].conj()))

        self.count += len(labels)
        if self.count in self.marks:
            tally.marks[self.count] = _assemble(
                block, grid, self.rho_pre, self.win_cos, self.win_cos2,
                self.rho_post)

        if self.final_time is not None:
            t_ref = grid.times[grid.stop] if grid.has_window else \
                grid.times[0]
            tally.final.append(BlockColumns(
                block, self.propagator.free_phase(self.final_time - t_ref) *
                psi, c, labels))

    def finish(self):
        tally = self.tally
        tally.orientation, tally.alignment = _assemble(
            self.block, self.grid, self.rho_pre, self.win_cos,
            self.win_cos2, self.rho_post)
        logger.debug('Block M={} p={} ({} states) done'.format(
            self.block.M, self.block.parity, self.block.size))
        return tally


def _run_block(block, chunks, grid, pulse, cfg, mu, top_J, **kwargs):
    runner = _BlockRunner(block, grid, pulse, cfg, mu, top_J, **kwargs)
    for psi0, c, labels in chunks:
        runner.feed(psi0, c, labels)
    return runner.finish()


def _check_leakage(leakage, worst, cfg, per_realization):
    warnings = []
    if leakage > cfg.leakage_tolerance:
        raise LeakageException(
            'Top-shell population {:.3e} exceeds {:.1e}; increase the J '
            'buffer'.format(leakage, cfg.leakage_tolerance),
            realization=worst[0] if per_realization else None)
    if leakage > 0.01 * cfg.leakage_tolerance:
        message = 'Top-shell population {:.3e} close to the limit ' \
            '{:.1e}'.format(leakage, cfg.leakage_tolerance)
        logger.warning(message)
        warnings.append(message)
    return warnings


def _metadata(method, ensemble, pulse, cfg, jprop, tallies, scale):
    energy_before = sum(t.energy_before for t in tallies) * scale
    energy_after = sum(t.energy_after for t in tallies) * scale
    return {
        'method': method,
        'propagator': cfg.method,
        'temperature_K': ensemble.temperature,
        'n_states': ensemble.n_states,
        'jmax_thermal': ensemble.jmax_used,
        'jmax_propagation': jprop,
        'e0_MV_cm': pulse.e0,
        'peak_field_MV_cm': pulse.peak_field,
        'carrier_THz': pulse.carrier,
        'sigma_ps': pulse.sigma,
        'center_ps': pulse.t_center,
        'dt_ps': cfg.dt,
        'energy_before_cm1': energy_before,
        'energy_after_cm1': energy_after,
        'top_shell_population': sum(t.leakage for t in tallies) * scale,
    }


def _sum_traces(parts, scale):
    orientation = np.sum([p[0] for p in parts], axis=0) * scale
    alignment = np.sum([p[1] for p in parts], axis=0) * scale
    return orientation, alignment


def propagate(state, pulse, cfg, threads=1):
    """Propagate a :class:`StateVector` given at ``cfg.t_start``.

    :return: weighted observable trace on the sampling grid and the state
        at ``cfg.t_end``
    :rtype: tuple(:class:`rotorwave.analysis.ObservableTrace`,
        :class:`StateVector`)

    """
    if abs(state.time - cfg.t_start) > 1e-12:
        raise ValueError('State is given at t={} ps, propagation starts at '
                         '{} ps'.format(state.time, cfg.t_start))
    grid = TimeGrid.build(pulse, cfg)
    mu = state.blockset.rotor.mu
    top_J = state.blockset.jmax

    with ThreadPoolExecutor(max_workers=threads) as pool:
        tallies = list(pool.map(
            lambda p: _run_block(
                p.block, [(p.psi, p.weights, p.labels)], grid, pulse, cfg,
                mu, top_J, final_time=cfg.t_end),
            state.parts))

    orientation, alignment = _sum_traces(
        [(t.orientation, t.alignment) for t in tallies], 1.0)
    final = StateVector(state.blockset,
                        [c for t in tallies for c in t.final], cfg.t_end)
    trace = ObservableTrace(
        times=grid.times, orientation=orientation, alignment=alignment,
        metadata={
            'propagator': cfg.method,
            'energy_before_cm1': sum(t.energy_before for t in tallies),
            'energy_after_cm1': sum(t.energy_after for t in tallies),
            'top_shell_population': sum(t.leakage for t in tallies),
        })
    return trace, final


def exact_ensemble_run(ensemble, pulse, cfg, threads=1,
                       max_states=EXACT_MAX_STATES):
    """Propagate every ensemble state and sum the observables with the
    Boltzmann weights.

    :raises GuardException: when the ensemble has more than ``max_states``
        states
    :raises LeakageException: when the top shell of the propagation basis
        gets more than ``cfg.leakage_tolerance`` population

    """
    if ensemble.n_states > max_states:
        raise GuardException(
            'Exact propagation of {} states exceeds the limit of {}; use '
            'RPWF'.format(ensemble.n_states, max_states))

    jprop = ensemble.jmax_used + cfg.j_buffer
    blockset = BlockSet.for_ensemble(ensemble, jmax=jprop, threads=threads)
    grid = TimeGrid.build(pulse, cfg)
    w = ensemble.states.weight
    logger.info('Exact run: {} states in {} blocks, J <= {}'.format(
        ensemble.n_states, len(blockset), jprop))

    with ThreadPoolExecutor(max_workers=threads) as pool:
        tallies = list(pool.map(
            lambda args: _run_block(
                args[0], _eigenstate_chunks(args[0], args[1][0], args[1][1],
                                            w),
                grid, pulse, cfg, ensemble.rotor.mu, jprop),
            zip(blockset.blocks, blockset.scatter(ensemble))))

    metadata = _metadata(EXACT, ensemble, pulse, cfg, jprop, tallies, 1.0)
    worst = max((t.worst for t in tallies), key=lambda x: x[1])
    metadata['warnings'] = _check_leakage(
        metadata['top_shell_population'], worst, cfg, False)

    orientation, alignment = _sum_traces(
        [(t.orientation, t.alignment) for t in tallies], 1.0)
    return ObservableTrace(times=grid.times, orientation=orientation,
                           alignment=alignment, metadata=metadata)


@dataclass
class RpwfRun:
    """Averaged trace of ``N_r`` realizations, single-realization traces
    keyed by realization index and prefix averages keyed by N_r."""

    trace: ObservableTrace
    singles: dict = field(default_factory=dict)
    checkpoints: dict = field(default_factory=dict)


def rpwf_ensemble_run(ensemble, pulse, cfg, master_seed, n_r, threads=1,
                      checkpoints=(), keep=1):
    """Propagate ``n_r`` RPWF realizations and average their traces.

    Realization ``k`` uses the stream of ``(master_seed, k)``. The
    average over the first ``N`` realizations is also returned for every
    ``N`` in ``checkpoints``, and the individual traces of realizations
    ``0 .. keep - 1``.

    :rtype: :class:`RpwfRun`

    """
    if n_r < 1:
        raise ValueError('N_r must be positive, got {}'.format(n_r))
    marks = sorted(set(int(x) for x in checkpoints))
    if marks and (marks[0] < 1 or marks[-1] > n_r):
        raise ValueError('Checkpoints must lie in [1, {}]'.format(n_r))
    kept = set(range(min(max(keep, 0), n_r)))

    jprop = ensemble.jmax_used + cfg.j_buffer
    blockset = BlockSet.for_ensemble(ensemble, jmax=jprop, threads=threads)
    grid = TimeGrid.build(pulse, cfg)
    logger.info('RPWF run: N_r={} over {} states in {} blocks, J <= '
                '{}'.format(n_r, ensemble.n_states, len(blockset), jprop))

    scattered = blockset.scatter(ensemble)
    runners = [
        _BlockRunner(block, grid, pulse, cfg, ensemble.rotor.mu, jprop,
                     marks=set(marks), keep=kept)
        for block in blockset.blocks]

    def feed(i, amps, start):
        states, local = scattered[i]
        runners[i].feed(*_rpwf_columns(runners[i].block, states, local,
                                       amps, start))

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for start, stop in chunk_ranges(n_r, CHUNK, marks):
            amps = rpwf.realization_matrix(ensemble, master_seed,
                                           range(start, stop))
            list(pool.map(lambda i: feed(i, amps, start),
                          range(len(runners))))
    tallies = [r.finish() for r in runners]

    metadata = _metadata(RPWF, ensemble, pulse, cfg, jprop, tallies,
                         1.0 / n_r)
    metadata.update(n_r=n_r, master_seed=master_seed)
    worst = max((t.worst for t in tallies), key=lambda x: x[1])
    metadata['warnings'] = _check_leakage(
        metadata['top_shell_population'], worst, cfg, True)

    def trace(parts, scale, **extra):
        orientation, alignment = _sum_traces(parts, scale)
        return ObservableTrace(times=grid.times, orientation=orientation,
                               alignment=alignment,
                               metadata=dict(metadata, **extra))

    run = RpwfRun(trace=trace(
        [(t.orientation, t.alignment) for t in tallies], 1.0 / n_r))
    for k in sorted(kept):
        run.singles[k] = trace([t.kept[k] for t in tallies], 1.0,
                               n_r=1, realization=k)
    for m in marks:
        run.checkpoints[m] = trace([t.marks[m] for t in tallies], 1.0 / m,
                                   n_r=m)
    return run
