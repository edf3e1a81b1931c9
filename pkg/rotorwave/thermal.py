"""Boltzmann ensembles, partition functions and level counting."""

import math
import logging

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from rotorwave import angular
from rotorwave.base import ConvergenceException
from rotorwave.constants import BOLTZMANN

logger = logging.getLogger('THERMAL')

POPULATION = 'population'
BOLTZMANN_FACTOR = 'boltzmann'
CRITERIA = (POPULATION, BOLTZMANN_FACTOR)

JMAX_START = 10
JMAX_STEP = 5
JMAX_CEILING = 120


@dataclass
class _Levels:
    """(J, tau) levels of all shells J <= jmax, sorted by energy."""

    jmax: int
    J: np.ndarray
    tau: np.ndarray
    parity: np.ndarray
    energy: np.ndarray

    @property
    def degeneracy(self):
        return 2 * self.J + 1

    def shell_minimum(self, J):
        return self.energy[self.J == J].min()


def _levels(rc, jmax):
    J, tau, parity, energy = [], [], [], []
    for j in range(jmax + 1):
        e, _, p = angular.shell_levels(rc, j)
        J.append(np.full(e.size, j))
        tau.append(np.arange(1, e.size + 1))
        parity.append(p)
        energy.append(e)
    J, tau, parity, energy = [
        np.concatenate(x) for x in (J, tau, parity, energy)]
    energy = energy - energy.min()
    order = np.lexsort((tau, J, energy))
    return _Levels(jmax=jmax, J=J[order], tau=tau[order],
                   parity=parity[order], energy=energy[order])


def _check_temperature(T):
    if not T > 0:
        raise ValueError('Temperature must be positive, got {}'.format(T))


@dataclass
class ThermalEnsemble:
    """Truncated Boltzmann ensemble of asymmetric-top states.

    Levels are stored once per (J, tau); :attr:`states` expands them over
    M = -J..J. ``level_weight`` is the normalized weight of a single
    |J M tau> state.

    """

    rotor: angular.RotorConstants
    temperature: float
    cutoff: float
    level_J: np.ndarray = field(repr=False)
    level_tau: np.ndarray = field(repr=False)
    level_parity: np.ndarray = field(repr=False)
    level_energy: np.ndarray = field(repr=False)
    level_weight: np.ndarray = field(repr=False)
    Z: float = 1.0
    discarded_population: float = 0.0
    jmax_used: int = 0

    @property
    def n_levels(self):
        return self.level_J.size

    @property
    def n_states(self):
        return int(np.sum(2 * self.level_J + 1))

    @cached_property
    def states(self):
        """Expanded states as a record array with fields
        ``J, M, tau, parity, energy, weight``; ascending energy, then J,
        tau, M.
        """
        deg = 2 * self.level_J + 1
        level = np.repeat(np.arange(self.n_levels), deg)
        starts = np.repeat(np.cumsum(deg) - deg, deg)
        M = np.arange(level.size) - starts - self.level_J[level]
        return np.rec.fromarrays(
            [self.level_J[level], M, self.level_tau[level],
             self.level_parity[level], self.level_energy[level],
             self.level_weight[level]],
            names='J,M,tau,parity,energy,weight')

    def levels(self):
        """List of ``(J, M, tau, energy, weight)`` tuples."""
        s = self.states
        return list(zip(s.J.tolist(), s.M.tolist(), s.tau.tolist(),
                        s.energy.tolist(), s.weight.tolist()))


def boltzmann_ensemble(rc, T, cutoff=1e-3, jmax_ceiling=JMAX_CEILING):
    """Thermal ensemble keeping the lowest states until a population of
    ``1 - cutoff`` is covered.

    The basis is extended in steps of 5 in J until every kept level lies
    below the lowest level of the top shell.

    :param rc: Molecule
    :type rc: :class:`rotorwave.angular.RotorConstants`

    :param T: Temperature in K
    :type T: float

    :param cutoff: Population allowed to be discarded, in (0, 1)
    :type cutoff: float

    :raises ConvergenceException: when ``jmax_ceiling`` is reached first

    """
    _check_temperature(T)
    if not 0 < cutoff < 1:
        raise ValueError('Cutoff must lie in (0, 1), got {}'.format(cutoff))

    kT = BOLTZMANN * T
    jmax = min(JMAX_START, jmax_ceiling)
    while True:
        lv = _levels(rc, jmax)
        pop = lv.degeneracy * np.exp(-lv.energy / kT)
        Z = float(np.sum(pop))
        cum = np.cumsum(pop) / Z
        n_keep = min(int(np.searchsorted(cum, 1.0 - cutoff)) + 1, cum.size)

        if jmax > 0 and lv.energy[n_keep - 1] < lv.shell_minimum(jmax):
            break
        if jmax >= jmax_ceiling:
            raise ConvergenceException(
                'Ensemble at T={} K not converged below Jmax={}'.format(
                    T, jmax_ceiling))
        jmax = min(jmax + JMAX_STEP, jmax_ceiling)

    kept = float(np.sum(pop[:n_keep]))
    ensemble = ThermalEnsemble(
        rotor=rc,
        temperature=float(T),
        cutoff=float(cutoff),
        level_J=lv.J[:n_keep],
        level_tau=lv.tau[:n_keep],
        level_parity=lv.parity[:n_keep],
        level_energy=lv.energy[:n_keep],
        level_weight=np.exp(-lv.energy[:n_keep] / kT) / kept,
        Z=Z,
        discarded_population=max(0.0, 1.0 - kept / Z),
        jmax_used=int(lv.J[:n_keep].max()),
    )
    logger.debug('T={} K: {} levels, {} states, Jmax={} (basis {})'.format(
        T, ensemble.n_levels, ensemble.n_states, ensemble.jmax_used, jmax))
    return ensemble


@dataclass
class LevelCount:
    temperature: float
    N_E: int
    criterion: str
    threshold: float


def _count_boltzmann(rc, T, threshold, jmax_ceiling):
    kT = BOLTZMANN * T
    e_cut = -kT * math.log(threshold)
    jmax = min(JMAX_START, jmax_ceiling)
    while True:
        lv = _levels(rc, jmax)
        if lv.shell_minimum(jmax) > e_cut:
            return int(np.sum(lv.degeneracy[lv.energy <= e_cut]))
        if jmax >= jmax_ceiling:
            raise ConvergenceException(
                'Level count at T={} K not converged below Jmax={}'.format(
                    T, jmax_ceiling))
        jmax = min(jmax + JMAX_STEP, jmax_ceiling)


def count_states(rc, T_list, cutoff, criterion=POPULATION,
                 jmax_ceiling=JMAX_CEILING):
    """Number of |J M tau> states N_E needed per temperature.

    :param cutoff: Threshold of the criterion: discarded population for
        ``population``, minimum Boltzmann factor relative to the ground
        state for ``boltzmann``
    :type cutoff: float

    """
    if criterion not in CRITERIA:
        raise ValueError('Unknown criterion "{}"'.format(criterion))
    for T in T_list:
        _check_temperature(T)

    counts = []
    for T in T_list:
        if criterion == POPULATION:
            n = boltzmann_ensemble(rc, T, cutoff, jmax_ceiling).n_states
        else:
            if not 0 < cutoff <= 1:
                raise ValueError(
                    'Threshold must lie in (0, 1], got {}'.format(cutoff))
            n = _count_boltzmann(rc, T, cutoff, jmax_ceiling)
        counts.append(LevelCount(temperature=float(T), N_E=n,
                                 criterion=criterion, threshold=cutoff))
    return counts


def thermal_energy(ensemble):
    """Mean rotational energy (cm^-1) of the ensemble."""
    return float(np.sum((2 * ensemble.level_J + 1) * ensemble.level_weight *
                        ensemble.level_energy))


@dataclass
class PartitionSums:
    temperature: float
    Z: float
    mean_energy: float
    jmax: int

    @property
    def classical_energy(self):
        return 1.5 * BOLTZMANN * self.temperature

    @property
    def deviation(self):
        return self.classical_energy - self.mean_energy


def classical_partition_function(rc, T):
    """High-temperature limit sqrt(pi (kT)^3 / (ABC))."""
    kT = BOLTZMANN * T
    return math.sqrt(math.pi * kT ** 3 / (rc.A * rc.B * rc.C))


def partition_sums(rc, T, tol=1e-14, jmax_ceiling=400):
    """Z and <E> summed shell by shell with the M degeneracy factored out,
    until a shell adds less than ``tol`` of the running Z.
    """
    _check_temperature(T)
    kT = BOLTZMANN * T
    Z = 0.0
    ZE = 0.0
    for J in range(jmax_ceiling + 1):
        e = angular.shell_levels(rc, J)[0]
        boltz = np.exp(-e / kT)
        shell = (2 * J + 1) * float(np.sum(boltz))
        Z += shell
        ZE += (2 * J + 1) * float(np.sum(boltz * e))
        if J > 0 and shell < tol * Z and e.min() > kT:
            return PartitionSums(temperature=float(T), Z=Z,
                                 mean_energy=ZE / Z, jmax=J)
    raise ConvergenceException(
        'Partition function at T={} K not converged below Jmax={}'.format(
            T, jmax_ceiling))
