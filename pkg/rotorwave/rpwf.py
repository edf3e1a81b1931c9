"""Random phase wave functions.

A realization carries Boltzmann magnitudes and independent uniform phases
over the states of a thermal ensemble. Realization ``k`` draws its phases
from a Philox counter-based stream keyed by ``(master_seed, k)``, so any
subset of realizations can be generated in any order, by any number of
workers, with identical results.
"""

import math
import logging

from dataclasses import dataclass, field

import numpy as np

from rotorwave.base import GuardException

logger = logging.getLogger('RPWF')

COMPLETENESS_MAX_DIM = 500


@dataclass
class RpwfState:
    amplitudes: np.ndarray = field(repr=False)
    realization: int
    seed: int

    @property
    def norm(self):
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass
class RealizationBatch:
    """Per-realization values of one observable: shape ``(N_r,)`` for a
    static value or ``(N_r, n_times)`` for a trace."""

    master_seed: int
    values: np.ndarray = field(repr=False)

    @property
    def n_realizations(self):
        return len(self.values)


def _stream(master_seed, k):
    seq = np.random.SeedSequence([int(master_seed), int(k)])
    return np.random.Generator(np.random.Philox(seq))


def sample_phases(n, master_seed, k):
    return _stream(master_seed, k).uniform(0.0, 2.0 * math.pi, n)


def sample_rpwf(ensemble, master_seed, k):
    """Realization ``k``: amplitudes sqrt(w) exp(i theta) in ensemble state
    order."""
    w = ensemble.states.weight
    theta = sample_phases(w.size, master_seed, k)
    return RpwfState(
        amplitudes=np.sqrt(w) * np.exp(1j * theta),
        realization=int(k),
        seed=int(master_seed),
    )


def realization_matrix(ensemble, master_seed, ks):
    """Amplitudes of realizations ``ks`` as columns of an
    ``(n_states, len(ks))`` matrix."""
    ks = list(ks)
    out = np.empty((ensemble.n_states, len(ks)), dtype=complex)
    for i, k in enumerate(ks):
        out[:, i] = sample_rpwf(ensemble, master_seed, k).amplitudes
    return out


def average_observable(batch):
    """Mean over realizations; a scalar for static values, an array for
    traces."""
    values = np.asarray(batch.values, dtype=float)
    if values.shape[0] == 0:
        raise ValueError('Cannot average an empty realization batch')
    mean = np.add.reduce(values, axis=0) / values.shape[0]
    return float(mean) if mean.ndim == 0 else mean


def completeness_deviation(ensemble, master_seed, n_r,
                           max_dim=COMPLETENESS_MAX_DIM):
    """Frobenius distance between the realization-averaged projector and
    the diagonal thermal density matrix.

    With Boltzmann magnitudes the average of |theta_k><theta_k| converges to
    diag(weights), not to the identity.

    :raises GuardException: when the ensemble exceeds ``max_dim`` states

    """
    if n_r < 1:
        raise ValueError('N_r must be positive, got {}'.format(n_r))
    n = ensemble.n_states
    if n > max_dim:
        raise GuardException(
            'Completeness check needs a dense {0}x{0} matrix; limit is '
            '{1}'.format(n, max_dim))

    rho = np.zeros((n, n), dtype=complex)
    for k in range(n_r):
        psi = sample_rpwf(ensemble, master_seed, k).amplitudes
        rho += np.outer(psi, psi.conj())
    rho /= n_r
    rho[np.diag_indices(n)] -= ensemble.states.weight
    return float(np.linalg.norm(rho, 'fro'))
