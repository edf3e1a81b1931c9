"""Per-block operator sets in the asymmetric eigenbasis.

Each M-block splits into two K-parity sub-blocks that neither H0 nor the
a-axis direction cosines connect; a :class:`Block` is one such sub-block.
"""

import logging

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from rotorwave import angular

logger = logging.getLogger('OPERATORS')


@dataclass
class Block:
    M: int
    parity: int
    labels: tuple
    energies: np.ndarray = field(repr=False)
    J: np.ndarray = field(repr=False)
    cos: object = field(repr=False)
    cos2: object = field(repr=False)

    @property
    def size(self):
        return len(self.labels)

    @cached_property
    def cos_eigensystem(self):
        """Eigenvalues and orthogonal eigenvectors of cos(theta)."""
        return np.linalg.eigh(self.cos.toarray())

    def restrict(self, local):
        """Block keeping only the basis functions at ``local``."""
        local = np.asarray(local)
        return Block(
            M=self.M,
            parity=self.parity,
            labels=tuple(self.labels[i] for i in local),
            energies=self.energies[local],
            J=self.J[local],
            cos=self.cos[local][:, local].tocsr(),
            cos2=self.cos2[local][:, local].tocsr(),
        )


def _build_mblock(rc, jmax, M, parities):
    basis = angular.build_mblock_basis(jmax, M)
    eig = angular.diagonalize_block(angular.asym_hamiltonian(basis, rc))
    cos = angular.build_costheta_operator(basis, eig).matrix
    cos2 = angular.build_cos2theta_operator(basis, eig).matrix
    parity = np.array([x.parity for x in eig])

    blocks = []
    for p in parities:
        idx = np.flatnonzero(parity == p)
        if idx.size == 0:
            continue
        blocks.append(Block(
            M=M,
            parity=p,
            labels=tuple((eig[i].J, eig[i].tau) for i in idx),
            energies=np.array([eig[i].energy for i in idx]),
            J=np.array([eig[i].J for i in idx]),
            cos=cos[idx][:, idx].tocsr(),
            cos2=cos2[idx][:, idx].tocsr(),
        ))
    return blocks


class BlockSet:
    """Operators of every (M, parity) sub-block up to ``jmax``.

    :param rc: Molecule
    :type rc: :class:`rotorwave.angular.RotorConstants`

    :param jmax: Highest J of every block
    :type jmax: int

    :param keys: (M, parity) pairs to build, in the order kept by
        :attr:`blocks`
    :type keys: list of tuple

    :param threads: Worker threads used to build blocks
    :type threads: int, optional

    """

    def __init__(self, rc, jmax, keys, threads=1):
        self.rotor = rc
        self.jmax = jmax

        wanted = {}
        for M, p in keys:
            wanted.setdefault(M, []).append(p)
        ms = sorted(wanted)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            built = list(pool.map(
                lambda M: _build_mblock(rc, jmax, M, sorted(wanted[M])), ms))

        self.blocks = [b for group in built for b in group]
        self._index = {(b.M, b.parity): i for i, b in enumerate(self.blocks)}
        self._local = [{x: i for i, x in enumerate(b.labels)}
                       for b in self.blocks]
        logger.debug('Built {} blocks up to J={} (largest {})'.format(
            len(self.blocks), jmax,
            max(b.size for b in self.blocks) if self.blocks else 0))

    def __len__(self):
        return len(self.blocks)

    def locate(self, J, M, tau, parity):
        """Block number and local index of |J M tau>."""
        b = self._index[(M, parity)]
        return b, self._local[b][(J, tau)]

    @classmethod
    def for_ensemble(cls, ensemble, jmax=None, threads=1):
        s = ensemble.states
        keys = sorted(set(zip(s.M.tolist(), s.parity.tolist())))
        return cls(ensemble.rotor, jmax or ensemble.jmax_used, keys,
                   threads=threads)

    def scatter(self, ensemble):
        """Map ensemble states to blocks.

        :return: per block, ``(state_index, local_index)`` integer arrays in
            ascending state order
        :rtype: list of tuple

        """
        s = ensemble.states
        state_idx = [[] for _ in self.blocks]
        local_idx = [[] for _ in self.blocks]
        for i, (J, M, tau, p) in enumerate(zip(
                s.J.tolist(), s.M.tolist(), s.tau.tolist(),
                s.parity.tolist())):
            b, loc = self.locate(J, M, tau, p)
            state_idx[b].append(i)
            local_idx[b].append(loc)
        return [(np.array(x, dtype=int), np.array(y, dtype=int))
                for x, y in zip(state_idx, local_idx)]


class StaticObservables:
    """Time-independent expectation values over the states of an
    ensemble.

    Operators are restricted to the populated states, which is exact for
    any vector supported on the ensemble.
    """

    def __init__(self, ensemble, threads=1):
        blockset = BlockSet.for_ensemble(ensemble, threads=threads)
        self.ensemble = ensemble
        self.parts = []
        for block, (states, local) in zip(
                blockset.blocks, blockset.scatter(ensemble)):
            if states.size:
                self.parts.append((states, block.restrict(local)))

    def expectations(self, amplitudes):
        """Orientation, alignment and energy of amplitude vectors.

        :param amplitudes: ``(n_states,)`` or ``(n_states, n_vectors)``
            complex amplitudes in ensemble state order
        :type amplitudes: numpy.ndarray

        :return: ``(orientation, alignment, energy)``, one value per vector
        :rtype: tuple of numpy.ndarray

        """
        a = np.asarray(amplitudes)
        if a.ndim == 1:
            a = a[:, None]
        cos = np.zeros(a.shape[1])
        cos2 = np.zeros(a.shape[1])
        for states, block in self.parts:
            psi = a[states]
            cos += np.real(np.sum(psi.conj() * (block.cos @ psi), axis=0))
            cos2 += np.real(np.sum(psi.conj() * (block.cos2 @ psi), axis=0))
        energy = np.abs(a) ** 2
        energy = self.ensemble.states.energy @ energy
        return cos, cos2, energy

    def thermal(self):
        """Exact thermal averages (orientation, alignment, energy)."""
        w = self.ensemble.states.weight
        cos = 0.0
        cos2 = 0.0
        for states, block in self.parts:
            cos += float(np.dot(w[states], block.cos.diagonal()))
            cos2 += float(np.dot(w[states], block.cos2.diagonal()))
        return cos, cos2, float(np.dot(w, self.ensemble.states.energy))
