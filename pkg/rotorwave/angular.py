"""Symmetric-top basis, Wigner 3j symbols and asymmetric-top operators.

The symmetric-top kets |J K M> are quantized along the molecular a-axis, so
the field-free Hamiltonian couples K to K and K +/- 2 only and the a-axis
direction cosines conserve K.
"""

import math
import logging

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse
from sympy.physics.wigner import wigner_3j as sympy_wigner_3j

logger = logging.getLogger('ANGULAR')

SYMTOP = 'symtop'
EIGEN = 'eigen'

ORTHO_TOL = 1e-12
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class SymTopKet:
    J: int
    K: int
    M: int

    def __post_init__(self):
        if self.J < 0 or abs(self.K) > self.J or abs(self.M) > self.J:
            raise ValueError('Invalid ket |J={}, K={}, M={}>'.format(
                self.J, self.K, self.M))


@dataclass(frozen=True)
class RotorConstants:
    """Rotational constants (cm^-1) and a-axis dipole (Debye)."""

    A: float
    B: float
    C: float
    mu: float = 0.0

    def __post_init__(self):
        if not (self.A >= self.B >= self.C > 0):
            raise ValueError(
                'Expected A >= B >= C > 0, got A={}, B={}, C={}'.format(
                    self.A, self.B, self.C))
        if self.mu < 0:
            raise ValueError('Dipole must be non-negative, got {}'.format(
                self.mu))

    @classmethod
    def so2(cls):
        return cls(A=2.028, B=0.3442, C=0.2935, mu=1.62)


@dataclass(frozen=True)
class MBlockBasis:
    M: int
    jmax: int
    entries: tuple

    @property
    def size(self):
        return len(self.entries)

    @property
    def shells(self):
        return range(abs(self.M), self.jmax + 1)


@dataclass
class AsymEigenstate:
    """Asymmetric-top eigenstate |J M tau> = sum_K A_K |J K M>.

    ``coeffs[K + J]`` holds A_K for K = -J..J.
    """

    J: int
    M: int
    tau: int
    energy: float
    coeffs: np.ndarray = field(repr=False)

    @property
    def dominant_k(self):
        return _dominant_index(self.coeffs) - self.J

    @property
    def parity(self):
        return self.dominant_k % 2


@dataclass
class SparseOperator:
    """Real symmetric operator on one M-block.

    ``labels[i]`` names basis function ``i``: ``(J, K)`` pairs for the
    symmetric-top basis and ``(J, tau)`` pairs for the asymmetric
    eigenbasis.
    """

    M: int
    matrix: sparse.csr_matrix
    basis: str
    labels: tuple

    def entries(self):
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def toarray(self):
        return self.matrix.toarray()

    def is_hermitian(self, tol=HERMITIAN_TOL):
        diff = self.matrix - self.matrix.T
        return diff.nnz == 0 or abs(diff).max() <= tol


def _dominant_index(v, tol=1e-10):
    mags = np.abs(v)
    return int(np.flatnonzero(mags >= mags.max() - tol)[0])


@lru_cache(maxsize=None)
def _wigner3j(j1, j2, j3, m1, m2, m3):
    return float(sympy_wigner_3j(j1, j2, j3, m1, m2, m3))


def wigner3j(j1, j2, j3, m1, m2, m3):
    """Wigner 3j symbol for integer arguments.

    Evaluated exactly by :func:`sympy.physics.wigner.wigner_3j` and rounded
    once to float, so the value stays accurate well beyond J ~ 100. Returns
    exactly zero when the triangle rule or m1 + m2 + m3 = 0 fails.

    :raises ValueError: on negative j or |m| > j

    """
    js = [int(x) for x in (j1, j2, j3)]
    ms = [int(x) for x in (m1, m2, m3)]
    if any(j < 0 for j in js):
        raise ValueError('Negative angular momentum in 3j({}, {}, {})'.format(
            *js))
    if any(abs(m) > j for j, m in zip(js, ms)):
        raise ValueError('Projection out of range in 3j({}; {})'.format(
            js, ms))
    return _wigner3j(*js, *ms)


def build_mblock_basis(jmax, M):
    if jmax < abs(M):
        raise ValueError('Jmax={} is below |M|={}'.format(jmax, abs(M)))
    entries = tuple(
        (J, K) for J in range(abs(M), jmax + 1) for K in range(-J, J + 1))
    return MBlockBasis(M=M, jmax=jmax, entries=entries)


def shell_matrix(J, rc):
    """Dense field-free Hamiltonian of one J shell over K = -J..J."""
    ks = np.arange(-J, J + 1)
    jj = J * (J + 1)
    h = np.diag(0.5 * (rc.B + rc.C) * (jj - ks ** 2) + rc.A * ks ** 2)
    for i, K in enumerate(ks[:-2]):
        value = 0.25 * (rc.B - rc.C) * math.sqrt(
            (jj - K * (K + 1)) * (jj - (K + 1) * (K + 2)))
        h[i, i + 2] = value
        h[i + 2, i] = value
    return h


def asym_hamiltonian(basis, rc):
    """Field-free asymmetric-top Hamiltonian of an M-block (cm^-1).

    Block diagonal in J; within a shell the diagonal is
    ((B+C)/2)[J(J+1) - K^2] + A K^2 and K couples to K +/- 2 with
    ((B-C)/4) sqrt([J(J+1) - K(K+1)][J(J+1) - (K+1)(K+2)]).

    """
    matrix = sparse.block_diag(
        [shell_matrix(J, rc) for J in basis.shells], format='csr')
    matrix.eliminate_zeros()
    return SparseOperator(
        M=basis.M, matrix=matrix, basis=SYMTOP, labels=basis.entries)


def _solve_shell(h, J):
    """Eigenpairs of one J shell, sorted and phase fixed.

    K-parity sub-blocks are solved separately so that every eigenvector is
    of pure parity. Exactly diagonal sub-blocks keep unit eigenvectors,
    which makes degenerate +/-K pairs of the symmetric-top limit well
    defined.
    """
    n = 2 * J + 1
    ks = np.arange(-J, J + 1)
    energies = []
    vectors = []
    for parity in (0, 1):
        idx = np.flatnonzero(ks % 2 == parity)
        if idx.size == 0:
            continue
        sub = h[np.ix_(idx, idx)]
        if not np.any(sub - np.diag(np.diag(sub))):
            vals, vecs = np.diag(sub).copy(), np.eye(idx.size)
        else:
            vals, vecs = np.linalg.eigh(sub)
        for i in range(idx.size):
            v = np.zeros(n)
            v[idx] = vecs[:, i]
            energies.append(float(vals[i]))
            vectors.append(v)

    kdom = [_dominant_index(v) - J for v in vectors]
    order = sorted(range(n), key=lambda i: (round(energies[i], 9), kdom[i]))

    result = []
    for i in order:
        v = vectors[i]
        if v[_dominant_index(v)] < 0:
            v = -v
        result.append((energies[i], v))
    return result


@lru_cache(maxsize=None)
def shell_levels(rc, J):
    """Energies (ascending tau) and coefficient matrix of one J shell.

    :return: ``(energies, coeffs, parities)``; ``coeffs[:, tau - 1]`` is the
        A_K vector of level tau
    :rtype: tuple of numpy.ndarray

    """
    solved = _solve_shell(shell_matrix(J, rc), J)
    energies = np.array([e for e, _ in solved])
    coeffs = np.column_stack([v for _, v in solved])
    parities = np.array([(_dominant_index(v) - J) % 2 for _, v in solved])
    for x in (energies, coeffs, parities):
        x.setflags(write=False)
    return energies, coeffs, parities


def diagonalize_block(H):
    """Asymmetric-top eigenstates of an M-block Hamiltonian.

    :param H: Field-free Hamiltonian in the symmetric-top basis
    :type H: :class:`SparseOperator`

    :return: Eigenstates grouped by ascending J, then tau = 1..2J+1 by
        ascending energy
    :rtype: list of :class:`AsymEigenstate`

    """
    if H.basis != SYMTOP:
        raise ValueError('Expected a symmetric-top operator, got "{}"'.format(
            H.basis))
    if not H.is_hermitian():
        raise ValueError('Hamiltonian of block M={} is not Hermitian'.format(
            H.M))

    dense = H.toarray()
    states = []
    start = 0
    while start < len(H.labels):
        J = H.labels[start][0]
        stop = start + 2 * J + 1
        for tau, (energy, v) in enumerate(
                _solve_shell(dense[start:stop, start:stop], J), start=1):
            states.append(AsymEigenstate(
                J=J, M=H.M, tau=tau, energy=energy, coeffs=v))
        start = stop
    return states


def direction_cosine_element(bra, l, m, k, ket):
    """Matrix element <J'K'M'| D^l_{mk} |J K M> of a Wigner rotation
    function between symmetric-top kets.

    :param bra: Left ket |J'K'M'>
    :type bra: :class:`SymTopKet`

    :param l: Rank, 1 (orientation) or 2 (alignment)
    :type l: int

    """
    if l not in (1, 2):
        raise ValueError('Unsupported rank l={}'.format(l))
    if abs(m) > l or abs(k) > l:
        raise ValueError('Projection out of range: m={}, k={}, l={}'.format(
            m, k, l))

    if bra.M != ket.M + m or bra.K != ket.K + k:
        return 0.0
    if abs(bra.J - ket.J) > l:
        return 0.0

    value = wigner3j(ket.J, l, bra.J, ket.M, m, -bra.M)
    if value == 0.0:
        return 0.0
    value *= wigner3j(ket.J, l, bra.J, ket.K, k, -bra.K)
    phase = -1 if (bra.M - bra.K) % 2 else 1
    return phase * math.sqrt((2 * ket.J + 1) * (2 * bra.J + 1)) * value


def _direction_cosine_matrix(basis, l):
    index = {x: i for i, x in enumerate(basis.entries)}
    rows, cols, vals = [], [], []
    for i, (J, K) in enumerate(basis.entries):
        ket = SymTopKet(J, K, basis.M)
        for Jp in range(max(abs(basis.M), abs(K), J - l),
                        min(basis.jmax, J + l) + 1):
            value = direction_cosine_element(
                SymTopKet(Jp, K, basis.M), l, 0, 0, ket)
            if value != 0.0:
                rows.append(index[(Jp, K)])
                cols.append(i)
                vals.append(value)
    return sparse.csr_matrix(
        (vals, (rows, cols)), shape=(basis.size, basis.size))


def _eigen_transform(basis, eig):
    if any(x.M != basis.M for x in eig):
        raise ValueError('Eigenstates do not belong to block M={}'.format(
            basis.M))
    labels = [(x.J, x.tau) for x in eig]
    expected = [(J, t) for J in basis.shells for t in range(1, 2 * J + 2)]
    if labels != expected:
        raise ValueError(
            'Eigenstates do not span the J={}..{} shells of block M={}'.format(
                abs(basis.M), basis.jmax, basis.M))

    blocks = []
    start = 0
    for J in basis.shells:
        n = 2 * J + 1
        blocks.append(
            np.column_stack([x.coeffs for x in eig[start:start + n]]))
        start += n
    return sparse.block_diag(blocks, format='csr'), tuple(labels)


def _to_eigenbasis(basis, eig, matrix):
    U, labels = _eigen_transform(basis, eig)
    result = (U.T @ matrix @ U).tocsr()
    result.data[np.abs(result.data) < 1e-15] = 0.0
    result.eliminate_zeros()
    result = 0.5 * (result + result.T)
    return SparseOperator(M=basis.M, matrix=result.tocsr(), basis=EIGEN,
                          labels=labels)


def build_costheta_operator(basis, eig):
    """cos(theta) = D^1_00 in the asymmetric eigenbasis of an M-block."""
    return _to_eigenbasis(basis, eig, _direction_cosine_matrix(basis, 1))


def build_cos2theta_operator(basis, eig):
    """cos^2(theta) = 1/3 + (2/3) D^2_00 in the asymmetric eigenbasis."""
    matrix = (sparse.identity(basis.size, format='csr') / 3.0 +
              (2.0 / 3.0) * _direction_cosine_matrix(basis, 2))
    return _to_eigenbasis(basis, eig, matrix)
