#!/usr/bin/env python

"""Tests for `rotorwave.angular`."""

import math
import unittest

import numpy as np

from rotorwave import angular
from rotorwave.angular import RotorConstants, SymTopKet


def small_d(J, M, K, x):
    """Wigner d^J_{MK} at cos(beta) = x."""
    c = np.sqrt((1 + x) / 2)
    s = np.sqrt((1 - x) / 2)
    f = math.factorial
    total = np.zeros_like(x)
    for t in range(max(0, K - M), min(J + K, J - M) + 1):
        total += ((-1) ** (M - K + t) * c ** (2 * J + K - M - 2 * t) *
                  s ** (M - K + 2 * t) /
                  (f(J + K - t) * f(t) * f(M - K + t) * f(J - M - t)))
    return math.sqrt(f(J + M) * f(J - M) * f(J + K) * f(J - K)) * total


def legendre(l, x):
    return x if l == 1 else 0.5 * (3 * x ** 2 - 1)


class TestWigner3j(unittest.TestCase):

    def test_000_known_values(self):
        self.assertAlmostEqual(angular.wigner3j(1, 1, 0, 0, 0, 0),
                               -1 / math.sqrt(3), places=14)
        self.assertAlmostEqual(angular.wigner3j(1, 1, 2, 0, 0, 0),
                               math.sqrt(2 / 15), places=14)
        self.assertAlmostEqual(angular.wigner3j(2, 1, 1, 1, -1, 0),
                               -math.sqrt(1 / 10), places=14)

    def test_001_selection_rules(self):
        self.assertEqual(angular.wigner3j(1, 1, 3, 0, 0, 0), 0.0)
        self.assertEqual(angular.wigner3j(2, 1, 2, 1, 0, 0), 0.0)
        self.assertEqual(angular.wigner3j(1, 1, 1, 0, 0, 0), 0.0)

    def test_002_invalid(self):
        with self.assertRaises(ValueError):
            angular.wigner3j(-1, 1, 1, 0, 0, 0)
        with self.assertRaises(ValueError):
            angular.wigner3j(1, 1, 1, 2, -2, 0)

    def test_003_orthogonality(self):
        """Sum over m1, m2 of the squared symbol is 1/(2 j3 + 1)."""
        j1, j2, j3, m3 = 30, 1, 29, 0
        total = sum(angular.wigner3j(j1, j2, j3, m1, -m1 - m3, m3) ** 2
                    for m1 in range(-j1, j1 + 1) if abs(m1 + m3) <= j2)
        self.assertAlmostEqual(total, 1 / (2 * j3 + 1), places=13)

    def test_004_symmetries(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            j1, j2 = (int(x) for x in rng.integers(0, 21, 2))
            j3 = int(rng.integers(abs(j1 - j2), min(j1 + j2, 20) + 1))
            m1 = int(rng.integers(-j1, j1 + 1))
            m2 = int(rng.choice([m for m in range(-j2, j2 + 1)
                                 if abs(m1 + m) <= j3]))
            m3 = -m1 - m2
            value = angular.wigner3j(j1, j2, j3, m1, m2, m3)
            sign = (-1) ** (j1 + j2 + j3)
            args = (j1, j2, j3, m1, m2, m3)

            self.assertAlmostEqual(
                angular.wigner3j(j2, j3, j1, m2, m3, m1), value, places=12,
                msg=str(args))
            self.assertAlmostEqual(
                angular.wigner3j(j3, j1, j2, m3, m1, m2), value, places=12,
                msg=str(args))
            self.assertAlmostEqual(
                angular.wigner3j(j2, j1, j3, m2, m1, m3), sign * value,
                places=12, msg=str(args))
            self.assertAlmostEqual(
                angular.wigner3j(j1, j2, j3, -m1, -m2, -m3), sign * value,
                places=12, msg=str(args))


class TestSpectrum(unittest.TestCase):

    def setUp(self):
        self.so2 = RotorConstants.so2()

    def test_000_so2_j1(self):
        energies = angular.shell_levels(self.so2, 1)[0]
        for e, ref in zip(energies, [0.6377, 2.3215, 2.3722]):
            self.assertLess(abs(e - ref) / ref, 1e-10)

    def test_001_symmetric_limit(self):
        rc = RotorConstants(A=2.0, B=0.5, C=0.5)
        for J in range(21):
            ks = np.arange(-J, J + 1)
            ref = np.sort(0.5 * J * (J + 1) + 1.5 * ks ** 2)
            energies = angular.shell_levels(rc, J)[0]
            np.testing.assert_allclose(energies, ref, rtol=1e-12, atol=1e-12)

    def test_002_block_eigenstates(self):
        basis = angular.build_mblock_basis(6, -2)
        H = angular.asym_hamiltonian(basis, self.so2)
        self.assertTrue(H.is_hermitian())
        eig = angular.diagonalize_block(H)
        self.assertEqual(len(eig), basis.size)

        for x in eig:
            self.assertAlmostEqual(np.dot(x.coeffs, x.coeffs), 1.0,
                                   places=12)
            ks = np.arange(-x.J, x.J + 1)
            mixed = x.coeffs[ks % 2 != x.parity]
            self.assertTrue(np.all(mixed == 0))
            self.assertGreater(x.coeffs[x.dominant_k + x.J], 0)

        for J in basis.shells:
            energies = [x.energy for x in eig if x.J == J]
            self.assertEqual([x.tau for x in eig if x.J == J],
                             list(range(1, 2 * J + 2)))
            self.assertTrue(np.all(np.diff(energies) >= -1e-9))
            np.testing.assert_allclose(
                energies, angular.shell_levels(self.so2, J)[0], atol=1e-12)

    def test_003_rejects_eigenbasis_operator(self):
        basis = angular.build_mblock_basis(2, 0)
        eig = angular.diagonalize_block(
            angular.asym_hamiltonian(basis, self.so2))
        op = angular.build_costheta_operator(basis, eig)
        with self.assertRaises(ValueError):
            angular.diagonalize_block(op)

    def test_004_invalid_constants(self):
        with self.assertRaises(ValueError):
            RotorConstants(A=0.2, B=0.3, C=0.1)
        with self.assertRaises(ValueError):
            SymTopKet(1, 2, 0)

    def test_005_m_degeneracy(self):
        jmax = 5
        levels = {}
        for M in range(-jmax, jmax + 1):
            basis = angular.build_mblock_basis(jmax, M)
            for x in angular.diagonalize_block(
                    angular.asym_hamiltonian(basis, self.so2)):
                levels.setdefault((x.J, x.tau), []).append(x.energy)

        for (J, tau), energies in levels.items():
            self.assertEqual(len(energies), 2 * J + 1)
            self.assertLess(max(energies) - min(energies), 1e-12,
                            msg=str((J, tau)))


class TestDirectionCosines(unittest.TestCase):

    def setUp(self):
        self.x, self.w = np.polynomial.legendre.leggauss(64)

    def quadrature(self, Jp, J, K, M, l):
        integrand = (small_d(Jp, M, K, self.x) * legendre(l, self.x) *
                     small_d(J, M, K, self.x))
        return 0.5 * math.sqrt((2 * J + 1) * (2 * Jp + 1)) * np.dot(
            self.w, integrand)

    def test_000_euler_angle_quadrature(self):
        for l in (1, 2):
            for J in range(5):
                for Jp in range(5):
                    for K in range(-min(J, Jp), min(J, Jp) + 1):
                        for M in range(-min(J, Jp), min(J, Jp) + 1):
                            value = angular.direction_cosine_element(
                                SymTopKet(Jp, K, M), l, 0, 0,
                                SymTopKet(J, K, M))
                            self.assertAlmostEqual(
                                value, self.quadrature(Jp, J, K, M, l),
                                delta=1e-8,
                                msg='l={} J={} Jp={} K={} M={}'.format(
                                    l, J, Jp, K, M))

    def test_001_selection(self):
        self.assertEqual(angular.direction_cosine_element(
            SymTopKet(3, 1, 0), 1, 0, 0, SymTopKet(1, 1, 0)), 0.0)
        self.assertEqual(angular.direction_cosine_element(
            SymTopKet(2, 1, 1), 1, 0, 0, SymTopKet(1, 1, 0)), 0.0)
        with self.assertRaises(ValueError):
            angular.direction_cosine_element(
                SymTopKet(1, 0, 0), 3, 0, 0, SymTopKet(1, 0, 0))

    def test_002_eigenbasis_operators(self):
        basis = angular.build_mblock_basis(8, 1)
        eig = angular.diagonalize_block(
            angular.asym_hamiltonian(basis, RotorConstants.so2()))
        cos = angular.build_costheta_operator(basis, eig)
        cos2 = angular.build_cos2theta_operator(basis, eig)
        for op in (cos, cos2):
            self.assertEqual(op.basis, angular.EIGEN)
            self.assertTrue(op.is_hermitian())

        parity = np.array([x.parity for x in eig])
        for op in (cos, cos2):
            for i, j, _ in op.entries():
                self.assertEqual(parity[i], parity[j])

        vals = np.linalg.eigvalsh(cos.toarray())
        self.assertLessEqual(np.max(np.abs(vals)), 1 + 1e-12)
        vals = np.linalg.eigvalsh(cos2.toarray())
        self.assertGreaterEqual(vals.min(), -1e-12)
        self.assertLessEqual(vals.max(), 1 + 1e-12)


if __name__ == '__main__':
    unittest.main()
