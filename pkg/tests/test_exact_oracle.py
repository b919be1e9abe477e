# tests/test_exact_oracle.py
import time
import unittest

import numpy as np

from models.pauli_algebra import PauliSum, build_ising_hamiltonian
from solvers.exact_oracle import (
    Spectrum,
    degeneracy_groups,
    jacobi_eig,
    oracle_spectrum,
    sign_normalize_rows,
    to_dense_real,
)
from utils.error_handling import ConvergenceError, DimensionMismatchError, InvalidOperandError, NotRealRepresentableError

# closed forms at J = 0.6, h_T = 1
N3_GROUND = -1.6 - np.sqrt(3.04)
N3_LEVELS = sorted([N3_GROUND, -2.4, -0.4, -0.4, -1.6 + np.sqrt(3.04), 1.6, 1.6, 3.2])
N4_ODD = 1.2 + np.sqrt(5.44)
N4_PAIR_LOW = 2 * np.sqrt(1.36 - 1.2 * np.cos(np.pi / 4))
N4_PAIR_HIGH = 2 * np.sqrt(1.36 + 1.2 * np.cos(np.pi / 4))
N4_GROUND = -(N4_PAIR_LOW + N4_PAIR_HIGH)
N4_SECOND_EVEN = N4_GROUND + 2 * N4_PAIR_LOW
N4_LEVELS = sorted([
    N4_GROUND, -N4_ODD, -2.0, -2.0, N4_SECOND_EVEN, -(np.sqrt(5.44) - 1.2), 0.0, 0.0, 0.0, 0.0,
    np.sqrt(5.44) - 1.2, -N4_SECOND_EVEN, 2.0, 2.0, N4_ODD, -N4_GROUND,
])


class TestOracleSpectrum(unittest.TestCase):
    def test_three_sites(self):
        start = time.perf_counter()
        spec = oracle_spectrum(3, 0.6, 1.0)
        self.assertLess(time.perf_counter() - start, 1.0)
        np.testing.assert_allclose(spec.energies, N3_LEVELS, atol=1e-10)
        # the quoted one-decimal ground level -3.4 is 0.056 away from the closed form
        self.assertLess(abs(spec.energies[0] - (-3.4)), 0.06)
        self.assertTrue(np.any(np.abs(spec.energies + 2.4) < 0.05))

    def test_four_sites(self):
        start = time.perf_counter()
        spec = oracle_spectrum(4, 0.6, 1.0)
        self.assertLess(time.perf_counter() - start, 5.0)
        np.testing.assert_allclose(spec.energies, N4_LEVELS, atol=1e-10)
        multiplicities = {round(float(spec.energies[g[0]]), 3): len(g) for g in degeneracy_groups(spec.energies, 1e-6)}
        for level, count in {-4.403: 1, -2.0: 2, -1.132: 1, 0.0: 4, 2.0: 2}.items():
            with self.subTest(level=level):
                self.assertEqual(multiplicities.get(level), count)

    def test_eigenvectors(self):
        for n in (3, 4):
            with self.subTest(n=n):
                h = build_ising_hamiltonian(n, 0.6, 1.0)
                spec = oracle_spectrum(n, 0.6, 1.0)
                self.assertLess(spec.orthonormality_defect(), 1e-12)
                self.assertLess(np.max(spec.residuals(to_dense_real(h))), 1e-10)
                self.assertEqual(spec.n_qubits, n)

    def test_rows_are_sign_normalized(self):
        spec = oracle_spectrum(3, 0.6, 1.0)
        for row in spec.t:
            self.assertGreater(row[np.argmax(np.abs(row) > np.max(np.abs(row)) - 1e-9)], 0.0)


class TestJacobi(unittest.TestCase):
    def test_matches_numpy(self):
        rng = np.random.default_rng(5)
        for size in (2, 5, 9):
            with self.subTest(size=size):
                a = rng.normal(size=(size, size))
                m = a + a.T
                spec = jacobi_eig(m)
                np.testing.assert_allclose(spec.energies, np.linalg.eigvalsh(m), atol=1e-10)
                self.assertLess(np.max(spec.residuals(m)), 1e-9)

    def test_rejects_bad_input(self):
        with self.assertRaises(InvalidOperandError):
            jacobi_eig(np.array([[0.0, 1.0], [2.0, 0.0]]))
        with self.assertRaises(InvalidOperandError):
            jacobi_eig(np.ones((2, 3)))

    def test_sweep_limit(self):
        with self.assertRaises(ConvergenceError):
            jacobi_eig(np.array([[1.0, 0.5], [0.5, 2.0]]), max_sweeps=0)

    def test_diagonal_input(self):
        spec = jacobi_eig(np.diag([3.0, -1.0, 2.0]))
        np.testing.assert_allclose(spec.energies, [-1.0, 2.0, 3.0])
        np.testing.assert_allclose(np.abs(spec.t), np.eye(3)[[1, 2, 0]])


class TestHelpers(unittest.TestCase):
    def test_odd_y_terms_are_not_real(self):
        with self.assertRaises(NotRealRepresentableError):
            to_dense_real(PauliSum.from_pairs([(1.0, "XY")]))
        self.assertTrue(np.allclose(to_dense_real(PauliSum.from_pairs([(1.0, "YY")])),
                                    np.fliplr(np.diag([-1.0, 1.0, 1.0, -1.0]))))

    def test_sign_normalization_tie_goes_to_lowest_index(self):
        t = sign_normalize_rows(np.array([[-0.5, 0.5], [0.5, 0.5]]))
        np.testing.assert_allclose(t, [[0.5, -0.5], [0.5, 0.5]])

    def test_degeneracy_groups(self):
        self.assertEqual(degeneracy_groups([0.0, 1.0, 1.0 + 1e-12, 2.0]), [[0], [1, 2], [3]])

    def test_spectrum_shape_checks(self):
        with self.assertRaises(DimensionMismatchError):
            Spectrum(np.zeros(2), np.eye(3))
        with self.assertRaises(DimensionMismatchError):
            Spectrum(np.zeros(3), np.eye(3)).n_qubits


if __name__ == '__main__':
    unittest.main()
