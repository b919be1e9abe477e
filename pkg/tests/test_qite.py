# tests/test_qite.py
import unittest

import numpy as np

from models.noise_model import NoiseConfig
from models.pauli_algebra import build_ising_hamiltonian, y_parity
from models.state_engine import from_basis, from_superposition
from solvers.qite import (
    QiteConfig,
    QiteTrace,
    build_linear_system,
    measurement_budget,
    qite_step,
    reduced_pool,
    run_qite,
    solve_update,
)
from utils.error_handling import (
    DimensionMismatchError,
    InconsistentSystemError,
    InvalidParameterError,
    StepTooLargeError,
)

N3_GROUND = -1.6 - np.sqrt(3.04)
N4_TOP = 2 * np.sqrt(1.36 - 1.2 * np.cos(np.pi / 4)) + 2 * np.sqrt(1.36 + 1.2 * np.cos(np.pi / 4))


class TestPoolAndBudget(unittest.TestCase):
    def test_reduced_pool_sizes(self):
        self.assertEqual([str(p) for p in reduced_pool(2)], ["XY", "YX", "YZ", "ZY"])
        self.assertEqual(len(reduced_pool(3)), 13)
        self.assertEqual(len(reduced_pool(4)), 40)
        self.assertTrue(all(y_parity(p) == "odd" for p in reduced_pool(3)))

    def test_measurement_budget(self):
        budget = measurement_budget(3)
        self.assertEqual(budget.raw, 756)
        self.assertEqual(budget.reduced, 91)
        with_h = measurement_budget(3, build_ising_hamiltonian(3, 0.6, 1.0))
        self.assertGreater(with_h.distinct_strings, budget.distinct_strings)


class TestConfig(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(InvalidParameterError):
            QiteConfig(dtau=0.0)
        with self.assertRaises(InvalidParameterError):
            QiteConfig(steps=0)
        with self.assertRaises(InvalidParameterError):
            QiteConfig(c_expansion_order=3)
        with self.assertRaises(InvalidParameterError):
            QiteConfig(linear_system_mode="sampled")
        with self.assertRaises(InvalidParameterError):
            QiteConfig(mode="noisy")

    def test_replace_revalidates(self):
        cfg = QiteConfig().replace(steps=5)
        self.assertEqual(cfg.steps, 5)
        with self.assertRaises(InvalidParameterError):
            cfg.replace(dtau=-1.0)

    def test_linear_system_follows_measurement_mode(self):
        self.assertEqual(QiteConfig().linear_system_source, "exact")
        self.assertEqual(QiteConfig(linear_system_mode="measured").linear_system_source, "exact")
        for mode in ("shots", "shots+roem", "shots+roem+richardson"):
            with self.subTest(mode=mode):
                cfg = QiteConfig(mode=mode)
                self.assertEqual(cfg.linear_system_source, "measured")
                self.assertEqual(cfg.effective_svd_cutoff, 1e-2)
                hybrid = cfg.replace(linear_system_mode="exact")
                self.assertEqual(hybrid.linear_system_source, "exact")
                self.assertEqual(hybrid.effective_svd_cutoff, 1e-8)
        self.assertEqual(QiteConfig(mode="shots", svd_cutoff=1e-4).effective_svd_cutoff, 1e-4)


class TestSolveUpdate(unittest.TestCase):
    def test_zero_system(self):
        np.testing.assert_array_equal(solve_update(np.zeros((2, 2)), np.zeros(2)), np.zeros(2))
        with self.assertRaises(InconsistentSystemError):
            solve_update(np.zeros((2, 2)), np.array([1.0, 0.0]))

    def test_cutoff_drops_small_directions(self):
        a = solve_update(np.diag([2.0, 1e-12]), np.array([2.0, 1.0]), svd_cutoff=1e-8)
        np.testing.assert_allclose(a, [1.0, 0.0])

    def test_regular_system(self):
        m = np.array([[2.0, 0.5], [0.5, 2.0]])
        b = np.array([1.0, -1.0])
        np.testing.assert_allclose(solve_update(m, b), np.linalg.solve(m, b), atol=1e-12)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            solve_update(np.eye(3), np.ones(2))


class TestRunQite(unittest.TestCase):
    def setUp(self):
        self.h3 = build_ising_hamiltonian(3, 0.6, 1.0)

    def assert_converges(self, trace, target):
        self.assertAlmostEqual(trace.final_energy, target, delta=0.01,
                               msg=f"Final energy {trace.final_energy:.6f} should approach {target:.6f}")
        self.assertTrue(np.all(np.diff(trace.energies) < 1e-3), "Energy should not rise along the trace")

    def test_odd_sector_ground_state(self):
        trace = run_qite(from_basis(3, 1), self.h3, QiteConfig())
        self.assert_converges(trace, -2.4)

    def test_even_sector_ground_state(self):
        initial = from_superposition(3, [("+", "110"), ("+", "101"), ("+", "011")])
        trace = run_qite(initial, self.h3, QiteConfig())
        self.assert_converges(trace, N3_GROUND)

    def test_negated_hamiltonian_reaches_top_level(self):
        h4 = build_ising_hamiltonian(4, 0.6, 1.0)
        trace = run_qite(from_basis(4, 0), -h4, QiteConfig())
        self.assert_converges(trace, -N4_TOP)

    def test_trace_shape_and_realness(self):
        cfg = QiteConfig(steps=10)
        trace = run_qite(from_basis(3, 1), self.h3, cfg)
        self.assertEqual(len(trace), 11)
        self.assertEqual(len(trace.a_coeffs), 10)
        self.assertEqual(trace.c_sq_inv[0], 1.0)
        np.testing.assert_allclose(trace.taus, 0.1 * np.arange(11))
        for state in trace.states:
            self.assertLess(np.max(np.abs(state.amplitudes.imag)), 1e-10)
            self.assertAlmostEqual(state.norm, 1.0, places=10)

    def test_step_too_large(self):
        with self.assertRaises(StepTooLargeError):
            qite_step(from_basis(3, 7), self.h3, 1.0, QiteConfig(dtau=1.0))

    def test_size_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            run_qite(from_basis(4, 0), self.h3, QiteConfig())

    def test_second_order_normalization(self):
        trace = run_qite(from_basis(3, 1), self.h3, QiteConfig(c_expansion_order=2, steps=10))
        self.assertTrue(np.all(trace.c_sq_inv > 0))

    def test_sampled_updates_lower_the_energy(self):
        # sampled systems leak weight out of the parity sector, so only descent is guaranteed
        cfg = QiteConfig(mode="shots", noise=NoiseConfig(shots=8192, seed=6))
        trace = run_qite(from_basis(3, 1), self.h3, cfg, stream=(0,))
        self.assertAlmostEqual(trace.energies[0], -1.0, delta=0.1)
        late = float(np.mean(trace.energies[-5:]))
        self.assertLess(late, -2.0)
        self.assertGreater(late, N3_GROUND - 0.15)

    def test_noisy_run_is_reproducible(self):
        cfg = QiteConfig(steps=3, mode="shots+roem", noise=NoiseConfig.symmetric(0.02, seed=4))
        a = run_qite(from_basis(3, 1), self.h3, cfg, stream=(0,))
        b = run_qite(from_basis(3, 1), self.h3, cfg, stream=(0,))
        np.testing.assert_array_equal(a.energies, b.energies)


class TestLinearSystem(unittest.TestCase):
    def test_measured_system_matches_exact(self):
        h = build_ising_hamiltonian(3, 0.6, 1.0)
        state = from_superposition(3, [("+", "100"), ("-", "010"), ("+", "111")])
        pool = reduced_pool(3)
        m_exact, b_exact = build_linear_system(state, h, pool, 1.0, QiteConfig())
        measured_cfg = QiteConfig(mode="shots", linear_system_mode="measured",
                                  noise=NoiseConfig(shots=1_000_000, seed=8))
        m, b = build_linear_system(state, h, pool, 1.0, measured_cfg)
        np.testing.assert_allclose(np.diag(m_exact), 2.0, atol=1e-12)
        np.testing.assert_allclose(m, m_exact, atol=0.02)
        np.testing.assert_allclose(b, b_exact, atol=0.05)

    def test_noisy_mode_samples_the_linear_system_by_default(self):
        h = build_ising_hamiltonian(3, 0.6, 1.0)
        state = from_superposition(3, [("+", "100"), ("-", "010"), ("+", "111")])
        pool = reduced_pool(3)
        m_exact, b_exact = build_linear_system(state, h, pool, 1.0, QiteConfig())
        cfg = QiteConfig(mode="shots", noise=NoiseConfig(shots=4096, seed=3))
        m, b = build_linear_system(state, h, pool, 1.0, cfg, stream=(1,))
        self.assertGreater(np.max(np.abs(m - m_exact)) + np.max(np.abs(b - b_exact)), 0.0)
        m_again, b_again = build_linear_system(state, h, pool, 1.0, cfg, stream=(1,))
        np.testing.assert_array_equal(m, m_again)
        np.testing.assert_array_equal(b, b_again)
        m_other, _ = build_linear_system(state, h, pool, 1.0, cfg, stream=(2,))
        self.assertFalse(np.array_equal(m, m_other))
        m_hybrid, b_hybrid = build_linear_system(state, h, pool, 1.0, cfg.replace(linear_system_mode="exact"))
        np.testing.assert_array_equal(m_hybrid, m_exact)
        np.testing.assert_array_equal(b_hybrid, b_exact)

    def test_trace_length_mismatch(self):
        state = from_basis(3, 1)
        h = build_ising_hamiltonian(3, 0.6, 1.0)
        with self.assertRaises(DimensionMismatchError):
            QiteTrace([state, state], [0.0], [1.0, 1.0], [np.zeros(13)], 0.1, h)


if __name__ == '__main__':
    unittest.main()
