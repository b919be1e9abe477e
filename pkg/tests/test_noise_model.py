# tests/test_noise_model.py
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from models.noise_model import (
    CountsTable,
    MeasurementMode,
    NoiseConfig,
    PauliEstimator,
    measured_expectation,
    mitigate_distribution,
    mitigated_expectation,
    noisy_distribution,
    raw_expectation,
    readout_channel,
    richardson_extrapolate,
    sample_pauli,
)
from models.pauli_algebra import PauliString, build_ising_hamiltonian
from models.state_engine import expectation, from_basis, from_superposition
from utils.error_handling import InvalidParameterError, SingularMitigationError

flip_probability = st.floats(min_value=0.0, max_value=0.45, allow_nan=False)


class TestModesAndConfig(unittest.TestCase):
    def test_mode_parsing(self):
        self.assertIs(MeasurementMode.parse("SHOTS+ROEM"), MeasurementMode.SHOTS_ROEM)
        self.assertTrue(MeasurementMode.SHOTS_ROEM_RICHARDSON.uses_richardson)
        self.assertFalse(MeasurementMode.SHOTS.uses_roem)
        self.assertFalse(MeasurementMode.EXACT.uses_shots)
        with self.assertRaises(InvalidParameterError):
            MeasurementMode.parse("noisy")

    def test_noise_config_validation(self):
        with self.assertRaises(InvalidParameterError):
            NoiseConfig(shots=0)
        with self.assertRaises(InvalidParameterError):
            NoiseConfig.symmetric(0.6)
        with self.assertRaises(InvalidParameterError):
            NoiseConfig(depol=0.5)
        with self.assertRaises(InvalidParameterError):
            NoiseConfig(p01=(0.01, 0.02)).flip_probabilities(3)

    def test_flip_probabilities_broadcast(self):
        p01, p10 = NoiseConfig(p01=(0.03,), p10=(0.01, 0.02, 0.04)).flip_probabilities(3)
        np.testing.assert_allclose(p01, [0.03, 0.03, 0.03])
        np.testing.assert_allclose(p10, [0.01, 0.02, 0.04])


class TestSampling(unittest.TestCase):
    def setUp(self):
        self.state = from_superposition(3, [("+", "110"), ("+", "101"), ("+", "011")])
        self.cfg = NoiseConfig(shots=4096, seed=17)

    def test_counts_sum_to_shots(self):
        counts = sample_pauli(self.state, PauliString("ZZZ"), self.cfg)
        self.assertEqual(counts.shots, 4096)
        self.assertEqual(set(counts.as_dict()), {"110", "101", "011"})

    def test_same_stream_is_reproducible(self):
        a = sample_pauli(self.state, PauliString("ZZZ"), self.cfg, stream=(0, 3))
        b = sample_pauli(self.state, PauliString("ZZZ"), self.cfg, stream=(0, 3))
        c = sample_pauli(self.state, PauliString("ZZZ"), self.cfg, stream=(0, 4))
        np.testing.assert_array_equal(a.counts, b.counts)
        self.assertFalse(np.array_equal(a.counts, c.counts))

    def test_deterministic_outcome(self):
        counts = sample_pauli(from_basis(3, 1), PauliString("ZII"), NoiseConfig(shots=100))
        self.assertEqual(raw_expectation(counts, (0,)), -1.0)

    def test_x_basis_rotation(self):
        plus = from_superposition(1, [("+", "0"), ("+", "1")])
        distribution = noisy_distribution(plus, PauliString("X"), NoiseConfig())
        np.testing.assert_allclose(distribution, [1.0, 0.0], atol=1e-12)

    def test_y_basis_rotation(self):
        state = from_basis(1, 0)
        distribution = noisy_distribution(state, PauliString("Y"), NoiseConfig())
        np.testing.assert_allclose(distribution, [0.5, 0.5], atol=1e-12)

    def test_scale_range(self):
        with self.assertRaises(InvalidParameterError):
            sample_pauli(self.state, PauliString("ZZZ"), self.cfg, scale=4)

    def test_depolarization_flattens_distribution(self):
        cfg = NoiseConfig(depol=0.1, layers=200)
        distribution = noisy_distribution(from_basis(2, 0), PauliString("ZZ"), cfg)
        np.testing.assert_allclose(distribution, 0.25, atol=1e-6)


class TestMitigation(unittest.TestCase):
    @settings(max_examples=40, deadline=None)
    @given(flip_probability, flip_probability, flip_probability, flip_probability)
    def test_roem_inverts_the_readout_channel(self, a, b, c, d):
        rng = np.random.default_rng(1)
        probabilities = rng.dirichlet(np.ones(4))
        p01, p10 = np.array([a, b]), np.array([c, d])
        recorded = readout_channel(probabilities, 2, p01, p10)
        signs = np.array([1.0, -1.0, -1.0, 1.0])
        exact = float(np.dot(probabilities, signs))
        self.assertAlmostEqual(mitigate_distribution(recorded, (0, 1), 2, p01, p10), exact, places=10)

    def test_singular_channel(self):
        with self.assertRaises(SingularMitigationError):
            mitigate_distribution(np.array([0.5, 0.5]), (0,), 1, np.array([0.5]), np.array([0.5]))

    def test_roem_removes_readout_bias(self):
        cfg = NoiseConfig.symmetric(0.05, shots=200000, seed=3)
        counts = sample_pauli(from_basis(2, 0), PauliString("ZZ"), cfg)
        self.assertLess(raw_expectation(counts, (0, 1)), 0.85)
        self.assertAlmostEqual(mitigated_expectation(counts, (0, 1), cfg), 1.0, delta=0.02)

    def test_counts_table_validation(self):
        with self.assertRaises(InvalidParameterError):
            CountsTable(np.array([1, 2, 3]), 1)
        with self.assertRaises(InvalidParameterError):
            CountsTable(np.array([-1, 2]), 1)


class TestRichardson(unittest.TestCase):
    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=-5, max_value=5), st.floats(min_value=-5, max_value=5))
    def test_exact_on_linear_models(self, intercept, slope):
        self.assertAlmostEqual(richardson_extrapolate([(1, intercept + slope), (2, intercept + 2 * slope)]),
                               intercept, places=9)
        three = [(s, intercept + slope * s) for s in (1, 2, 3)]
        self.assertAlmostEqual(richardson_extrapolate(three), intercept, places=9)

    def test_invalid_inputs(self):
        with self.assertRaises(InvalidParameterError):
            richardson_extrapolate([(1, 0.5)])
        with self.assertRaises(InvalidParameterError):
            richardson_extrapolate([(1, 0.5), (1, 0.4)])


class TestMeasuredExpectation(unittest.TestCase):
    def setUp(self):
        self.h = build_ising_hamiltonian(3, 0.6, 1.0)
        self.state = from_superposition(3, [("+", "001"), ("-", "010")])

    def test_exact_mode_is_statevector_value(self):
        self.assertEqual(measured_expectation(self.state, self.h, NoiseConfig()), expectation(self.state, self.h))

    def test_shot_estimate_is_close(self):
        cfg = NoiseConfig.symmetric(0.03, seed=5)
        value = measured_expectation(self.state, self.h, cfg, "shots+roem", stream=(1,))
        self.assertAlmostEqual(value, -0.4, delta=0.1)

    def test_richardson_mode_with_depolarization(self):
        cfg = NoiseConfig.symmetric(0.02, depol=0.01, layers=5, shots=200000, seed=9)
        raw = measured_expectation(self.state, self.h, cfg, "shots+roem")
        extrapolated = measured_expectation(self.state, self.h, cfg, "shots+roem+richardson")
        self.assertLess(abs(extrapolated + 0.4), abs(raw + 0.4) + 0.02)

    def test_estimator_caches_strings(self):
        estimator = PauliEstimator(self.state, NoiseConfig(seed=2), MeasurementMode.SHOTS)
        first = estimator.estimate(PauliString("ZII"))
        self.assertEqual(estimator.estimate(PauliString("ZII")), first)
        self.assertEqual(estimator.measured_strings, 1)
        self.assertEqual(estimator.estimate(PauliString("III")), 1.0)


if __name__ == '__main__':
    unittest.main()
