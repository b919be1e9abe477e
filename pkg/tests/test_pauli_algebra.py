# tests/test_pauli_algebra.py
import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

from models.pauli_algebra import (
    PauliString,
    PauliSum,
    PauliTerm,
    build_ising_hamiltonian,
    multiply,
    operator_pool,
    product_sum,
    y_parity,
)
from utils.error_handling import InvalidOperandError, InvalidParameterError

three_site_strings = st.text(alphabet="IXYZ", min_size=3, max_size=3).map(PauliString)


class TestPauliString(unittest.TestCase):
    def test_single_site_products(self):
        self.assertEqual(multiply(PauliString("X"), PauliString("Y")), (1j, PauliString("Z")))
        self.assertEqual(multiply(PauliString("Y"), PauliString("X")), (-1j, PauliString("Z")))
        self.assertEqual(multiply(PauliString("Z"), PauliString("Z")), (1, PauliString("I")))

    def test_multi_site_product(self):
        phase, product = multiply(PauliString("XZ"), PauliString("ZX"))
        # (XZ)(ZX) = (-iY)(iY)
        self.assertEqual(product, PauliString("YY"))
        self.assertEqual(phase, 1)
        phase, product = multiply(PauliString("XYZ"), PauliString("XYZ"))
        self.assertEqual((phase, product), (1, PauliString("III")))

    def test_masks_and_support(self):
        p = PauliString("XIYZ")
        self.assertEqual(p.support, (0, 2, 3))
        self.assertEqual(p.x_mask, 0b0101)
        self.assertEqual(p.z_mask, 0b1100)
        self.assertEqual(p.y_count, 1)

    def test_y_parity(self):
        self.assertEqual(y_parity(PauliString("XYZ")), "odd")
        self.assertEqual(y_parity(PauliString("YYI")), "even")
        self.assertEqual(y_parity(PauliString("III")), "even")

    def test_invalid_strings(self):
        with self.assertRaises(InvalidOperandError):
            PauliString("XQ")
        with self.assertRaises(InvalidOperandError):
            PauliString("")
        with self.assertRaises(InvalidOperandError):
            multiply(PauliString("XX"), PauliString("XXX"))

    @settings(max_examples=60, deadline=None)
    @given(three_site_strings, three_site_strings, three_site_strings)
    def test_multiplication_is_associative(self, a, b, c):
        phase_ab, ab = multiply(a, b)
        phase_left, left = multiply(ab, c)
        phase_bc, bc = multiply(b, c)
        phase_right, right = multiply(a, bc)
        self.assertEqual(left, right)
        self.assertEqual(phase_ab * phase_left, phase_bc * phase_right)

    @settings(max_examples=60, deadline=None)
    @given(three_site_strings)
    def test_every_string_is_an_involution(self, p):
        self.assertEqual(multiply(p, p), (1, PauliString.identity(3)))

    @settings(max_examples=60, deadline=None)
    @given(three_site_strings, three_site_strings)
    def test_strings_commute_or_anticommute(self, a, b):
        phase_ab, ab = multiply(a, b)
        phase_ba, ba = multiply(b, a)
        self.assertEqual(ab, ba)
        self.assertIn(phase_ab / phase_ba, (1, -1))


class TestPauliSum(unittest.TestCase):
    def test_duplicates_merge_and_zeros_drop(self):
        s = PauliSum.from_pairs([(1.0, "XI"), (2.0, "ZZ"), (-1.0, "XI"), (0.5, "ZZ")])
        self.assertEqual(s.as_dict(), {"ZZ": 2.5})
        self.assertEqual(len(PauliSum.zero(2)), 0)

    def test_mixed_lengths_rejected(self):
        with self.assertRaises(InvalidOperandError):
            PauliSum.from_pairs([(1.0, "XI"), (1.0, "XII")])

    def test_complex_coefficient_rejected(self):
        with self.assertRaises(InvalidOperandError):
            PauliTerm(1j, PauliString("XI"))
        with self.assertRaises(InvalidOperandError):
            PauliTerm(float("inf"), PauliString("XI"))

    def test_arithmetic(self):
        a = PauliSum.from_pairs([(1.0, "XX"), (2.0, "ZI")])
        b = PauliSum.from_pairs([(1.0, "XX")])
        self.assertEqual((a - b).as_dict(), {"ZI": 2.0})
        self.assertEqual((-a).coefficient("ZI"), -2.0)
        self.assertEqual(a.scaled(0.5).coefficient("XX"), 0.5)


class TestIsingHamiltonian(unittest.TestCase):
    def test_three_sites(self):
        h = build_ising_hamiltonian(3, 0.6, 1.0)
        self.assertEqual([str(t.string) for t in h.terms], ["XXI", "IXX", "XIX", "ZII", "IZI", "IIZ"])
        self.assertAlmostEqual(h.coefficient("XIX"), -0.6)
        self.assertAlmostEqual(h.coefficient("IIZ"), -1.0)

    def test_two_sites_merges_the_double_bond(self):
        h = build_ising_hamiltonian(2, 0.6, 1.0)
        self.assertEqual(len(h), 3)
        self.assertAlmostEqual(h.coefficient("XX"), -1.2)

    def test_invalid_sizes(self):
        with self.assertRaises(InvalidParameterError):
            build_ising_hamiltonian(1, 0.6, 1.0)
        with self.assertRaises(InvalidParameterError):
            build_ising_hamiltonian(11, 0.6, 1.0)
        with self.assertRaises(InvalidParameterError):
            build_ising_hamiltonian(3, float("nan"), 1.0)

    def test_operator_pool_order(self):
        pool = operator_pool(2)
        self.assertEqual(len(pool), 9)
        self.assertEqual(str(pool[0]), "XX")
        self.assertEqual(str(pool[1]), "XY")
        self.assertEqual(str(pool[-1]), "ZZ")
        self.assertEqual(len(operator_pool(3)), 27)

    def test_square_of_hamiltonian_keeps_only_commuting_products(self):
        h = build_ising_hamiltonian(3, 0.6, 1.0)
        h2 = product_sum(h, h)
        # identity coefficient is the sum of squared coefficients
        self.assertAlmostEqual(h2.coefficient("III"), 3 * 0.36 + 3 * 1.0)
        self.assertTrue(all(y_parity(t.string) == "even" for t in h2.terms))


if __name__ == '__main__':
    unittest.main()
