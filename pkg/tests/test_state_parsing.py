# tests/test_state_parsing.py
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from models.state_engine import bitstring_to_index
from utils.error_handling import InvalidParameterError, StateSpecError
from utils.state_parsing import parse_state_spec

bitstrings = st.lists(st.text(alphabet="01", min_size=3, max_size=3), min_size=1, max_size=8, unique=True)


class TestParseStateSpec(unittest.TestCase):
    def test_single_bitstring(self):
        state = parse_state_spec("100")
        self.assertEqual(state.n_qubits, 3)
        self.assertEqual(state.amplitudes[bitstring_to_index("100")], 1.0)

    def test_signed_superposition(self):
        state = parse_state_spec("+001, -010", n_sites=3)
        self.assertAlmostEqual(state.amplitudes[bitstring_to_index("001")].real, 1 / np.sqrt(2))
        self.assertAlmostEqual(state.amplitudes[bitstring_to_index("010")].real, -1 / np.sqrt(2))

    def test_unicode_minus(self):
        state = parse_state_spec("+001,−010")
        self.assertLess(state.amplitudes[bitstring_to_index("010")].real, 0.0)

    def test_library_names(self):
        state = parse_state_spec("lib:w3-twoparticle", n_sites=3)
        self.assertAlmostEqual(state.amplitudes[bitstring_to_index("110")].real, 1 / np.sqrt(3))
        self.assertEqual(parse_state_spec("lib:even-seven").n_qubits, 4)

    def test_mixed_lengths_report_offset(self):
        with self.assertRaises(StateSpecError) as ctx:
            parse_state_spec("+10,-100")
        self.assertEqual(ctx.exception.offset, 4)

    def test_grammar_errors(self):
        cases = {
            "": 0,
            "+100,+100": 5,
            "10x": 2,
            "100,": 4,
            "lib:": 4,
        }
        for text, offset in cases.items():
            with self.subTest(text=text):
                with self.assertRaises(StateSpecError) as ctx:
                    parse_state_spec(text)
                self.assertEqual(ctx.exception.offset, offset)

    def test_unknown_library_state(self):
        with self.assertRaises(StateSpecError):
            parse_state_spec("lib:no-such-state")
        with self.assertRaises(StateSpecError):
            parse_state_spec("lib:w3-twoparticle", n_sites=4)

    def test_site_count_mismatch(self):
        with self.assertRaises(InvalidParameterError):
            parse_state_spec("1000", n_sites=3)

    @settings(max_examples=50, deadline=None)
    @given(bitstrings, st.lists(st.booleans(), min_size=8, max_size=8))
    def test_any_valid_spec_is_a_normalized_signed_superposition(self, terms, negative):
        text = ",".join(("-" if neg else "+") + bits for bits, neg in zip(terms, negative))
        state = parse_state_spec(text, n_sites=3)
        self.assertAlmostEqual(state.norm, 1.0, places=12)
        weight = 1 / np.sqrt(len(terms))
        for bits, neg in zip(terms, negative):
            self.assertAlmostEqual(state.amplitudes[bitstring_to_index(bits)].real, -weight if neg else weight)


if __name__ == '__main__':
    unittest.main()
