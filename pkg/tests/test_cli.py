# tests/test_cli.py
import os
import tempfile
import unittest
from contextlib import redirect_stdout
from io import StringIO

import numpy as np
import pandas as pd

from main import main
from utils.error_handling import EXIT_NO_CONVERGENCE, EXIT_OK, EXIT_VALIDATION


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.out = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def run_cli(self, *argv: str, out: str | None = None) -> int:
        args = list(argv) + ["--out", out or self.out, "--log-level", "WARNING"]
        with redirect_stdout(StringIO()):
            return main(args)

    def read(self, name: str, out: str | None = None) -> pd.DataFrame:
        return pd.read_csv(os.path.join(out or self.out, name), comment="#")


class TestOracleCommand(CliTestCase):
    def test_writes_spectrum_and_thermal_tables(self):
        self.assertEqual(self.run_cli("oracle", "--sites", "3", "--beta", "0", "--beta", "1"), EXIT_OK)
        oracle = self.read("oracle.csv")
        self.assertEqual(len(oracle), 8)
        self.assertAlmostEqual(oracle["energy"].sum(), 0.0, places=10)
        thermal = self.read("thermal.csv")
        self.assertEqual(list(thermal.columns), ["beta", "energy", "m_z"])
        self.assertAlmostEqual(thermal["energy"][0], 0.0, places=10)

    def test_repeated_runs_are_byte_identical(self):
        second = os.path.join(self.out, "again")
        self.run_cli("oracle", "--sites", "4")
        self.run_cli("oracle", "--sites", "4", out=second)
        with open(os.path.join(self.out, "oracle.csv"), "rb") as a, open(os.path.join(second, "oracle.csv"), "rb") as b:
            self.assertEqual(a.read(), b.read())

    def test_invalid_size(self):
        self.assertEqual(self.run_cli("oracle", "--sites", "1"), EXIT_VALIDATION)


class TestQiteCommand(CliTestCase):
    def test_exact_trace(self):
        self.assertEqual(self.run_cli("qite", "--initial", "100", "--steps", "10"), EXIT_OK)
        trace = self.read("trace.csv")
        self.assertEqual(list(trace.columns), ["step", "tau", "energy", "c_sq_inv"])
        self.assertEqual(len(trace), 11)
        self.assertAlmostEqual(trace["energy"][0], -1.0, places=10)

    def test_several_modes(self):
        code = self.run_cli("qite", "--initial", "lib:w3-twoparticle", "--steps", "3", "--modes", "exact,shots",
                            "--runs", "2", "--shots", "512")
        self.assertEqual(code, EXIT_OK)
        trace = self.read("trace.csv")
        for column in ("energy_exact", "energy_exact_std", "c_sq_inv_exact", "energy_shots", "energy_shots_std"):
            self.assertIn(column, trace.columns)
        self.assertTrue(np.all(trace["energy_exact_std"] == 0.0))

    def test_worker_count_does_not_change_output(self):
        outputs = []
        for jobs in ("1", "2"):
            out = os.path.join(self.out, f"jobs{jobs}")
            code = self.run_cli("qite", "--initial", "100", "--steps", "4", "--modes", "shots,shots+roem",
                                "--readout", "0.03", "--runs", "3", "--shots", "512", "--jobs", jobs, out=out)
            self.assertEqual(code, EXIT_OK)
            with open(os.path.join(out, "trace.csv"), "rb") as f:
                outputs.append(f.read())
        self.assertEqual(outputs[0], outputs[1])

    def test_bad_initial_state(self):
        self.assertEqual(self.run_cli("qite", "--initial", "1x0"), EXIT_VALIDATION)
        self.assertEqual(self.run_cli("qite", "--initial", "1000"), EXIT_VALIDATION)


class TestEvolveCommand(CliTestCase):
    def test_oracle_series(self):
        code = self.run_cli("evolve", "--transition", "100:010", "--occupation", "110", "--sites-all",
                            "--magnetization", "100", "--samples", "11", "--tmax", "2")
        self.assertEqual(code, EXIT_OK)
        series = self.read("series.csv")
        self.assertEqual(list(series.columns),
                         ["t", "P_100_010", "n_0_110", "n_1_110", "n_2_110", "m_z_100"])
        self.assertEqual(len(series), 11)
        self.assertAlmostEqual(series["m_z_100"][0], 1 / 3, places=10)

    def test_file_against_oracle(self):
        self.run_cli("oracle", "--sites", "3")
        spectrum_file = os.path.join(self.out, "oracle.csv")
        code = self.run_cli("evolve", "--source", "both", "--spectrum-file", spectrum_file,
                            "--transition", "100:001", "--samples", "21")
        self.assertEqual(code, EXIT_OK)
        series = self.read("series.csv")
        self.assertLess(series["P_100_001_deviation"].abs().max(), 1e-12)

    def test_missing_inputs(self):
        self.assertEqual(self.run_cli("evolve", "--source", "file", "--transition", "100:010"), EXIT_VALIDATION)
        self.assertEqual(self.run_cli("evolve"), EXIT_VALIDATION)
        self.assertEqual(self.run_cli("evolve", "--transition", "100-010"), EXIT_VALIDATION)


class TestSpectrumCommand(CliTestCase):
    def test_exact_spectrum(self):
        self.assertEqual(self.run_cli("spectrum", "--sites", "3"), EXIT_OK)
        comparison = self.read("comparison.csv")
        self.assertEqual(len(comparison), 8)
        self.assertLess(comparison["deviation"].abs().max(), 1e-4)
        spectrum = self.read("spectrum.csv")
        self.assertEqual(list(spectrum.columns[:3]), ["index", "energy", "t_000"])
        scan = self.read("scan.csv")
        self.assertEqual(set(scan["entry"]), {"ground", "odd-low", "odd-top", "even-top", "pair-top"})

    def test_unreachable_threshold_reports_no_convergence(self):
        code = self.run_cli("spectrum", "--sites", "3", "--steps", "4", "--delta", "1e-9")
        self.assertEqual(code, EXIT_NO_CONVERGENCE)

    def test_unsupported_size(self):
        self.assertEqual(self.run_cli("spectrum", "--sites", "5"), EXIT_VALIDATION)

    def test_bad_config_file(self):
        path = os.path.join(self.out, "bad.ini")
        with open(path, "w", encoding="utf-8") as f:
            f.write("[model]\nsites = many\n")
        self.assertEqual(self.run_cli("spectrum", "--config", path), EXIT_VALIDATION)


if __name__ == '__main__':
    unittest.main()
