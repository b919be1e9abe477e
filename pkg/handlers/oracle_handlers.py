# handlers/oracle_handlers.py
import logging
import os
from typing import Sequence

import pandas as pd

from config.run_config import RunConfig
from data.export import spectrum_frame, write_csv
from dynamics.observables import magnetization_operator, thermal_average
from solvers.exact_oracle import degeneracy_groups, oracle_spectrum
from solvers.spectral_pipeline import commutator_checks, spectral_flip_defect
from utils.error_handling import EXIT_OK

logger = logging.getLogger(__name__)


def thermal_frame(cfg: RunConfig, betas: Sequence[float]) -> pd.DataFrame:
    spec = oracle_spectrum(cfg.sites, cfg.coupling, cfg.field)
    h = cfg.hamiltonian(signed=False)
    m_z = magnetization_operator(cfg.sites)
    rows = [{"beta": beta, "energy": thermal_average(spec, h, beta), "m_z": thermal_average(spec, m_z, beta)}
            for beta in betas]
    return pd.DataFrame(rows, columns=["beta", "energy", "m_z"])


def cmd_oracle(cfg: RunConfig, betas: Sequence[float] = ()) -> int:
    """Exact spectrum to oracle.csv, plus thermal.csv when inverse temperatures are given."""
    spec = oracle_spectrum(cfg.sites, cfg.coupling, cfg.field)
    h = cfg.hamiltonian(signed=False)
    report = commutator_checks(h)
    logger.info(f"[CLI] Symmetry commutators: parity {report.parity:.2e}, translation {report.translation:.2e}, "
                f"reflection {report.reflection:.2e}")
    if cfg.sites % 2 == 0:
        logger.info(f"[CLI] E -> -E reflection defect: {spectral_flip_defect(h):.2e}")

    header = [cfg.provenance()]
    write_csv(spectrum_frame(spec), os.path.join(cfg.out, "oracle.csv"), header)
    for group in degeneracy_groups(spec.energies):
        print(f"E = {spec.energies[group[0]]: .10f}  x{len(group)}")
    if betas:
        thermal = thermal_frame(cfg, betas)
        write_csv(thermal, os.path.join(cfg.out, "thermal.csv"), header)
        print(thermal.to_string(index=False))
    return EXIT_OK
