# handlers/spectrum_handlers.py
import logging
import os

import numpy as np
import pandas as pd

from config.run_config import RunConfig
from data.data_loader import load_plan_file
from data.export import comparison_frame, spectrum_frame, write_csv
from solvers.exact_oracle import oracle_spectrum
from solvers.spectral_pipeline import PipelinePlan, PipelineResult, default_plan, run_pipeline
from utils.error_handling import EXIT_OK

logger = logging.getLogger(__name__)


def resolve_plan(cfg: RunConfig) -> PipelinePlan:
    if cfg.plan:
        return load_plan_file(cfg.plan, cfg.sites, cfg.qite)
    return default_plan(cfg.sites)


def scan_frame(results: list[PipelineResult]) -> pd.DataFrame:
    """Scan records of every run and plan entry, tagged by run and entry name."""
    frames = []
    for run, result in enumerate(results):
        for entry, scan_result in result.scans.items():
            frame = scan_result.to_frame()
            frame.insert(0, "entry", entry)
            frame.insert(0, "run", run)
            frames.append(frame)
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def cmd_spectrum(cfg: RunConfig, plan: PipelinePlan | None = None) -> int:
    """
    Assemble the spectrum once per run seed and write spectrum.csv, scan.csv
    and comparison.csv into cfg.out.

    Args:
        cfg (RunConfig): Validated run configuration.
        plan (PipelinePlan | None): Explicit plan; default is cfg.plan or the built-in plan.

    Returns:
        int: Exit code (errors propagate to the command router).
    """
    plan = plan or resolve_plan(cfg)
    h = cfg.hamiltonian(signed=False)
    results = []
    for run, seed in enumerate(cfg.run_seeds):
        noise = cfg.noise.with_seed(seed)
        qite = cfg.qite.replace(mode=cfg.mode, noise=noise)
        logger.info(f"[CLI] Spectrum run {run + 1}/{len(cfg.run_seeds)} (seed {seed}, mode {cfg.mode.value})")
        results.append(run_pipeline(plan, h, mode=cfg.mode, noise=noise, qite=qite, qlanczos=cfg.qlanczos,
                                    jobs=cfg.jobs))

    oracle = oracle_spectrum(cfg.sites, cfg.coupling, cfg.field)
    comparison = comparison_frame(oracle.energies, [r.spectrum.energies for r in results])
    header = [cfg.provenance()]
    write_csv(spectrum_frame(results[0].spectrum), os.path.join(cfg.out, "spectrum.csv"), header)
    write_csv(scan_frame(results), os.path.join(cfg.out, "scan.csv"), header)
    write_csv(comparison, os.path.join(cfg.out, "comparison.csv"), header)

    print(comparison.to_string(index=False, float_format=lambda v: f"{v: .6f}"))
    logger.info(f"[CLI] Max |deviation| from oracle: {np.max(np.abs(comparison['deviation'])):.3e}")
    return EXIT_OK
