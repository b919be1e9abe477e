# handlers/qite_handlers.py
import logging
import os
from typing import Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from config.run_config import RunConfig
from data.export import trace_frame, write_csv
from models.noise_model import MeasurementMode
from solvers.qite import QiteTrace, measurement_budget, run_qite
from utils.error_handling import EXIT_OK
from utils.state_parsing import parse_state_spec

logger = logging.getLogger(__name__)


def _single_trace(cfg: RunConfig, initial: str, mode: MeasurementMode, seed: int) -> QiteTrace:
    state = parse_state_spec(initial, cfg.sites)
    qite = cfg.qite.replace(mode=mode, noise=cfg.noise.with_seed(seed))
    return run_qite(state, cfg.hamiltonian(), qite)


def traces_frame(modes: Sequence[MeasurementMode], traces: dict[MeasurementMode, list[QiteTrace]]) -> pd.DataFrame:
    """
    One mode: step, tau, energy, c_sq_inv (+ energy_std over several runs).
    Several modes: energy_<mode>, energy_<mode>_std and c_sq_inv_<mode> per mode.
    """
    first = traces[modes[0]][0]
    if len(modes) == 1:
        frame = trace_frame(first)
        runs = traces[modes[0]]
        if len(runs) > 1:
            stacked = np.vstack([t.energies for t in runs])
            frame["energy"] = stacked.mean(axis=0)
            frame["energy_std"] = stacked.std(axis=0, ddof=1)
        return frame
    frame = trace_frame(first)[["step", "tau"]]
    for mode in modes:
        stacked = np.vstack([t.energies for t in traces[mode]])
        frame[f"energy_{mode.value}"] = stacked.mean(axis=0)
        frame[f"energy_{mode.value}_std"] = stacked.std(axis=0, ddof=1) if len(stacked) > 1 else 0.0
        frame[f"c_sq_inv_{mode.value}"] = traces[mode][0].c_sq_inv
    return frame


def cmd_qite(cfg: RunConfig, initial: str, modes: Sequence[str] | None = None) -> int:
    """
    Imaginary-time energy trace from an initial-state spec, written to trace.csv.

    Noisy modes repeat cfg.runs times with seeds seed, seed+1, ...; the
    exact mode runs once.
    """
    parse_state_spec(initial, cfg.sites)
    modes = [MeasurementMode.parse(m) for m in modes] if modes else [cfg.mode]
    budget = measurement_budget(cfg.sites, cfg.hamiltonian())
    logger.info(f"[CLI] Measurements per QITE step: raw {budget.raw}, reduced {budget.reduced}, "
                f"{budget.distinct_strings} distinct strings")

    jobs = []
    for mode in modes:
        seeds = [cfg.seed + r for r in range(cfg.runs)] if mode.uses_shots else [cfg.seed]
        jobs.extend((mode, seed) for seed in seeds)
    results = Parallel(n_jobs=cfg.jobs)(delayed(_single_trace)(cfg, initial, mode, seed) for mode, seed in jobs)
    traces = {mode: [] for mode in modes}
    for (mode, _), trace in zip(jobs, results):
        traces[mode].append(trace)

    frame = traces_frame(modes, traces)
    header = [cfg.provenance(), f"initial={initial} modes={','.join(m.value for m in modes)}"]
    write_csv(frame, os.path.join(cfg.out, "trace.csv"), header)
    for mode in modes:
        final = np.mean([t.final_energy for t in traces[mode]])
        print(f"{mode.value}: final energy {final:.8f}")
    return EXIT_OK
