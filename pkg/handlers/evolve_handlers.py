# handlers/evolve_handlers.py
import logging
import os
from typing import Sequence

from config.run_config import RunConfig
from data.data_loader import load_spectrum_csv
from data.export import write_csv
from dynamics.observables import (
    ObservableSeries,
    TimeGrid,
    magnetization_series,
    occupation_series,
    transition_probability_series,
)
from solvers.exact_oracle import Spectrum, oracle_spectrum
from utils.error_handling import EXIT_OK, InvalidParameterError, SpectrumFileError

logger = logging.getLogger(__name__)

SOURCES = ("oracle", "file", "both")


def _parse_transition(text: str) -> tuple[str, str]:
    parts = text.split(":")
    if len(parts) != 2 or not all(parts):
        raise InvalidParameterError(f"Transition must look like <in>:<fin>, got '{text}'")
    return parts[0].strip(), parts[1].strip()


def observable_series(spec: Spectrum, grid: TimeGrid, transitions: Sequence[str] = (),
                      occupations: Sequence[str] = (), site: int | None = None,
                      magnetizations: Sequence[str] = ()) -> ObservableSeries:
    """Every requested series on one grid; occupation and magnetization labels carry the initial state."""
    series = ObservableSeries(grid)
    for text in transitions:
        x_in, x_fin = _parse_transition(text)
        series = series.merge(transition_probability_series(spec, x_in, x_fin, grid))
    for bits in occupations:
        occupation = occupation_series(spec, bits, site, grid)
        series = series.merge(ObservableSeries(grid, {f"{k}_{bits}": v for k, v in occupation.values.items()},
                                               occupation.flagged))
    for bits in magnetizations:
        magnetization = magnetization_series(spec, bits, grid)
        series = series.merge(ObservableSeries(grid, {f"m_z_{bits}": magnetization["m_z"]}, magnetization.flagged))
    return series


def cmd_evolve(cfg: RunConfig, source: str, grid: TimeGrid, spectrum_file: str | None = None,
               transitions: Sequence[str] = (), occupations: Sequence[str] = (), site: int | None = None,
               magnetizations: Sequence[str] = ()) -> int:
    """
    Time-evolution observables from the oracle or a spectrum file, written to series.csv.

    With source "both" the file spectrum provides the main columns and each
    label gains <label>_oracle and <label>_deviation columns.
    """
    if source not in SOURCES:
        raise InvalidParameterError(f"Spectrum source must be one of {SOURCES}, got '{source}'")
    if not (transitions or occupations or magnetizations):
        raise InvalidParameterError("Request at least one of --transition, --occupation, --magnetization")
    if source in ("file", "both") and not spectrum_file:
        raise SpectrumFileError("--spectrum-file is required for source 'file' or 'both'")

    requested = dict(transitions=transitions, occupations=occupations, site=site, magnetizations=magnetizations)
    if source == "oracle":
        spec = oracle_spectrum(cfg.sites, cfg.coupling, cfg.field)
    else:
        spec = load_spectrum_csv(spectrum_file)
    series = observable_series(spec, grid, **requested)
    frame = series.to_frame()

    if source == "both":
        if spec.n_qubits != cfg.sites:
            raise SpectrumFileError(f"Spectrum file has {spec.n_qubits} sites, config has {cfg.sites}")
        reference = observable_series(oracle_spectrum(cfg.sites, cfg.coupling, cfg.field), grid, **requested)
        for label in series.labels:
            frame[f"{label}_oracle"] = reference[label]
            frame[f"{label}_deviation"] = series[label] - reference[label]
            logger.info(f"[CLI] {label}: max |deviation| {abs(frame[f'{label}_deviation']).max():.3e}")
    if series.flagged:
        logger.warning(f"[CLI] Series outside physical bounds: {series.flagged}")

    header = [cfg.provenance(), f"source={source} spectrum_file={spectrum_file or '-'} "
                                f"t_start={grid.t_start!r} t_end={grid.t_end!r} samples={grid.samples}"]
    write_csv(frame, os.path.join(cfg.out, "series.csv"), header)
    print(f"Wrote {len(frame.columns) - 1} series on {grid.samples} time points")
    return EXIT_OK
