# data/data_loader.py
import logging
import os

import numpy as np
import pandas as pd

from config.run_config import read_ini
from data.export import spectrum_columns
from solvers.exact_oracle import Spectrum
from solvers.qite import QiteConfig
from solvers.spectral_pipeline import PipelinePlan, PlanRun, initial_state_library
from utils.error_handling import ConfigError, InvalidParameterError, SpectrumFileError, StateSpecError
from utils.state_parsing import parse_state_spec

logger = logging.getLogger(__name__)

RUN_SECTION_PREFIX = "run:"
PLAN_KEYS = {"analytic", "dedupe_fidelity", "penalty_weight", "rank_tolerance", "group_tolerance"}
RUN_KEYS = {"initial", "negate_h", "deflate", "steps", "dtau"}


def load_spectrum_csv(path: str) -> Spectrum:
    """
    Load a Spectrum written by the spectrum or oracle commands.

    Args:
        path (str): CSV with columns index, energy, t_<bitstring>...

    Returns:
        Spectrum: Energies and t-matrix in file order.

    Raises:
        SpectrumFileError: Missing file, wrong columns or non-numeric content.
    """
    if not os.path.isfile(path):
        raise SpectrumFileError(f"Spectrum file not found: {path}")
    try:
        df = pd.read_csv(path, comment="#")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise SpectrumFileError(f"Cannot parse spectrum file {path}: {e}") from e
    if "energy" not in df.columns:
        raise SpectrumFileError(f"{path}: missing 'energy' column")
    dimension = len(df)
    n_qubits = int(dimension).bit_length() - 1
    if dimension == 0 or 2 ** n_qubits != dimension:
        raise SpectrumFileError(f"{path}: {dimension} rows is not a power of two")
    expected = spectrum_columns(n_qubits)
    missing = [c for c in expected if c not in df.columns]
    if missing:
        raise SpectrumFileError(f"{path}: missing columns {missing[:4]}")
    try:
        energies = df["energy"].to_numpy(dtype=float)
        t = df[expected].to_numpy(dtype=float)
    except ValueError as e:
        raise SpectrumFileError(f"{path}: non-numeric values: {e}") from e
    if not (np.all(np.isfinite(energies)) and np.all(np.isfinite(t))):
        raise SpectrumFileError(f"{path}: non-finite values")
    spectrum = Spectrum(energies, t)
    logger.info(f"Loaded spectrum with {dimension} levels from {path}.")
    return spectrum


def _split_names(text: str) -> tuple[str, ...]:
    return tuple(name.strip() for name in text.replace(";", ",").split(",") if name.strip())


def load_plan_file(path: str, n_sites: int, base_qite: QiteConfig | None = None) -> PipelinePlan:
    """
    Load a pipeline plan from an INI file.

        [plan]
        analytic = eig-one-particle-a, eig-one-particle-b
        [run:ground]
        initial = lib:w3-twoparticle
        negate_h = false
        deflate =
        steps = 30

    Args:
        path (str): Plan file.
        n_sites (int): Chain length the plan must fit.
        base_qite (QiteConfig | None): Settings that per-run steps/dtau modify.

    Returns:
        PipelinePlan: Validated plan.

    Raises:
        ConfigError: Any problem, anchored at the offending line when known.
    """
    parser, lines = read_ini(path)
    base_qite = base_qite or QiteConfig()
    library = initial_state_library(n_sites) if n_sites in (3, 4) else {}
    plan_kwargs = {}
    runs = []
    for section in parser.sections():
        section_line = lines.get((section, ""))
        if section == "plan":
            for key, text in parser.items(section):
                line = lines.get((section, key))
                if key not in PLAN_KEYS:
                    raise ConfigError(f"Unknown key '{key}' in [plan]", line=line, path=path)
                if key == "analytic":
                    names = _split_names(text)
                    unknown = [n for n in names if n not in library or not library[n].analytic]
                    if unknown:
                        raise ConfigError(f"Unknown analytic states {unknown} for N={n_sites}", line=line, path=path)
                    plan_kwargs[key] = names
                else:
                    try:
                        plan_kwargs[key] = float(text)
                    except ValueError as e:
                        raise ConfigError(f"Invalid value for {key}: '{text}'", line=line, path=path) from e
        elif section.startswith(RUN_SECTION_PREFIX):
            runs.append(_load_run(parser, section, lines, path, n_sites, base_qite))
        else:
            raise ConfigError(f"Unknown section [{section}]", line=section_line, path=path)
    if not runs:
        raise ConfigError("Plan has no [run:<name>] sections", path=path)
    known = {run.name for run in runs} | set(library)
    for run in runs:
        unknown = [ref for ref in run.deflate if ref not in known]
        if unknown:
            raise ConfigError(f"Run '{run.name}' deflates unknown states {unknown}",
                              line=lines.get((RUN_SECTION_PREFIX + run.name, "deflate")), path=path)
    try:
        plan = PipelinePlan(tuple(runs), **plan_kwargs)
    except InvalidParameterError as e:
        raise ConfigError(str(e), path=path) from e
    logger.info(f"Loaded plan with {len(plan.runs)} runs and {len(plan.analytic)} analytic states from {path}.")
    return plan


def _load_run(parser, section: str, lines: dict, path: str, n_sites: int, base_qite: QiteConfig) -> PlanRun:
    name = section[len(RUN_SECTION_PREFIX):].strip()
    section_line = lines.get((section, ""))
    if not name:
        raise ConfigError("Run section needs a name: [run:<name>]", line=section_line, path=path)
    items = dict(parser.items(section))
    for key in items:
        if key not in RUN_KEYS:
            raise ConfigError(f"Unknown key '{key}' in [{section}]", line=lines.get((section, key)), path=path)
    if "initial" not in items:
        raise ConfigError(f"[{section}] needs an 'initial' state", line=section_line, path=path)
    line = lines.get((section, "initial"))
    try:
        parse_state_spec(items["initial"], n_sites)
    except StateSpecError as e:
        raise ConfigError(str(e), line=line, path=path) from e

    negate_h = False
    if "negate_h" in items:
        try:
            negate_h = parser.getboolean(section, "negate_h")
        except ValueError as e:
            raise ConfigError("negate_h must be a boolean", line=lines.get((section, "negate_h")), path=path) from e

    qite = None
    changes = {}
    for key, convert in (("steps", int), ("dtau", float)):
        if key in items:
            try:
                changes[key] = convert(items[key])
            except ValueError as e:
                raise ConfigError(f"Invalid value for {key}: '{items[key]}'", line=lines.get((section, key)),
                                  path=path) from e
    if changes:
        try:
            qite = base_qite.replace(**changes)
        except InvalidParameterError as e:
            key = next(iter(k for k in changes if str(e).startswith(k)), "steps")
            raise ConfigError(str(e), line=lines.get((section, key)), path=path) from e
    return PlanRun(name, items["initial"].strip(), negate_h, _split_names(items.get("deflate", "")), qite)
