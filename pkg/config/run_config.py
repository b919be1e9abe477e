# config/run_config.py
"""
Run configuration: defaults from config.config, an optional INI file, then
command-line overrides. File errors name the offending line.

    [model]     sites, coupling, field, negate_h
    [qite]      dtau, steps, svd_cutoff, c_expansion_order, linear_system_mode
    [noise]     shots, readout, p01, p10, depol, layers
    [qlanczos]  accept_delta, scan_stop, dim, floor, krylov_source
    [run]       mode, runs, seed, jobs, out, plan
"""
import configparser
import logging
import os
from dataclasses import dataclass, field as dataclass_field

from config.config import (
    DEFAULT_COUPLING,
    DEFAULT_FIELD,
    DEFAULT_RUNS,
    DEFAULT_SEED,
    DEFAULT_SITES,
    MAX_QUBITS,
    OUTPUT_DIR,
)
from models.noise_model import MeasurementMode, NoiseConfig
from models.pauli_algebra import PauliSum, build_ising_hamiltonian
from solvers.qite import QiteConfig
from solvers.qlanczos import QLanczosConfig
from utils.error_handling import ConfigError, InvalidParameterError

logger = logging.getLogger(__name__)


def _to_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got '{text}'")


def _to_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


# section -> key -> converter
SCHEMA = {
    "model": {"sites": int, "coupling": float, "field": float, "negate_h": _to_bool},
    "qite": {"dtau": float, "steps": int, "svd_cutoff": float, "c_expansion_order": int,
             "linear_system_mode": str},
    "noise": {"shots": int, "readout": float, "p01": _to_floats, "p10": _to_floats, "depol": float,
              "layers": int},
    "qlanczos": {"accept_delta": float, "scan_stop": float, "dim": int, "floor": float, "krylov_source": str},
    "run": {"mode": str, "runs": int, "seed": int, "jobs": int, "out": str, "plan": str},
}


@dataclass(frozen=True)
class RunConfig:
    sites: int = DEFAULT_SITES
    coupling: float = DEFAULT_COUPLING
    field: float = DEFAULT_FIELD
    negate_h: bool = False
    qite: QiteConfig = dataclass_field(default_factory=QiteConfig)
    noise: NoiseConfig = dataclass_field(default_factory=NoiseConfig)
    qlanczos: QLanczosConfig = dataclass_field(default_factory=QLanczosConfig)
    mode: MeasurementMode = MeasurementMode.EXACT
    runs: int = DEFAULT_RUNS
    seed: int = DEFAULT_SEED
    jobs: int = 1
    out: str = OUTPUT_DIR
    plan: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", MeasurementMode.parse(self.mode))
        if not 2 <= self.sites <= MAX_QUBITS:
            raise InvalidParameterError(f"sites must be in [2, {MAX_QUBITS}], got {self.sites}")
        if self.runs < 1:
            raise InvalidParameterError(f"runs must be >= 1, got {self.runs}")
        if self.jobs == 0 or self.jobs < -1:
            raise InvalidParameterError(f"jobs must be positive or -1, got {self.jobs}")
        if self.seed < 0:
            raise InvalidParameterError(f"seed must be >= 0, got {self.seed}")

    def hamiltonian(self, signed: bool = True) -> PauliSum:
        """Ising Hamiltonian of this run, negated when negate_h is set and signed is True."""
        h = build_ising_hamiltonian(self.sites, self.coupling, self.field)
        return -h if signed and self.negate_h else h

    @property
    def run_seeds(self) -> list[int]:
        """seed, seed+1, ... for noisy modes; exact mode is deterministic and runs once."""
        count = self.runs if self.mode.uses_shots else 1
        return [self.seed + r for r in range(count)]

    def provenance(self) -> str:
        """One-line description of every setting for CSV headers."""
        q, n, k = self.qite, self.noise, self.qlanczos
        parts = [
            f"sites={self.sites}", f"coupling={self.coupling!r}", f"field={self.field!r}",
            f"negate_h={self.negate_h}", f"mode={self.mode.value}", f"runs={self.runs}", f"seed={self.seed}",
            f"dtau={q.dtau!r}", f"steps={q.steps}", f"svd_cutoff={q.effective_svd_cutoff!r}",
            f"c_expansion_order={q.c_expansion_order}", f"linear_system={q.linear_system_source}",
            f"shots={n.shots}", f"p01={list(n.p01)}", f"p10={list(n.p10)}", f"depol={n.depol!r}",
            f"layers={n.layers}", f"accept_delta={k.accept_delta!r}", f"scan_stop={k.scan_stop!r}",
            f"krylov_dim={k.dim}", f"floor={k.floor!r}", f"krylov_source={k.krylov_source}",
        ]
        if self.plan:
            parts.append(f"plan={os.path.basename(self.plan)}")
        return " ".join(parts)


def _key_lines(path: str) -> dict[tuple[str, str], int]:
    """(section, key) -> 1-based line number of its definition."""
    lines = {}
    section = None
    with open(path, encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            stripped = raw.strip()
            if not stripped or stripped[0] in "#;":
                continue
            if stripped.startswith("[") and stripped.endswith("]"):
                section = stripped[1:-1].strip()
                lines[(section, "")] = number
            elif section is not None and ("=" in stripped or ":" in stripped):
                key = stripped.split("=", 1)[0].split(":", 1)[0].strip().lower()
                lines[(section, key)] = number
    return lines


def read_ini(path: str) -> tuple[configparser.ConfigParser, dict[tuple[str, str], int]]:
    """Parse an INI file; configparser errors become ConfigError with the line number."""
    if not os.path.isfile(path):
        raise ConfigError("Config file not found", path=path)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("Key outside of any [section]", line=e.lineno, path=path) from e
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as e:
        raise ConfigError(e.message.split(":")[-1].strip() or str(e), line=e.lineno, path=path) from e
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigError("Malformed line (expected key = value)", line=line, path=path) from e
    return parser, _key_lines(path)


def load_config_values(path: str) -> dict[str, tuple[object, int | None]]:
    """
    Read a run config file into {"section.key": (value, line)} after type conversion.

    Raises:
        ConfigError: Unknown sections or keys, or values that do not convert.
    """
    parser, lines = read_ini(path)
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"Unknown section [{section}]", line=lines.get((section, "")), path=path)
        for key, text in parser.items(section):
            line = lines.get((section, key))
            if key not in SCHEMA[section]:
                raise ConfigError(f"Unknown key '{key}' in [{section}]", line=line, path=path)
            try:
                values[f"{section}.{key}"] = (SCHEMA[section][key](text), line)
            except ValueError as e:
                raise ConfigError(f"Invalid value for {key}: {e}", line=line, path=path) from e
    logger.info(f"[CONFIG] Loaded {len(values)} settings from {path}")
    return values


def _build(values: dict[str, object]) -> RunConfig:
    get = values.get
    mode = MeasurementMode.parse(get("run.mode", MeasurementMode.EXACT.value))
    readout = get("noise.readout")
    noise_kwargs = {k: get(f"noise.{k}") for k in ("shots", "depol", "layers") if get(f"noise.{k}") is not None}
    p01 = get("noise.p01", (readout,) if readout is not None else None)
    p10 = get("noise.p10", (readout,) if readout is not None else None)
    if p01 is not None:
        noise_kwargs["p01"] = p01
    if p10 is not None:
        noise_kwargs["p10"] = p10
    noise = NoiseConfig(seed=get("run.seed", DEFAULT_SEED), **noise_kwargs)

    qite_kwargs = {k: get(f"qite.{k}") for k in SCHEMA["qite"] if get(f"qite.{k}") is not None}
    qite = QiteConfig(mode=mode, noise=noise, **qite_kwargs)

    ql_kwargs = {k: get(f"qlanczos.{k}") for k in SCHEMA["qlanczos"] if get(f"qlanczos.{k}") is not None}
    qlanczos = QLanczosConfig(**ql_kwargs)

    top = {}
    for key in ("sites", "coupling", "field", "negate_h"):
        if get(f"model.{key}") is not None:
            top[key] = get(f"model.{key}")
    for key in ("runs", "seed", "jobs", "out", "plan"):
        if get(f"run.{key}") is not None:
            top[key] = get(f"run.{key}")
    return RunConfig(qite=qite, noise=noise, qlanczos=qlanczos, mode=mode, **top)


def build_run_config(path: str | None = None, overrides: dict[str, object] | None = None) -> RunConfig:
    """
    Defaults, then the config file at path, then non-None overrides.

    Args:
        path (str | None): INI file path.
        overrides (dict | None): {"section.key": value} from command-line flags.

    Returns:
        RunConfig: Validated configuration.

    Raises:
        ConfigError: File problems, anchored at the offending line when known.
        InvalidParameterError: Out-of-range override values.
    """
    located = load_config_values(path) if path else {}
    values = {key: value for key, (value, _) in located.items()}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    try:
        return _build(values)
    except InvalidParameterError as e:
        if not path:
            raise
        # messages start with the offending field name
        message = str(e)
        for key, (_, line) in located.items():
            name = key.split(".", 1)[1]
            if message.startswith(name) and key not in (overrides or {}):
                raise ConfigError(message, line=line, path=path) from e
        raise ConfigError(message, path=path) from e
