"""
Measurement noise: shot sampling of Pauli strings, a per-qubit readout
bit-flip channel, readout-error mitigation (ROEM) and Richardson
zero-noise extrapolation.

Sampling happens at the distribution level: the state is rotated into the
measurement basis, its outcome distribution is mixed with the uniform
distribution by the depolarizing factor (1 - eps)^(scale * layers), pushed
through the readout channel and then drawn with a multinomial. Every draw
uses its own counter-based stream (seed, caller stream, string key, scale),
so results do not depend on evaluation order or thread count.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from config.config import DEFAULT_SEED, DEFAULT_SHOTS, RICHARDSON_SCALES
from models.pauli_algebra import PauliString, PauliSum
from models.state_engine import StateVector, expectation, index_to_bitstring, require_normalized
from utils.error_handling import InvalidParameterError, SingularMitigationError

logger = logging.getLogger(__name__)

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
_S_DAGGER = np.diag([1.0, -1.0j])
# U P U^dag = Z for each measured letter
_BASIS_ROTATIONS = {"X": _HADAMARD, "Y": _HADAMARD @ _S_DAGGER}
_MAX_SCALE = 3


class MeasurementMode(str, Enum):
    EXACT = "exact"
    SHOTS = "shots"
    SHOTS_ROEM = "shots+roem"
    SHOTS_ROEM_RICHARDSON = "shots+roem+richardson"

    @classmethod
    def parse(cls, text: "str | MeasurementMode") -> "MeasurementMode":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise InvalidParameterError(f"Unknown measurement mode '{text}' (expected one of {valid})")

    @property
    def uses_shots(self) -> bool:
        return self is not MeasurementMode.EXACT

    @property
    def uses_roem(self) -> bool:
        return self in (MeasurementMode.SHOTS_ROEM, MeasurementMode.SHOTS_ROEM_RICHARDSON)

    @property
    def uses_richardson(self) -> bool:
        return self is MeasurementMode.SHOTS_ROEM_RICHARDSON


@dataclass(frozen=True)
class NoiseConfig:
    """
    Shot budget and noise parameters.

    p01 / p10 hold per-qubit probabilities p(0|1) and p(1|0); a single value
    is broadcast to every qubit.
    """
    shots: int = DEFAULT_SHOTS
    p01: tuple[float, ...] = (0.0,)
    p10: tuple[float, ...] = (0.0,)
    depol: float = 0.0
    layers: int = 0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "p01", _as_probabilities(self.p01, "p01"))
        object.__setattr__(self, "p10", _as_probabilities(self.p10, "p10"))
        if int(self.shots) != self.shots or self.shots < 1:
            raise InvalidParameterError(f"shots must be a positive integer, got {self.shots}")
        if not 0.0 <= self.depol <= 0.1:
            raise InvalidParameterError(f"depol must be in [0, 0.1], got {self.depol}")
        if int(self.layers) != self.layers or self.layers < 0:
            raise InvalidParameterError(f"layers must be a nonnegative integer, got {self.layers}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidParameterError(f"seed must be a nonnegative integer, got {self.seed}")

    @classmethod
    def symmetric(cls, p: float, **kwargs) -> "NoiseConfig":
        return cls(p01=(p,), p10=(p,), **kwargs)

    def flip_probabilities(self, n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-qubit (p01, p10) arrays of length n_qubits."""
        return _broadcast(self.p01, n_qubits, "p01"), _broadcast(self.p10, n_qubits, "p10")

    def with_seed(self, seed: int) -> "NoiseConfig":
        return NoiseConfig(self.shots, self.p01, self.p10, self.depol, self.layers, seed)


def _as_probabilities(values, name: str) -> tuple[float, ...]:
    if np.isscalar(values):
        values = (values,)
    values = tuple(float(v) for v in values)
    if not values:
        raise InvalidParameterError(f"{name} needs at least one value")
    for v in values:
        if not 0.0 <= v < 0.5:
            raise InvalidParameterError(f"{name} entries must be in [0, 0.5), got {v}")
    return values


def _broadcast(values: tuple[float, ...], n_qubits: int, name: str) -> np.ndarray:
    if len(values) == 1:
        return np.full(n_qubits, values[0])
    if len(values) != n_qubits:
        raise InvalidParameterError(f"{name} has {len(values)} entries for {n_qubits} qubits")
    return np.array(values)


@dataclass(frozen=True, eq=False)
class CountsTable:
    """Occurrence counts indexed by basis index (bit i = outcome of qubit i)."""
    counts: np.ndarray
    n_qubits: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if counts.size != 2 ** self.n_qubits:
            raise InvalidParameterError(f"{counts.size} counts do not match {self.n_qubits} qubits")
        if np.any(counts < 0):
            raise InvalidParameterError("Counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def shots(self) -> int:
        return int(self.counts.sum())

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots

    def as_dict(self) -> dict[str, int]:
        return {index_to_bitstring(x, self.n_qubits): int(c) for x, c in enumerate(self.counts) if c}


def stream_rng(seed: int, stream: Sequence[int]) -> np.random.Generator:
    """Independent generator for one (seed, stream) pair."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream)))


def _apply_site_matrix(tensor: np.ndarray, matrix: np.ndarray, site: int, n_qubits: int) -> np.ndarray:
    # C-order reshape puts the most significant bit (site n-1) on axis 0
    axis = n_qubits - 1 - site
    moved = np.tensordot(matrix, tensor, axes=([1], [axis]))
    return np.moveaxis(moved, 0, axis)


def rotate_to_z_basis(state: StateVector, p: PauliString) -> np.ndarray:
    """Amplitudes after rotating every X/Y site of p into the Z basis."""
    n = state.n_qubits
    tensor = state.amplitudes.reshape([2] * n)
    for site, letter in enumerate(p.letters):
        if letter in _BASIS_ROTATIONS:
            tensor = _apply_site_matrix(tensor, _BASIS_ROTATIONS[letter], site, n)
    return tensor.reshape(-1)


def readout_channel(probabilities: np.ndarray, n_qubits: int, p01, p10) -> np.ndarray:
    """
    Push an outcome distribution through independent per-qubit bit flips.

    Columns are the true bit, rows the recorded bit:
    [[1 - p10, p01], [p10, 1 - p01]].
    """
    tensor = np.asarray(probabilities, dtype=float).reshape([2] * n_qubits)
    for site in range(n_qubits):
        flip = np.array([[1.0 - p10[site], p01[site]], [p10[site], 1.0 - p01[site]]])
        tensor = _apply_site_matrix(tensor, flip, site, n_qubits)
    return tensor.reshape(-1)


def noisy_distribution(state: StateVector, p: PauliString, cfg: NoiseConfig, scale: int = 1) -> np.ndarray:
    """Exact outcome distribution seen by the sampler (depolarized, then read out)."""
    n = state.n_qubits
    probabilities = np.abs(rotate_to_z_basis(state, p)) ** 2
    attenuation = (1.0 - cfg.depol) ** (scale * cfg.layers)
    probabilities = attenuation * probabilities + (1.0 - attenuation) / probabilities.size
    p01, p10 = cfg.flip_probabilities(n)
    return readout_channel(probabilities, n, p01, p10)


def sample_pauli(state: StateVector, p: PauliString, cfg: NoiseConfig, scale: int = 1,
                 stream: Sequence[int] = ()) -> CountsTable:
    """
    Draw cfg.shots measurement outcomes of Pauli string p.

    Args:
        state (StateVector): Normalized state.
        p (PauliString): String to measure.
        cfg (NoiseConfig): Noise parameters.
        scale (int): Noise amplification factor in {1, 2, 3}.
        stream (Sequence[int]): Caller stream identifiers (run, step, ...).

    Returns:
        CountsTable: Outcome counts summing to cfg.shots.
    """
    if int(scale) != scale or not 1 <= scale <= _MAX_SCALE:
        raise InvalidParameterError(f"Noise scale must be one of 1..{_MAX_SCALE}, got {scale}")
    require_normalized(state)
    probabilities = np.clip(noisy_distribution(state, p, cfg, scale), 0.0, None)
    probabilities /= probabilities.sum()
    rng = stream_rng(cfg.seed, tuple(stream) + (p.key, int(scale)))
    counts = rng.multinomial(cfg.shots, probabilities)
    return CountsTable(counts, state.n_qubits)


def _outcome_signs(n_qubits: int, site: int) -> np.ndarray:
    indices = np.arange(2 ** n_qubits)
    return 1.0 - 2.0 * ((indices >> site) & 1)


def raw_expectation(counts: CountsTable, support: Iterable[int]) -> float:
    """Empirical mean of prod_i (-1)^{x_i} over the support."""
    weights = np.ones(2 ** counts.n_qubits)
    for site in support:
        weights *= _outcome_signs(counts.n_qubits, site)
    return float(np.dot(counts.frequencies(), weights))


def mitigate_distribution(frequencies: np.ndarray, support: Iterable[int], n_qubits: int, p01, p10) -> float:
    """
    Readout-corrected expectation sum_x f(x) prod_i ((-1)^{x_i} - p_i^-) / (1 - p_i^+).

    Raises:
        SingularMitigationError: If some 1 - p_i^+ vanishes.
    """
    weights = np.ones(2 ** n_qubits)
    for site in support:
        p_plus = p01[site] + p10[site]
        p_minus = p01[site] - p10[site]
        if abs(1.0 - p_plus) < 1e-15:
            raise SingularMitigationError(f"Readout channel on qubit {site} is not invertible")
        weights *= (_outcome_signs(n_qubits, site) - p_minus) / (1.0 - p_plus)
    return float(np.dot(frequencies, weights))


def mitigated_expectation(counts: CountsTable, support: Iterable[int], cfg: NoiseConfig) -> float:
    """ROEM estimate from measured counts. Not clamped to [-1, 1]."""
    if counts.shots < 1:
        raise InvalidParameterError("Mitigation needs at least one shot")
    p01, p10 = cfg.flip_probabilities(counts.n_qubits)
    return mitigate_distribution(counts.frequencies(), support, counts.n_qubits, p01, p10)


def richardson_extrapolate(values: Iterable[tuple[int, float]]) -> float:
    """
    Linear zero-noise extrapolation.

    Two points use the exact line through them (2*v1 - v2 for scales 1, 2);
    more points use a least-squares line.
    """
    values = list(values)
    if len(values) < 2:
        raise InvalidParameterError("Richardson extrapolation needs at least two points")
    scales = [s for s, _ in values]
    if len(set(scales)) != len(scales):
        raise InvalidParameterError(f"Duplicate noise scales {scales}")
    if any(int(s) != s or s < 1 for s in scales):
        raise InvalidParameterError(f"Noise scales must be positive integers, got {scales}")
    if len(values) == 2:
        (s1, v1), (s2, v2) = values
        return float((s2 * v1 - s1 * v2) / (s2 - s1))
    x = np.array(scales, dtype=float)
    y = np.array([v for _, v in values], dtype=float)
    slope, intercept = np.polyfit(x, y, deg=1)
    return float(intercept)


@dataclass
class PauliEstimator:
    """
    Per-state estimator of Pauli-string expectations in a measurement mode.

    Results are cached by string, so a string needed by several quantities
    on the same state is measured once.
    """
    state: StateVector
    cfg: NoiseConfig
    mode: MeasurementMode
    stream: tuple[int, ...] = ()
    scales: tuple[int, ...] = RICHARDSON_SCALES
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def measured_strings(self) -> int:
        return len(self._cache)

    def estimate(self, p: PauliString) -> float:
        if p.is_identity:
            return 1.0
        if p.letters not in self._cache:
            self._cache[p.letters] = self._measure(p)
        return self._cache[p.letters]

    def _measure(self, p: PauliString) -> float:
        if not self.mode.uses_shots:
            return expectation(self.state, p)
        scales = self.scales if self.mode.uses_richardson else (1,)
        points = []
        for scale in scales:
            counts = sample_pauli(self.state, p, self.cfg, scale, self.stream)
            if self.mode.uses_roem:
                value = mitigated_expectation(counts, p.support, self.cfg)
            else:
                value = raw_expectation(counts, p.support)
            points.append((scale, value))
        if self.mode.uses_richardson:
            return richardson_extrapolate(points)
        return points[0][1]

    def expectation_of(self, op: PauliSum) -> float:
        return float(sum(term.coefficient * self.estimate(term.string) for term in op.terms))


def measured_expectation(state: StateVector, op: PauliSum, cfg: NoiseConfig,
                         mode: "MeasurementMode | str" = MeasurementMode.EXACT,
                         stream: Sequence[int] = ()) -> float:
    """
    Expectation of a Pauli sum measured term by term.

    Args:
        state (StateVector): Normalized state.
        op (PauliSum): Operator; identity terms contribute their coefficient exactly.
        cfg (NoiseConfig): Noise parameters.
        mode (MeasurementMode | str): exact, shots, shots+roem or shots+roem+richardson.
        stream (Sequence[int]): Caller stream identifiers.

    Returns:
        float: The estimate.
    """
    mode = MeasurementMode.parse(mode)
    require_normalized(state)
    if mode is MeasurementMode.EXACT:
        return expectation(state, op)
    estimator = PauliEstimator(state, cfg, mode, tuple(stream))
    value = estimator.expectation_of(op)
    logger.debug(f"[NOISE] {mode.value} estimate {value:.6f} from {estimator.measured_strings} strings")
    return value
