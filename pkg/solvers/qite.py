"""
Quantum imaginary-time evolution.

Each step replaces e^{-dtau H}/sqrt(c) by a unitary e^{-i dtau A} with
A = sum_I a_I sigma_I over the odd-Y pool. The coefficients solve the
least-squares system (S + S^T) a = b with S_IJ = <sigma_I sigma_J> and
b_I = 2 sqrt(c_ratio) Re(-i <sigma_I H>). For real states and odd-Y
strings the update is a real orthogonal rotation.
"""
import dataclasses
import functools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from config.config import (
    DEFAULT_C_EXPANSION_ORDER,
    DEFAULT_DTAU,
    DEFAULT_STEPS,
    DEFAULT_SVD_CUTOFF,
    MEASURED_SVD_CUTOFF,
)
from models.noise_model import MeasurementMode, NoiseConfig, PauliEstimator, measured_expectation
from models.pauli_algebra import PauliString, PauliSum, multiply, operator_pool, product_sum, y_parity
from models.state_engine import (
    StateVector,
    apply_string_array,
    apply_sum_array,
    exp_apply,
    expectation,
    require_normalized,
)
from utils.error_handling import (
    DimensionMismatchError,
    InconsistentSystemError,
    InvalidParameterError,
    NumericalError,
    StepTooLargeError,
)

logger = logging.getLogger(__name__)

LINEAR_SYSTEM_MODES = ("auto", "exact", "measured")


@dataclass(frozen=True)
class QiteConfig:
    """
    Imaginary-time evolution settings.

    linear_system_mode selects where the (S + S^T, b) expectations come
    from: "measured" in the configured mode, or "exact" statevector values
    (the hybrid variant where only energies are measured). "auto" measures
    whenever the mode samples shots. svd_cutoff None picks 1e-8 for exact
    systems and 1e-2 for measured ones.
    """
    dtau: float = DEFAULT_DTAU
    steps: int = DEFAULT_STEPS
    svd_cutoff: float | None = None
    c_expansion_order: int = DEFAULT_C_EXPANSION_ORDER
    mode: MeasurementMode = MeasurementMode.EXACT
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    linear_system_mode: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "mode", MeasurementMode.parse(self.mode))
        if not self.dtau > 0:
            raise InvalidParameterError(f"dtau must be positive, got {self.dtau}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidParameterError(f"steps must be a positive integer, got {self.steps}")
        if self.svd_cutoff is not None and not 0 <= self.svd_cutoff < 1:
            raise InvalidParameterError(f"svd_cutoff must be in [0, 1), got {self.svd_cutoff}")
        if self.c_expansion_order not in (1, 2):
            raise InvalidParameterError(f"c_expansion_order must be 1 or 2, got {self.c_expansion_order}")
        if self.linear_system_mode not in LINEAR_SYSTEM_MODES:
            raise InvalidParameterError(
                f"linear_system_mode must be one of {LINEAR_SYSTEM_MODES}, got '{self.linear_system_mode}'")

    def replace(self, **changes) -> "QiteConfig":
        return dataclasses.replace(self, **changes)

    @property
    def linear_system_source(self) -> str:
        """Resolved source of the linear system, "exact" or "measured"."""
        if not self.mode.uses_shots:
            return "exact"
        return "measured" if self.linear_system_mode == "auto" else self.linear_system_mode

    @property
    def effective_svd_cutoff(self) -> float:
        if self.svd_cutoff is not None:
            return self.svd_cutoff
        return MEASURED_SVD_CUTOFF if self.linear_system_source == "measured" else DEFAULT_SVD_CUTOFF


@dataclass(eq=False)
class QiteTrace:
    """Per-step record of an imaginary-time run (index s = 0..steps)."""
    states: list[StateVector]
    energies: np.ndarray
    c_sq_inv: np.ndarray
    a_coeffs: list[np.ndarray]
    dtau: float
    hamiltonian: PauliSum
    pool: tuple[PauliString, ...] = ()

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        self.c_sq_inv = np.asarray(self.c_sq_inv, dtype=float)
        n = len(self.states)
        if len(self.energies) != n or len(self.c_sq_inv) != n or len(self.a_coeffs) != n - 1:
            raise DimensionMismatchError(
                f"Inconsistent trace lengths: {n} states, {len(self.energies)} energies, "
                f"{len(self.c_sq_inv)} c values, {len(self.a_coeffs)} updates")
        if not np.all(np.isfinite(self.energies)):
            raise NumericalError("Trace contains non-finite energies")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def taus(self) -> np.ndarray:
        return self.dtau * np.arange(len(self.states))

    @property
    def final_energy(self) -> float:
        return float(self.energies[-1])


@dataclass(frozen=True)
class MeasurementBudget:
    raw: int
    reduced: int
    distinct_strings: int


@functools.lru_cache(maxsize=16)
def _reduced_pool(n_qubits: int) -> tuple[PauliString, ...]:
    return tuple(p for p in operator_pool(n_qubits) if y_parity(p) == "odd")


def reduced_pool(n_qubits: int) -> list[PauliString]:
    """Odd-Y strings of the operator pool, order preserved."""
    return list(_reduced_pool(n_qubits))


def measurement_budget(n_qubits: int, h: PauliSum | None = None) -> MeasurementBudget:
    """
    Measurements per QITE step.

    raw counts 3^N expectations for b plus 3^N * 3^N for S. reduced keeps
    odd-Y strings for b and the off-diagonal upper triangle of S + S^T.
    distinct_strings is the number of different Pauli strings actually
    measured in measured mode for Hamiltonian h (default: none given, S only).
    """
    full = 3 ** n_qubits
    pool = _reduced_pool(n_qubits)
    size = len(pool)
    strings = set()
    for i, left in enumerate(pool):
        for right in pool[i + 1:]:
            phase, product = multiply(left, right)
            if phase.imag == 0:
                strings.add(product.letters)
        if h is not None:
            for term in h.terms:
                phase, product = multiply(left, term.string)
                if phase.imag != 0:
                    strings.add(product.letters)
    return MeasurementBudget(raw=full * (full + 1), reduced=size + size * (size - 1) // 2,
                             distinct_strings=len(strings))


def build_linear_system(state: StateVector, h: PauliSum, pool: Sequence[PauliString], c_ratio: float,
                        cfg: QiteConfig, stream: Sequence[int] = ()) -> tuple[np.ndarray, np.ndarray]:
    """
    Assemble M = S + S^T and b for one QITE step.

    Args:
        state (StateVector): Current normalized state.
        h (PauliSum): Hamiltonian.
        pool (Sequence[PauliString]): Odd-Y operator pool.
        c_ratio (float): c_s^2 / c_{s-1}^2 = 1 / (expansion factor).
        cfg (QiteConfig): Settings; mode and linear_system_mode pick the source.
        stream (Sequence[int]): RNG stream identifiers for measured mode.

    Returns:
        tuple: (M, b) as real arrays.
    """
    require_normalized(state)
    scale = 2.0 * np.sqrt(c_ratio)
    if cfg.linear_system_source == "exact":
        psi = state.amplitudes
        vectors = np.stack([apply_string_array(psi, p) for p in pool], axis=1)
        m = 2.0 * np.real(vectors.conj().T @ vectors)
        h_psi = apply_sum_array(psi, h)
        # <sigma_I H> = (sigma_I psi)^dag (H psi)
        b = scale * np.real(-1j * (vectors.conj().T @ h_psi))
        return m, b

    estimator = PauliEstimator(state, cfg.noise, cfg.mode, tuple(stream))
    size = len(pool)
    m = 2.0 * np.eye(size)
    for i in range(size):
        for j in range(i + 1, size):
            phase, product = multiply(pool[i], pool[j])
            if phase.imag == 0:
                m[i, j] = m[j, i] = 2.0 * phase.real * estimator.estimate(product)
    b = np.zeros(size)
    for i, p in enumerate(pool):
        total = 0.0
        for term in h.terms:
            phase, product = multiply(p, term.string)
            # Re(-i * phase * <product>) with <product> real
            if phase.imag != 0:
                total += term.coefficient * phase.imag * estimator.estimate(product)
        b[i] = scale * total
    logger.debug(f"[QITE] Measured linear system from {estimator.measured_strings} distinct strings")
    return m, b


def solve_update(m: np.ndarray, b: np.ndarray, svd_cutoff: float = DEFAULT_SVD_CUTOFF) -> np.ndarray:
    """
    Minimum-norm least-squares solution of M a = b.

    Eigenvalues of the symmetric M below svd_cutoff * lambda_max are dropped.
    """
    m = np.asarray(m, dtype=float)
    b = np.asarray(b, dtype=float)
    if m.shape != (b.size, b.size):
        raise DimensionMismatchError(f"Matrix shape {m.shape} does not match vector length {b.size}")
    if not np.any(m):
        if np.any(b):
            raise InconsistentSystemError("M is zero but b is not")
        return np.zeros(b.size)
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (m + m.T))
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Eigendecomposition of QITE matrix failed: {e}") from e
    keep = eigenvalues >= svd_cutoff * eigenvalues.max()
    basis = eigenvectors[:, keep]
    return basis @ ((basis.T @ b) / eigenvalues[keep])


def measure_energy(state: StateVector, h: PauliSum, cfg: QiteConfig, stream: Sequence[int] = ()) -> float:
    if not cfg.mode.uses_shots:
        return expectation(state, h)
    return measured_expectation(state, h, cfg.noise, cfg.mode, stream)


def _expansion_factor(state: StateVector, h: PauliSum, energy: float, cfg: QiteConfig,
                      stream: Sequence[int]) -> float:
    """<e^{-2 dtau H}> to first (or second) order in dtau."""
    factor = 1.0 - 2.0 * cfg.dtau * energy
    if cfg.c_expansion_order == 2:
        if cfg.mode.uses_shots:
            h_squared = measured_expectation(state, product_sum(h, h), cfg.noise, cfg.mode, stream)
        else:
            h_squared = float(np.linalg.norm(apply_sum_array(state.amplitudes, h)) ** 2)
        factor += 2.0 * cfg.dtau ** 2 * h_squared
    return factor


def _qite_update(state: StateVector, h: PauliSum, c_sq_inv_prev: float, cfg: QiteConfig,
                 stream: Sequence[int], pool: Sequence[PauliString]):
    stream = tuple(stream)
    energy = measure_energy(state, h, cfg, stream + (0,))
    factor = _expansion_factor(state, h, energy, cfg, stream + (1,))
    if factor <= 0:
        raise StepTooLargeError(
            f"Normalization factor {factor:.4g} <= 0 at energy {energy:.4f}; use a smaller dtau than {cfg.dtau}")
    m, b = build_linear_system(state, h, pool, 1.0 / factor, cfg, stream + (2,))
    a = solve_update(m, b, cfg.effective_svd_cutoff)
    generator = PauliSum.from_pairs(zip(a, pool), state.n_qubits)
    new_state = exp_apply(state, generator, cfg.dtau)
    return new_state, energy, c_sq_inv_prev * factor, a


def qite_step(state: StateVector, h: PauliSum, c_sq_inv_prev: float, cfg: QiteConfig,
              stream: Sequence[int] = ()) -> tuple[StateVector, float, float]:
    """
    One imaginary-time step.

    Returns:
        tuple: (next state, measured energy of the input state, updated 1/c^2).
    """
    require_normalized(state)
    new_state, energy, c_sq_inv, _ = _qite_update(
        state, h, c_sq_inv_prev, cfg, stream, reduced_pool(state.n_qubits))
    return new_state, energy, c_sq_inv


def run_qite(initial: StateVector, h: PauliSum, cfg: QiteConfig, stream: Sequence[int] = ()) -> QiteTrace:
    """
    Run cfg.steps imaginary-time steps from initial.

    Args:
        initial (StateVector): Normalized starting state.
        h (PauliSum): Hamiltonian to evolve with.
        cfg (QiteConfig): Settings.
        stream (Sequence[int]): RNG stream identifiers (run, plan entry, ...).

    Returns:
        QiteTrace: steps + 1 states with energies and 1/c^2 values.
    """
    require_normalized(initial, "initial state")
    if h.n_qubits != initial.n_qubits:
        raise DimensionMismatchError(f"Hamiltonian on {h.n_qubits} qubits, state on {initial.n_qubits}")
    pool = reduced_pool(initial.n_qubits)
    states = [initial]
    energies = []
    c_sq_inv = [1.0]
    a_coeffs = []
    state = initial
    for step in range(cfg.steps):
        state, energy, c_next, a = _qite_update(state, h, c_sq_inv[-1], cfg, tuple(stream) + (step,), pool)
        states.append(state)
        energies.append(energy)
        c_sq_inv.append(c_next)
        a_coeffs.append(a)
        logger.debug(f"[QITE] step {step}: E={energy:.8f}, |a|={np.linalg.norm(a):.3e}")
    energies.append(measure_energy(state, h, cfg, tuple(stream) + (cfg.steps, 0)))
    trace = QiteTrace(states, energies, c_sq_inv, a_coeffs, cfg.dtau, h, tuple(pool))
    logger.info(
        f"[QITE] {cfg.steps} steps ({cfg.mode.value}): E {trace.energies[0]:.6f} -> {trace.final_energy:.6f}")
    return trace
