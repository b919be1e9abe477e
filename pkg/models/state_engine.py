"""
Dense statevector arithmetic.

Bit convention: bit i of a basis index is the occupation n_i of site i, so
site 0 is the least significant bit. Bitstrings are rendered site 0 leftmost,
e.g. "0101" has particles on sites 1 and 3 and index 10.
"""
import functools
import itertools
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from config.config import MAX_QUBITS
from models.pauli_algebra import PAULI_LETTERS, PauliString, PauliSum, PauliTerm
from utils.error_handling import (
    DimensionMismatchError,
    InvalidOperandError,
    InvalidParameterError,
    NonHermitianError,
    NumericalError,
)

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-10
HERMITICITY_TOLERANCE = 1e-12
RENORMALIZE_THRESHOLD = 1e-12


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over the 2^N computational basis states."""
    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise InvalidParameterError(f"Qubit count must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        amplitudes = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amplitudes.size != 2 ** self.n_qubits:
            raise DimensionMismatchError(
                f"{amplitudes.size} amplitudes do not match {self.n_qubits} qubits")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def from_array(cls, amplitudes) -> "StateVector":
        size = np.asarray(amplitudes).size
        n_qubits = int(round(np.log2(size))) if size > 0 else 0
        if size == 0 or 2 ** n_qubits != size:
            raise DimensionMismatchError(f"Dimension {size} is not a power of two")
        return cls(amplitudes, n_qubits)

    @property
    def dimension(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        norm = self.norm
        if norm == 0.0:
            raise InvalidOperandError("Cannot normalize the zero vector")
        return StateVector(self.amplitudes / norm, self.n_qubits)

    def real_amplitudes(self) -> np.ndarray:
        return self.amplitudes.real.copy()

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits}, norm={self.norm:.12f})"


def bitstring_to_index(bits: str) -> int:
    """'0101' -> 10 (site 0 leftmost, least significant)."""
    if not bits or any(c not in "01" for c in bits):
        raise InvalidParameterError(f"Invalid bitstring '{bits}'")
    return sum(1 << i for i, c in enumerate(bits) if c == "1")


def index_to_bitstring(index: int, n_qubits: int) -> str:
    return "".join("1" if (index >> i) & 1 else "0" for i in range(n_qubits))


def popcount(values: np.ndarray, n_bits: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    counts = np.zeros_like(values)
    for i in range(n_bits):
        counts += (values >> i) & 1
    return counts


def require_normalized(state: StateVector, context: str = "state") -> None:
    if abs(state.norm - 1.0) > NORM_TOLERANCE:
        raise InvalidOperandError(f"{context} must be normalized, norm = {state.norm:.12g}")


def _check_dimensions(state: StateVector, n_qubits: int) -> None:
    if state.n_qubits != n_qubits:
        raise DimensionMismatchError(
            f"Operator on {n_qubits} qubits applied to a {state.n_qubits}-qubit state")


def from_basis(n_qubits: int, index: int) -> StateVector:
    """Computational basis state |x>."""
    if not 0 <= index < 2 ** n_qubits:
        raise InvalidParameterError(f"Basis index {index} out of range for {n_qubits} qubits")
    amplitudes = np.zeros(2 ** n_qubits, dtype=np.complex128)
    amplitudes[index] = 1.0
    return StateVector(amplitudes, n_qubits)


def from_superposition(n_qubits: int, terms: Sequence[tuple[str, str]]) -> StateVector:
    """
    Equal-weight signed superposition of basis states.

    Args:
        n_qubits (int): Number of sites.
        terms (Sequence[tuple[str, str]]): (sign, bitstring) pairs, sign '+' or '-'.

    Returns:
        StateVector: Normalized by 1/sqrt(len(terms)).
    """
    if not terms:
        raise InvalidParameterError("Superposition needs at least one term")
    amplitudes = np.zeros(2 ** n_qubits, dtype=np.complex128)
    seen = set()
    for sign, bits in terms:
        if len(bits) != n_qubits:
            raise InvalidParameterError(f"Bitstring '{bits}' does not have {n_qubits} sites")
        if bits in seen:
            raise InvalidParameterError(f"Duplicate bitstring '{bits}' in superposition")
        if sign not in ("+", "-"):
            raise InvalidParameterError(f"Invalid sign '{sign}' for '{bits}'")
        seen.add(bits)
        amplitudes[bitstring_to_index(bits)] = 1.0 if sign == "+" else -1.0
    return StateVector(amplitudes / np.sqrt(len(terms)), n_qubits)


@functools.lru_cache(maxsize=4096)
def string_action(letters: str) -> tuple[np.ndarray, np.ndarray]:
    """
    Permutation and phases of a Pauli string: P|x> = phase[x] |target[x]>.

    phase[x] = i^{#Y} (-1)^{popcount(x & zmask)}, target[x] = x ^ xmask.
    """
    p = PauliString(letters)
    indices = np.arange(2 ** p.n_qubits, dtype=np.int64)
    targets = indices ^ p.x_mask
    signs = 1 - 2 * (popcount(indices & p.z_mask, p.n_qubits) % 2)
    phases = (1j ** p.y_count) * signs.astype(np.complex128)
    targets.setflags(write=False)
    phases.setflags(write=False)
    return targets, phases


def apply_string_array(amplitudes: np.ndarray, p: PauliString) -> np.ndarray:
    targets, phases = string_action(p.letters)
    out = np.empty_like(amplitudes, dtype=np.complex128)
    out[targets] = phases * amplitudes
    return out


def apply_sum_array(amplitudes: np.ndarray, op: PauliSum) -> np.ndarray:
    out = np.zeros(amplitudes.shape, dtype=np.complex128)
    for term in op.terms:
        out += term.coefficient * apply_string_array(amplitudes, term.string)
    return out


def apply_pauli(state: StateVector, op: PauliString | PauliSum) -> StateVector:
    """Exact linear action of a string (phased permutation) or a sum (unnormalized)."""
    _check_dimensions(state, op.n_qubits)
    if isinstance(op, PauliString):
        return StateVector(apply_string_array(state.amplitudes, op), state.n_qubits)
    return StateVector(apply_sum_array(state.amplitudes, op), state.n_qubits)


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in a."""
    if a.dimension != b.dimension:
        raise DimensionMismatchError(f"Inner product of dimensions {a.dimension} and {b.dimension}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(inner(a, b)) ** 2


def expectation(state: StateVector, op: PauliString | PauliSum) -> float:
    """
    Real expectation value <psi|O|psi> of a normalized state.

    Raises:
        NonHermitianError: If the imaginary part reaches 1e-10.
    """
    require_normalized(state)
    value = np.vdot(state.amplitudes, apply_pauli(state, op).amplitudes)
    if abs(value.imag) >= 1e-10:
        raise NonHermitianError(f"Expectation has imaginary part {value.imag:.3g}")
    return float(value.real)


def to_dense(op: PauliString | PauliSum) -> np.ndarray:
    """Dense complex matrix of a Pauli string or sum (read-only)."""
    if isinstance(op, PauliString):
        op = PauliSum([PauliTerm(1.0, op)])
    return _dense_sum(op)


@functools.lru_cache(maxsize=256)
def _dense_sum(op: PauliSum) -> np.ndarray:
    dim = 2 ** op.n_qubits
    matrix = np.zeros((dim, dim), dtype=np.complex128)
    columns = np.arange(dim)
    for term in op.terms:
        targets, phases = string_action(term.string.letters)
        matrix[targets, columns] += term.coefficient * phases
    matrix.setflags(write=False)
    return matrix


def hermiticity_defect(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def exp_apply(state: StateVector, generator: PauliSum, angle: float) -> StateVector:
    """
    Apply exp(-i * angle * G) exactly through the eigendecomposition of G.

    Args:
        state (StateVector): Input state.
        generator (PauliSum): Hermitian generator G.
        angle (float): Rotation angle.

    Returns:
        StateVector: The rotated state; renormalized only if drift exceeds 1e-12.
    """
    _check_dimensions(state, generator.n_qubits)
    if angle == 0.0 or len(generator) == 0:
        return StateVector(state.amplitudes.copy(), state.n_qubits)
    matrix = to_dense(generator)
    if hermiticity_defect(matrix) >= HERMITICITY_TOLERANCE:
        raise NonHermitianError("Generator is not Hermitian")
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Eigendecomposition of generator failed: {e}") from e
    rotated = eigenvectors @ (np.exp(-1j * angle * eigenvalues) * (eigenvectors.conj().T @ state.amplitudes))
    before = np.linalg.norm(state.amplitudes)
    after = np.linalg.norm(rotated)
    if abs(after - before) > RENORMALIZE_THRESHOLD:
        logger.debug(f"[STATE] Renormalizing after exponential, drift {abs(after - before):.3g}")
        rotated = rotated * (before / after)
    return StateVector(rotated, state.n_qubits)


def pauli_decompose(matrix: np.ndarray, n_qubits: int, tol: float = 1e-13) -> PauliSum:
    """
    Expand a Hermitian matrix in Pauli strings: c_P = Tr(P M) / 2^N.

    Raises:
        NonHermitianError: If a coefficient comes out complex.
    """
    matrix = np.asarray(matrix, dtype=np.complex128)
    dim = 2 ** n_qubits
    if matrix.shape != (dim, dim):
        raise DimensionMismatchError(f"Matrix shape {matrix.shape} does not match {n_qubits} qubits")
    columns = np.arange(dim)
    pairs = []
    for letters in itertools.product(PAULI_LETTERS, repeat=n_qubits):
        letters = "".join(letters)
        targets, phases = string_action(letters)
        # Tr(P M) = sum_x P[target[x], x] M[x, target[x]]
        value = np.sum(phases * matrix[columns, targets]) / dim
        if abs(value.imag) > 1e-10:
            raise NonHermitianError(f"Complex coefficient {value} for {letters}")
        if abs(value.real) > tol:
            pairs.append((float(value.real), letters))
    return PauliSum.from_pairs(pairs, n_qubits)
