"""
Quantum Lanczos: a Krylov space spanned by states of one QITE trajectory.

The overlap and Hamiltonian matrices are either built from the recorded
energies and normalizations (T_ll' = c_l c_l' / c_r^2, H_ll' = T_ll' E_r with
r = (l + l') / 2) or, when statevectors are trusted, from direct overlaps.
The pencil (H, T) is solved by whitening T, candidates are reconstructed
as states and filtered by their energy uncertainty.
"""
import dataclasses
import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from config.config import (
    DEFAULT_ACCEPT_DELTA,
    DEFAULT_KRYLOV_DIM,
    DEFAULT_SCAN_STOP,
    KRYLOV_FLOOR,
    TIE_TOLERANCE,
)
from models.noise_model import MeasurementMode, NoiseConfig, measured_expectation
from models.pauli_algebra import PauliSum
from models.state_engine import StateVector, apply_sum_array, require_normalized
from solvers.qite import QiteTrace
from utils.error_handling import (
    DegenerateKrylovError,
    InvalidOperandError,
    InvalidParameterError,
    NoConvergenceError,
    NumericalError,
)

logger = logging.getLogger(__name__)

KRYLOV_SOURCES = ("auto", "energies", "overlap")


@dataclass(frozen=True)
class QLanczosConfig:
    accept_delta: float = DEFAULT_ACCEPT_DELTA
    scan_stop: float = DEFAULT_SCAN_STOP
    dim: int = DEFAULT_KRYLOV_DIM
    floor: float = KRYLOV_FLOOR
    krylov_source: str = "auto"
    early_stop: bool = False

    def __post_init__(self):
        if self.accept_delta < 0:
            raise InvalidParameterError(f"accept_delta must be >= 0, got {self.accept_delta}")
        if self.scan_stop <= 0:
            raise InvalidParameterError(f"scan_stop must be positive, got {self.scan_stop}")
        if int(self.dim) != self.dim or self.dim < 2:
            raise InvalidParameterError(f"Krylov dimension must be an integer >= 2, got {self.dim}")
        if self.floor <= 0:
            raise InvalidParameterError(f"floor must be positive, got {self.floor}")
        if self.krylov_source not in KRYLOV_SOURCES:
            raise InvalidParameterError(
                f"krylov_source must be one of {KRYLOV_SOURCES}, got '{self.krylov_source}'")

    def replace(self, **changes) -> "QLanczosConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class KrylovSelection:
    """Even QITE step indices spanning the Krylov space."""
    indices: tuple[int, ...]

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        if not indices:
            raise InvalidParameterError("Krylov selection needs at least one index")
        if any(i < 0 or i % 2 for i in indices):
            raise InvalidParameterError(f"Krylov indices must be even and nonnegative, got {indices}")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise InvalidParameterError(f"Krylov indices must be strictly increasing, got {indices}")
        object.__setattr__(self, "indices", indices)

    @property
    def dimension(self) -> int:
        return len(self.indices)

    def __str__(self) -> str:
        return "[" + ",".join(str(i) for i in self.indices) + "]"


@dataclass(eq=False)
class Candidate:
    energy: float
    x: np.ndarray
    state: StateVector
    delta_e: float
    selection: KrylovSelection
    pencil_energy: float = float("nan")


@dataclass(frozen=True)
class ScanRecord:
    selection: KrylovSelection
    root: int
    energy: float
    delta_e: float
    accepted: bool


@dataclass(eq=False)
class ScanResult:
    best: Candidate
    records: list[ScanRecord] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return records_frame(self.records)


def records_frame(records: Sequence[ScanRecord]) -> pd.DataFrame:
    """Scan diagnostics as a DataFrame with columns l, m, root, E, delta_e, accepted."""
    rows = [{
        "l": r.selection.indices[0],
        "m": r.selection.indices[-1],
        "selection": str(r.selection),
        "root": r.root,
        "E": r.energy,
        "delta_e": r.delta_e,
        "accepted": bool(r.accepted),
    } for r in records]
    return pd.DataFrame(rows, columns=["l", "m", "selection", "root", "E", "delta_e", "accepted"])


def _resolve_source(source: str, mode: MeasurementMode) -> str:
    if source == "auto":
        return "energies" if mode.uses_shots else "overlap"
    return source


def krylov_matrices(trace: QiteTrace, sel: KrylovSelection, source: str = "energies") -> tuple[np.ndarray, np.ndarray]:
    """
    Overlap T and Hamiltonian Hm matrices of the Krylov space.

    Args:
        trace (QiteTrace): QITE trajectory.
        sel (KrylovSelection): Even step indices.
        source (str): "energies" uses recorded energies and 1/c^2 values,
            "overlap" uses statevector overlaps with trace.hamiltonian.

    Returns:
        tuple: (T, Hm) real symmetric matrices.
    """
    if max(sel.indices) >= len(trace):
        raise InvalidParameterError(f"Selection {sel} exceeds trace length {len(trace)}")
    dim = sel.dimension
    t = np.empty((dim, dim))
    hm = np.empty((dim, dim))
    if source == "overlap":
        vectors = np.stack([trace.states[i].amplitudes for i in sel.indices], axis=1)
        h_vectors = np.stack([apply_sum_array(v, trace.hamiltonian) for v in vectors.T], axis=1)
        t = np.real(vectors.conj().T @ vectors)
        hm = np.real(vectors.conj().T @ h_vectors)
        return 0.5 * (t + t.T), 0.5 * (hm + hm.T)
    if source != "energies":
        raise InvalidParameterError(f"Unknown Krylov source '{source}'")
    for a, l in enumerate(sel.indices):
        for b, lp in enumerate(sel.indices):
            r = (l + lp) // 2
            if r >= len(trace):
                raise InvalidParameterError(f"Midpoint {r} out of trace range {len(trace)}")
            # c_l c_l' / c_r^2 with c^2 = 1 / c_sq_inv
            t[a, b] = trace.c_sq_inv[r] / np.sqrt(trace.c_sq_inv[l] * trace.c_sq_inv[lp])
            hm[a, b] = t[a, b] * trace.energies[r]
    off_diagonal = t[~np.eye(dim, dtype=bool)]
    if off_diagonal.size and np.max(np.abs(off_diagonal)) > 1.0:
        logger.warning(f"[QLANCZOS] {sel}: overlap element {np.max(np.abs(off_diagonal)):.4f} exceeds 1")
    return t, hm


def pencil_quadratic_roots(t: np.ndarray, hm: np.ndarray) -> tuple[float, float]:
    """Closed-form eigenvalues of a 2x2 pencil: det(Hm - E T) = 0."""
    a = t[0, 0] * t[1, 1] - t[0, 1] ** 2
    b = -(hm[0, 0] * t[1, 1] + hm[1, 1] * t[0, 0] - 2.0 * hm[0, 1] * t[0, 1])
    c = hm[0, 0] * hm[1, 1] - hm[0, 1] ** 2
    if abs(a) < 1e-300:
        raise DegenerateKrylovError("Singular 2x2 overlap matrix")
    discriminant = b * b - 4.0 * a * c
    if discriminant < 0:
        raise NumericalError(f"Pencil has complex roots (discriminant {discriminant:.3g})")
    root = np.sqrt(discriminant)
    # numerically stable pair
    q = -0.5 * (b + np.copysign(root, b))
    roots = sorted([q / a, c / q] if q != 0 else [-b / (2 * a)] * 2)
    return float(roots[0]), float(roots[1])


def solve_gen_eig(t: np.ndarray, hm: np.ndarray, floor: float = KRYLOV_FLOOR) -> list[tuple[float, np.ndarray]]:
    """
    Eigenpairs of the pencil Hm x = E T x, ascending in E.

    Eigendirections of T below floor are discarded; the rest are whitened
    and the reduced symmetric problem is solved.
    """
    t = np.asarray(t, dtype=float)
    hm = np.asarray(hm, dtype=float)
    if t.shape != hm.shape or t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise InvalidOperandError(f"Pencil shapes {t.shape} and {hm.shape} do not match")
    if t.shape[0] < 2:
        raise InvalidOperandError("Pencil dimension must be at least 2")
    try:
        weights, vectors = np.linalg.eigh(0.5 * (t + t.T))
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Overlap eigendecomposition failed: {e}") from e
    keep = weights >= floor
    if not np.any(keep):
        raise DegenerateKrylovError(f"Overlap matrix has no eigenvalue above {floor:g}")
    if np.any(weights < -floor):
        logger.warning(f"[QLANCZOS] Overlap matrix is indefinite (min eigenvalue {weights.min():.3g})")
    whitening = vectors[:, keep] / np.sqrt(weights[keep])
    reduced = whitening.T @ (0.5 * (hm + hm.T)) @ whitening
    energies, coefficients = np.linalg.eigh(0.5 * (reduced + reduced.T))
    return [(float(e), whitening @ coefficients[:, k]) for k, e in enumerate(energies)]


def reconstruct(trace: QiteTrace, sel: KrylovSelection, x: np.ndarray) -> StateVector:
    """Normalized combination sum_k x_k |Phi_{sel_k}>."""
    x = np.asarray(x, dtype=float)
    if x.size != sel.dimension:
        raise InvalidOperandError(f"Coefficient vector of length {x.size} for selection {sel}")
    if not np.any(x):
        raise InvalidOperandError("Cannot reconstruct from a zero coefficient vector")
    combined = np.zeros(trace.states[0].dimension, dtype=np.complex128)
    for coefficient, index in zip(x, sel.indices):
        combined += coefficient * trace.states[index].amplitudes
    norm = np.linalg.norm(combined)
    if norm == 0.0:
        raise InvalidOperandError(f"Selection {sel} with coefficients {x} cancels exactly")
    return StateVector(combined / norm, trace.states[0].n_qubits)


def uncertainty(state: StateVector, h: PauliSum) -> float:
    """Energy standard deviation ||(H - <H>) psi|| evaluated on the statevector."""
    require_normalized(state)
    h_psi = apply_sum_array(state.amplitudes, h)
    energy = np.real(np.vdot(state.amplitudes, h_psi))
    return float(np.linalg.norm(h_psi - energy * state.amplitudes))


def _selections(n_states: int, dim: int):
    evens = range(0, n_states, 2)
    combos = itertools.combinations(evens, dim)
    return sorted(combos, key=lambda c: (c[-1],) + c[:-1])


def scan(trace: QiteTrace, h: PauliSum, delta: float = DEFAULT_ACCEPT_DELTA, dim: int = DEFAULT_KRYLOV_DIM, *,
         config: QLanczosConfig | None = None, mode: "MeasurementMode | str" = MeasurementMode.EXACT,
         noise: NoiseConfig | None = None, stream: Sequence[int] = ()) -> ScanResult:
    """
    Scan Krylov selections of a trace and return the minimum-uncertainty candidate.

    Selections are visited by increasing last index, then lexicographically.
    Every pencil root is recorded; candidates with delta_e <= delta are
    accepted. Ties in delta_e (1e-10) go to the earliest selection.

    Args:
        trace (QiteTrace): QITE trajectory.
        h (PauliSum): Hamiltonian for the uncertainty filter and energies.
        delta (float): Acceptance threshold on delta_e.
        dim (int): Krylov dimension (2 recommended; larger is experimental).
        config (QLanczosConfig | None): Floor, Krylov source and stopping rule.
        mode (MeasurementMode | str): Exact mode reports pencil energies, noisy
            modes re-measure <H> on accepted candidates.
        noise (NoiseConfig | None): Noise parameters for noisy modes.
        stream (Sequence[int]): RNG stream identifiers.

    Returns:
        ScanResult: Best candidate and all evaluated records.
    """
    config = config or QLanczosConfig(accept_delta=delta, dim=dim)
    mode = MeasurementMode.parse(mode)
    if mode.uses_shots and noise is None:
        raise InvalidParameterError("Noisy scan needs a NoiseConfig")
    if dim < 2:
        raise InvalidParameterError(f"Krylov dimension must be >= 2, got {dim}")
    if len(trace) < 2 * dim:
        raise InvalidParameterError(f"Trace of length {len(trace)} is too short for dimension {dim}")
    if dim > 2:
        logger.warning(f"[QLANCZOS] Krylov dimension {dim} is experimental")
    source = _resolve_source(config.krylov_source, mode)
    records: list[ScanRecord] = []
    best: Candidate | None = None
    best_seen = float("inf")
    last_m = None
    for combo in _selections(len(trace), dim):
        if config.early_stop and last_m is not None and combo[-1] != last_m and best is not None \
                and best.delta_e < config.scan_stop:
            break
        last_m = combo[-1]
        sel = KrylovSelection(combo)
        t, hm = krylov_matrices(trace, sel, source)
        try:
            roots = solve_gen_eig(t, hm, config.floor)
        except DegenerateKrylovError as e:
            logger.debug(f"[QLANCZOS] {sel}: {e}")
            records.append(ScanRecord(sel, -1, float("nan"), float("inf"), False))
            continue
        for root, (pencil_energy, x) in enumerate(roots):
            state = reconstruct(trace, sel, x)
            delta_e = uncertainty(state, h)
            accepted = bool(delta_e <= delta)
            energy = pencil_energy
            if accepted and mode.uses_shots:
                energy = measured_expectation(state, h, noise, mode, tuple(stream) + sel.indices + (root,))
            records.append(ScanRecord(sel, root, energy, delta_e, accepted))
            best_seen = min(best_seen, delta_e)
            if accepted and (best is None or delta_e < best.delta_e - TIE_TOLERANCE):
                best = Candidate(energy, x, state, delta_e, sel, pencil_energy)
    if best is None:
        raise NoConvergenceError(
            f"No Krylov candidate with delta_e <= {delta} among {len(records)} evaluated", best_seen, records)
    logger.info(f"[QLANCZOS] Best {best.selection}: E={best.energy:.8f}, delta_e={best.delta_e:.3e}")
    return ScanResult(best, records)
