"""
Symmetry tools, the initial-state library and assembly of the full
spectrum from QITE + QLanczos runs.

Assembly: run every plan entry (negating energies of -H runs), inject the
analytic eigenstates, drop near-duplicates, expand degenerate levels by
translation/reflection orbits, keep a linearly independent set ordered by
uncertainty, orthonormalize, verify completeness and emit a Spectrum.
"""
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from config.config import (
    DEDUPE_FIDELITY,
    DEFLATION_WEIGHT,
    GROUP_TOL_EXACT,
    GROUP_TOL_NOISY,
    LOWDIN_FLOOR,
    RANK_TOLERANCE,
    REALNESS_TOLERANCE,
)
from models.noise_model import MeasurementMode, NoiseConfig, measured_expectation
from models.pauli_algebra import PauliString, PauliSum
from models.state_engine import (
    StateVector,
    expectation,
    from_superposition,
    pauli_decompose,
    popcount,
    to_dense,
)
from solvers.exact_oracle import Spectrum, degeneracy_groups, sign_normalize_rows
from solvers.qite import QiteConfig, run_qite
from solvers.qlanczos import QLanczosConfig, ScanResult, scan, uncertainty
from utils.error_handling import (
    InvalidOperandError,
    InvalidParameterError,
    MissingLevelsError,
    NotAnEigenstateError,
    NumericalError,
    RealnessViolationError,
    UnsupportedSizeError,
)
from utils.state_parsing import parse_state_spec

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-8


# ==== SYMMETRY OPERATORS ====
def _translated_index(x: int, n: int) -> int:
    # site i -> i + 1 (mod n)
    return ((x << 1) | (x >> (n - 1))) & ((1 << n) - 1)


def _reflected_index(x: int, n: int) -> int:
    # site i -> -i (mod n)
    return sum(1 << ((-i) % n) for i in range(n) if (x >> i) & 1)


def _permute(state: StateVector, mapping) -> StateVector:
    n = state.n_qubits
    out = np.zeros(state.dimension, dtype=np.complex128)
    for x in range(state.dimension):
        out[mapping(x, n)] = state.amplitudes[x]
    return StateVector(out, n)


def translate(state: StateVector) -> StateVector:
    """Relabel sites i -> i + 1 mod N: |001> -> |100>, |100> -> |010>."""
    return _permute(state, _translated_index)


def reflect(state: StateVector) -> StateVector:
    """Relabel sites i -> -i mod N (reflection about site 0)."""
    return _permute(state, _reflected_index)


def parity_op(state: StateVector) -> StateVector:
    """Multiply each amplitude by (-1)^(total occupation)."""
    signs = 1.0 - 2.0 * (popcount(np.arange(state.dimension), state.n_qubits) % 2)
    return StateVector(signs * state.amplitudes, state.n_qubits)


def _operator_matrix(operation, n_qubits: int) -> np.ndarray:
    dim = 2 ** n_qubits
    columns = []
    for x in range(dim):
        basis = np.zeros(dim, dtype=np.complex128)
        basis[x] = 1.0
        columns.append(operation(StateVector(basis, n_qubits)).amplitudes)
    return np.stack(columns, axis=1)


@dataclass(frozen=True)
class CommutatorReport:
    parity: float
    translation: float
    reflection: float

    def all_below(self, tol: float = 1e-10) -> bool:
        return max(self.parity, self.translation, self.reflection) < tol


def commutator_checks(h: PauliSum) -> CommutatorReport:
    """Largest element of [H, parity], [H, translation] and [H, reflection]."""
    matrix = to_dense(h)

    def defect(operation) -> float:
        u = _operator_matrix(operation, h.n_qubits)
        return float(np.max(np.abs(matrix @ u - u @ matrix)))

    report = CommutatorReport(defect(parity_op), defect(translate), defect(reflect))
    logger.debug(f"[SYMMETRY] {report}")
    return report


def spectral_flip_defect(h: PauliSum) -> float:
    """
    max |U H U^dag + H| for U = X^N prod_{odd i} Z_i.

    Zero for the Ising chain with even N, where U maps E to -E.
    """
    n = h.n_qubits
    letters = "".join("Y" if i % 2 else "X" for i in range(n))
    # X Z = -i Y on odd sites; the global phase drops out of U H U^dag
    u = to_dense(PauliString(letters))
    matrix = to_dense(h)
    return float(np.max(np.abs(u @ matrix @ u.conj().T + matrix)))


# ==== SYMMETRY TAGS & LIBRARY ====
@dataclass(frozen=True)
class SymmetryTags:
    parity: str
    reflection: str
    translation_invariant: bool


def symmetry_tags(state: StateVector) -> SymmetryTags:
    """Measure parity, reflection and translation labels by applying the operators."""
    psi = state.amplitudes
    parity_value = np.vdot(psi, parity_op(state).amplitudes).real / np.vdot(psi, psi).real
    if abs(parity_value - 1.0) < SYMMETRY_TOLERANCE:
        parity = "even"
    elif abs(parity_value + 1.0) < SYMMETRY_TOLERANCE:
        parity = "odd"
    else:
        raise InvalidOperandError(f"State has no definite parity (<P> = {parity_value:.4f})")
    reflected = reflect(state).amplitudes
    if np.linalg.norm(reflected - psi) < SYMMETRY_TOLERANCE:
        reflection = "even"
    elif np.linalg.norm(reflected + psi) < SYMMETRY_TOLERANCE:
        reflection = "odd"
    else:
        reflection = "none"
    invariant = bool(np.linalg.norm(translate(state).amplitudes - psi) < SYMMETRY_TOLERANCE)
    return SymmetryTags(parity, reflection, invariant)


@dataclass(frozen=True, eq=False)
class LibraryState:
    name: str
    state: StateVector
    tags: SymmetryTags
    analytic: bool = False


_INITIAL_STATES = {
    3: {
        "100": ["100"], "010": ["010"], "001": ["001"], "111": ["111"],
        "110": ["110"], "011": ["011"], "101": ["101"], "000": ["000"],
        "w3-twoparticle": ["+110", "+101", "+011"],
        "w3-oneparticle": ["+100", "+010", "+001"],
    },
    4: {
        "1000": ["1000"], "0100": ["0100"], "0000": ["0000"], "1111": ["1111"],
        "w4-single": ["+0001", "+0010", "+0100", "+1000"],
        "w4-single-alternating": ["+0001", "-0010", "+0100", "-1000"],
        "even-seven": ["+0000", "+1100", "+0110", "+0101", "+1010", "+1001", "+1111"],
    },
}

# degenerate levels fixed by symmetry alone
_ANALYTIC_STATES = {
    3: {
        "eig-one-particle-a": ["+001", "-010"],
        "eig-one-particle-b": ["+100", "-001"],
        "eig-two-particle-a": ["+110", "-101"],
        "eig-two-particle-b": ["+011", "-110"],
    },
    4: {
        "eig-one-particle-a": ["+0001", "-0100"],
        "eig-one-particle-b": ["+0010", "-1000"],
        "eig-two-particle-a": ["+0101", "-1010"],
        "eig-two-particle-b": ["+0011", "-0110"],
        "eig-two-particle-c": ["+0110", "-1001"],
        "eig-two-particle-d": ["+1001", "-1100"],
        "eig-three-particle-a": ["+1110", "-1011"],
        "eig-three-particle-b": ["+1101", "-0111"],
    },
}


def _library_entry(name: str, n: int, terms: Sequence[str], analytic: bool) -> LibraryState:
    pairs = [(t[0], t[1:]) if t[0] in "+-" else ("+", t) for t in terms]
    state = from_superposition(n, pairs)
    return LibraryState(name, state, symmetry_tags(state), analytic)


def initial_state_library(n_sites: int) -> dict[str, LibraryState]:
    """
    Named initial states and analytic eigenstates for N = 3 or 4.

    Args:
        n_sites (int): Chain length.

    Returns:
        dict[str, LibraryState]: Name to state with verified symmetry tags.
    """
    if n_sites not in _INITIAL_STATES:
        raise UnsupportedSizeError(f"No initial-state library for N={n_sites} (supported: 3, 4)")
    library = {}
    for name, terms in _INITIAL_STATES[n_sites].items():
        library[name] = _library_entry(name, n_sites, terms, analytic=False)
    for name, terms in _ANALYTIC_STATES[n_sites].items():
        library[name] = _library_entry(name, n_sites, terms, analytic=True)
    return library


# ==== DEGENERACY ====
def _gram_schmidt_residual(vector: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    residual = vector.copy()
    for _ in range(2):
        for b in basis:
            residual = residual - np.vdot(b, residual) * b
    return residual


def degenerate_partners(state: StateVector, h: PauliSum, tol: float = RANK_TOLERANCE) -> list[StateVector]:
    """
    Orthonormal basis of the degenerate level containing state.

    The orbit of state under translation and reflection is Gram-Schmidt
    orthonormalized; images whose residual norm is at most tol are dropped.

    Raises:
        NotAnEigenstateError: If the energy uncertainty of state reaches tol.
    """
    delta_e = uncertainty(state, h)
    if delta_e >= tol:
        raise NotAnEigenstateError(f"State has energy uncertainty {delta_e:.4g} >= {tol}")
    energy = expectation(state, h)
    basis = [state.amplitudes / np.linalg.norm(state.amplitudes)]
    frontier = [state]
    while frontier:
        current = frontier.pop(0)
        for image in (translate(current), reflect(current)):
            residual = _gram_schmidt_residual(image.amplitudes, basis)
            norm = np.linalg.norm(residual)
            if norm > tol:
                basis.append(residual / norm)
                frontier.append(image)
    partners = [StateVector(b, state.n_qubits) for b in basis]
    for partner in partners[1:]:
        if abs(expectation(partner, h) - energy) > tol:
            raise NotAnEigenstateError("Symmetry images do not share the input energy")
    return partners


# ==== PLAN ====
@dataclass(frozen=True)
class PlanRun:
    """One QITE + QLanczos run; deflate names earlier runs or library states to penalize."""
    name: str
    initial: str
    negate_h: bool = False
    deflate: tuple[str, ...] = ()
    qite: QiteConfig | None = None


@dataclass(frozen=True)
class PipelinePlan:
    runs: tuple[PlanRun, ...]
    analytic: tuple[str, ...] = ()
    dedupe_fidelity: float = DEDUPE_FIDELITY
    penalty_weight: float = DEFLATION_WEIGHT
    rank_tolerance: float = RANK_TOLERANCE
    group_tolerance: float | None = None

    def __post_init__(self):
        if not self.runs:
            raise InvalidParameterError("A pipeline plan needs at least one run")
        if not 0 < self.dedupe_fidelity <= 1:
            raise InvalidParameterError(f"dedupe_fidelity must be in (0, 1], got {self.dedupe_fidelity}")
        if self.penalty_weight <= 0 or self.rank_tolerance <= 0:
            raise InvalidParameterError("penalty_weight and rank_tolerance must be positive")
        if self.group_tolerance is not None and self.group_tolerance <= 0:
            raise InvalidParameterError(f"group tolerance must be positive, got {self.group_tolerance}")
        names = [r.name for r in self.runs]
        if len(set(names)) != len(names):
            raise InvalidParameterError(f"Duplicate run names in plan: {names}")

    def without_negated_runs(self) -> "PipelinePlan":
        runs = tuple(r for r in self.runs if not r.negate_h)
        return dataclasses.replace(self, runs=runs)


def default_plan(n_sites: int) -> PipelinePlan:
    """Runs and analytic injections that cover every level for N = 3 or 4."""
    if n_sites == 3:
        runs = (
            PlanRun("ground", "lib:w3-twoparticle"),
            PlanRun("odd-low", "100"),
            PlanRun("odd-top", "100", negate_h=True),
            PlanRun("even-top", "lib:w3-twoparticle", negate_h=True),
            PlanRun("pair-top", "110", negate_h=True),
        )
    elif n_sites == 4:
        runs = (
            PlanRun("ground", "lib:even-seven"),
            PlanRun("odd-low", "1000"),
            PlanRun("alternating-low", "lib:w4-single-alternating"),
            PlanRun("ground-deflated", "0000", deflate=("ground",)),
            PlanRun("top", "0000", negate_h=True),
            PlanRun("single-top", "lib:w4-single", negate_h=True),
            PlanRun("alternating-top", "lib:w4-single-alternating", negate_h=True),
            PlanRun("top-deflated", "0000", negate_h=True, deflate=("top",)),
        )
    else:
        raise UnsupportedSizeError(f"No default plan for N={n_sites} (supported: 3, 4)")
    analytic = tuple(_ANALYTIC_STATES[n_sites])
    return PipelinePlan(runs, analytic)


def projector_penalty(states: Sequence[StateVector], weight: float, n_qubits: int) -> PauliSum:
    """weight * sum_k |phi_k><phi_k| as a real Pauli sum."""
    matrix = np.zeros((2 ** n_qubits, 2 ** n_qubits))
    for state in states:
        phi = state.amplitudes.real
        matrix += np.outer(phi, phi)
    return pauli_decompose(weight * matrix, n_qubits)


# ==== ASSEMBLY ====
@dataclass(eq=False)
class AssembledCandidate:
    source: str
    energy: float
    delta_e: float
    state: StateVector


@dataclass(eq=False)
class PipelineResult:
    spectrum: Spectrum
    candidates: list[AssembledCandidate]
    scans: dict[str, ScanResult]
    groups: list[list[int]]
    energy_sum: float
    sources: list[str] = field(default_factory=list)


def _run_entry(run: PlanRun, h: PauliSum, qite_cfg: QiteConfig, ql_cfg: QLanczosConfig, mode: MeasurementMode,
               noise: NoiseConfig | None, penalty_states: list[StateVector], penalty_weight: float,
               stream: tuple[int, ...]) -> ScanResult:
    initial = parse_state_spec(run.initial, h.n_qubits)
    signed = -h if run.negate_h else h
    evolving = signed
    if penalty_states:
        evolving = signed + projector_penalty(penalty_states, penalty_weight, h.n_qubits)
    cfg = run.qite or qite_cfg
    trace = run_qite(initial, evolving, cfg, stream)
    result = scan(trace, signed, ql_cfg.accept_delta, ql_cfg.dim, config=ql_cfg, mode=mode,
                  noise=noise, stream=stream + (1,))
    logger.info(f"[PIPELINE] Run '{run.name}': E={(-1 if run.negate_h else 1) * result.best.energy:.8f} "
                f"(delta_e={result.best.delta_e:.2e})")
    return result


def _stages(plan: PipelinePlan, library_names: set[str]) -> list[list[int]]:
    names = {r.name: i for i, r in enumerate(plan.runs)}
    for run in plan.runs:
        for ref in run.deflate:
            if ref not in names and ref not in library_names:
                raise InvalidParameterError(f"Run '{run.name}' deflates unknown state '{ref}'")
    done: set[str] = set()
    stages = []
    remaining = list(range(len(plan.runs)))
    while remaining:
        ready = [i for i in remaining
                 if all(ref in done or ref not in names for ref in plan.runs[i].deflate)]
        if not ready:
            raise InvalidParameterError("Deflation references form a cycle")
        stages.append(ready)
        done.update(plan.runs[i].name for i in ready)
        remaining = [i for i in remaining if i not in ready]
    return stages


def _lowdin(vectors: np.ndarray, floor: float = LOWDIN_FLOOR) -> np.ndarray:
    """
    Symmetric orthonormalization of the rows.

    Raises:
        NumericalError: If the rows are nearly dependent (overlap eigenvalue below floor).
    """
    overlap = vectors.conj() @ vectors.T
    weights, basis = np.linalg.eigh(overlap)
    if weights.min() < floor:
        raise NumericalError(f"Nearly dependent states, smallest overlap eigenvalue {weights.min():.3g}")
    inverse_root = basis @ np.diag(1.0 / np.sqrt(weights)) @ basis.conj().T
    return inverse_root.T @ vectors


def run_pipeline(plan: PipelinePlan, h: PauliSum, *, mode: "MeasurementMode | str" = MeasurementMode.EXACT,
                 noise: NoiseConfig | None = None, qite: QiteConfig | None = None,
                 qlanczos: QLanczosConfig | None = None, jobs: int = 1,
                 stream: Sequence[int] = ()) -> PipelineResult:
    """
    Run every plan entry and assemble the complete spectrum of h.

    Args:
        plan (PipelinePlan): Runs and analytic injections.
        h (PauliSum): Hamiltonian (real, even-Y).
        mode (MeasurementMode | str): Measurement mode for energies.
        noise (NoiseConfig | None): Noise parameters for noisy modes.
        qite (QiteConfig | None): Default QITE settings for runs without their own.
        qlanczos (QLanczosConfig | None): Scan settings.
        jobs (int): Parallel workers for independent runs.
        stream (Sequence[int]): RNG stream identifiers (e.g. the run repetition).

    Returns:
        PipelineResult: Spectrum plus diagnostics.
    """
    mode = MeasurementMode.parse(mode)
    noise = noise or NoiseConfig()
    qite_cfg = qite or QiteConfig(mode=mode, noise=noise)
    ql_cfg = qlanczos or QLanczosConfig()
    stream = tuple(stream)
    n = h.n_qubits
    dim = 2 ** n
    library = initial_state_library(n) if n in _INITIAL_STATES else {}

    # QITE + QLanczos per run, stage by stage so deflation targets exist
    scans: dict[str, ScanResult] = {}
    for stage in _stages(plan, set(library)):
        jobs_args = []
        for index in stage:
            run = plan.runs[index]
            penalty = [scans[ref].best.state if ref in scans else library[ref].state for ref in run.deflate]
            jobs_args.append((run, h, qite_cfg, ql_cfg, mode, noise if mode.uses_shots else None,
                              penalty, plan.penalty_weight, stream + (index,)))
        results = Parallel(n_jobs=jobs)(delayed(_run_entry)(*args) for args in jobs_args)
        for index, result in zip(stage, results):
            scans[plan.runs[index].name] = result

    candidates: list[AssembledCandidate] = []
    for run in plan.runs:
        best = scans[run.name].best
        energy = (-best.energy if run.negate_h else best.energy) if mode.uses_shots else expectation(best.state, h)
        candidates.append(AssembledCandidate(f"run:{run.name}", energy, best.delta_e, best.state))
    for name in plan.analytic:
        if name not in library:
            raise InvalidParameterError(f"Unknown analytic state '{name}' for N={n}")
        state = library[name].state
        candidates.append(AssembledCandidate(f"analytic:{name}", expectation(state, h), uncertainty(state, h), state))

    # near-duplicates keep the lower uncertainty
    kept: list[AssembledCandidate] = []
    for candidate in sorted(candidates, key=lambda c: c.delta_e):
        if all(abs(np.vdot(k.state.amplitudes, candidate.state.amplitudes)) ** 2 <= plan.dedupe_fidelity
               for k in kept):
            kept.append(candidate)
        else:
            logger.debug(f"[PIPELINE] Dropping duplicate {candidate.source}")

    expanded: list[AssembledCandidate] = []
    for candidate in kept:
        try:
            partners = degenerate_partners(candidate.state, h, plan.rank_tolerance)
        except NotAnEigenstateError:
            partners = [candidate.state]
        for k, partner in enumerate(partners):
            source = candidate.source if k == 0 else f"{candidate.source}+partner{k}"
            energy = candidate.energy if k == 0 or mode.uses_shots else expectation(partner, h)
            expanded.append(AssembledCandidate(source, energy, candidate.delta_e, partner))

    # linearly independent set, most accurate first
    accepted: list[AssembledCandidate] = []
    basis: list[np.ndarray] = []
    for candidate in sorted(expanded, key=lambda c: c.delta_e):
        residual = _gram_schmidt_residual(candidate.state.amplitudes, basis)
        norm = np.linalg.norm(residual)
        if norm > plan.rank_tolerance:
            accepted.append(candidate)
            basis.append(residual / norm)
    if len(accepted) != dim:
        raise MissingLevelsError("Incomplete spectrum", sorted(c.energy for c in accepted), dim)

    vectors = np.stack([c.state.amplitudes for c in accepted])
    group_tol = plan.group_tolerance or (GROUP_TOL_NOISY if mode.uses_shots else GROUP_TOL_EXACT)
    try:
        for group in degeneracy_groups([c.energy for c in accepted], group_tol):
            if len(group) > 1:
                vectors[group] = _lowdin(vectors[group])
        if np.max(np.abs(vectors.conj() @ vectors.T - np.eye(dim))) > 1e-12:
            vectors = _lowdin(vectors)
    except NumericalError as e:
        raise MissingLevelsError(str(e), sorted(c.energy for c in accepted), dim) from e

    imaginary = float(np.max(np.abs(vectors.imag)))
    if imaginary >= REALNESS_TOLERANCE:
        raise RealnessViolationError(f"Eigenvector amplitudes have imaginary parts up to {imaginary:.3g}")
    rows = vectors.real
    energies = []
    for k, row in enumerate(rows):
        state = StateVector(row, n)
        if mode.uses_shots:
            energies.append(measured_expectation(state, h, noise, mode, stream + (len(plan.runs), k)))
        else:
            energies.append(expectation(state, h))
    energies = np.array(energies)
    order = np.argsort(energies, kind="stable")
    spectrum = Spectrum(energies[order], sign_normalize_rows(rows[order]))

    defect = spectrum.orthonormality_defect()
    orthonormality_tol = 1e-6
    if defect >= orthonormality_tol:
        raise MissingLevelsError(f"Assembled states are not orthonormal (defect {defect:.3g})",
                                 spectrum.energies, dim)
    energy_sum = float(spectrum.energies.sum())
    sum_tol = group_tol * np.sqrt(dim) if mode.uses_shots else 1e-6
    if abs(energy_sum) > sum_tol:
        raise MissingLevelsError(f"Energies sum to {energy_sum:.3g}, not 0", spectrum.energies, dim)
    groups = degeneracy_groups(spectrum.energies, group_tol)
    logger.info(f"[PIPELINE] Assembled {dim} levels in {len(groups)} groups, sum E = {energy_sum:.3g}")
    return PipelineResult(spectrum, accepted, scans, groups, energy_sum,
                          [accepted[i].source for i in order])


def assemble_spectrum(plan: PipelinePlan, h: PauliSum, **kwargs) -> Spectrum:
    """Complete Spectrum of h from the plan; see run_pipeline for options."""
    return run_pipeline(plan, h, **kwargs).spectrum
