"""
Real-time and thermal observables from a Spectrum.

Everything here depends only on the energies E_I and the real t-matrix
t[I, x] = <psi_I|x>, so oracle and pipeline spectra are interchangeable.
"""
import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from models.pauli_algebra import PauliString, PauliSum, PauliTerm
from models.state_engine import apply_sum_array, bitstring_to_index, index_to_bitstring, popcount
from solvers.exact_oracle import Spectrum
from utils.error_handling import InvalidParameterError, NumericalError

logger = logging.getLogger(__name__)

IMAGINARY_TOLERANCE = 1e-9
BOUNDS_TOLERANCE = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    t_start: float = 0.0
    t_end: float = 10.0
    samples: int = 400

    def __post_init__(self):
        if not (np.isfinite(self.t_start) and np.isfinite(self.t_end)):
            raise InvalidParameterError("Time grid bounds must be finite")
        if self.t_end < self.t_start:
            raise InvalidParameterError(f"t_end {self.t_end} is before t_start {self.t_start}")
        if int(self.samples) != self.samples or self.samples < 1:
            raise InvalidParameterError(f"samples must be a positive integer, got {self.samples}")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, int(self.samples))


@dataclass(frozen=True, eq=False)
class ObservableSeries:
    """Real values per series label on a time grid; out-of-range labels are flagged, never clamped."""
    grid: TimeGrid
    values: dict[str, np.ndarray] = field(default_factory=dict)
    flagged: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "flagged", tuple(self.flagged))
        samples = int(self.grid.samples)
        for label, series in self.values.items():
            if np.asarray(series).shape != (samples,):
                raise InvalidParameterError(f"Series '{label}' has shape {np.shape(series)}, expected ({samples},)")

    def __getitem__(self, label: str) -> np.ndarray:
        return self.values[label]

    @property
    def labels(self) -> list[str]:
        return list(self.values)

    def merge(self, other: "ObservableSeries") -> "ObservableSeries":
        if other.grid != self.grid:
            raise InvalidParameterError("Cannot merge series on different time grids")
        return ObservableSeries(self.grid, {**self.values, **other.values}, self.flagged + other.flagged)

    def check_bounds(self, lower: float, upper: float) -> "ObservableSeries":
        """Copy of the series with labels that leave [lower, upper] added to flagged."""
        flagged = list(self.flagged)
        for label, series in self.values.items():
            if np.min(series) < lower - BOUNDS_TOLERANCE or np.max(series) > upper + BOUNDS_TOLERANCE:
                logger.warning(f"[OBSERVABLES] Series '{label}' leaves [{lower}, {upper}]")
                if label not in flagged:
                    flagged.append(label)
        return dataclasses.replace(self, flagged=tuple(flagged))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"t": self.grid.times})
        for label, series in self.values.items():
            frame[label] = series
        return frame


def resolve_index(spec: Spectrum, x: "int | str") -> int:
    """Basis index from an int or a site-0-leftmost bitstring; range-checked."""
    n_qubits = spec.n_qubits
    if isinstance(x, str):
        if len(x) != n_qubits:
            raise InvalidParameterError(f"Bitstring '{x}' has {len(x)} sites, spectrum has {n_qubits}")
        x = bitstring_to_index(x)
    if not 0 <= int(x) < spec.dimension:
        raise InvalidParameterError(f"Basis index {x} out of range [0, {spec.dimension})")
    return int(x)


def _amplitudes(spec: Spectrum, x_in: int, x_fin: int, times: np.ndarray) -> np.ndarray:
    weights = spec.t[:, x_in] * spec.t[:, x_fin]
    return np.exp(-1j * np.outer(times, spec.energies)) @ weights


def transition_amplitude(spec: Spectrum, x_in: "int | str", x_fin: "int | str", t: float) -> complex:
    """
    A(t) = sum_I t[I, x_in] t[I, x_fin] exp(-i E_I t).

    Args:
        spec (Spectrum): Energies and t-matrix.
        x_in (int | str): Initial basis state.
        x_fin (int | str): Final basis state.
        t (float): Time.

    Returns:
        complex: The transition amplitude.
    """
    i, f = resolve_index(spec, x_in), resolve_index(spec, x_fin)
    return complex(_amplitudes(spec, i, f, np.array([float(t)]))[0])


def transition_label(spec: Spectrum, x_in: int, x_fin: int) -> str:
    n = spec.n_qubits
    return f"P_{index_to_bitstring(x_in, n)}_{index_to_bitstring(x_fin, n)}"


def transition_probability_series(spec: Spectrum, x_in: "int | str", x_fin: "int | str",
                                  grid: TimeGrid) -> ObservableSeries:
    i, f = resolve_index(spec, x_in), resolve_index(spec, x_fin)
    probabilities = np.abs(_amplitudes(spec, i, f, grid.times)) ** 2
    series = ObservableSeries(grid, {transition_label(spec, i, f): probabilities})
    return series.check_bounds(0.0, 1.0)


def _diagonal_series(spec: Spectrum, x: int, y_weights: np.ndarray, times: np.ndarray) -> np.ndarray:
    """
    sum_{I,J} sum_y w_y t[I,x] t[J,x] t[I,y] t[J,y] exp(i (E_J - E_I) t).

    The y sum is folded into W_IJ = t[I,x] t[J,x] (t diag(w) t^T)_IJ.
    """
    t = spec.t
    w = np.outer(t[:, x], t[:, x]) * ((t * y_weights) @ t.T)
    phases = np.exp(1j * np.outer(times, spec.energies))
    values = np.einsum("ti,ij,tj->t", phases.conj(), w, phases)
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residue >= IMAGINARY_TOLERANCE:
        raise NumericalError(f"Diagonal observable has imaginary residue {residue:.3g}")
    return values.real


def _occupations(spec: Spectrum, x: int, sites, times: np.ndarray) -> dict[int, np.ndarray]:
    indices = np.arange(spec.dimension)
    return {site: _diagonal_series(spec, x, ((indices >> site) & 1).astype(float), times) for site in sites}


def occupation_series(spec: Spectrum, x: "int | str", site: "int | None", grid: TimeGrid) -> ObservableSeries:
    """
    <x| n_i(t) |x> for one site, or for every site when site is None.

    Columns are labelled n_<site>.
    """
    x = resolve_index(spec, x)
    n_qubits = spec.n_qubits
    sites = range(n_qubits) if site is None else [site]
    for s in sites:
        if not 0 <= s < n_qubits:
            raise InvalidParameterError(f"Site {s} out of range [0, {n_qubits})")
    occupations = _occupations(spec, x, sites, grid.times)
    series = ObservableSeries(grid, {f"n_{s}": values for s, values in occupations.items()})
    return series.check_bounds(0.0, 1.0)


def magnetization_series(spec: Spectrum, x: "int | str", grid: TimeGrid) -> ObservableSeries:
    """m_z(t) = 1 - (2/N) sum_i <n_i(t)>."""
    x = resolve_index(spec, x)
    n_qubits = spec.n_qubits
    occupations = _occupations(spec, x, range(n_qubits), grid.times)
    magnetization = 1.0 - 2.0 / n_qubits * np.sum(list(occupations.values()), axis=0)
    return ObservableSeries(grid, {"m_z": magnetization}).check_bounds(-1.0, 1.0)


def parity_series(spec: Spectrum, x: "int | str", grid: TimeGrid) -> ObservableSeries:
    """<x| (-1)^F(t) |x>; constant whenever the spectrum respects parity."""
    x = resolve_index(spec, x)
    signs = 1.0 - 2.0 * (popcount(np.arange(spec.dimension), spec.n_qubits) % 2)
    return ObservableSeries(grid, {"parity": _diagonal_series(spec, x, signs, grid.times)})


def magnetization_operator(n_qubits: int) -> PauliSum:
    """(1/N) sum_i Z_i, equal to 1 - (2/N) sum_i n_i."""
    terms = []
    for site in range(n_qubits):
        letters = "".join("Z" if i == site else "I" for i in range(n_qubits))
        terms.append(PauliTerm(1.0 / n_qubits, PauliString(letters)))
    return PauliSum(terms, n_qubits)


def thermal_average(spec: Spectrum, op: PauliSum, beta: float) -> float:
    """
    Gibbs average sum_I w_I <psi_I|O|psi_I> / sum_I w_I with w_I = exp(-beta E_I).

    Weights are shifted by the lowest energy so large beta cannot overflow.
    """
    if not beta >= 0 or not np.isfinite(beta):
        raise InvalidParameterError(f"beta must be finite and >= 0, got {beta}")
    if op.n_qubits != spec.n_qubits:
        raise InvalidParameterError(f"Operator on {op.n_qubits} qubits, spectrum on {spec.n_qubits}")
    level_values = np.empty(spec.dimension)
    for level, row in enumerate(spec.t):
        psi = row.astype(np.complex128)
        level_values[level] = np.real(np.vdot(psi, apply_sum_array(psi, op))) / np.vdot(psi, psi).real
    weights = np.exp(-beta * (spec.energies - spec.energies.min()))
    return float(np.dot(weights, level_values) / weights.sum())
