"""
Exact diagonalization oracle: real dense Hamiltonian, cyclic Jacobi
eigensolver and the real orthogonal t-matrix t_{Ix} = <psi_I|x>.
"""
import logging
from dataclasses import dataclass

import numpy as np

from config.config import DEGENERACY_TOLERANCE, JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE
from models.pauli_algebra import PauliSum, build_ising_hamiltonian, y_parity
from models.state_engine import StateVector, to_dense
from utils.error_handling import (
    ConvergenceError,
    DimensionMismatchError,
    InvalidOperandError,
    NotRealRepresentableError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    Energies (ascending) and eigenvector rows t[I, x] in the computational basis.
    """
    energies: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        energies = np.array(self.energies, dtype=float).reshape(-1)
        t = np.array(self.t, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] != energies.size:
            raise DimensionMismatchError(
                f"t-matrix shape {t.shape} does not match {energies.size} energies")
        if energies.size == 0:
            raise DimensionMismatchError("Spectrum needs at least one level")
        energies.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "t", t)

    @property
    def dimension(self) -> int:
        return self.energies.size

    @property
    def n_qubits(self) -> int:
        n_qubits = int(self.dimension).bit_length() - 1
        if 2 ** n_qubits != self.dimension:
            raise DimensionMismatchError(f"Spectrum dimension {self.dimension} is not a power of two")
        return n_qubits

    def state(self, level: int) -> StateVector:
        return StateVector(self.t[level].astype(np.complex128), self.n_qubits)

    def orthonormality_defect(self) -> float:
        return float(np.max(np.abs(self.t @ self.t.T - np.eye(self.dimension))))

    def residuals(self, matrix: np.ndarray) -> np.ndarray:
        """||H row - E row|| per level for a dense Hamiltonian matrix."""
        applied = self.t @ np.asarray(matrix).T
        return np.linalg.norm(applied - self.energies[:, None] * self.t, axis=1)


def sign_normalize_rows(t: np.ndarray) -> np.ndarray:
    """
    Make the largest-magnitude entry of each row positive; among ties the
    lowest index decides.
    """
    t = np.array(t, dtype=float)
    for row in t:
        magnitudes = np.abs(row)
        peak = magnitudes.max()
        if peak == 0.0:
            continue
        pivot = int(np.flatnonzero(magnitudes >= peak - 1e-9 * max(peak, 1.0))[0])
        if row[pivot] < 0:
            row *= -1.0
    return t


def degeneracy_groups(energies, tol: float = DEGENERACY_TOLERANCE) -> list[list[int]]:
    """Group indices of sorted energies whose neighbours differ by less than tol."""
    energies = np.asarray(energies, dtype=float)
    groups: list[list[int]] = []
    for index in np.argsort(energies, kind="stable"):
        if groups and abs(energies[index] - energies[groups[-1][-1]]) < tol:
            groups[-1].append(int(index))
        else:
            groups.append([int(index)])
    return groups


def to_dense_real(h: PauliSum) -> np.ndarray:
    """
    Real symmetric matrix of a Pauli sum with only even-Y strings.

    Raises:
        NotRealRepresentableError: If an odd-Y term is present.
    """
    odd = [str(t.string) for t in h.terms if y_parity(t.string) == "odd"]
    if odd:
        raise NotRealRepresentableError(f"Odd-Y terms {odd} have no real matrix representation")
    matrix = to_dense(h)
    if np.max(np.abs(matrix.imag), initial=0.0) > 0.0:
        raise NotRealRepresentableError("Pauli sum has complex matrix elements")
    return np.array(matrix.real)


def jacobi_eig(m: np.ndarray, tol: float = JACOBI_TOLERANCE, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Spectrum:
    """
    Cyclic Jacobi eigensolver for a real symmetric matrix.

    Sweeps over all (p, q) pairs with Givens rotations until the largest
    off-diagonal element drops below tol.

    Args:
        m (np.ndarray): Real symmetric matrix.
        tol (float): Off-diagonal convergence threshold.
        max_sweeps (int): Sweep limit.

    Returns:
        Spectrum: Ascending energies with sign-normalized eigenvector rows.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidOperandError(f"Jacobi needs a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-12:
        raise InvalidOperandError("Jacobi needs a symmetric matrix")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)

    def off_diagonal_max() -> float:
        if n < 2:
            return 0.0
        return float(np.max(np.abs(a[~np.eye(n, dtype=bool)])))

    sweeps = 0
    while off_diagonal_max() >= tol:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal {off_diagonal_max():.3g})")
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
        sweeps += 1
    logger.debug(f"[ORACLE] Jacobi converged after {sweeps} sweeps (dim {n})")
    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return Spectrum(eigenvalues[order], sign_normalize_rows(v[:, order].T))


def oracle_spectrum(n_sites: int, coupling: float, field: float) -> Spectrum:
    """Exact spectrum of the periodic Ising chain."""
    hamiltonian = build_ising_hamiltonian(n_sites, coupling, field)
    spectrum = jacobi_eig(to_dense_real(hamiltonian))
    logger.info(
        f"[ORACLE] N={n_sites}, J={coupling}, h_T={field}: E0={spectrum.energies[0]:.10f}, "
        f"Emax={spectrum.energies[-1]:.10f}")
    return spectrum
