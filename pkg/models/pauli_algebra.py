"""
Exact algebra of N-qubit Pauli strings and real-weighted Pauli sums.

Strings are written site 0 leftmost ("XYZ" means X on site 0). The
transverse-field Ising Hamiltonian H = -J sum X_i X_{i+1} - h_T sum Z_i with
periodic boundary is built here.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

from config.config import MAX_QUBITS
from utils.error_handling import InvalidOperandError, InvalidParameterError

logger = logging.getLogger(__name__)

PAULI_LETTERS = "IXYZ"
POOL_LETTERS = "XYZ"

# (left, right) -> (phase, product) for single-qubit Pauli products
_SITE_PRODUCTS = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("Y", "I"): (1, "Y"), ("Z", "I"): (1, "Z"),
    ("X", "X"): (1, "I"), ("Y", "Y"): (1, "I"), ("Z", "Z"): (1, "I"),
    ("X", "Y"): (1j, "Z"), ("Y", "Z"): (1j, "X"), ("Z", "X"): (1j, "Y"),
    ("Y", "X"): (-1j, "Z"), ("Z", "Y"): (-1j, "X"), ("X", "Z"): (-1j, "Y"),
}


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, one letter per site."""
    letters: str

    def __post_init__(self):
        if not isinstance(self.letters, str):
            raise InvalidOperandError(f"Pauli letters must be a string, got {type(self.letters).__name__}")
        if not 1 <= len(self.letters) <= MAX_QUBITS:
            raise InvalidOperandError(
                f"Pauli string length must be in [1, {MAX_QUBITS}], got {len(self.letters)}")
        bad = [c for c in self.letters if c not in PAULI_LETTERS]
        if bad:
            raise InvalidOperandError(f"Invalid Pauli letter(s) {bad!r} in '{self.letters}'")

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls("I" * n_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def y_count(self) -> int:
        return self.letters.count("Y")

    @property
    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    @property
    def support(self) -> tuple[int, ...]:
        """Sites carrying a non-identity letter."""
        return tuple(i for i, c in enumerate(self.letters) if c != "I")

    @property
    def x_mask(self) -> int:
        """Bit mask of sites flipped by the string (X or Y)."""
        return sum(1 << i for i, c in enumerate(self.letters) if c in "XY")

    @property
    def z_mask(self) -> int:
        """Bit mask of sites contributing a sign (Z or Y)."""
        return sum(1 << i for i, c in enumerate(self.letters) if c in "ZY")

    @property
    def key(self) -> int:
        """Base-4 integer encoding, used to derive per-string RNG streams."""
        return sum(PAULI_LETTERS.index(c) * 4 ** i for i, c in enumerate(self.letters))

    def __str__(self) -> str:
        return self.letters


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    string: PauliString

    def __post_init__(self):
        if isinstance(self.coefficient, complex):
            raise InvalidOperandError("Pauli term coefficients must be real")
        if not math.isfinite(self.coefficient):
            raise InvalidOperandError(f"Non-finite coefficient {self.coefficient} for {self.string}")


class PauliSum:
    """
    Real-weighted sum of Pauli strings on a fixed number of qubits.

    Duplicate strings are merged (first occurrence keeps its position) and
    exactly-zero coefficients are dropped. An empty sum is the zero operator.
    """

    def __init__(self, terms: Iterable[PauliTerm], n_qubits: int | None = None):
        merged: dict[str, float] = {}
        for term in terms:
            if n_qubits is None:
                n_qubits = term.string.n_qubits
            elif term.string.n_qubits != n_qubits:
                raise InvalidOperandError(
                    f"Term {term.string} has {term.string.n_qubits} qubits, expected {n_qubits}")
            merged[term.string.letters] = merged.get(term.string.letters, 0.0) + float(term.coefficient)
        if n_qubits is None:
            raise InvalidOperandError("An empty PauliSum needs an explicit qubit count")
        self.n_qubits = n_qubits
        self.terms: tuple[PauliTerm, ...] = tuple(
            PauliTerm(c, PauliString(s)) for s, c in merged.items() if c != 0.0)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, str | PauliString]], n_qubits: int | None = None) -> "PauliSum":
        terms = [PauliTerm(float(c), s if isinstance(s, PauliString) else PauliString(s)) for c, s in pairs]
        return cls(terms, n_qubits)

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls([], n_qubits)

    def __iter__(self) -> Iterator[PauliTerm]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __neg__(self) -> "PauliSum":
        return self.scaled(-1.0)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n_qubits != self.n_qubits:
            raise InvalidOperandError(f"Cannot add sums on {self.n_qubits} and {other.n_qubits} qubits")
        return PauliSum(list(self.terms) + list(other.terms), self.n_qubits)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-other)

    def scaled(self, factor: float) -> "PauliSum":
        return PauliSum([PauliTerm(factor * t.coefficient, t.string) for t in self.terms], self.n_qubits)

    def coefficient(self, letters: str) -> float:
        for term in self.terms:
            if term.string.letters == letters:
                return term.coefficient
        return 0.0

    def as_dict(self) -> dict[str, float]:
        return {t.string.letters: t.coefficient for t in self.terms}

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.n_qubits, self.terms))

    def __repr__(self) -> str:
        body = " ".join(f"{t.coefficient:+g}*{t.string}" for t in self.terms) or "0"
        return f"PauliSum({body})"


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """
    Multiply two Pauli strings site by site.

    Args:
        a (PauliString): Left factor.
        b (PauliString): Right factor.

    Returns:
        tuple: (phase in {1, 1j, -1, -1j}, product string).
    """
    if a.n_qubits != b.n_qubits:
        raise InvalidOperandError(f"Cannot multiply strings of lengths {a.n_qubits} and {b.n_qubits}")
    phase: complex = 1
    letters = []
    for left, right in zip(a.letters, b.letters):
        site_phase, product = _SITE_PRODUCTS[(left, right)]
        phase *= site_phase
        letters.append(product)
    # phases are exact powers of i; keep them as clean complex units
    phase = complex(round(phase.real), round(phase.imag)) if isinstance(phase, complex) else complex(phase)
    return phase, PauliString("".join(letters))


def y_parity(p: PauliString) -> str:
    """Return 'odd' or 'even' according to the number of Y letters."""
    return "odd" if p.y_count % 2 else "even"


def build_ising_hamiltonian(n_sites: int, coupling: float, field: float) -> PauliSum:
    """
    Build the periodic transverse-field Ising chain.

    Bond terms -J X_i X_{i+1 mod N} come first (ascending i), then the field
    terms -h_T Z_i. For N = 2 the single bond appears twice and is merged.

    Args:
        n_sites (int): Number of sites N >= 2.
        coupling (float): J.
        field (float): h_T.

    Returns:
        PauliSum: The Hamiltonian.
    """
    if n_sites < 2:
        raise InvalidParameterError(f"Ising chain needs at least 2 sites, got {n_sites}")
    if n_sites > MAX_QUBITS:
        raise InvalidParameterError(f"Ising chain limited to {MAX_QUBITS} sites, got {n_sites}")
    if not (math.isfinite(coupling) and math.isfinite(field)):
        raise InvalidParameterError(f"Non-finite couplings J={coupling}, h_T={field}")
    pairs = []
    for i in range(n_sites):
        letters = ["I"] * n_sites
        letters[i] = "X"
        letters[(i + 1) % n_sites] = "X"
        pairs.append((-coupling, "".join(letters)))
    for i in range(n_sites):
        letters = ["I"] * n_sites
        letters[i] = "Z"
        pairs.append((-field, "".join(letters)))
    hamiltonian = PauliSum.from_pairs(pairs, n_sites)
    logger.debug(f"[HAMILTONIAN] N={n_sites}, J={coupling}, h_T={field}: {len(hamiltonian)} terms")
    return hamiltonian


def operator_pool(n_qubits: int) -> list[PauliString]:
    """All 3^N strings over {X, Y, Z} in lexicographic order X < Y < Z."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise InvalidParameterError(f"Pool size N must be in [1, {MAX_QUBITS}], got {n_qubits}")
    return [PauliString("".join(letters)) for letters in itertools.product(POOL_LETTERS, repeat=n_qubits)]


def product_sum(a: PauliSum, b: PauliSum) -> PauliSum:
    """
    Symmetrized product (ab + ba)/2 of two real-weighted sums.

    Only commuting string pairs survive (their phase is real); for a == b
    this is exactly a^2, used for <H^2>.
    """
    if a.n_qubits != b.n_qubits:
        raise InvalidOperandError("Sums act on different qubit counts")
    pairs = []
    for ta in a.terms:
        for tb in b.terms:
            phase, product = multiply(ta.string, tb.string)
            if phase.imag == 0:
                pairs.append((ta.coefficient * tb.coefficient * phase.real, product))
    return PauliSum.from_pairs(pairs, a.n_qubits)
