# utils/state_parsing.py
"""
Parsing of initial-state specifications.

Grammar:  lib:<name>  |  [+|-]<bits> ( , [+|-]<bits> )*
The Unicode minus sign is accepted as '-'. Errors carry the character offset.
"""
import logging
import re

from models.state_engine import StateVector, from_superposition
from utils.error_handling import InvalidParameterError, StateSpecError

logger = logging.getLogger(__name__)

LIBRARY_PREFIX = "lib:"
_MINUS_SIGNS = ("-", "−")
_TERM_PATTERN = re.compile(r"\s*([+\-−]?)([01]*)(.*?)\s*$")


def parse_state_spec(text: str, n_sites: int | None = None) -> StateVector:
    """
    Turn a state specification into a normalized StateVector.

    Args:
        text (str): "lib:<name>" or a comma list of signed bitstrings.
        n_sites (int | None): Expected site count; None accepts any length.

    Returns:
        StateVector: The equal-weight signed superposition.

    Raises:
        StateSpecError: On any grammar violation.
    """
    if text is None or not text.strip():
        raise StateSpecError("Empty state specification", 0, text or "")
    stripped = text.strip()
    if stripped.startswith(LIBRARY_PREFIX):
        return _library_state(text, stripped[len(LIBRARY_PREFIX):].strip(), n_sites)

    terms = []
    seen = {}
    length = None
    offset = 0
    for chunk in text.split(","):
        match = _TERM_PATTERN.match(chunk)
        sign, bits, rest = match.group(1), match.group(2), match.group(3)
        start = offset + (len(chunk) - len(chunk.lstrip()))
        if rest:
            bad = offset + chunk.index(rest)
            raise StateSpecError(f"Unexpected character '{rest[0]}' in state term", bad, text)
        if not bits:
            raise StateSpecError("Empty bitstring in state term", start, text)
        if length is None:
            length = len(bits)
        elif len(bits) != length:
            raise StateSpecError(
                f"Mixed bitstring lengths ({length} and {len(bits)})", start, text)
        if bits in seen:
            raise StateSpecError(f"Duplicate bitstring '{bits}' (first at offset {seen[bits]})", start, text)
        seen[bits] = start
        terms.append(("-" if sign in _MINUS_SIGNS else "+", bits))
        offset += len(chunk) + 1
    if n_sites is not None and length != n_sites:
        raise StateSpecError(f"Bitstrings have {length} sites, expected {n_sites}", 0, text)
    state = from_superposition(length, terms)
    logger.debug(f"[STATE] Parsed '{text}' into {len(terms)} basis terms on {length} sites")
    return state


def _library_state(text: str, name: str, n_sites: int | None) -> StateVector:
    from solvers.spectral_pipeline import initial_state_library

    offset = text.index(LIBRARY_PREFIX) + len(LIBRARY_PREFIX)
    if not name:
        raise StateSpecError("Missing library state name", offset, text)
    sizes = [n_sites] if n_sites is not None else [3, 4]
    for size in sizes:
        try:
            library = initial_state_library(size)
        except InvalidParameterError as e:
            raise StateSpecError(str(e), offset, text) from e
        if name in library:
            return library[name].state
    raise StateSpecError(f"Unknown library state '{name}'", offset, text)
