# data/export.py
"""
CSV emission. Every file starts with '#'-prefixed provenance lines and is
written to a temporary file first, then renamed into place.
"""
import logging
import os
import tempfile
from typing import Sequence

import numpy as np
import pandas as pd

from config.config import CSV_FLOAT_FORMAT
from models.state_engine import index_to_bitstring
from solvers.exact_oracle import Spectrum
from solvers.qite import QiteTrace

logger = logging.getLogger(__name__)


def write_csv(frame: pd.DataFrame, path: str, header: "str | Sequence[str]" = ()) -> str:
    """
    Write frame atomically with header comment lines.

    Args:
        frame (pd.DataFrame): Data to write (index is not written).
        path (str): Destination file.
        header (str | Sequence[str]): Comment lines, written with a '# ' prefix.

    Returns:
        str: The destination path.
    """
    lines = [header] if isinstance(header, str) else list(header)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            for line in lines:
                f.write(f"# {line}\n")
            frame.to_csv(f, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.info(f"[EXPORT] Wrote {len(frame)} rows to {path}")
    return path


def spectrum_columns(n_qubits: int) -> list[str]:
    return [f"t_{index_to_bitstring(x, n_qubits)}" for x in range(2 ** n_qubits)]


def spectrum_frame(spec: Spectrum) -> pd.DataFrame:
    """Columns index, energy, then t_<bitstring> for every basis state."""
    frame = pd.DataFrame(spec.t, columns=spectrum_columns(spec.n_qubits))
    frame.insert(0, "energy", spec.energies)
    frame.insert(0, "index", np.arange(spec.dimension))
    return frame


def trace_frame(trace: QiteTrace) -> pd.DataFrame:
    return pd.DataFrame({
        "step": np.arange(len(trace)),
        "tau": trace.taus,
        "energy": trace.energies,
        "c_sq_inv": trace.c_sq_inv,
    })


def comparison_frame(reference: np.ndarray, runs: Sequence[np.ndarray]) -> pd.DataFrame:
    """
    Per-level oracle energy, mean and standard deviation over runs, and deviation.

    The standard deviation is the sample one (ddof=1); a single run gives 0.
    """
    stacked = np.vstack([np.asarray(r, dtype=float) for r in runs])
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0, ddof=1) if len(stacked) > 1 else np.zeros(stacked.shape[1])
    return pd.DataFrame({
        "level": np.arange(stacked.shape[1]),
        "oracle": np.asarray(reference, dtype=float),
        "mean": mean,
        "std": std,
        "deviation": mean - np.asarray(reference, dtype=float),
    })
