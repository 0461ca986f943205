from typing import Tuple
import numpy as np

from app.errors import EmptyHistogramError
from app.models.simulation import RegretHistogram


def empirical_action(hist: RegretHistogram) -> Tuple[np.ndarray, np.ndarray]:
    """Bin centers and -log P(r) shifted to a zero minimum; empty bins are left out."""
    filled = sorted((index, count) for index, count in hist.counts.items() if count > 0)
    if not filled:
        raise EmptyHistogramError("histogram has no populated bins")
    indices = np.array([index for index, _ in filled])
    counts = np.array([count for _, count in filled], dtype=float)
    centers = hist.origin + (indices + 0.5) * hist.bin_width
    # trials and bin width cancel against the minimum
    return centers, np.log(counts.max()) - np.log(counts)
