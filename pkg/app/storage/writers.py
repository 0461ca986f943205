import csv
import json
import logging
import math
import numpy as np
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

from app.errors import OutputError
from app.storage.config import ExperimentConfig

logger = logging.getLogger(__name__)

HISTOGRAM_HEADER = ("r", "count", "phi_sim", "gamma_phi_sim")
RATE_HEADER = ("r", "action", "rate", "ir_hat", "n_solutions", "residual", "converged")
THEORY_HEADER = ("t", "arm", "n", "muhat", "is_hat", "in_hat")
SIM_HEADER = ("t", "arm", "n_mean", "n_std", "muhat_mean", "muhat_std", "matched")
BRANCH_HEADER = ("r", "branch_id", "delta_s0", "ir_hat", "action")
SWEEP_HEADER = ("c", "r_mpv")


def prepare_output(out: Path) -> Path:
    """Create the output directory and make sure files can be written there."""
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out, prefix=".write-check-"):
            pass
    except OSError as error:
        raise OutputError(f"output directory {out} is not writable: {error}")
    return out


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    number = float(value)
    if math.isnan(number):
        return "nan"
    # repr keeps the shortest string that round-trips
    return repr(number)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    try:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_cell(value) for value in row])
    except OSError as error:
        raise OutputError(f"cannot write {path}: {error}")
    logger.info("wrote %s", path)
    return path


def write_metadata(out: Path, command: str, config: ExperimentConfig, seed: Optional[int], workers: int,
                   wall_time_s: float, extra: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(out) / "metadata.json"
    payload = {
        "command": command,
        "config": config.model_dump(mode="json"),
        "seed": seed,
        "workers": workers,
        "wall_time_s": wall_time_s,
        "extra": extra or {},
    }
    try:
        path.write_text(json.dumps(payload, indent=2, allow_nan=True) + "\n")
    except OSError as error:
        raise OutputError(f"cannot write {path}: {error}")
    return path
