import math
import numpy as np
from typing import Dict, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Trajectory(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    actions: np.ndarray          # (T,) 0-based arm index pulled at t = 1..T
    warmup_rewards: np.ndarray   # (K,) x_k^0
    rewards: np.ndarray          # (T,) x drawn at t = 1..T from the pulled arm
    n: np.ndarray                # (K, T+1)
    s: np.ndarray                # (K, T+1)
    regret: float
    total_reward: float

    @property
    def muhat(self) -> np.ndarray:
        return self.s / self.n


class RegretHistogram(BaseModel):
    bin_width: float = Field(0.5, gt=0.0)
    origin: float = 0.0
    r_range: Optional[Tuple[float, float]] = None
    counts: Dict[int, int] = Field(default_factory=dict)
    trials: int = 0
    underflow: int = 0
    overflow: int = 0

    @model_validator(mode="after")
    def check_range(self) -> "RegretHistogram":
        if self.r_range is not None and not self.r_range[0] < self.r_range[1]:
            raise ValueError("r_range must be an increasing pair")
        return self

    def bin_index(self, r: float) -> int:
        return math.floor((r - self.origin) / self.bin_width)

    def bin_center(self, index: int) -> float:
        return self.origin + (index + 0.5) * self.bin_width

    def add_samples(self, regrets: np.ndarray) -> "RegretHistogram":
        regrets = np.asarray(regrets, dtype=float).ravel()
        finite = np.isfinite(regrets)
        overflow = int((~finite).sum())
        underflow = 0
        kept = regrets[finite]
        if self.r_range is not None:
            lo, hi = self.r_range
            underflow = int((kept < lo).sum())
            overflow += int((kept >= hi).sum())
            kept = kept[(kept >= lo) & (kept < hi)]

        counts = dict(self.counts)
        indices, hits = np.unique(np.floor((kept - self.origin) / self.bin_width).astype(np.int64),
                                  return_counts=True)
        for index, hit in zip(indices.tolist(), hits.tolist()):
            counts[index] = counts.get(index, 0) + hit
        return self.model_copy(update={
            "counts": counts,
            "trials": self.trials + regrets.size,
            "underflow": self.underflow + underflow,
            "overflow": self.overflow + overflow,
        })

    def merge(self, other: "RegretHistogram") -> "RegretHistogram":
        if (self.bin_width, self.origin, self.r_range) != (other.bin_width, other.origin, other.r_range):
            raise ValueError("histograms with different binning cannot be merged")
        counts = dict(self.counts)
        for index, hit in other.counts.items():
            counts[index] = counts.get(index, 0) + hit
        return self.model_copy(update={
            "counts": counts,
            "trials": self.trials + other.trials,
            "underflow": self.underflow + other.underflow,
            "overflow": self.overflow + other.overflow,
        })


class ConditionedStats(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    window: Tuple[float, float]
    n_mean: np.ndarray       # (K, T+1)
    n_std: np.ndarray
    muhat_mean: np.ndarray
    muhat_std: np.ndarray
    matched: int

    @property
    def empty(self) -> bool:
        return self.matched == 0
