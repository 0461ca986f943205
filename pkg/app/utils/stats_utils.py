import numpy as np
from typing import Optional
from pydantic import BaseModel, ConfigDict


class RunningMoments(BaseModel):
    """Streaming (count, mean, M2) accumulator over a fixed-shape cell array."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    count: int = 0
    mean: Optional[np.ndarray] = None
    m2: Optional[np.ndarray] = None

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "RunningMoments":
        # samples: (count, *cell_shape)
        if samples.shape[0] == 0:
            return cls()
        mean = samples.mean(axis=0)
        return cls(count=samples.shape[0], mean=mean, m2=((samples - mean) ** 2).sum(axis=0))

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        total = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / total)
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / total)
        return RunningMoments(count=total, mean=mean, m2=m2)

    def std(self) -> Optional[np.ndarray]:
        if self.count == 0:
            return None
        return np.sqrt(self.m2 / self.count)
