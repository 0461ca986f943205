import numpy as np
from typing import Tuple
from pydantic import BaseModel, ConfigDict, Field, model_validator


class BanditSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    K: int = Field(ge=2)
    T: int = Field(ge=1)
    mu: Tuple[float, ...]
    sigma_tilde: Tuple[float, ...]
    gamma: float = Field(ge=0.0)
    beta: float = Field(ge=0.0)
    c: float = Field(ge=0.0)

    @model_validator(mode="after")
    def check_arm_lengths(self) -> "BanditSpec":
        if len(self.mu) != self.K or len(self.sigma_tilde) != self.K:
            raise ValueError(f"mu and sigma_tilde must both have K={self.K} entries")
        return self

    @property
    def mu_star(self) -> float:
        return max(self.mu)

    @property
    def mu_array(self) -> np.ndarray:
        return np.asarray(self.mu, dtype=float)

    @property
    def sigma2(self) -> np.ndarray:
        # sigma_k^2 = gamma * sigma_tilde_k^2
        return self.gamma * np.asarray(self.sigma_tilde, dtype=float) ** 2

    @property
    def total_budget(self) -> float:
        """Reward of pulling the best arm at every one of the T+K pulls."""
        return (self.T + self.K) * self.mu_star

    def with_gamma(self, gamma: float) -> "BanditSpec":
        return self.model_copy(update={"gamma": gamma})


class PolicyEval(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    B: np.ndarray
    B_s: np.ndarray
    B_n: np.ndarray
    rho: np.ndarray
    jac: np.ndarray
