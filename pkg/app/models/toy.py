from typing import Tuple
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.bandit import BanditSpec


class ToySpec(BaseModel):
    """Two arms, one step after the warm-up.

    The exploration parameter is absent: at t=0 both arms have n=1, so the
    bonus is common to both indices and cancels in the softmax.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    mu: Tuple[float, float] = (1.0, 2.0)
    gamma: float = Field(0.16, gt=0.0)
    beta: float = Field(10.0, ge=0.0)

    @model_validator(mode="after")
    def check_gap(self) -> "ToySpec":
        if not self.mu[1] > self.mu[0]:
            raise ValueError("the second arm must be strictly better (mu_2 > mu_1)")
        return self

    @property
    def gap(self) -> float:
        return self.mu[1] - self.mu[0]

    def bandit_spec(self) -> BanditSpec:
        return BanditSpec(K=2, T=1, mu=self.mu, sigma_tilde=(1.0, 1.0), gamma=self.gamma, beta=self.beta, c=0.0)


class ToyBranch(BaseModel):
    model_config = ConfigDict(frozen=True)

    r: float
    delta_s0: float
    ir_hat: float
    action: float
    branch_id: int
    tangent: bool = False   # double root at the bifurcation
