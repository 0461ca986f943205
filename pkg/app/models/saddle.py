import numpy as np
from typing import List, Literal, Optional
from pydantic import BaseModel, ConfigDict, Field, model_validator

Variant = Literal["simplified", "full"]


class SaddleField(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    s: np.ndarray        # (K, T+1)
    n: np.ndarray
    is_hat: np.ndarray
    in_hat: np.ndarray
    ir_hat: float
    r: float
    action: float = float("nan")
    residual: float = float("inf")
    converged: bool = False
    iterations: int = 0
    variant: Variant = "simplified"

    @model_validator(mode="after")
    def check_shapes(self) -> "SaddleField":
        shapes = {self.s.shape, self.n.shape, self.is_hat.shape, self.in_hat.shape}
        if len(shapes) != 1 or self.s.ndim != 2:
            raise ValueError("all order parameters must share one (K, T+1) shape")
        return self

    @property
    def muhat(self) -> np.ndarray:
        return self.s / self.n

    @property
    def delta_s0(self) -> float:
        """s_2^0 - s_1^0, the coordinate the two-arm, one-step system is solved in."""
        return float(self.s[1, 0] - self.s[0, 0])

    def same_solution(self, other: "SaddleField", tol: float = 1e-6) -> bool:
        pairs = [(self.s, other.s), (self.n, other.n), (self.is_hat, other.is_hat), (self.in_hat, other.in_hat)]
        return all(np.allclose(a, b, rtol=tol, atol=tol) for a, b in pairs) and \
            np.isclose(self.ir_hat, other.ir_hat, rtol=tol, atol=tol)


class SolveStrategy(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    multistarts: int = Field(8, ge=0)
    warm_up_starts: bool = True
    seeds: List[SaddleField] = Field(default_factory=list)
    variant: Variant = "simplified"
    damping: float = Field(0.3, gt=0.0, le=1.0)
    tol: float = Field(1e-10, gt=0.0)
    polish_tol: float = Field(1e-20, gt=0.0)
    max_fixed_point: int = Field(300, ge=0)
    max_newton: int = Field(50, ge=0)
    dedup_tol: float = Field(1e-6, gt=0.0)
    random_seed: int = 0


class RateCurve(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    r_grid: np.ndarray
    action: np.ndarray          # nan where no solution converged
    rate: np.ndarray
    ir_hat: np.ndarray
    residual: np.ndarray
    converged: np.ndarray       # bool
    n_solutions: np.ndarray     # int
    r_mpv: float
    gamma: float
    solutions: List[Optional[SaddleField]] = Field(default_factory=list, exclude=True)
