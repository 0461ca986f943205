import numpy as np
from scipy import integrate, special, stats
from typing import Sequence

from app.models.toy import ToySpec

BOX = 8.0
POINTS = 801


def regret_density(r_values: Sequence[float], toy: ToySpec, box: float = BOX, points: int = POINTS) -> np.ndarray:
    """Density of r: Simpson over the warm-up rewards, the last reward as a softmax-weighted normal mixture."""
    mu1, mu2 = toy.mu
    sd = np.sqrt(toy.gamma)
    x1 = np.linspace(mu1 - box * sd, mu1 + box * sd, points)
    x2 = np.linspace(mu2 - box * sd, mu2 + box * sd, points)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    warmup = stats.norm.pdf(X1, mu1, sd) * stats.norm.pdf(X2, mu2, sd)
    p_best = special.expit(toy.beta * (X2 - X1))
    # r = 3 mu_2 - x_1^0 - x_2^0 - x^1, so the last reward must equal `needed`
    offset = 3.0 * mu2 - X1 - X2

    densities = []
    for r in np.asarray(r_values, dtype=float):
        needed = offset - r
        last = p_best * stats.norm.pdf(needed, mu2, sd) + (1.0 - p_best) * stats.norm.pdf(needed, mu1, sd)
        inner = integrate.simpson(warmup * last, x=x2, axis=1)
        densities.append(integrate.simpson(inner, x=x1))
    return np.array(densities)


def oracle_rate(r_values: Sequence[float], toy: ToySpec, **kwargs) -> np.ndarray:
    """-gamma log P(r); agrees with the rate function up to an r-independent offset at small gamma."""
    return -toy.gamma * np.log(regret_density(r_values, toy, **kwargs))
