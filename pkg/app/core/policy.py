# arm axis last; pull counts are real so simulator states and solver fields share one kernel
import numpy as np
from scipy import special

from app.errors import DomainError
from app.models.bandit import BanditSpec, PolicyEval


def _check_counts(n) -> None:
    if np.any(np.asarray(n) <= 0):
        raise DomainError("pull counts must be strictly positive")


def _bonus_scale(t, spec: BanditSpec):
    # c * sqrt(log(K + t)), the common factor of the exploration bonus
    return spec.c * np.sqrt(np.log(spec.K + t))


def ucb_index(s, n, t, spec: BanditSpec):
    _check_counts(n)
    return s / n + _bonus_scale(t, spec) / np.sqrt(n)


def ucb_partials(s, n, t, spec: BanditSpec):
    """Return (dB/ds, dB/dn) of the UCB index."""
    _check_counts(n)
    n = np.asarray(n, dtype=float)
    B_s = 1.0 / n
    B_n = -s / n**2 - 0.5 * _bonus_scale(t, spec) * n**-1.5
    return B_s, B_n


def softmax(v):
    return special.softmax(np.asarray(v, dtype=float), axis=-1)


def _jacobian_from_probabilities(rho):
    # d rho_k / d v_j = delta_kj rho_k - rho_k rho_j
    eye = np.eye(rho.shape[-1])
    return rho[..., :, None] * eye - rho[..., :, None] * rho[..., None, :]


def softmax_jacobian(v):
    return _jacobian_from_probabilities(softmax(v))


def policy_probabilities(s, n, t, spec: BanditSpec):
    return softmax(spec.beta * ucb_index(s, n, t, spec))


def evaluate_policy(s, n, t, spec: BanditSpec) -> PolicyEval:
    B = ucb_index(s, n, t, spec)
    B_s, B_n = ucb_partials(s, n, t, spec)
    rho = softmax(spec.beta * B)
    return PolicyEval.model_construct(B=B, B_s=B_s, B_n=B_n, rho=rho,
                                      jac=_jacobian_from_probabilities(rho))
