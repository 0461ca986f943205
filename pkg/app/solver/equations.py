# fields are (..., K, T+1) arrays; is_hat, in_hat and ir_hat hold the real numbers i*s_hat, i*n_hat, i*r_hat
import numpy as np

from app.core.policy import evaluate_policy, softmax, ucb_index
from app.errors import DomainError, NumericError
from app.models.bandit import BanditSpec
from app.models.saddle import SaddleField, Variant


def _reverse_cumsum(x):
    return np.flip(np.cumsum(np.flip(x, -1), -1), -1)


def forward_pass(is_hat, in_hat, ir_hat, spec: BanditSpec, variant: Variant = "simplified"):
    """Time-forward recursion for (n, s) given the conjugate fields.

    s_k^t = mu_k n_k^t + sigma_k^2 sum_t' is_hat_k^t' n_k^min(t,t') only needs
    n up to t, so s is assembled step by step alongside n.
    """
    is_hat = np.asarray(is_hat, dtype=float)
    T = is_hat.shape[-1] - 1
    mu, sigma2 = spec.mu_array, spec.sigma2
    tail = _reverse_cumsum(is_hat)      # sum over t' >= t
    future_n = _reverse_cumsum(np.asarray(in_hat, dtype=float)) if variant == "full" else None

    n = np.empty_like(is_hat)
    s = np.empty_like(is_hat)
    n[..., 0] = 1.0
    past = np.zeros(is_hat.shape[:-1])  # sum over t' < t of is_hat n
    s[..., 0] = mu + sigma2 * tail[..., 0]
    for t in range(1, T + 1):
        field = spec.beta * ucb_index(s[..., t - 1], n[..., t - 1], t - 1, spec)
        if future_n is not None:
            field = field + future_n[..., t]
        n[..., t] = n[..., t - 1] + softmax(field)
        past = past + is_hat[..., t - 1] * n[..., t - 1]
        s[..., t] = mu * n[..., t] + sigma2 * (past + n[..., t] * tail[..., t])

    if not np.all(n > 0):
        raise NumericError("forward pass produced non-positive pull counts")
    return n, s


def backward_pass(n, s, ir_hat, spec: BanditSpec, variant: Variant = "simplified"):
    """Backward sweep for the conjugate fields from the terminal data.

    The future sums of in_hat (and is_hat) are accumulated during the sweep.
    """
    T = n.shape[-1] - 1
    mu, sigma2, beta = spec.mu_array, spec.sigma2, spec.beta
    q = np.asarray(ir_hat, dtype=float)[..., None]

    is_hat = np.empty_like(n)
    in_hat = np.empty_like(n)
    is_hat[..., T] = -q
    in_hat[..., T] = mu * is_hat[..., T] + 0.5 * sigma2 * is_hat[..., T] ** 2
    future_n = in_hat[..., T].copy()
    future_s = is_hat[..., T].copy()

    for t in range(T - 1, -1, -1):
        policy = evaluate_policy(s[..., t], n[..., t], t, spec)
        if variant == "full":
            drive = softmax(beta * policy.B + future_n) - policy.rho
        else:
            drive = np.einsum("...kj,...j->...k", policy.jac, future_n)
        a = beta * policy.B_s * drive
        is_hat[..., t] = a
        in_hat[..., t] = beta * policy.B_n * drive + mu * a + sigma2 * a * future_s + 0.5 * sigma2 * a**2
        future_n = future_n + in_hat[..., t]
        future_s = future_s + a
    return is_hat, in_hat


def constraint_gap(s, spec: BanditSpec, r):
    """sum_k s_k^T + r - (T+K) mu_*; zero when the regret constraint holds."""
    return s[..., -1].sum(axis=-1) + r - spec.total_budget


def action_value(y: SaddleField, spec: BanditSpec) -> float:
    a = y.is_hat
    T = a.shape[-1] - 1
    t = np.arange(T + 1)
    n_min = y.n[:, np.minimum.outer(t, t)]          # (K, T+1, T+1)
    quadratic = np.einsum("kt,ktu,ku->k", a, n_min, a)
    return float(0.5 * np.dot(spec.sigma2, quadratic))


def initial_field(spec: BanditSpec, r: float, is_hat=None, in_hat=None, ir_hat: float = 0.0,
                  variant: Variant = "simplified") -> SaddleField:
    shape = (spec.K, spec.T + 1)
    is_hat = np.zeros(shape) if is_hat is None else np.asarray(is_hat, dtype=float)
    in_hat = np.zeros(shape) if in_hat is None else np.asarray(in_hat, dtype=float)
    n, s = forward_pass(is_hat, in_hat, ir_hat, spec, variant)
    return SaddleField(s=s, n=n, is_hat=is_hat, in_hat=in_hat, ir_hat=float(ir_hat), r=float(r), variant=variant)


def map_image(y: SaddleField, spec: BanditSpec):
    """One application of the composed map f(y; ir_hat): (s, n, is_hat, in_hat)."""
    n, s = forward_pass(y.is_hat, y.in_hat, y.ir_hat, spec, y.variant)
    is_hat, in_hat = backward_pass(n, s, y.ir_hat, spec, y.variant)
    return s, n, is_hat, in_hat


def _residual_from_image(y: SaddleField, image, spec: BanditSpec, r: float) -> float:
    own = (y.s, y.n, y.is_hat, y.in_hat)
    mismatch = sum(float(np.sum((mine - theirs) ** 2)) for mine, theirs in zip(own, image))
    return mismatch + float(constraint_gap(y.s, spec, r)) ** 2


def residual(y: SaddleField, spec: BanditSpec, r: float) -> float:
    return _residual_from_image(y, map_image(y, spec), spec, r)


def fixed_point_step(y: SaddleField, alpha: float, spec: BanditSpec, r: float) -> SaddleField:
    if not 0.0 < alpha <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    image = map_image(y, spec)
    own = (y.s, y.n, y.is_hat, y.in_hat)
    s, n, is_hat, in_hat = (alpha * new + (1.0 - alpha) * old for new, old in zip(image, own))
    return y.model_copy(update={"s": s, "n": n, "is_hat": is_hat, "in_hat": in_hat})


def update_r_hat(y: SaddleField, spec: BanditSpec, r: float) -> float:
    """i*r_hat that meets the regret constraint when only is_hat_k^T = -i*r_hat moves.

    s_k^T = -i*r_hat sigma_k^2 n_k^T + const; n and the earlier conjugates are held fixed.
    The value does not depend on y.ir_hat.
    """
    if spec.gamma <= 0:
        raise DomainError("the regret constraint cannot be steered without reward noise (gamma = 0)")
    weights = spec.sigma2 * y.n[:, -1]
    rest = y.s[:, -1].sum() - float(np.dot(weights, y.is_hat[:, -1]))
    return float((rest + r - spec.total_budget) / weights.sum())
