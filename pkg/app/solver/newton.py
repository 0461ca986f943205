import logging
import numpy as np
import scipy.linalg
from typing import Optional

from app.models.bandit import BanditSpec
from app.models.saddle import SaddleField
from app.solver.equations import (action_value, backward_pass, constraint_gap, forward_pass, residual,
                                  update_r_hat)

logger = logging.getLogger(__name__)

MIN_DAMPING = 0.01
SINGULAR_CONDITION = 1e12


def _score(y: SaddleField, spec: BanditSpec, r: float) -> float:
    try:
        res = residual(y, spec, r)
    except (ArithmeticError, ValueError):
        return float("inf")
    return res if np.isfinite(res) else float("inf")


def _finalize(y: SaddleField, spec: BanditSpec, r: float, tol: float, iterations: int) -> SaddleField:
    """Score y, snapping the conjugates onto the backward sweep of (n, s) unless that makes things worse.

    After a snap the terminal conditions hold exactly.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        res = _score(y, spec, r)
        try:
            is_hat, in_hat = backward_pass(y.n, y.s, y.ir_hat, spec, y.variant)
            snapped = y.model_copy(update={"is_hat": is_hat, "in_hat": in_hat})
            snapped_res = _score(snapped, spec, r)
        except (ArithmeticError, ValueError):
            snapped, snapped_res = y, float("inf")
    if snapped_res <= max(res, tol):
        y, res = snapped, snapped_res
    converged = bool(res <= tol)
    action = action_value(y, spec) if converged else float("nan")
    return y.model_copy(update={"residual": res, "converged": converged, "iterations": iterations,
                                "action": action})


def _rebuild(y: SaddleField, spec: BanditSpec, r: float) -> SaddleField:
    n, s = forward_pass(y.is_hat, y.in_hat, y.ir_hat, spec, y.variant)
    return y.model_copy(update={"s": s, "n": n, "r": r})


def _fixed_point_move(y: SaddleField, spec: BanditSpec, r: float, alpha: float) -> SaddleField:
    ir_hat = update_r_hat(y, spec, r)
    is_new, in_new = backward_pass(y.n, y.s, ir_hat, spec, y.variant)
    blended = y.model_copy(update={"is_hat": alpha * is_new + (1.0 - alpha) * y.is_hat,
                                   "in_hat": alpha * in_new + (1.0 - alpha) * y.in_hat, "ir_hat": ir_hat})
    return _rebuild(blended, spec, r)


def iterate_fixed_point(y: SaddleField, spec: BanditSpec, r: float, alpha: float = 0.3, tol: float = 1e-10,
                        max_iter: int = 300) -> SaddleField:
    """Damped map step with i*r_hat re-solved from the regret constraint, keeping the best iterate.

    When the residual grows the damping is halved and the iteration restarts from
    the best iterate; it stops once the damping is already at MIN_DAMPING.
    """
    iterations = 0
    y = y.model_copy(update={"r": r})
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            y = _rebuild(y, spec, r)
        except (ArithmeticError, ValueError):
            return _finalize(y, spec, r, tol, iterations)
        res = _score(y, spec, r)
        best, best_res = y, res
        while iterations < max_iter and best_res > tol and np.isfinite(best_res):
            iterations += 1
            try:
                candidate = _fixed_point_move(y, spec, r, alpha)
                new_res = _score(candidate, spec, r)
            except (ArithmeticError, ValueError):
                new_res = float("inf")
            if new_res > res:
                if alpha <= MIN_DAMPING:
                    break
                alpha = max(alpha / 2.0, MIN_DAMPING)
                y, res = best, best_res
                continue
            y, res = candidate, new_res
            if res < best_res:
                best, best_res = y, res
    logger.debug("fixed point at r=%g: residual %.3e after %d iterations", r, best_res, iterations)
    return _finalize(best, spec, r, tol, iterations)


def _pack(y: SaddleField) -> np.ndarray:
    return np.concatenate([y.is_hat.ravel(), y.in_hat.ravel(), [y.ir_hat]])


def _unpack(z: np.ndarray, shape):
    size = shape[0] * shape[1]
    batch = z.shape[:-1]
    is_hat = z[..., :size].reshape(batch + shape)
    in_hat = z[..., size:2 * size].reshape(batch + shape)
    return is_hat, in_hat, z[..., -1]


def conjugate_residual(z: np.ndarray, spec: BanditSpec, r: float, variant: str) -> np.ndarray:
    """Residual vector of the reduced system; accepts a leading batch axis."""
    shape = (spec.K, spec.T + 1)
    is_hat, in_hat, ir_hat = _unpack(z, shape)
    n, s = forward_pass(is_hat, in_hat, ir_hat, spec, variant)
    new_is, new_in = backward_pass(n, s, ir_hat, spec, variant)
    batch = z.shape[:-1]
    return np.concatenate([(is_hat - new_is).reshape(batch + (-1,)),
                           (in_hat - new_in).reshape(batch + (-1,)),
                           constraint_gap(s, spec, r)[..., None]], axis=-1)


def _safe_residual(z, spec: BanditSpec, r: float, variant: str):
    try:
        F = conjugate_residual(z, spec, r, variant)
    except (ArithmeticError, ValueError):
        return None, float("inf")
    return F, float(F @ F)


def finite_difference_jacobian(z: np.ndarray, spec: BanditSpec, r: float, variant: str) -> np.ndarray:
    steps = 1e-6 * np.maximum(1.0, np.abs(z))
    shifted = np.diag(steps)
    # all 2m perturbed points go through the sweeps as one batch
    values = conjugate_residual(np.concatenate([z + shifted, z - shifted]), spec, r, variant)
    m = z.size
    return ((values[:m] - values[m:]) / (2.0 * steps)[:, None]).T


def _newton_direction(jacobian: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        if np.linalg.cond(jacobian) > SINGULAR_CONDITION:
            raise np.linalg.LinAlgError("ill-conditioned")
        return scipy.linalg.solve(jacobian, rhs)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        logger.warning("singular Newton Jacobian (dimension %d); using the pseudo-inverse", rhs.size)
        return scipy.linalg.pinv(jacobian) @ rhs


def newton_refine(y0: SaddleField, spec: BanditSpec, r: float, tol: float = 1e-10, max_iter: int = 50,
                  polish_tol: Optional[float] = None) -> SaddleField:
    """Newton iteration with backtracking on the squared residual.

    The unknowns are (is_hat, in_hat, i*r_hat); (s, n) follow from the forward
    sweep, so their block of the Jacobian is eliminated. Iterates down to
    polish_tol (default tol) while it keeps improving; convergence is judged
    against tol.
    """
    variant = y0.variant
    target = tol if polish_tol is None else min(polish_tol, tol)
    z = _pack(y0)
    iterations = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        F, res = _safe_residual(z, spec, r, variant)
        while res > target and iterations < max_iter and np.isfinite(res):
            try:
                jacobian = finite_difference_jacobian(z, spec, r, variant)
            except (ArithmeticError, ValueError):
                break
            if not np.all(np.isfinite(jacobian)):
                break
            direction = _newton_direction(jacobian, -F)
            lam, improved = 1.0, False
            for _ in range(30):
                trial = z + lam * direction
                F_trial, res_trial = _safe_residual(trial, spec, r, variant)
                if np.isfinite(res_trial) and res_trial < (1.0 - 1e-4 * lam) * res:
                    improved = True
                    break
                lam /= 2.0
            iterations += 1
            if not improved:
                logger.debug("Newton line search stalled at residual %.3e", res)
                break
            z, F, res = trial, F_trial, res_trial

    is_hat, in_hat, ir_hat = _unpack(z, (spec.K, spec.T + 1))
    try:
        n, s = forward_pass(is_hat, in_hat, ir_hat, spec, variant)
    except ArithmeticError:
        n, s, res = y0.n, y0.s, float("inf")
    y = y0.model_copy(update={"s": s, "n": n, "is_hat": is_hat, "in_hat": in_hat, "ir_hat": float(ir_hat),
                              "r": r})
    if not (np.isfinite(res) and res <= tol):
        logger.debug("Newton did not converge at r=%g (residual %.3e after %d iterations)", r, res, iterations)
    return _finalize(y, spec, r, tol, iterations)
