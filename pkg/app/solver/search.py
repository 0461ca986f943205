import logging
import numpy as np
from typing import List, Optional, Sequence, Tuple

from app.errors import DomainError
from app.models.bandit import BanditSpec
from app.models.saddle import RateCurve, SaddleField, SolveStrategy, Variant
from app.solver.equations import forward_pass, initial_field, update_r_hat
from app.solver.newton import iterate_fixed_point, newton_refine

logger = logging.getLogger(__name__)

# warm-up reward of every better arm placed this many gaps below the exploited arm's
WARM_UP_DEPTHS = (-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0)
MIN_STEP_FRACTION = 1e-3


def most_probable_regret(spec: BanditSpec, variant: Variant = "simplified") -> float:
    """Regret of the deterministic (all conjugates zero) trajectory, where the rate vanishes."""
    zeros = np.zeros((spec.K, spec.T + 1))
    n, _ = forward_pass(zeros, zeros, 0.0, spec, variant)
    return float(spec.total_budget - np.dot(spec.mu_array, n[:, -1]))


def _newton(start: SaddleField, spec: BanditSpec, r: float, strategy: SolveStrategy) -> SaddleField:
    # converged points are polished too, so duplicates agree well inside dedup_tol
    return newton_refine(start, spec, r, tol=strategy.tol, max_iter=strategy.max_newton,
                         polish_tol=strategy.polish_tol)


def _refine(start: SaddleField, spec: BanditSpec, r: float, strategy: SolveStrategy,
            newton_only: bool) -> SaddleField:
    y = start
    if not newton_only:
        y = iterate_fixed_point(y, spec, r, alpha=strategy.damping, tol=strategy.tol,
                                max_iter=strategy.max_fixed_point)
    return _newton(y, spec, r, strategy)


def _merge(found: List[SaddleField], candidates: Sequence[SaddleField], tol: float) -> List[SaddleField]:
    for y in candidates:
        if y.converged and not any(y.same_solution(other, tol) for other in found):
            found.append(y)
    found.sort(key=lambda y: y.action)
    return found


def warm_up_starts(spec: BanditSpec, r: float, variant: Variant = "simplified") -> List[SaddleField]:
    """Starts in which some arm j is exploited because every better arm had a poor warm-up reward.

    For each depth d the better arms start from s_k^0 = s_j^0 - d (mu_k - mu_j);
    i*r_hat is re-solved from the regret constraint for each placement.
    """
    mu, sigma2 = spec.mu_array, spec.sigma2
    starts = []
    for j in range(spec.K):
        better = mu > mu[j]
        if not better.any():
            continue
        for depth in WARM_UP_DEPTHS:
            is_hat = np.zeros((spec.K, spec.T + 1))
            ir_hat = 0.0
            try:
                for _ in range(2):
                    is_hat[:, -1] = -ir_hat
                    s0_j = mu[j] + sigma2[j] * is_hat[j].sum()
                    target = s0_j - depth * (mu[better] - mu[j])
                    is_hat[better, 0] = (target - mu[better]) / sigma2[better] - is_hat[better, 1:].sum(axis=-1)
                    ir_hat = update_r_hat(initial_field(spec, r, is_hat, variant=variant), spec, r)
                is_hat[:, -1] = -ir_hat
                starts.append(initial_field(spec, r, is_hat, ir_hat=ir_hat, variant=variant))
            except ArithmeticError:
                continue
    return starts


def _starting_points(spec: BanditSpec, r: float, strategy: SolveStrategy) -> List[Tuple[SaddleField, bool]]:
    variant = strategy.variant
    starts = [(seed.model_copy(update={"r": r, "variant": variant}), True) for seed in strategy.seeds]
    starts.append((initial_field(spec, r, variant=variant), True))
    if strategy.warm_up_starts:
        starts.extend((start, True) for start in warm_up_starts(spec, r, variant))

    rng = np.random.default_rng(strategy.random_seed)
    bound = 2.0 / spec.gamma
    shape = (spec.K, spec.T + 1)
    for i in range(strategy.multistarts):
        is_hat = rng.uniform(-bound, bound, shape)
        in_hat = rng.uniform(-bound, bound, shape)
        ir_hat = rng.uniform(-bound, bound)
        try:
            start = initial_field(spec, r, is_hat, in_hat, ir_hat, variant)
        except ArithmeticError:
            continue
        # random starts alternate between damped iteration first and plain Newton
        starts.append((start, i % 2 == 1))
    return starts


def solve_saddle(spec: BanditSpec, r: float, strategy: Optional[SolveStrategy] = None) -> List[SaddleField]:
    """All distinct converged saddle points at regret r, sorted by action."""
    strategy = strategy or SolveStrategy()
    if spec.gamma <= 0:
        raise DomainError("saddle points need gamma > 0")

    found: List[SaddleField] = []
    for start, newton_only in _starting_points(spec, r, strategy):
        _merge(found, [_refine(start, spec, r, strategy, newton_only)], strategy.dedup_tol)
    logger.debug("r=%g: %d distinct solution(s)", r, len(found))
    return found


def track_branches(branches: Sequence[SaddleField], spec: BanditSpec, r: float,
                   strategy: Optional[SolveStrategy] = None) -> List[SaddleField]:
    """Newton from every known solution moved to regret r; distinct converged results sorted by action."""
    strategy = strategy or SolveStrategy()
    moved = [_newton(y.model_copy(update={"r": r}), spec, r, strategy) for y in branches]
    return _merge([], moved, strategy.dedup_tol)


def _continuation_order(r_grid: np.ndarray, r_mpv: float) -> Tuple[List[int], List[int]]:
    upper = [i for i in range(len(r_grid)) if r_grid[i] >= r_mpv]
    lower = [i for i in reversed(range(len(r_grid))) if r_grid[i] < r_mpv]
    return upper, lower


def rate_curve(spec: BanditSpec, r_grid: Sequence[float],
               strategy: Optional[SolveStrategy] = None) -> RateCurve:
    """Minimal-action rate function on r_grid.

    Both halves of the grid are swept outward from the most probable regret with
    every solution of the previous point as a seed, then swept back inward so
    branches first met far out are followed down to their folds. Points without
    a converged solution are reported as NaN.
    """
    strategy = strategy or SolveStrategy()
    if spec.gamma <= 0:
        raise DomainError("the rate function needs gamma > 0")
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.ndim != 1 or r_grid.size == 0 or np.any(np.diff(r_grid) <= 0):
        raise DomainError("r_grid must be a non-empty increasing sequence")

    size = r_grid.size
    found: List[List[SaddleField]] = [[] for _ in range(size)]
    r_mpv = most_probable_regret(spec, strategy.variant)
    origin = initial_field(spec, r_mpv, variant=strategy.variant)

    for branch in _continuation_order(r_grid, r_mpv):
        carry = [origin]
        for i in branch:
            local = strategy.model_copy(update={"seeds": carry + list(strategy.seeds)})
            _merge(found[i], solve_saddle(spec, float(r_grid[i]), local), strategy.dedup_tol)
            carry = found[i] or carry
        carry = []
        for i in reversed(branch):
            if carry:
                _merge(found[i], track_branches(carry, spec, float(r_grid[i]), strategy), strategy.dedup_tol)
            carry = found[i] or carry

    action = np.full(size, np.nan)
    ir_hat = np.full(size, np.nan)
    res = np.full(size, np.nan)
    converged = np.array([bool(solutions) for solutions in found])
    n_solutions = np.array([len(solutions) for solutions in found], dtype=int)
    best: List[Optional[SaddleField]] = [solutions[0] if solutions else None for solutions in found]
    for i, y in enumerate(best):
        if y is None:
            logger.warning("no converged saddle point at r=%g", r_grid[i])
            continue
        action[i], ir_hat[i], res[i] = y.action, y.ir_hat, y.residual

    logger.info("rate curve: %d of %d grid points converged", converged.sum(), size)
    return RateCurve(r_grid=r_grid, action=action, rate=spec.gamma * action, ir_hat=ir_hat, residual=res,
                     converged=converged, n_solutions=n_solutions, r_mpv=r_mpv, gamma=spec.gamma,
                     solutions=best)


def count_kinks(r_grid: Sequence[float], rate: Sequence[float], noise_floor: float = 1e-6) -> int:
    """Number of concave kinks: runs of negative second differences below -10 * noise_floor."""
    r_grid = np.asarray(r_grid, dtype=float)
    rate = np.asarray(rate, dtype=float)
    keep = np.isfinite(rate)
    rate = rate[keep]
    if rate.size < 3:
        return 0
    second = rate[2:] - 2.0 * rate[1:-1] + rate[:-2]
    flagged = second < -10.0 * noise_floor
    # adjacent flagged points belong to the same kink
    starts = flagged & ~np.concatenate([[False], flagged[:-1]])
    return int(starts.sum())


def continue_branches(branches: Sequence[SaddleField], spec: BanditSpec, r_from: float, r_to: float,
                      strategy: Optional[SolveStrategy] = None, r_step: float = 0.5) -> List[SaddleField]:
    """Carry solutions from r_from towards r_to with Newton steps.

    The step doubles after every successful move and halves after a failed one;
    the walk gives up below MIN_STEP_FRACTION * r_step and returns what it has.
    """
    strategy = strategy or SolveStrategy()
    branches = list(branches)
    position, step = r_from, r_step
    direction = 1.0 if r_to >= r_from else -1.0
    while direction * (r_to - position) > 0:
        trial = r_to if abs(r_to - position) <= step else position + direction * step
        moved = track_branches(branches, spec, trial, strategy)
        if moved:
            branches, position = moved, trial
            step *= 2.0
            continue
        step /= 2.0
        if step < MIN_STEP_FRACTION * r_step:
            logger.warning("continuation stalled at r=%g on the way to r=%g", position, r_to)
            break
    return branches


def dominant_trajectory(spec: BanditSpec, r: float, strategy: Optional[SolveStrategy] = None,
                        r_step: float = 0.5) -> SaddleField:
    """Minimal-action saddle point at r.

    The zero field is carried from the most probable regret to r by Newton
    continuation; the full search runs only at r, seeded with the carried branch.
    """
    strategy = strategy or SolveStrategy()
    if spec.gamma <= 0:
        raise DomainError("dominant trajectories need gamma > 0")
    r_mpv = most_probable_regret(spec, strategy.variant)
    carried = continue_branches([initial_field(spec, r_mpv, variant=strategy.variant)], spec, r_mpv, r,
                                strategy, r_step)
    local = strategy.model_copy(update={"seeds": carried + list(strategy.seeds)})
    found = solve_saddle(spec, r, local)
    if not found:
        raise DomainError(f"no converged saddle point at r={r}")
    return found[0]
