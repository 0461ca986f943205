"""Two-arm, one-step system reduced to one equation g(ds) = 0 in ds = s_2^0 - s_1^0."""
import logging
import numpy as np
from scipy import optimize, special
from typing import List, Optional, Tuple

from app.errors import BracketError
from app.models.saddle import SaddleField
from app.models.toy import ToyBranch, ToySpec
from app.solver.equations import action_value, backward_pass, forward_pass

logger = logging.getLogger(__name__)

GRID_POINTS = 10_000
TANGENCY_TOL = 1e-5
MERGE_TOL = 1e-3


def ir_hat_of_delta_s(ds, r: float, toy: ToySpec):
    sig = special.expit(toy.beta * np.asarray(ds, dtype=float))
    return (toy.gap * (sig - 2.0) + r) / (3.0 * toy.gamma)


def g_of_delta_s(ds, r: float, toy: ToySpec):
    ds = np.asarray(ds, dtype=float)
    sig = special.expit(toy.beta * ds)
    return -2.0 * toy.gap * toy.beta * toy.gamma * sig * (1.0 - sig) * ir_hat_of_delta_s(ds, r, toy) \
        + toy.gap - ds


def default_interval(r: float, toy: ToySpec) -> Tuple[float, float]:
    # unlucky branches sit below the gap, so the window reaches further left
    gap = toy.gap
    return gap - 3.0 * max(1.0, r / gap), gap + 3.0


def _brent(lo: float, hi: float, r: float, toy: ToySpec) -> float:
    return optimize.brentq(lambda x: float(g_of_delta_s(x, r, toy)), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _tangent_roots(grid, values, r: float, toy: ToySpec, tangency_tol: float) -> List[Tuple[float, bool]]:
    """Roots hidden between grid points: an extremum of g that touches or crosses zero."""
    found = []
    inner = values[1:-1]
    left, right = values[:-2], values[2:]
    dips = ((inner > 0) & (inner <= left) & (inner <= right)) | ((inner < 0) & (inner >= left) & (inner >= right))
    for i in np.flatnonzero(dips) + 1:
        sign = np.sign(values[i])
        lo, hi = grid[i - 1], grid[i + 1]
        best = optimize.minimize_scalar(lambda x: sign * float(g_of_delta_s(x, r, toy)), bounds=(lo, hi),
                                        method="bounded", options={"xatol": 1e-14})
        x_ext, g_ext = best.x, float(g_of_delta_s(best.x, r, toy))
        if np.sign(g_ext) != sign:
            found.append((_brent(lo, x_ext, r, toy), False))
            found.append((_brent(x_ext, hi, r, toy), False))
        elif abs(g_ext) <= tangency_tol:
            found.append((float(x_ext), True))
    return found


def _roots(r: float, toy: ToySpec, interval: Tuple[float, float], grid_points: int, tangency_tol: float,
           merge_tol: float) -> List[Tuple[float, bool]]:
    grid = np.linspace(interval[0], interval[1], grid_points)
    values = g_of_delta_s(grid, r, toy)
    roots = [(float(x), False) for x in grid[values == 0.0]]
    for i in np.flatnonzero(values[:-1] * values[1:] < 0):
        roots.append((_brent(grid[i], grid[i + 1], r, toy), False))
    roots.extend(_tangent_roots(grid, values, r, toy, tangency_tol))
    roots.sort()

    merged: List[Tuple[float, bool]] = []
    for x, tangent in roots:
        if merged and x - merged[-1][0] <= merge_tol:
            # two roots closing in on each other form one tangent branch
            merged[-1] = (0.5 * (x + merged[-1][0]), True)
            continue
        merged.append((x, tangent))

    cell = grid[1] - grid[0]
    if any(x - interval[0] <= cell or interval[1] - x <= cell for x, _ in merged):
        logger.warning("root within one grid cell of the search interval [%g, %g]; widen it", *interval)
    return merged


def reconstruct_field(delta_s0: float, r: float, toy: ToySpec) -> SaddleField:
    """Full order-parameter field of the branch through delta_s0."""
    spec = toy.bandit_spec()
    q = float(ir_hat_of_delta_s(delta_s0, r, toy))
    sig = float(special.expit(toy.beta * delta_s0))
    # only the difference of the terminal in_hat survives the softmax Jacobian
    a0 = toy.beta * sig * (1.0 - sig) * q * toy.gap
    is_hat = np.array([[a0, -q], [-a0, -q]])
    n, s = forward_pass(is_hat, np.zeros_like(is_hat), q, spec)
    _, in_hat = backward_pass(n, s, q, spec)
    y = SaddleField(s=s, n=n, is_hat=is_hat, in_hat=in_hat, ir_hat=q, r=r, converged=True, residual=0.0)
    return y.model_copy(update={"action": action_value(y, spec)})


def branch_action(branch: ToyBranch, r: float, toy: ToySpec) -> float:
    return action_value(reconstruct_field(branch.delta_s0, r, toy), toy.bandit_spec())


def find_branches(r: float, toy: ToySpec, search_interval: Optional[Tuple[float, float]] = None,
                  grid_points: int = GRID_POINTS, tangency_tol: float = TANGENCY_TOL,
                  merge_tol: float = MERGE_TOL) -> List[ToyBranch]:
    interval = search_interval or default_interval(r, toy)
    branches = []
    for branch_id, (ds, tangent) in enumerate(_roots(r, toy, interval, grid_points, tangency_tol, merge_tol)):
        y = reconstruct_field(ds, r, toy)
        branches.append(ToyBranch(r=r, delta_s0=ds, ir_hat=y.ir_hat, action=y.action, branch_id=branch_id,
                                  tangent=tangent))
    return branches


def minimal_branch(branches: List[ToyBranch]) -> ToyBranch:
    return min(branches, key=lambda branch: branch.action)


def branch_count(r: float, toy: ToySpec, grid_points: int = GRID_POINTS) -> int:
    """Strict count of simple roots: no tangency tolerance and no merging."""
    return len(_roots(r, toy, default_interval(r, toy), grid_points, 0.0, 0.0))


def critical_regret(toy: ToySpec, r_bracket: Tuple[float, float] = (1.0, 3.0), tol: float = 1e-6) -> float:
    """Regret where the branch count jumps from 1 to 3, by bisection on the count."""
    lo, hi = r_bracket
    if not lo < hi:
        raise BracketError(f"bracket {r_bracket} is not increasing")
    counts = branch_count(lo, toy), branch_count(hi, toy)
    if counts != (1, 3):
        raise BracketError(f"branch counts at the bracket ends are {counts}, expected (1, 3)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if branch_count(mid, toy) >= 2:
            hi = mid
        else:
            lo = mid
    r_c = 0.5 * (lo + hi)
    logger.info("critical regret r_c = %.7f", r_c)
    return r_c
