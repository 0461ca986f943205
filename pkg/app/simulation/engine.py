import logging
import numpy as np
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence, Tuple
from pydantic import BaseModel, ConfigDict

from app.core.policy import policy_probabilities
from app.models.bandit import BanditSpec
from app.models.simulation import ConditionedStats, RegretHistogram, Trajectory
from app.simulation.rng import episode_stream
from app.utils.stats_utils import RunningMoments

logger = logging.getLogger(__name__)

BLOCK_SIZE = 8192

Window = Tuple[float, float]


class EpisodeBlock(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    regret: np.ndarray                     # (size,)
    n: Optional[np.ndarray] = None         # (size, K, T+1)
    s: Optional[np.ndarray] = None
    actions: Optional[np.ndarray] = None   # (size, T)
    rewards: Optional[np.ndarray] = None   # (size, T)
    warmup: Optional[np.ndarray] = None    # (size, K)


class BlockResult(BaseModel):
    histogram: RegretHistogram
    moments: List[Tuple[RunningMoments, RunningMoments]]


def simulate_block(spec: BanditSpec, rng: np.random.Generator, size: int, record: bool = False) -> EpisodeBlock:
    """Simulate ``size`` independent episodes drawing from one generator.

    Draw order is fixed: warm-up rewards (size, K), then per step one uniform
    (arm choice) and one normal (reward) per episode.
    """
    K, T = spec.K, spec.T
    mu = spec.mu_array
    sd = np.sqrt(spec.sigma2)
    rows = np.arange(size)

    warmup = mu + sd * rng.standard_normal((size, K))
    n = np.ones((size, K))
    s = warmup.copy()
    if record:
        n_path = np.empty((size, K, T + 1))
        s_path = np.empty((size, K, T + 1))
        n_path[:, :, 0], s_path[:, :, 0] = n, s
        actions = np.empty((size, T), dtype=np.int64)
        rewards = np.empty((size, T))

    for t in range(T):
        rho = policy_probabilities(s, n, t, spec)
        u = rng.random(size)
        arm = np.minimum((np.cumsum(rho, axis=1) <= u[:, None]).sum(axis=1), K - 1)
        x = mu[arm] + sd[arm] * rng.standard_normal(size)
        n[rows, arm] += 1.0
        s[rows, arm] += x
        if record:
            n_path[:, :, t + 1], s_path[:, :, t + 1] = n, s
            actions[:, t], rewards[:, t] = arm, x

    regret = spec.total_budget - s.sum(axis=1)
    if not record:
        return EpisodeBlock(regret=regret)
    return EpisodeBlock(regret=regret, n=n_path, s=s_path, actions=actions, rewards=rewards, warmup=warmup)


def run_episode(spec: BanditSpec, stream: np.random.Generator) -> Trajectory:
    block = simulate_block(spec, stream, 1, record=True)
    s = block.s[0]
    total = float(s[:, -1].sum())
    return Trajectory(actions=block.actions[0], warmup_rewards=block.warmup[0], rewards=block.rewards[0],
                      n=block.n[0], s=s, regret=float(block.regret[0]), total_reward=total)


def _block_sizes(trials: int, block_size: int) -> List[int]:
    full, rest = divmod(trials, block_size)
    return [block_size] * full + ([rest] if rest else [])


def _run_block(task) -> BlockResult:
    spec, master_seed, index, size, template, windows = task
    record = bool(windows)
    block = simulate_block(spec, episode_stream(master_seed, index), size, record=record)
    moments = []
    for lo, hi in windows:
        hit = (block.regret >= lo) & (block.regret < hi)
        n = block.n[hit]
        moments.append((RunningMoments.from_samples(n), RunningMoments.from_samples(block.s[hit] / n)))
    return BlockResult(histogram=template.add_samples(block.regret), moments=moments)


def _stats_from_moments(window: Window, n_moments: RunningMoments, muhat_moments: RunningMoments,
                        shape) -> ConditionedStats:
    if n_moments.count == 0:
        logger.warning("no trajectory landed in window [%s, %s)", *window)
        blank = np.full(shape, np.nan)
        return ConditionedStats(window=window, n_mean=blank, n_std=blank.copy(), muhat_mean=blank.copy(),
                                muhat_std=blank.copy(), matched=0)
    return ConditionedStats(window=window, n_mean=n_moments.mean, n_std=n_moments.std(),
                            muhat_mean=muhat_moments.mean, muhat_std=muhat_moments.std(),
                            matched=n_moments.count)


def run_ensemble(spec: BanditSpec, trials: int, master_seed: int, bin_width: float = 0.5,
                 windows: Optional[Sequence[Window]] = None, workers: int = 1, origin: float = 0.0,
                 r_range: Optional[Window] = None,
                 block_size: int = BLOCK_SIZE) -> Tuple[RegretHistogram, List[ConditionedStats]]:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    windows = [tuple(map(float, w)) for w in (windows or [])]
    template = RegretHistogram(bin_width=bin_width, origin=origin, r_range=r_range)
    tasks = [(spec, master_seed, index, size, template, windows)
             for index, size in enumerate(_block_sizes(trials, block_size))]
    logger.info("simulating %d episodes in %d blocks on %d worker(s)", trials, len(tasks), workers)

    histogram = template
    moments = [(RunningMoments(), RunningMoments()) for _ in windows]

    def merge(result: BlockResult) -> None:
        nonlocal histogram
        histogram = histogram.merge(result.histogram)
        for i, (n_part, muhat_part) in enumerate(result.moments):
            moments[i] = (moments[i][0].merge(n_part), moments[i][1].merge(muhat_part))

    # results are merged in block order whatever the worker count
    if workers <= 1:
        for task in tasks:
            merge(_run_block(task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(_run_block, tasks):
                merge(result)

    shape = (spec.K, spec.T + 1)
    stats = [_stats_from_moments(w, n_m, mu_m, shape) for w, (n_m, mu_m) in zip(windows, moments)]
    return histogram, stats


def conditioned_trajectory_stats(spec: BanditSpec, trials: int, master_seed: int, window: Window,
                                 workers: int = 1, block_size: int = BLOCK_SIZE) -> ConditionedStats:
    _, stats = run_ensemble(spec, trials, master_seed, windows=[window], workers=workers, block_size=block_size)
    return stats[0]
