import click
import logging

from app.api.options import Stopwatch, command_errors, config_options, run_options, spec_options
from app.models.simulation import ConditionedStats
from app.simulation.engine import run_ensemble
from app.simulation.histogram import empirical_action
from app.storage.config import load_experiment, resolve_workers
from app.storage.writers import (HISTOGRAM_HEADER, SIM_HEADER, prepare_output, write_csv,
                                 write_metadata)

logger = logging.getLogger(__name__)


def conditioned_rows(stats: ConditionedStats):
    K, columns = stats.n_mean.shape
    for t in range(columns):
        for k in range(K):
            if stats.empty:
                yield t, k + 1, None, None, None, None, 0
            else:
                yield (t, k + 1, stats.n_mean[k, t], stats.n_std[k, t], stats.muhat_mean[k, t],
                       stats.muhat_std[k, t], stats.matched)


@click.command()
@config_options
@run_options
@spec_options
@click.option("--c", type=float, help="Exploration parameter.")
@click.option("--trials", type=int, help="Number of episodes.")
@click.option("--bin-width", type=float, help="Histogram bin width.")
def simulate(config_path, out, seed, threads, gamma, beta, c, trials, bin_width):
    """Monte Carlo regret histogram and empirical action."""
    experiment = load_experiment(config_path, {
        "spec": {"gamma": gamma, "beta": beta, "c": c},
        "simulate": {"trials": trials, "master_seed": seed, "bin_width": bin_width},
    })
    workers = resolve_workers(threads)
    out = prepare_output(out)
    clock = Stopwatch()
    spec, block = experiment.spec, experiment.simulate

    with command_errors():
        histogram, stats = run_ensemble(spec, block.trials, block.master_seed, bin_width=block.bin_width,
                                        windows=block.windows, workers=workers, origin=block.origin)
        centers, phi = empirical_action(histogram)
        counts = [count for _, count in sorted(histogram.counts.items()) if count > 0]
        write_csv(out / "histogram.csv", HISTOGRAM_HEADER,
                  zip(centers, counts, phi, spec.gamma * phi))
        for i, window_stats in enumerate(stats):
            write_csv(out / f"trajectory_sim_w{i}.csv", SIM_HEADER, conditioned_rows(window_stats))

    extra = {"underflow": histogram.underflow, "overflow": histogram.overflow,
             "matched": [window_stats.matched for window_stats in stats]}
    write_metadata(out, "simulate", experiment, block.master_seed, workers, clock.elapsed, extra)
