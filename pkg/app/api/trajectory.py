import click
import logging

from app.api.options import Stopwatch, command_errors, config_options, run_options, spec_options
from app.api.simulate import conditioned_rows
from app.errors import ConfigError, ConvergenceError, DomainError
from app.models.saddle import SaddleField, SolveStrategy
from app.simulation.engine import conditioned_trajectory_stats
from app.solver.search import dominant_trajectory
from app.storage.config import load_experiment, resolve_workers
from app.storage.writers import SIM_HEADER, THEORY_HEADER, prepare_output, write_csv, write_metadata

logger = logging.getLogger(__name__)


def theory_rows(y: SaddleField):
    K, columns = y.n.shape
    muhat = y.muhat
    for t in range(columns):
        for k in range(K):
            yield t, k + 1, y.n[k, t], muhat[k, t], y.is_hat[k, t], y.in_hat[k, t]


@click.command()
@config_options
@run_options
@spec_options
@click.option("--c", type=float, help="Exploration parameter.")
@click.option("--trials", type=int, help="Number of simulated episodes.")
@click.option("--r-lo", type=float, help="Lower edge of the regret window.")
@click.option("--r-hi", type=float, help="Upper edge of the regret window (exclusive).")
@click.option("--variant", type=click.Choice(["simplified", "full"]), default="simplified", show_default=True)
def trajectory(config_path, out, seed, threads, gamma, beta, c, trials, r_lo, r_hi, variant):
    """Dominant trajectory at the window midpoint next to simulated conditioned averages."""
    overrides = {
        "spec": {"gamma": gamma, "beta": beta, "c": c},
        "simulate": {"master_seed": seed},
        "trajectory": {"trials": trials},
    }
    if r_lo is not None or r_hi is not None:
        if r_lo is None or r_hi is None:
            raise ConfigError("--r-lo and --r-hi go together")
        overrides["trajectory"]["r_window"] = (r_lo, r_hi)
    experiment = load_experiment(config_path, overrides)
    spec, block = experiment.spec, experiment.trajectory
    if spec.gamma <= 0:
        raise ConfigError("dominant trajectories need gamma > 0")
    workers = resolve_workers(threads)
    out = prepare_output(out)
    clock = Stopwatch()
    master_seed = experiment.simulate.master_seed

    with command_errors():
        stats = conditioned_trajectory_stats(spec, block.trials, master_seed, block.r_window, workers=workers)
        write_csv(out / "trajectory_sim.csv", SIM_HEADER, conditioned_rows(stats))

        midpoint = 0.5 * sum(block.r_window)
        strategy = SolveStrategy(variant=variant, random_seed=master_seed)
        try:
            theory = dominant_trajectory(spec, midpoint, strategy, r_step=block.r_step)
        except DomainError:
            theory = None
        write_csv(out / "trajectory_theory.csv", THEORY_HEADER, theory_rows(theory) if theory is not None else [])

    extra = {"r_mid": midpoint, "matched": stats.matched,
             "action": theory.action if theory is not None else None,
             "ir_hat": theory.ir_hat if theory is not None else None}
    write_metadata(out, "trajectory", experiment, master_seed, workers, clock.elapsed, extra)
    if theory is None:
        raise ConvergenceError(f"no converged saddle point at r={midpoint}")
