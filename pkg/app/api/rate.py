import click
import logging
from concurrent.futures import ProcessPoolExecutor

from app.api.options import Stopwatch, command_errors, config_options, run_options, spec_options
from app.errors import ConfigError, ConvergenceError
from app.models.saddle import RateCurve, SolveStrategy
from app.solver.search import rate_curve
from app.storage.config import load_experiment, resolve_workers
from app.storage.writers import RATE_HEADER, prepare_output, write_csv, write_metadata

logger = logging.getLogger(__name__)

FAILURE_LIMIT = 0.5


def _solve_curve(task) -> RateCurve:
    spec, grid, strategy = task
    return rate_curve(spec, grid, strategy)


def solve_curves(tasks, workers: int):
    # one curve per exploration parameter; order follows the tasks
    if workers <= 1 or len(tasks) == 1:
        return [_solve_curve(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_solve_curve, tasks))


def curve_rows(curve: RateCurve):
    for i, r in enumerate(curve.r_grid):
        yield (r, curve.action[i], curve.rate[i], curve.ir_hat[i], curve.n_solutions[i], curve.residual[i],
               bool(curve.converged[i]))


@click.command()
@config_options
@run_options
@spec_options
@click.option("--c", "c_values", type=float, multiple=True,
              help="Exploration parameter; repeat for one curve per value.")
@click.option("--r-min", type=float)
@click.option("--r-max", type=float)
@click.option("--r-step", type=float)
@click.option("--multistarts", type=int)
@click.option("--variant", type=click.Choice(["simplified", "full"]))
def rate(config_path, out, seed, threads, gamma, beta, c_values, r_min, r_max, r_step, multistarts, variant):
    """Rate function I(r) = gamma * action on a regret grid."""
    experiment = load_experiment(config_path, {
        "spec": {"gamma": gamma, "beta": beta},
        "simulate": {"master_seed": seed},
        "rate": {"r_min": r_min, "r_max": r_max, "r_step": r_step, "multistarts": multistarts,
                 "variant": variant, "c_values": list(c_values) or None},
    })
    if experiment.spec.gamma <= 0:
        raise ConfigError("the rate function needs gamma > 0")
    workers = resolve_workers(threads)
    out = prepare_output(out)
    clock = Stopwatch()
    block = experiment.rate
    grid = block.grid()
    strategy = SolveStrategy(multistarts=block.multistarts, variant=block.variant,
                             random_seed=experiment.simulate.master_seed)
    c_list = block.c_values or [experiment.spec.c]

    tasks = [(experiment.spec.model_copy(update={"c": c}), grid, strategy) for c in c_list]
    logger.info("%d rate curve(s) on %d grid points", len(tasks), len(grid))
    with command_errors():
        curves = solve_curves(tasks, workers)
        if len(curves) == 1:
            write_csv(out / "rate_curve.csv", RATE_HEADER, curve_rows(curves[0]))
        else:
            rows = ((c,) + row for c, curve in zip(c_list, curves) for row in curve_rows(curve))
            write_csv(out / "rate_curve.csv", ("c",) + RATE_HEADER, rows)

    failed = sum(int((~curve.converged).sum()) for curve in curves)
    total = sum(curve.r_grid.size for curve in curves)
    extra = {"r_mpv": {repr(c): curve.r_mpv for c, curve in zip(c_list, curves)}, "failed_points": failed}
    write_metadata(out, "rate", experiment, experiment.simulate.master_seed, workers, clock.elapsed, extra)
    if failed > FAILURE_LIMIT * total:
        raise ConvergenceError(f"{failed} of {total} grid points did not converge")
