import click

from app.api.options import Stopwatch, command_errors, config_options, spec_options
from app.solver.search import most_probable_regret
from app.storage.config import load_experiment
from app.storage.writers import SWEEP_HEADER, prepare_output, write_csv, write_metadata


@click.command(name="sweep-c")
@config_options
@spec_options
@click.option("--c", "c_values", type=float, multiple=True, help="Exploration parameter; repeatable.")
def sweep_c(config_path, out, gamma, beta, c_values):
    """Most probable regret as a function of the exploration parameter."""
    experiment = load_experiment(config_path, {
        "spec": {"gamma": gamma, "beta": beta},
        "sweep": {"c_values": list(c_values) or None},
    })
    out = prepare_output(out)
    clock = Stopwatch()
    spec = experiment.spec

    with command_errors():
        rows = [(c, most_probable_regret(spec.model_copy(update={"c": c}))) for c in experiment.sweep.c_values]
        write_csv(out / "rmpv_vs_c.csv", SWEEP_HEADER, rows)

    write_metadata(out, "sweep-c", experiment, None, 1, clock.elapsed)
