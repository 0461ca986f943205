import click
import logging

from app.api.options import Stopwatch, command_errors, config_options
from app.errors import ConfigError
from app.storage.config import load_experiment
from app.storage.writers import BRANCH_HEADER, prepare_output, write_csv, write_metadata
from app.toy.exact import critical_regret, find_branches, minimal_branch

logger = logging.getLogger(__name__)


@click.command()
@config_options
@click.option("--gamma", type=float, help="Noise scale gamma of the two-arm system.")
@click.option("--beta", type=float, help="Softmax inverse temperature.")
@click.option("--r", "r_values", type=float, multiple=True, help="Regret to enumerate branches at; repeatable.")
@click.option("--bracket", type=(float, float), help="Regret bracket holding the 1 -> 3 branch transition.")
def toy(config_path, out, gamma, beta, r_values, bracket):
    """Branches of the exact two-arm, one-step system and its critical regret."""
    experiment = load_experiment(config_path, {
        "toy": {"gamma": gamma, "beta": beta, "r_values": list(r_values) or None, "bracket": bracket},
    })
    block = experiment.toy
    try:
        toy_spec = block.toy_spec()
    except ValueError as error:
        raise ConfigError(str(error))
    out = prepare_output(out)
    clock = Stopwatch()

    with command_errors():
        rows, counts, minimal = [], {}, {}
        for r in block.r_values:
            branches = find_branches(r, toy_spec)
            counts[repr(r)] = len(branches)
            minimal[repr(r)] = minimal_branch(branches).branch_id
            rows.extend((r, b.branch_id, b.delta_s0, b.ir_hat, b.action) for b in branches)
        r_c = critical_regret(toy_spec, block.bracket)
        write_csv(out / "branches.csv", BRANCH_HEADER, rows)

    extra = {"r_c": r_c, "branch_counts": counts, "minimal_branch": minimal}
    write_metadata(out, "toy", experiment, None, 1, clock.elapsed, extra)
