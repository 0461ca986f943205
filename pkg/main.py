import click

from app.api.rate import rate
from app.api.simulate import simulate
from app.api.sweep import sweep_c
from app.api.toy import toy
from app.api.trajectory import trajectory
from app.utils.log_utils import configure_logging


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def cli(verbose):
    """Regret large deviations of softmax-UCB bandits."""
    configure_logging(verbose)


cli.add_command(simulate)
cli.add_command(rate)
cli.add_command(trajectory)
cli.add_command(toy)
cli.add_command(sweep_c)

if __name__ == "__main__":
    cli()
