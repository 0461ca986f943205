"""Options shared by every command."""
import time
import click
from pathlib import Path
from contextlib import contextmanager

from app.errors import BanditError, ConfigError, OutputError
from app.storage.config import THREADS_ENV


def config_options(command):
    command = click.option("--config", "config_path", type=click.Path(path_type=Path),
                           help="JSON experiment config (a metadata.json from an earlier run also works).")(command)
    command = click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("results"),
                           show_default=True, help="Output directory.")(command)
    return command


def run_options(command):
    command = click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Master seed.")(command)
    command = click.option("--threads", type=int, envvar=THREADS_ENV,
                           help=f"Worker processes (default: ${THREADS_ENV}, then the CPU count).")(command)
    return command


def spec_options(command):
    command = click.option("--gamma", type=float, help="Noise scale gamma (sigma_k^2 = gamma sigma_tilde_k^2).")(command)
    command = click.option("--beta", type=float, help="Softmax inverse temperature.")(command)
    return command


@contextmanager
def command_errors():
    """Translate library errors raised inside a command into CLI exit codes."""
    try:
        yield
    except (ConfigError, OutputError, click.ClickException):
        raise
    except OSError as error:
        raise OutputError(str(error))
    except BanditError as error:
        raise ConfigError(str(error))


class Stopwatch:
    def __init__(self):
        self.start = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start
