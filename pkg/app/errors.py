import click


class BanditError(Exception):
    ...


class DomainError(BanditError, ValueError):
    ...


class NumericError(BanditError, ArithmeticError):
    ...


class EmptyHistogramError(BanditError):
    ...


class BracketError(BanditError, ValueError):
    ...


class ConfigError(click.ClickException):
    exit_code = 2


class OutputError(click.ClickException):
    exit_code = 3


class ConvergenceError(click.ClickException):
    exit_code = 4
