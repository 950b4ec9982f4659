"""Command line front end.

Every subcommand takes a config document; artifacts land in the config's
output directory. Exit codes: 0 success, 2 config error, 3 numerical
failure (singular or stiff), 4 I/O failure.
"""

from __future__ import annotations

import sys

import click

from . import __version__
from .config import load_config
from .errors import ConfigError, SingularJacobian, StiffnessFailure, ZnnError
from .runner import run_experiment

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _run(mode: str, config_path: str, seed, **kwargs) -> None:
    try:
        cfg = load_config(config_path)
        if seed is not None:
            cfg = cfg.with_seed(seed)
        written = run_experiment(cfg, mode, **kwargs)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (SingularJacobian, StiffnessFailure) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except ZnnError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except OSError as exc:
        click.echo(f"i/o failure: {exc}", err=True)
        sys.exit(EXIT_IO)
    for name in sorted(written):
        click.echo(f"wrote {written[name]}")


def _config_argument(fn):
    return click.argument("config_path", metavar="CONFIG",
                          type=click.Path())(fn)


def _seed_option(fn):
    return click.option("--seed", type=int, default=None,
                        help="Override the config seed.")(fn)


@click.group()
@click.version_option(__version__, prog_name="znnkit")
def main() -> None:
    """Zeroing-dynamics experiment runner."""


@main.command()
@_config_argument
@_seed_option
def solve(config_path: str, seed) -> None:
    """Run a discrete solver and export the trajectory."""
    _run("solve", config_path, seed)


@main.command()
@_config_argument
@_seed_option
@click.option("--tol", type=float, default=1e-9, show_default=True,
              help="Reference integrator tolerance.")
def rate(config_path: str, seed, tol: float) -> None:
    """Reference-integrate and fit the exponential convergence rate."""
    _run("rate", config_path, seed, tol=tol)


@main.command("noise-sweep")
@_config_argument
@_seed_option
@click.option("--workers", type=int, default=None,
              help="Worker pool size (default: available parallelism).")
def noise_sweep_cmd(config_path: str, seed, workers) -> None:
    """Terminal-residual grid over formulas and noise magnitudes."""
    _run("noise-sweep", config_path, seed, max_workers=workers)


@main.command()
@_config_argument
@_seed_option
def order(config_path: str, seed) -> None:
    """Empirical order of accuracy under sample-gap halving."""
    _run("order", config_path, seed)


@main.command()
@_config_argument
@_seed_option
def tdoa(config_path: str, seed) -> None:
    """Localize a moving source from time-difference-of-arrival delays."""
    _run("tdoa", config_path, seed)


if __name__ == "__main__":
    main()
