"""Command line interface for PeriodicSIS"""

# Feature libraries
import click

from periodic_sis import lib
from periodic_sis.__meta__ import __version__


@click.group(name="periodic-sis", cls=lib.StatusGroup, invoke_without_command=True)
@click.pass_context
@click.option("--version", "-v", is_flag=True)
def periodic_sis(ctx, version):
    """
    \b
    Stability analysis and healing-rate control for periodic SIS epidemics
    """
    if ctx.invoked_subcommand is None and not version:
        click.echo(ctx.get_help())

    if version:
        click.echo(__version__)
