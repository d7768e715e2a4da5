import sys

import click

from periodic_sis.lib._errors import ConvergenceError, InfeasibleError, ScheduleError

__all__ = [
    "EXIT_OK",
    "EXIT_INVALID",
    "EXIT_INFEASIBLE",
    "StatusGroup",
    "MutuallyExclusiveOption",
    "NumberList",
    "schedule_argument",
]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2


class StatusGroup(click.Group):
    """
    Command group whose exit status carries only operational outcome:
    1 for invalid input (usage errors included), 2 for infeasible requests.
    """

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        if not standalone_mode:
            return super().main(args, prog_name, complete_var, False, **extra)

        try:
            status = super().main(args, prog_name, complete_var, False, **extra)
        except click.UsageError as err:
            err.show()
            sys.exit(EXIT_INVALID)
        except click.ClickException as err:
            err.show()
            sys.exit(err.exit_code)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_INVALID)
        except InfeasibleError as err:
            click.echo(f"Error: {err}", err=True)
            sys.exit(EXIT_INFEASIBLE)
        except (ScheduleError, ConvergenceError, OSError, ValueError) as err:
            click.echo(f"Error: {err}", err=True)
            sys.exit(EXIT_INVALID)

        sys.exit(status if isinstance(status, int) else EXIT_OK)


class MutuallyExclusiveOption(click.Option):
    def __init__(self, *args, **kwargs):
        self.mutually_exclusive = set(kwargs.pop("mutually_exclusive", []))
        help_text = kwargs.get("help", "")
        if self.mutually_exclusive:
            kwargs["help"] = (
                help_text
                + " NOTE: This option is mutually exclusive with ["
                + ", ".join(sorted(self.mutually_exclusive))
                + "]."
            )
        super().__init__(*args, **kwargs)

    def handle_parse_result(self, ctx, opts, args):
        if self.mutually_exclusive.intersection(opts) and self.name in opts:
            raise click.UsageError(
                "Illegal usage: `{}` is mutually exclusive with `{}`.".format(
                    self.name, ", ".join(sorted(self.mutually_exclusive))
                )
            )

        return super().handle_parse_result(ctx, opts, args)


class NumberList(click.ParamType):
    """Comma separated numbers, e.g. ``0,2`` or ``0.5,1,2``; ``all`` gives ``None``."""

    name = "list"

    def __init__(self, cast=float, allow_all=False):
        self.cast = cast
        self.allow_all = allow_all

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)) or value is None:
            return value
        text = value.strip()
        if self.allow_all and text == "all":
            return None
        try:
            return [self.cast(item) for item in text.split(",") if item.strip()]
        except ValueError:
            self.fail(f"{value!r} is not a comma separated list", param, ctx)


def schedule_argument(func):
    """Schedule path argument plus the ``--transpose`` ingestion flag."""
    func = click.option(
        "--transpose",
        is_flag=True,
        help="Read adjacency triples as [j, i, w] (edge i -> j) instead of [i, j, w]",
    )(func)
    return click.argument(
        "schedule", type=click.Path(exists=True, dir_okay=False), required=True
    )(func)
