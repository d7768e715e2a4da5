"""Command line interface for PeriodicSIS"""

# Standard libraries
import json

# Feature libraries
import click

from periodic_sis.cli import periodic_sis
from periodic_sis import api
from periodic_sis import lib


def _echo_json(data, out=None):
    data = {"spec_version": lib.SPEC_VERSION, **data}
    if out:
        lib.write_json(data, out)
        click.echo(f"Report written to {out}.")
    else:
        click.echo(json.dumps(data, indent=2))


_PHASES = click.option(
    "--phases",
    type=lib.NumberList(cast=int, allow_all=True),
    default="all",
    show_default=True,
    help="Controllable phases, e.g. 0,2 or all",
)
_FALLBACK = click.option(
    "--fallback-delta",
    type=click.FloatRange(min=0.0),
    default=None,
    help="Healing rate on uncontrolled phases (defaults to the schedule's own)",
)
_INIT = click.option(
    "--init",
    default="node:0",
    show_default=True,
    help="Initial state: zero | node:<i> | uniform:<c> | file:<path>",
)


@periodic_sis.command(name="validate")
@lib.schedule_argument
@click.option("--strict", is_flag=True, help="Fail with an error message on A2/A3")
def validate(schedule, strict, transpose):
    """
    \b
    Check the model assumptions of a schedule
    \b

    \b
    Prints the per-assumption report as JSON and exits 1
    when A2 or A3 fail
    \b
    """
    report = api.validate(schedule, strict=strict, transpose=transpose)
    _echo_json(report.to_dict())
    return lib.EXIT_OK if report.ok else lib.EXIT_INVALID


@periodic_sis.command(name="analyze")
@lib.schedule_argument
@click.option(
    "--jsr-depth",
    type=click.IntRange(min=1, max=12),
    default=None,
    help="Product length for the joint spectral radius bounds [default: p]",
)
@click.option(
    "--tol-eq",
    type=click.FloatRange(min=0.0, max=0.5),
    default=lib.TOL_EQ,
    show_default=True,
    help="Band around rho = 1 treated as the boundary case",
)
@click.option("--out", "-o", default=None, help="Write the JSON report to a file")
def analyze(schedule, jsr_depth, tol_eq, out, transpose):
    """
    \b
    Classify the disease-free equilibrium of a schedule
    \b

    \b
    Computes the monodromy and lift spectral radii, joint
    spectral radius bounds, the diagonal Lyapunov certificate
    and the convergence rate bound
    \b
    """
    report = api.analyze(schedule, jsr_depth=jsr_depth, tol_eq=tol_eq, transpose=transpose)
    _echo_json(report.to_dict(), out)


@periodic_sis.command(name="simulate")
@lib.schedule_argument
@_INIT
@click.option("--steps", type=click.IntRange(min=0), required=True, help="Number of steps")
@click.option("--out", "-o", required=True, help="Trajectory CSV path")
@click.option("--colors", default=None, help="Node color CSV path")
@click.option(
    "--color-every",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Write colors for every N-th state",
)
@click.option("--progress", is_flag=True, help="Show a progress bar")
def simulate(schedule, init, steps, out, colors, color_every, progress, transpose):
    """
    \b
    Simulate the nonlinear periodic SIS dynamics
    \b
    """
    result = api.simulate(
        schedule,
        init,
        steps,
        out,
        colors=colors,
        color_every=color_every,
        transpose=transpose,
        progress=progress,
    )
    click.echo(f"Simulated {result.trajectory.steps} steps, trajectory saved to {out}.")


@periodic_sis.command(name="synthesize")
@lib.schedule_argument
@click.option(
    "--gamma",
    type=click.FloatRange(min=0.0),
    cls=lib.MutuallyExclusiveOption,
    help="Homogeneous gain",
    mutually_exclusive=["gamma_file"],
)
@click.option(
    "--gamma-file",
    type=click.Path(exists=True, dir_okay=False),
    cls=lib.MutuallyExclusiveOption,
    help="JSON array with one gain per node",
    mutually_exclusive=["gamma"],
)
@_PHASES
@_FALLBACK
@click.option("--out", "-o", required=True, help="Controlled schedule path")
@click.option("--plan", default=None, help="Write the control plan JSON to a file")
def synthesize(schedule, gamma, gamma_file, phases, fallback_delta, out, plan, transpose):
    """
    \b
    Synthesize healing rates delta = row sum + gamma
    \b

    \b
    Exits 2 when the gain breaks h*delta <= 1 on a
    controlled phase
    \b
    """
    if gamma is None and not gamma_file:
        raise click.UsageError("Please provide either the '--gamma' or '--gamma-file' option")

    control = api.synthesize(
        schedule,
        out,
        gamma=gamma,
        gamma_file=gamma_file,
        phases=phases,
        fallback_delta=fallback_delta,
        plan_out=plan,
        transpose=transpose,
    )
    _echo_json(control.to_dict())

    if not control.feasible:
        click.echo("Error: requested gain is infeasible on some controlled phase", err=True)
        return lib.EXIT_INFEASIBLE
    return lib.EXIT_OK


@periodic_sis.command(name="min-gamma")
@lib.schedule_argument
@_PHASES
@_FALLBACK
@click.option("--lo", type=click.FloatRange(min=0.0), default=0.0, show_default=True)
@click.option(
    "--hi",
    type=click.FloatRange(min=0.0),
    default=None,
    help="Upper end of the bracket [default: largest feasible gain]",
)
@click.option(
    "--tol", type=click.FloatRange(min=0.0, min_open=True), default=1e-10, show_default=True
)
def min_gamma(schedule, phases, fallback_delta, lo, hi, tol, transpose):
    """
    \b
    Find the smallest homogeneous gain with rho <= 1
    \b
    """
    search = api.min_gamma(
        schedule,
        phases=phases,
        fallback_delta=fallback_delta,
        lo=lo,
        hi=hi,
        tol=tol,
        transpose=transpose,
    )
    _echo_json(search.to_dict())


@periodic_sis.command(name="sweep")
@lib.schedule_argument
@click.option(
    "--param", type=click.Choice(lib.SWEEP_PARAMS), required=True, help="Swept parameter"
)
@click.option("--values", type=lib.NumberList(), required=True, help="e.g. 10,20,35")
@click.option("--steps", type=click.IntRange(min=1), default=1000, show_default=True)
@_INIT
@_PHASES
@_FALLBACK
@click.option("--out", "-o", "out_dir", default=None, help="Output directory")
@click.option("--json", "as_json", is_flag=True, help="Also write sweep.json")
@click.option("--progress", is_flag=True, help="Show a progress bar")
def sweep(
    schedule, param, values, steps, init, phases, fallback_delta, out_dir, as_json, progress, transpose
):
    """
    \b
    Sweep one parameter and tabulate rho, class and convergence
    \b
    """
    formats = ("csv", "json") if as_json else ("csv",)
    report, files = api.sweep(
        schedule,
        param,
        values,
        steps=steps,
        init=init,
        phases=phases,
        fallback_delta=fallback_delta,
        out_dir=out_dir,
        formats=formats,
        transpose=transpose,
        progress=progress,
    )

    if files:
        click.echo("Sweep written to " + ", ".join(files) + ".")
    else:
        click.echo(",".join(lib.SweepReport.HEADER))
        for row in report.table():
            click.echo(",".join(str(value) for value in row))


@periodic_sis.command(name="generate")
@click.option(
    "--spec", "spec_file", type=click.Path(exists=True, dir_okay=False), required=True,
    help="TOML or YAML network spec",
)
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Overrides the spec seed")
@click.option("--out", "-o", required=True, help="Schedule JSON path")
def generate(spec_file, seed, out):
    """
    \b
    Generate a synthetic periodic schedule
    \b
    """
    message = api.generate(spec_file, out, seed=seed)
    click.echo(message)


@periodic_sis.command(name="cycle")
@lib.schedule_argument
@_INIT
@click.option("--steps", type=click.IntRange(min=1), required=True, help="Number of steps")
@click.option("--burn-in", type=click.IntRange(min=0), default=None, help="Steps to discard")
@click.option(
    "--cycle-tol",
    type=click.FloatRange(min=0.0, min_open=True),
    default=lib.CYCLE_TOL,
    show_default=True,
)
@click.option("--out", "-o", "out_dir", default=None, help="Output directory for the trajectory")
def cycle(schedule, init, steps, burn_in, cycle_tol, out_dir, transpose):
    """
    \b
    Simulate and search for a limit cycle
    \b
    """
    result = api.cycle(
        schedule,
        init,
        steps,
        burn_in=burn_in,
        cycle_tol=cycle_tol,
        out_dir=out_dir,
        transpose=transpose,
    )
    _echo_json(result.to_dict())
