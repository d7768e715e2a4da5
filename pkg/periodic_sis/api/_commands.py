"""Programmatic interface behind the periodic-sis commands"""

import json

from periodic_sis import lib


def validate(schedule_path, strict=False, transpose=False):
    """
    API command for checking the model assumptions of a schedule file
    """
    schedule = lib.load_schedule(schedule_path, transpose=transpose)
    return lib.validate_schedule(schedule, strict=strict)


def analyze(schedule_path, jsr_depth=None, tol_eq=lib.TOL_EQ, transpose=False):
    """
    API command for classifying the disease-free equilibrium
    """
    schedule = lib.load_schedule(schedule_path, transpose=transpose)
    return lib.classify(schedule, tol_eq=tol_eq, jsr_depth=jsr_depth)


def simulate(
    schedule_path,
    init,
    steps,
    out,
    colors=None,
    color_every=1,
    transpose=False,
    progress=False,
):
    """
    API command for simulating a schedule and writing the trajectory CSV
    """
    schedule = lib.load_schedule(schedule_path, transpose=transpose)
    config = lib.ScenarioConfig(
        schedule=schedule, init=init, steps=steps, detect_convergence=False
    )
    result = lib.run_scenario(config, progress=progress)

    lib.write_trajectory_csv(result.trajectory, out)
    result.files.append(out)
    if colors:
        lib.write_colors_csv(result.trajectory, colors, lib.hex_colors, every=color_every)
        result.files.append(colors)

    return result


def _gain(gamma, gamma_file):
    if gamma_file:
        with open(gamma_file, "r", encoding="utf-8") as source:
            return json.load(source)
    return gamma


def synthesize(
    schedule_path,
    out,
    gamma=None,
    gamma_file=None,
    phases=None,
    fallback_delta=None,
    plan_out=None,
    transpose=False,
):
    """
    API command for applying the healing-rate law

    The controlled schedule is only written when the plan is feasible.
    """
    schedule = lib.load_schedule(schedule_path, transpose=transpose)
    plan, controlled = lib.synthesize(
        schedule, _gain(gamma, gamma_file), phases, fallback_delta
    )

    if plan.feasible:
        lib.save_schedule(controlled, out)
    if plan_out:
        lib.write_json(plan.to_dict(), plan_out)

    return plan


def min_gamma(
    schedule_path,
    phases=None,
    fallback_delta=None,
    lo=0.0,
    hi=None,
    tol=1e-10,
    transpose=False,
):
    """
    API command for the smallest homogeneous gain that eradicates the epidemic
    """
    schedule = lib.load_schedule(schedule_path, transpose=transpose)
    return lib.minimal_gamma(
        schedule, phases, fallback_delta=fallback_delta, lo=lo, hi=hi, tol=tol
    )


def sweep(
    schedule_path,
    param,
    values,
    steps=1000,
    init="node:0",
    phases=None,
    fallback_delta=None,
    out_dir=None,
    formats=("csv",),
    transpose=False,
    progress=False,
):
    """
    API command for a one-parameter sweep
    """
    schedule = lib.load_schedule(schedule_path, transpose=transpose)
    report = lib.sweep(
        schedule,
        param,
        values,
        steps=steps,
        init=init,
        controllable_phases=phases,
        fallback_delta=fallback_delta,
        progress=progress,
    )

    files = []
    if out_dir is not None:
        files = lib.emit_report(report, out_dir, formats=formats)

    return report, files


def generate(spec_path, out, seed=None):
    """
    API command for building a synthetic schedule from a TOML/YAML spec
    """
    data = lib.load_config(spec_path)
    if seed is not None:
        data["seed"] = seed

    schedule = lib.generate_synthetic(lib.SyntheticNetSpec.from_mapping(data))
    lib.save_schedule(schedule, out)
    return f"Synthetic schedule saved to {out}."


def cycle(
    schedule_path,
    init,
    steps,
    burn_in=None,
    cycle_tol=lib.CYCLE_TOL,
    out_dir=None,
    transpose=False,
):
    """
    API command for simulating and searching for a limit cycle
    """
    schedule = lib.load_schedule(schedule_path, transpose=transpose)
    config = lib.ScenarioConfig(
        schedule=schedule,
        init=init,
        steps=steps,
        detect_cycle=True,
        burn_in=burn_in,
        cycle_tol=cycle_tol,
        out_dir=out_dir,
    )
    return lib.run_scenario(config)
