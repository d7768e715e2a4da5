"""Scenario generation, trajectory diagnostics, parameter sweeps and report files"""

import math
import os
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import click
import numpy as np
from alive_progress import alive_bar

from periodic_sis.lib._control import synthesize
from periodic_sis.lib._errors import ScheduleError
from periodic_sis.lib._filetools import (
    parse_init,
    write_colors_csv,
    write_json,
    write_rows_csv,
    write_trajectory_csv,
)
from periodic_sis.lib._model import (
    GraphPhase,
    PeriodicSchedule,
    Trajectory,
    simulate,
    validate_schedule,
)
from periodic_sis.lib._stability import classify

__all__ = [
    "CYCLE_TOL",
    "BURN_IN_CAP",
    "RATE_FLOOR",
    "RED",
    "BLUE",
    "SWEEP_PARAMS",
    "SyntheticNetSpec",
    "ScenarioConfig",
    "ScenarioResult",
    "ConvergenceStats",
    "CycleReport",
    "SweepRow",
    "SweepReport",
    "generate_synthetic",
    "detect_convergence",
    "detect_limit_cycle",
    "default_burn_in",
    "run_scenario",
    "sweep",
    "node_colors",
    "hex_colors",
    "emit_report",
]

CYCLE_TOL = 1e-8
BURN_IN_CAP = 100_000
RATE_FLOOR = 1e-6

RED = (1.0, 0.0, 0.0)
BLUE = (0.0, 0.0, 1.0)

SWEEP_PARAMS = ("delta_scalar", "gamma_scalar", "h")


@dataclass
class SyntheticNetSpec:
    """
    Ring of nearest neighbours (binary, ``ring_width`` each side) plus one
    random weighted overlay per phase, with integer flight-count weights.
    """

    n: int
    p: int = 3
    ring_width: int = 1
    edge_probability: float = 0.0
    weight_range: Tuple[int, int] = (1, 1)
    beta: float = 1.0
    delta: Union[float, Sequence[float]] = 1.0
    h: Optional[float] = None
    seed: int = 0
    require_a4: bool = False

    @classmethod
    def from_mapping(cls, data):
        known = {name for name in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ScheduleError(f"unknown generator keys: {sorted(unknown)}")
        spec = cls(**data)
        spec.weight_range = tuple(int(w) for w in spec.weight_range)
        return spec

    def phase_deltas(self):
        if isinstance(self.delta, (int, float)):
            return [float(self.delta)] * self.p
        deltas = [float(value) for value in self.delta]
        if len(deltas) != self.p:
            raise ScheduleError(f"delta list needs {self.p} entries, got {len(deltas)}")
        return deltas


def _ring(n, width):
    ring = np.zeros((n, n))
    for i in range(n):
        for shift in range(1, width + 1):
            for j in ((i + shift) % n, (i - shift) % n):
                if j != i:
                    ring[i, j] = 1.0
    return ring


def generate_synthetic(spec):
    """
    Seeded synthetic periodic network.

    ``h`` defaults to ``1 / max(delta, max_i sum_j bbar_ij(k))`` so that the
    rate assumptions hold by construction.
    """
    if spec.n < 2 or spec.p < 1:
        raise ScheduleError("synthetic networks need n >= 2 and p >= 1")
    low, high = spec.weight_range
    if low < 1 or high < low:
        raise ScheduleError(f"bad weight range {spec.weight_range}")
    if not 0.0 <= spec.edge_probability <= 1.0:
        raise ScheduleError("edge probability must lie in [0, 1]")

    rng = np.random.default_rng(spec.seed)
    ring = _ring(spec.n, spec.ring_width)
    deltas = spec.phase_deltas()

    adjacencies = []
    for _ in range(spec.p):
        mask = rng.random((spec.n, spec.n)) < spec.edge_probability
        weights = rng.integers(low, high + 1, size=(spec.n, spec.n))
        overlay = np.where(mask, weights, 0).astype(float)
        np.fill_diagonal(overlay, 0.0)
        adjacencies.append(ring + overlay)

    max_in_degree = max(float(adjacency.sum(axis=1).max()) for adjacency in adjacencies)
    h = spec.h
    if h is None:
        h = 1.0 / max(max(deltas), spec.beta * max_in_degree, 1e-300)

    phases = []
    for k, adjacency in enumerate(adjacencies):
        rows, cols = np.nonzero(adjacency)
        if spec.require_a4 and not np.any(rows != cols):
            raise ScheduleError(
                f"phase {k} has no edges, regenerate with a higher edge probability"
            )
        phases.append(
            GraphPhase(
                index=k,
                adjacency=[
                    (int(i), int(j), float(adjacency[i, j])) for i, j in zip(rows, cols)
                ],
                beta=np.full(spec.n, spec.beta),
                delta=np.full(spec.n, deltas[k]),
            )
        )

    generator = asdict(spec)
    generator["weight_range"] = list(spec.weight_range)
    if not isinstance(spec.delta, (int, float)):
        generator["delta"] = deltas

    schedule = PeriodicSchedule(
        n=spec.n,
        p=spec.p,
        h=float(h),
        phases=tuple(phases),
        meta={"max_in_degree": max_in_degree, "generator": generator},
    )
    validate_schedule(schedule, strict=True)
    return schedule


@dataclass
class ConvergenceStats:
    converged: bool
    hitting_step: Optional[int]
    empirical_rate: float

    def to_dict(self):
        return asdict(self)


def detect_convergence(trajectory, tol=1e-6):
    """
    Convergence flag, hitting step and per-step empirical decay rate.

    The rate is the geometric mean of the per-period ratios of ``||x||_2``
    over the second half of the run, taken to the power ``1/p``. Samples
    at or below ``tol * RATE_FLOOR`` are skipped; when the second half has
    none left the whole run is used.
    """
    p = trajectory.p
    if trajectory.states.shape[0] < 2 * p:
        raise ValueError("trajectory must cover at least two periods")

    sup_norms = trajectory.norms(np.inf)
    above = np.nonzero(sup_norms >= tol)[0]
    converged = bool(sup_norms[-1] < tol)
    hitting = None
    if converged:
        hitting = 0 if above.size == 0 else int(above[-1]) + 1

    samples = trajectory.norms(2)[::p]
    # ratios of underflowed or subnormal norms carry no rate information
    valid = samples > tol * RATE_FLOOR
    pairs = np.nonzero(valid[1:] & valid[:-1])[0]
    late = pairs[pairs >= (len(samples) - 1) // 2]
    if late.size:
        pairs = late

    if pairs.size == 0:
        rate = 0.0
    else:
        ratios = samples[pairs + 1] / samples[pairs]
        rate = float(np.exp(np.mean(np.log(ratios)) / p))

    return ConvergenceStats(converged=converged, hitting_step=hitting, empirical_rate=rate)


@dataclass
class CycleReport:
    detected: bool
    period: Optional[int]
    states: np.ndarray
    burn_in: int
    max_deviation: float
    fixed_point: bool = False
    p: int = 1

    def matches(self, other, tol):
        """Same cycle up to a rotation by whole periods of the schedule."""
        if not (self.detected and other.detected and self.period == other.period):
            return False
        for shift in range(0, self.period, self.p):
            rolled = np.roll(self.states, shift, axis=0)
            if np.abs(rolled - other.states).max() <= tol:
                return True
        return False

    def to_dict(self):
        return {
            "detected": self.detected,
            "period": self.period,
            "fixed_point": self.fixed_point,
            "burn_in": self.burn_in,
            "max_deviation": self.max_deviation,
            "states": self.states.tolist(),
        }


def default_burn_in(p, rho):
    """``10 p / |1 - rho|`` steps, capped at ``BURN_IN_CAP``."""
    gap = abs(1.0 - rho)
    if gap == 0.0:
        return BURN_IN_CAP
    return int(min(BURN_IN_CAP, math.ceil(10.0 * p / gap)))


def detect_limit_cycle(trajectory, p=None, burn_in=None, cycle_tol=CYCLE_TOL, max_multiple=8):
    """
    Smallest ``d`` in ``p, 2p, ...`` with ``||x(k+d) - x(k)||_inf <= cycle_tol``
    over the post-burn-in window.

    The window starts at the first phase-0 step after ``burn_in`` so the
    reported states are aligned with the schedule.
    """
    p = p or trajectory.p
    states = trajectory.states
    total = states.shape[0]
    if burn_in is None:
        burn_in = total // 2
    if total < burn_in + 4 * p:
        raise ValueError(f"trajectory needs at least burn_in + 4p = {burn_in + 4 * p} states")

    start = burn_in + (-(trajectory.start + burn_in)) % p
    window = states[start:]

    best = math.inf
    for multiple in range(1, max_multiple + 1):
        d = multiple * p
        if window.shape[0] < 2 * d:
            break
        deviation = float(np.abs(window[d:] - window[:-d]).max())
        best = min(best, deviation)
        if deviation <= cycle_tol:
            representative = window[:d].copy()
            return CycleReport(
                detected=True,
                period=d,
                states=representative,
                burn_in=start,
                max_deviation=deviation,
                fixed_point=bool(np.abs(representative - representative[0]).max() <= cycle_tol),
                p=p,
            )

    return CycleReport(
        detected=False,
        period=None,
        states=np.empty((0, states.shape[1])),
        burn_in=start,
        max_deviation=best,
        p=p,
    )


@dataclass
class ScenarioConfig:
    schedule: PeriodicSchedule
    init: str = "node:0"
    steps: int = 1000
    detect_convergence: bool = True
    detect_cycle: bool = False
    tol: float = 1e-6
    cycle_tol: float = CYCLE_TOL
    burn_in: Optional[int] = None
    out_dir: Optional[str] = None
    formats: Tuple[str, ...] = ("csv",)
    color_every: int = 0


@dataclass
class ScenarioResult:
    trajectory: Trajectory
    convergence: Optional[ConvergenceStats] = None
    cycle: Optional[CycleReport] = None
    files: List[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "steps": self.trajectory.steps,
            "final_xbar": float(self.trajectory.xbar[-1]),
            "convergence": None if self.convergence is None else self.convergence.to_dict(),
            "cycle": None if self.cycle is None else self.cycle.to_dict(),
            "files": self.files,
        }


def run_scenario(config, progress=False):
    """Simulate one scenario, run the enabled detectors and write its files."""
    schedule = config.schedule
    x0 = parse_init(config.init, schedule.n)
    trajectory = simulate(schedule, x0, config.steps, progress=progress)
    result = ScenarioResult(trajectory=trajectory)

    if config.detect_convergence:
        result.convergence = detect_convergence(trajectory, config.tol)

    if config.detect_cycle:
        burn_in = config.burn_in
        if burn_in is None:
            rho = classify(schedule, jsr_depth=1).rho_monodromy
            # never shorter than half the run
            burn_in = max(default_burn_in(schedule.p, rho), config.steps // 2)
            burn_in = min(burn_in, max(config.steps - 4 * schedule.p, 0))
        result.cycle = detect_limit_cycle(
            trajectory, schedule.p, burn_in=burn_in, cycle_tol=config.cycle_tol
        )

    if config.out_dir is not None:
        result.files = emit_report(
            trajectory,
            config.out_dir,
            formats=config.formats,
            color_every=config.color_every,
        )

    return result


@dataclass
class SweepRow:
    param_value: float
    valid: bool
    rho: Optional[float] = None
    classification: Optional[str] = None
    converged: Optional[bool] = None
    hitting_step: Optional[int] = None
    empirical_rate: Optional[float] = None
    xbar: Optional[np.ndarray] = None


@dataclass
class SweepReport:
    param: str
    rows: List[SweepRow]

    HEADER = ("param_value", "rho", "classification", "converged", "hitting_step", "empirical_rate")

    def table(self):
        for row in self.rows:
            if not row.valid:
                yield [row.param_value, "", "INVALID", "", "", ""]
                continue
            yield [
                row.param_value,
                row.rho,
                row.classification,
                row.converged,
                "" if row.hitting_step is None else row.hitting_step,
                row.empirical_rate,
            ]

    def to_dict(self):
        return {
            "param": self.param,
            "rows": [
                dict(
                    zip(self.HEADER, values),
                    valid=row.valid,
                    xbar=None if row.xbar is None else row.xbar.tolist(),
                )
                for row, values in zip(self.rows, self.table())
            ],
        }


def _instantiate(schedule, param, value, controllable_phases, fallback_delta):
    if param == "delta_scalar":
        return schedule.with_delta([np.full(schedule.n, value)] * schedule.p)
    if param == "gamma_scalar":
        _, controlled = synthesize(
            schedule, value, controllable_phases, fallback_delta, classify_plan=False
        )
        return controlled
    if param == "h":
        return schedule.with_h(value)
    raise ValueError(f"unknown sweep parameter {param!r}, expected one of {SWEEP_PARAMS}")


def sweep(
    schedule,
    param,
    values,
    steps=1000,
    init="node:0",
    controllable_phases=None,
    fallback_delta=None,
    tol=1e-6,
    progress=False,
):
    """
    One classification plus simulation per parameter value.

    Values that break A2-A3 produce an invalid row and the sweep moves on.
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}, expected one of {SWEEP_PARAMS}")
    values = [float(value) for value in values]
    if not all(math.isfinite(value) for value in values):
        raise ScheduleError("sweep values must be finite")

    x0 = parse_init(init, schedule.n)
    rows = []

    def _run(bar=None):
        for value in values:
            if bar is not None:
                bar.text(f"{param}={value}")
                bar()
            try:
                instance = _instantiate(
                    schedule, param, value, controllable_phases, fallback_delta
                )
                valid = validate_schedule(instance).ok
            except ScheduleError:
                valid = False
            if not valid:
                click.echo(f"{param}={value} violates the model assumptions, skipped", err=True)
                rows.append(SweepRow(param_value=value, valid=False))
                continue

            report = classify(instance, jsr_depth=1)
            trajectory = simulate(instance, x0, steps)
            stats = detect_convergence(trajectory, tol)
            rows.append(
                SweepRow(
                    param_value=value,
                    valid=True,
                    rho=report.rho_monodromy,
                    classification=report.classification,
                    converged=stats.converged,
                    hitting_step=stats.hitting_step,
                    empirical_rate=stats.empirical_rate,
                    xbar=trajectory.xbar,
                )
            )

    if progress and values:
        with alive_bar(len(values), bar="blocks") as bar:
            _run(bar)
    else:
        _run()

    return SweepReport(param=param, rows=rows)


def node_colors(x, red=RED, blue=BLUE):
    """RGB blend ``x_i r + (1 - x_i) b`` per node."""
    x = np.asarray(x, dtype=float)[:, None]
    return x * np.asarray(red, dtype=float) + (1.0 - x) * np.asarray(blue, dtype=float)


def hex_colors(x, red=RED, blue=BLUE):
    rgb = np.rint(255.0 * node_colors(x, red, blue)).astype(int)
    return ["#{:02x}{:02x}{:02x}".format(*channel) for channel in rgb]


def emit_report(results, out_dir, formats=("csv",), color_every=0):
    """
    Write a trajectory or sweep report into ``out_dir``.

    Trajectories give ``trajectory.csv`` (plus ``colors.csv`` when
    ``color_every > 0``) and/or ``trajectory.json``; sweeps give
    ``sweep.csv`` and/or ``sweep.json``. Returns the written paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    if isinstance(results, Trajectory):
        if "csv" in formats:
            path = os.path.join(out_dir, "trajectory.csv")
            write_trajectory_csv(results, path)
            written.append(path)
            if color_every > 0:
                path = os.path.join(out_dir, "colors.csv")
                write_colors_csv(results, path, hex_colors, every=color_every)
                written.append(path)
        if "json" in formats:
            path = os.path.join(out_dir, "trajectory.json")
            write_json(
                {
                    "start": results.start,
                    "p": results.p,
                    "states": results.states.tolist(),
                    "xbar": results.xbar.tolist(),
                },
                path,
            )
            written.append(path)
        return written

    if isinstance(results, SweepReport):
        if "csv" in formats:
            path = os.path.join(out_dir, "sweep.csv")
            write_rows_csv(path, SweepReport.HEADER, results.table())
            written.append(path)
        if "json" in formats:
            path = os.path.join(out_dir, "sweep.json")
            write_json(results.to_dict(), path)
            written.append(path)
        return written

    raise TypeError(f"cannot emit a report for {type(results).__name__}")

