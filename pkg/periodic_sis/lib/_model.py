"""Periodic SIS system description, assumption checks and the discrete update"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, NamedTuple, Optional, Tuple

import numpy as np
from alive_progress import alive_bar

from periodic_sis.lib._errors import ScheduleError
from periodic_sis.lib._spectral import strongly_connected

__all__ = [
    "STATE_TOL",
    "ASSUMPTION_TOL",
    "GraphPhase",
    "PeriodicSchedule",
    "PhaseMatrices",
    "SystemMatrices",
    "AssumptionCheck",
    "ValidationReport",
    "Trajectory",
    "validate_schedule",
    "build_system_matrices",
    "as_state",
    "step",
    "simulate",
]

# states this close to [0, 1] are clamped instead of rejected
STATE_TOL = 1e-12

# slack on the inequalities of the rate assumptions
ASSUMPTION_TOL = 1e-12


def _is_whole(value):
    try:
        return int(value) == value
    except (TypeError, ValueError, OverflowError):
        return False


def _frozen(values, name, length=None):
    array = np.array(values, dtype=float)
    if array.ndim != 1:
        raise ScheduleError(f"{name} must be a flat sequence")
    if length is not None and array.shape[0] != length:
        raise ScheduleError(f"{name} has length {array.shape[0]}, expected {length}")
    if not np.all(np.isfinite(array)):
        raise ScheduleError(f"{name} has non-finite entries")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GraphPhase:
    """
    One phase of the periodic schedule.

    ``adjacency`` holds sparse ``(i, j, w)`` entries meaning ``a_ij = w``,
    an edge from node ``j`` into node ``i``.
    """

    index: int
    adjacency: Tuple[Tuple[int, int, float], ...]
    beta: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        entries = []
        seen = set()
        for entry in self.adjacency:
            if len(entry) != 3:
                raise ScheduleError(f"phase {self.index}: edge {entry} is not (i, j, w)")
            i, j, w = int(entry[0]), int(entry[1]), float(entry[2])
            if not (math.isfinite(w) and w > 0.0):
                raise ScheduleError(
                    f"phase {self.index}: edge ({i}, {j}) has weight {w}, must be > 0"
                )
            if (i, j) in seen:
                raise ScheduleError(f"phase {self.index}: duplicate edge ({i}, {j})")
            seen.add((i, j))
            entries.append((i, j, w))

        object.__setattr__(self, "adjacency", tuple(entries))
        object.__setattr__(self, "beta", _frozen(self.beta, f"phase {self.index} beta"))
        object.__setattr__(
            self, "delta", _frozen(self.delta, f"phase {self.index} delta")
        )

    def dense_adjacency(self, n):
        """Dense ``A(k)`` with ``A[i, j] = a_ij``."""
        adjacency = np.zeros((n, n))
        for i, j, w in self.adjacency:
            adjacency[i, j] = w
        return adjacency


@dataclass(frozen=True)
class PeriodicSchedule:
    """Complete system description: phase ``k`` applies at every ``t`` with ``t % p == k``."""

    n: int
    p: int
    h: float
    phases: Tuple[GraphPhase, ...]
    labels: Optional[Tuple[str, ...]] = None
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("n", "p"):
            value = getattr(self, name)
            if isinstance(value, bool) or not _is_whole(value) or value < 1:
                raise ScheduleError(f"{name} must be a positive integer, got {value!r}")
        if not (math.isfinite(self.h) and self.h > 0.0):
            raise ScheduleError(f"h must be positive and finite, got {self.h}")

        phases = tuple(self.phases)
        if len(phases) != self.p:
            raise ScheduleError(f"expected {self.p} phases, got {len(phases)}")

        for k, phase in enumerate(phases):
            if phase.index != k:
                raise ScheduleError(f"phase at position {k} is labelled {phase.index}")
            for name in ("beta", "delta"):
                if getattr(phase, name).shape[0] != self.n:
                    raise ScheduleError(f"phase {k} {name} must have length {self.n}")
            for i, j, _ in phase.adjacency:
                if not (0 <= i < self.n and 0 <= j < self.n):
                    raise ScheduleError(f"phase {k}: edge ({i}, {j}) outside [0, {self.n})")

        if self.labels is not None:
            if len(self.labels) != self.n:
                raise ScheduleError(f"labels must have length {self.n}")
            object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))

        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "meta", dict(self.meta))

    def phase_at(self, t):
        return self.phases[t % self.p]

    def with_delta(self, deltas):
        """Copy of the schedule with per-phase healing rates replaced."""
        if len(deltas) != self.p:
            raise ScheduleError(f"expected {self.p} healing-rate vectors")
        phases = tuple(
            replace(phase, delta=np.broadcast_to(delta, (self.n,)))
            for phase, delta in zip(self.phases, deltas)
        )
        return replace(self, phases=phases)

    def with_h(self, h):
        return replace(self, h=h)


class PhaseMatrices(NamedTuple):
    bbar: np.ndarray
    m: np.ndarray
    hd: np.ndarray


@dataclass(frozen=True)
class SystemMatrices:
    """Per-phase ``B̄(k) = B(k)A(k)``, ``M(k) = I - hD(k) + hB̄(k)`` and ``hδ(k)``."""

    h: float
    bbar: np.ndarray
    m: np.ndarray
    hd: np.ndarray

    @property
    def p(self):
        return self.m.shape[0]

    @property
    def n(self):
        return self.m.shape[1]

    def phase(self, k):
        k = k % self.p
        return PhaseMatrices(self.bbar[k], self.m[k], self.hd[k])


@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    offending: List[Tuple[int, ...]]
    required: bool
    description: str

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "required": self.required,
            "description": self.description,
            "offending": [list(item) for item in self.offending],
        }


@dataclass
class ValidationReport:
    checks: Dict[str, AssumptionCheck]

    @property
    def ok(self):
        """A1-A3 hold: the model is well defined and the GES tests apply."""
        return all(check.passed for check in self.checks.values() if check.required)

    @property
    def gas_ready(self):
        """A4 and A5 hold in every phase."""
        return self.checks["A4"].passed and self.checks["A5"].passed

    def failures(self):
        return [name for name, check in self.checks.items() if not check.passed]

    def to_dict(self):
        return {
            "ok": self.ok,
            "gas_ready": self.gas_ready,
            "assumptions": {name: check.to_dict() for name, check in self.checks.items()},
        }


def _infection_matrix(schedule, phase):
    return phase.beta[:, None] * phase.dense_adjacency(schedule.n)


def validate_schedule(schedule, strict=False):
    """
    Check the assumptions of the periodic SIS model.

    A1-A3 are required for the model to be well defined; A4 and A5 are
    reported per phase and only gate the boundary (rho = 1) and necessity
    claims. With ``strict`` an A2/A3 failure raises ``ScheduleError``.
    """
    h = schedule.h
    a2, a3, a4, a5 = [], [], [], []

    for k, phase in enumerate(schedule.phases):
        bbar = _infection_matrix(schedule, phase)

        for i in range(schedule.n):
            if phase.beta[i] < 0.0 or h * phase.delta[i] < 0.0:
                a2.append((k, i))
            if (
                h * phase.delta[i] > 1.0 + ASSUMPTION_TOL
                or h * bbar[i].sum() > 1.0 + ASSUMPTION_TOL
            ):
                a3.append((k, i))

        off_diagonal = bbar.copy()
        np.fill_diagonal(off_diagonal, 0.0)
        if not np.any(off_diagonal > 0.0):
            a4.append((k,))
        if not strongly_connected(bbar):
            a5.append((k,))

    checks = {
        "A1": AssumptionCheck(
            "A1", True, [], True, "phases repeat with period p (holds by construction)"
        ),
        "A2": AssumptionCheck(
            "A2", not a2, a2, True, "h*delta_i(k) >= 0 and beta_i(k) >= 0"
        ),
        "A3": AssumptionCheck(
            "A3",
            not a3,
            a3,
            True,
            "h*delta_i(k) <= 1 and h*sum_j bbar_ij(k) <= 1",
        ),
        "A4": AssumptionCheck(
            "A4", not a4, a4, False, "every phase has some bbar_ij(k) > 0 with i != j"
        ),
        "A5": AssumptionCheck(
            "A5", not a5, a5, False, "every phase infection graph is strongly connected"
        ),
    }

    report = ValidationReport(checks)

    if strict and not (checks["A2"].passed and checks["A3"].passed):
        failed = [
            f"{name} at {checks[name].offending[:5]}"
            for name in ("A2", "A3")
            if not checks[name].passed
        ]
        raise ScheduleError("schedule violates " + "; ".join(failed))

    return report


def build_system_matrices(schedule):
    """Assemble ``B̄(k)``, ``M(k)`` and ``hδ(k)`` for every phase."""
    n, h = schedule.n, schedule.h
    identity = np.eye(n)

    bbar = np.stack([_infection_matrix(schedule, phase) for phase in schedule.phases])
    hd = np.stack([h * phase.delta for phase in schedule.phases])
    m = np.stack(
        [identity - np.diag(hd[k]) + h * bbar[k] for k in range(schedule.p)]
    )

    for array in (bbar, hd, m):
        array.setflags(write=False)

    return SystemMatrices(h=h, bbar=bbar, m=m, hd=hd)


def as_state(values, n):
    """Validate an infection-level vector, clamping drift below ``STATE_TOL``."""
    x = np.array(values, dtype=float)
    if x.shape != (n,):
        raise ScheduleError(f"state must have shape ({n},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ScheduleError("state has non-finite entries")
    if np.any(x < -STATE_TOL) or np.any(x > 1.0 + STATE_TOL):
        raise ScheduleError(
            f"state outside [0, 1]: min {x.min():.3e}, max {x.max():.3e}"
        )
    return np.clip(x, 0.0, 1.0)


def _advance(x, phase, h):
    # no range checks: also evaluated off [0, 1] for finite differences
    return x + h * ((1.0 - x) * (phase.bbar @ x)) - phase.hd * x


def _advance_scalar(x, phase, h):
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        pressure = math.fsum(phase.bbar[i, j] * x[j] for j in range(n))
        out[i] = x[i] + h * (1.0 - x[i]) * pressure - phase.hd[i] * x[i]
    return out


def step(x, phase, h, form="matrix"):
    """
    One SIS update ``x(k+1)`` from ``x(k)`` under ``phase``.

    ``form="matrix"`` evaluates ``x + h((I - X)B̄ - D)x``, ``form="scalar"``
    the node-by-node sum. The zero state maps to zero exactly.
    """
    x = as_state(x, phase.m.shape[0])
    if form == "matrix":
        nxt = _advance(x, phase, h)
    elif form == "scalar":
        nxt = _advance_scalar(x, phase, h)
    else:
        raise ValueError(f"unknown form {form!r}")
    return np.clip(nxt, 0.0, 1.0)


@dataclass
class Trajectory:
    """States ``x(start) ... x(start + steps)`` of one simulation run."""

    states: np.ndarray
    p: int
    start: int = 0

    @property
    def steps(self):
        return self.states.shape[0] - 1

    @property
    def xbar(self):
        return self.states.mean(axis=1)

    def norms(self, order=np.inf):
        return np.linalg.norm(self.states, ord=order, axis=1)


def simulate(schedule, x0, steps, start=0, mats=None, progress=False):
    """
    Iterate the SIS update ``steps`` times from ``x0``.

    Step ``t`` (counted from ``start``) uses phase ``t % p``.
    """
    if mats is None:
        mats = build_system_matrices(schedule)

    states = np.empty((steps + 1, schedule.n))
    states[0] = as_state(x0, schedule.n)
    phases = [mats.phase(k) for k in range(schedule.p)]

    def _run(bar=None):
        for t in range(steps):
            nxt = _advance(states[t], phases[(start + t) % schedule.p], schedule.h)
            states[t + 1] = np.clip(nxt, 0.0, 1.0)
            if bar is not None:
                bar()

    if progress:
        with alive_bar(steps, bar="blocks") as bar:
            bar.text("simulating")
            _run(bar)
    else:
        _run()

    return Trajectory(states=states, p=schedule.p, start=start)
