"""Distributed healing-rate control: delta_i(k) = sum_j bbar_ij(k) + gamma_i"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from periodic_sis.lib._errors import InfeasibleError, ScheduleError
from periodic_sis.lib._model import (
    ASSUMPTION_TOL,
    build_system_matrices,
    validate_schedule,
)
from periodic_sis.lib._spectral import monodromy
from periodic_sis.lib._stability import classify

__all__ = ["ControlPlan", "GammaSearch", "synthesize", "minimal_gamma"]


@dataclass
class ControlPlan:
    gamma: np.ndarray
    controllable_phases: Tuple[int, ...]
    fallback_delta: Optional[np.ndarray]
    synthesized_delta: np.ndarray
    feasible: bool
    violations: List[Tuple[int, int]]
    guarantee: Optional[str] = None
    classification: Optional[str] = None
    rho: Optional[float] = None

    def to_dict(self):
        return {
            "gamma": self.gamma.tolist(),
            "controllable_phases": list(self.controllable_phases),
            "fallback_delta": None
            if self.fallback_delta is None
            else self.fallback_delta.tolist(),
            "synthesized_delta": self.synthesized_delta.tolist(),
            "feasible": self.feasible,
            "violations": [list(item) for item in self.violations],
            "guarantee": self.guarantee,
            "classification": self.classification,
            "rho_monodromy": self.rho,
        }


def _per_node(values, n, name):
    array = np.broadcast_to(np.asarray(values, dtype=float), (n,)).copy()
    if not np.all(np.isfinite(array)) or np.any(array < 0.0):
        raise ScheduleError(f"{name} must be finite and nonnegative")
    return array


def _phase_set(schedule, phases):
    if phases is None:
        return tuple(range(schedule.p))
    phases = tuple(sorted(set(int(k) for k in phases)))
    for k in phases:
        if not 0 <= k < schedule.p:
            raise ScheduleError(f"phase {k} outside [0, {schedule.p})")
    return phases


def synthesize(
    schedule,
    gamma,
    controllable_phases=None,
    fallback_delta=None,
    classify_plan=True,
):
    """
    Apply the healing-rate law on the controllable phases.

    Controlled phases get ``delta_i(k) = sum_j bbar_ij(k) + gamma_i``; the
    others keep ``fallback_delta`` (or the schedule's own rates). Gains that
    break ``h sum_j bbar_ij(k) + h gamma_i <= 1`` are reported through
    ``feasible``/``violations``, never clipped.
    """
    n, h = schedule.n, schedule.h
    gamma = _per_node(gamma, n, "gamma")
    phases = _phase_set(schedule, controllable_phases)
    fallback = None if fallback_delta is None else _per_node(fallback_delta, n, "fallback delta")

    mats = build_system_matrices(schedule)
    row_sums = mats.bbar.sum(axis=2)

    deltas, violations = [], []
    for k, phase in enumerate(schedule.phases):
        if k in phases:
            deltas.append(row_sums[k] + gamma)
            over = np.nonzero(h * row_sums[k] + h * gamma > 1.0 + ASSUMPTION_TOL)[0]
            violations.extend((k, int(i)) for i in over)
        elif fallback is not None:
            deltas.append(fallback)
        else:
            deltas.append(np.array(phase.delta))

    controlled = schedule.with_delta(deltas)
    feasible = not violations

    guarantee = None
    if feasible and len(phases) == schedule.p:
        if gamma.min() > 0.0:
            guarantee = "GES"
        elif not gamma.any() and validate_schedule(controlled).gas_ready:
            guarantee = "GAS"

    plan = ControlPlan(
        gamma=gamma,
        controllable_phases=phases,
        fallback_delta=fallback,
        synthesized_delta=np.stack(deltas),
        feasible=feasible,
        violations=violations,
        guarantee=guarantee,
    )

    if classify_plan and validate_schedule(controlled).ok:
        report = classify(controlled, jsr_depth=1)
        plan.classification = report.classification
        plan.rho = report.rho_monodromy

    return plan, controlled


@dataclass
class GammaSearch:
    gamma: float
    rho: float
    feasible: bool
    iterations: int

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "rho_monodromy": self.rho,
            "feasible": self.feasible,
            "iterations": self.iterations,
        }


def minimal_gamma(
    schedule,
    controllable_phases=None,
    fallback_delta=None,
    lo=0.0,
    hi=None,
    tol=1e-10,
    rho_tol=1e-9,
    max_iter=200,
):
    """
    Smallest homogeneous gain that brings the monodromy radius down to one.

    Bisects on ``[lo, hi]`` using that the radius is non-increasing in the
    gain; ``hi`` defaults to the largest feasible gain. Raises
    ``InfeasibleError`` when even ``hi`` leaves the radius above one, or
    when the radius at ``lo`` is already below one.
    """
    phases = _phase_set(schedule, controllable_phases)

    def _radius(gain):
        plan, controlled = synthesize(
            schedule, gain, phases, fallback_delta, classify_plan=False
        )
        return monodromy(build_system_matrices(controlled)).radius, plan.feasible

    if hi is None:
        row_sums = build_system_matrices(schedule).bbar.sum(axis=2)
        hi = float(min((1.0 / schedule.h - row_sums[k]).min() for k in phases))
    if hi < lo:
        raise InfeasibleError(f"empty gain bracket [{lo}, {hi}]")

    rho_lo, feasible_lo = _radius(lo)
    if abs(rho_lo - 1.0) <= rho_tol:
        return GammaSearch(gamma=float(lo), rho=rho_lo, feasible=feasible_lo, iterations=0)
    if rho_lo < 1.0:
        raise InfeasibleError(
            f"invalid bracket: rho({lo}) = {rho_lo:.6f} <= 1, the minimal gain lies below lo"
        )

    rho_hi, feasible_hi = _radius(hi)
    if rho_hi > 1.0:
        raise InfeasibleError(
            f"gain {hi} still leaves rho = {rho_hi:.6f} > 1, scenario is uncontrollable"
        )

    iterations = 0
    while iterations < max_iter and hi - lo > tol * max(1.0, hi):
        iterations += 1
        mid = 0.5 * (lo + hi)
        rho_mid, feasible_mid = _radius(mid)
        if rho_mid > 1.0:
            lo = mid
        else:
            hi, rho_hi, feasible_hi = mid, rho_mid, feasible_mid
        if abs(rho_hi - 1.0) <= rho_tol:
            break

    return GammaSearch(
        gamma=float(hi), rho=rho_hi, feasible=feasible_hi, iterations=iterations
    )
