"""Disease-free equilibrium classification, diagonal Lyapunov certificates and the lifted system"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from periodic_sis.lib._errors import ConvergenceError, ScheduleError
from periodic_sis.lib._model import (
    _advance,
    as_state,
    build_system_matrices,
    validate_schedule,
)
from periodic_sis.lib._spectral import (
    cyclic_lift,
    jsr_bounds,
    monodromy,
    perron_vectors,
    row_sum_bound,
    spectral_radius,
    subinvariant_vectors,
)

__all__ = [
    "SPEC_VERSION",
    "TOL_EQ",
    "GES",
    "GAS_BOUNDARY",
    "UNSTABLE",
    "INCONCLUSIVE",
    "LyapunovCertificate",
    "RateBound",
    "StabilityReport",
    "LiftedSystem",
    "classify",
    "lyapunov_certificate",
    "rate_bound",
    "lifted_simulate",
    "lift_state",
]

SPEC_VERSION = "1"

TOL_EQ = 1e-9

# semidefinite certificates may sit this far above zero
SEMIDEFINITE_TOL = 1e-9

GES = "GES"
GAS_BOUNDARY = "GAS_BOUNDARY"
UNSTABLE = "UNSTABLE"
INCONCLUSIVE = "INCONCLUSIVE"


def _phase_gaps(diagonals, mats):
    """``P(k) - M(k)ᵀ P(k+1) M(k)`` for every phase, symmetrized."""
    p = mats.p
    gaps = []
    for k in range(p):
        m = mats.m[k]
        gap = np.diag(diagonals[k]) - m.T @ (diagonals[(k + 1) % p][:, None] * m)
        gaps.append(0.5 * (gap + gap.T))
    return gaps


@dataclass
class LyapunovCertificate:
    """
    Periodic diagonal weights ``P1(k)`` (row ``k`` of ``P``) with
    ``M(k)ᵀ P1(k+1) M(k) - P1(k)`` negative definite (strict mode) or
    negative semidefinite (semidefinite mode).
    """

    P: np.ndarray
    mode: str
    defect: float
    phase_defects: np.ndarray
    mu: Optional[float] = None

    @property
    def p(self):
        return self.P.shape[0]

    def matrix(self, k):
        return np.diag(self.P[k % self.p])

    def value(self, k, x):
        """``V1(k, x) = xᵀ P1(k mod p) x``."""
        x = np.asarray(x, dtype=float)
        return float(x @ (self.P[k % self.p] * x))

    def to_dict(self):
        return {
            "mode": self.mode,
            "defect": self.defect,
            "phase_defects": self.phase_defects.tolist(),
            "mu": self.mu,
            "P": self.P.tolist(),
        }


def _certificate_from_weights(weights, mats, mode, mu=None):
    p, n = mats.p, mats.n
    weights = weights / weights.max()
    diagonals = weights.reshape(p, n)
    phase_defects = np.array(
        [-scipy.linalg.eigvalsh(gap)[0] for gap in _phase_gaps(diagonals, mats)]
    )
    return LyapunovCertificate(
        P=diagonals,
        mode=mode,
        defect=float(phase_defects.max()),
        phase_defects=phase_defects,
        mu=mu,
    )


def lyapunov_certificate(mats, lift=None, mode=None, mu=None):
    """
    Build and verify a periodic diagonal Lyapunov certificate.

    The weights come from a diagonal ``Q`` on the cyclic lift ``M̃`` sliced
    into blocks ``P1(k) = [Q]_k``. Strict mode uses ``Q = diag(η/ξ)`` with
    sub-invariant vectors at ``μ``, so ``M̃ᵀQM̃ ⪯ μ²Q``; semidefinite mode
    uses the Perron ratio ``Q = diag(u/v)`` and needs ``M̃`` irreducible.
    """
    if lift is None:
        lift = cyclic_lift(mats)
    if mode is None:
        mode = "strict" if lift.radius < 1.0 - TOL_EQ else "semidefinite"

    if mode == "strict":
        if not lift.radius < 1.0:
            raise ValueError(f"strict certificate needs rho < 1, got {lift.radius}")
        attempts = [mu] if mu is not None else []
        attempts += [0.5 * (1.0 + lift.radius), 0.25 * (3.0 + lift.radius)]

        for candidate in attempts:
            try:
                xi, eta = subinvariant_vectors(lift.mtilde, candidate)
            except ConvergenceError:
                continue
            cert = _certificate_from_weights(eta / xi, mats, "strict", candidate)
            if cert.defect < 0.0:
                return cert

        raise ConvergenceError("could not verify a strict diagonal certificate")

    if mode == "semidefinite":
        v, u, rho = perron_vectors(lift.mtilde)
        if rho > 1.0 + SEMIDEFINITE_TOL:
            raise ValueError(f"semidefinite certificate needs rho <= 1, got {rho}")
        cert = _certificate_from_weights(u / v, mats, "semidefinite")
        if cert.defect > SEMIDEFINITE_TOL:
            raise ConvergenceError(
                f"semidefinite certificate failed verification (defect {cert.defect:.3e})"
            )
        return cert

    raise ValueError(f"unknown certificate mode {mode!r}")


@dataclass
class RateBound:
    """
    Exponential envelope ``||x(k)|| <= alpha ||x(0)|| rate^k``.

    ``sigma3`` is the max-over-phases form, ``sigma3_conservative`` the
    min-over-phases form that ``rate`` is built from.
    """

    sigma1: float
    sigma2: float
    sigma3: float
    sigma3_conservative: float
    rate: float
    rate_max_form: float

    @property
    def alpha(self):
        return math.sqrt(self.sigma2 / self.sigma1)

    def envelope(self, k, x0_norm):
        return self.alpha * x0_norm * self.rate**k

    def horizon(self, x0_norm, target):
        """Steps after which the envelope is below ``target``."""
        start = self.alpha * x0_norm
        if start < target:
            return 0
        if self.rate == 0.0:
            return 1
        return int(math.ceil(math.log(target / start) / math.log(self.rate))) + 1

    def to_dict(self):
        return {
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "sigma3": self.sigma3,
            "sigma3_conservative": self.sigma3_conservative,
            "rate": self.rate,
            "rate_max_form": self.rate_max_form,
            "alpha": self.alpha,
        }


def rate_bound(cert, mats):
    """Convergence-rate constants of a strict certificate."""
    if cert.mode != "strict":
        raise ValueError("rate bound needs a strict certificate")

    sigma1 = float(cert.P.min())
    sigma2 = float(cert.P.max())
    lowest = np.array(
        [scipy.linalg.eigvalsh(gap)[0] for gap in _phase_gaps(cert.P, mats)]
    )
    sigma3 = float(lowest.max())
    sigma3_conservative = float(lowest.min())

    if sigma3_conservative <= 0.0:
        raise ValueError("certificate is not strict on every phase, rebuild it")

    return RateBound(
        sigma1=sigma1,
        sigma2=sigma2,
        sigma3=sigma3,
        sigma3_conservative=sigma3_conservative,
        rate=math.sqrt(max(0.0, 1.0 - sigma3_conservative / sigma2)),
        rate_max_form=math.sqrt(max(0.0, 1.0 - sigma3 / sigma2)),
    )


@dataclass
class StabilityReport:
    rho_monodromy: float
    rho_lift: float
    rho_phases: np.ndarray
    jsr: object
    classification: str
    assumptions: object
    row_sum_bound: float
    tol_eq: float
    certificate: Optional[LyapunovCertificate] = None
    rate_bound: Optional[RateBound] = None

    def to_dict(self):
        rate = self.rate_bound
        return {
            "spec_version": SPEC_VERSION,
            "classification": self.classification,
            "rho_monodromy": self.rho_monodromy,
            "rho_lift": self.rho_lift,
            "rho_phases": self.rho_phases.tolist(),
            "jsr_lower": self.jsr.lower,
            "jsr_upper": self.jsr.upper,
            "jsr": self.jsr.to_dict(),
            "row_sum_bound": self.row_sum_bound,
            "tol_eq": self.tol_eq,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "rate_bound": None if rate is None else rate.rate,
            "sigma": None
            if rate is None
            else {
                "sigma1": rate.sigma1,
                "sigma2": rate.sigma2,
                "sigma3": rate.sigma3,
                "sigma3_conservative": rate.sigma3_conservative,
            },
            "assumptions": self.assumptions.to_dict(),
        }


def classify(schedule, mats=None, tol_eq=TOL_EQ, jsr_depth=None):
    """
    Classify the disease-free equilibrium from the monodromy radius.

    rho < 1 - tol is GES; |rho - 1| <= tol is GAS_BOUNDARY and rho > 1 + tol
    is UNSTABLE, both only when A4/A5 hold; anything else is INCONCLUSIVE.
    """
    validation = validate_schedule(schedule)
    if not validation.ok:
        raise ScheduleError(
            "classification needs A2-A3, failing: " + ", ".join(validation.failures())
        )
    if mats is None:
        mats = build_system_matrices(schedule)

    mono = monodromy(mats)
    lift = cyclic_lift(mats, mono)
    rho = mono.radius
    jsr = jsr_bounds(mats.m, depth=jsr_depth or schedule.p)

    if rho < 1.0 - tol_eq:
        classification = GES
    elif validation.gas_ready and abs(rho - 1.0) <= tol_eq:
        classification = GAS_BOUNDARY
    elif validation.gas_ready and rho > 1.0 + tol_eq:
        classification = UNSTABLE
    else:
        classification = INCONCLUSIVE

    certificate, rate = None, None
    if classification == GES:
        certificate = lyapunov_certificate(mats, lift, mode="strict")
        rate = rate_bound(certificate, mats)
    elif classification == GAS_BOUNDARY:
        try:
            certificate = lyapunov_certificate(mats, lift, mode="semidefinite")
        except (ValueError, ConvergenceError):
            certificate = None

    return StabilityReport(
        rho_monodromy=rho,
        rho_lift=lift.radius,
        rho_phases=np.array([spectral_radius(m) for m in mats.m]),
        jsr=jsr,
        classification=classification,
        assumptions=validation,
        row_sum_bound=row_sum_bound(mats),
        tol_eq=tol_eq,
        certificate=certificate,
        rate_bound=rate,
    )


@dataclass
class LiftedSystem:
    """
    Time-invariant lift ``y(p(q+1)) = M̄̄(X) y(pq)`` with
    ``y(pq) = [x(pq); ...; x(pq+p-1)]``.

    Block ``i`` advances ``p`` steps through phases ``i, i+1, ...``; its
    linearization at ``y = 0`` is ``M̃ᵖ``.
    """

    mats: object

    @property
    def p(self):
        return self.mats.p

    @property
    def n(self):
        return self.mats.n

    @property
    def dimension(self):
        return self.p * self.n

    def evaluate(self, y, clip=False):
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        for i in range(self.p):
            x = y[i * self.n : (i + 1) * self.n]
            for j in range(self.p):
                x = _advance(x, self.mats.phase(i + j), self.mats.h)
                if clip:
                    x = np.clip(x, 0.0, 1.0)
            out[i * self.n : (i + 1) * self.n] = x
        return out

    def numerical_jacobian(self, y=None, step=1e-6):
        """Central-difference Jacobian of ``evaluate`` at ``y`` (default 0)."""
        y = np.zeros(self.dimension) if y is None else np.asarray(y, dtype=float)
        jacobian = np.empty((self.dimension, self.dimension))
        for col in range(self.dimension):
            offset = np.zeros(self.dimension)
            offset[col] = step
            jacobian[:, col] = (self.evaluate(y + offset) - self.evaluate(y - offset)) / (
                2.0 * step
            )
        return jacobian


def lift_state(trajectory, q=0):
    """Stack ``x(pq) ... x(pq+p-1)`` of a direct simulation into ``y(pq)``."""
    p = trajectory.p
    if trajectory.start % p:
        raise ValueError("trajectory must start at a multiple of the period")
    window = trajectory.states[p * q : p * (q + 1)]
    if window.shape[0] != p:
        raise ValueError(f"trajectory too short to stack y({p * q})")
    return window.ravel()


def lifted_simulate(schedule, y0, q_steps, mats=None):
    """Iterate the lifted map ``q_steps`` times; rows are ``y(0), y(p), ...``."""
    if mats is None:
        mats = build_system_matrices(schedule)
    system = LiftedSystem(mats)

    states = np.empty((q_steps + 1, system.dimension))
    states[0] = as_state(y0, system.dimension)
    for q in range(q_steps):
        states[q + 1] = system.evaluate(states[q], clip=True)
    return states
