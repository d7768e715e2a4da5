"""Nonnegative-matrix kernel: Perron roots, monodromy products, cyclic lift and JSR bounds"""

from dataclasses import dataclass
from typing import Optional, Tuple

import click
import networkx as nx
import numpy as np
import scipy.linalg

from periodic_sis.lib._errors import ConvergenceError

__all__ = [
    "MAX_ITER",
    "MAX_PRODUCTS",
    "STALL_ITER",
    "MonodromySet",
    "CyclicLift",
    "JsrBounds",
    "spectral_radius",
    "strongly_connected",
    "monodromy",
    "cyclic_lift",
    "jsr_bounds",
    "subinvariant_vectors",
    "perron_vectors",
    "row_sum_bound",
]

MAX_ITER = 100_000
MAX_PRODUCTS = 10**6

# matrices up to this order drop to the dense eigensolve after STALL_ITER
# power steps instead of running the full MAX_ITER
DENSE_MAX_N = 200
STALL_ITER = 2_000

# relative size of the diagonal shift that breaks imprimitive cycling
SHIFT = 1e-3

# allowed spread of the Perron root across the cyclic products
INVARIANCE_TOL = 1e-9

PERRON_RESIDUAL = 1e-9


def _square(matrix):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix has non-finite entries")
    return matrix


def _dense_radius(matrix):
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


def _shifted_power(matrix, tol, max_iter):
    """
    Power iteration on ``M + εI`` started from the all-ones vector.

    While the iterate is strictly positive the Collatz-Wielandt ratios
    bracket the shifted Perron root; otherwise convergence is judged on
    successive estimates and the eigen-residual.
    """
    n = matrix.shape[0]
    eps = SHIFT * max(1.0, float(matrix.max()))
    shifted = matrix + eps * np.eye(n)

    x = np.full(n, 1.0 / n)
    previous = None

    for _ in range(max_iter):
        y = shifted @ x
        # entries of reducible matrices may underflow to zero
        if np.all(x > 0.0):
            ratios = y / x
            low, high = float(ratios.min()), float(ratios.max())
            if high - low <= tol * high:
                return max(0.5 * (low + high) - eps, 0.0), y / y.sum()

        estimate = float(y.sum())
        residual = float(np.abs(y - estimate * x).sum())
        if (
            previous is not None
            and abs(estimate - previous) <= tol * estimate
            and residual <= tol * estimate
        ):
            return max(estimate - eps, 0.0), y / estimate

        previous = estimate
        x = y / estimate

    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def spectral_radius(matrix, tol=1e-12, max_iter=MAX_ITER, method="power", fallback=True):
    """
    Perron root of a nonnegative matrix.

    ``method="power"`` runs shifted power iteration and, when ``fallback``
    is set, switches to a dense eigensolve if the iteration cap is hit.
    Small matrices get a cap of ``STALL_ITER``; reducible or defective
    supports converge sublinearly and would otherwise spend ``max_iter``
    steps before the same eigensolve.
    ``method="dense"`` goes straight to the eigensolver.
    """
    matrix = _square(matrix)
    if np.any(matrix < 0.0):
        raise ValueError("spectral_radius expects an entrywise nonnegative matrix")

    if not matrix.any():
        return 0.0

    if method == "dense":
        return _dense_radius(matrix)
    if method != "power":
        raise ValueError(f"unknown method {method!r}")

    budget = max_iter
    if fallback and matrix.shape[0] <= DENSE_MAX_N:
        budget = min(max_iter, STALL_ITER)

    try:
        rho, _ = _shifted_power(matrix, tol, budget)
    except ConvergenceError:
        if not fallback:
            raise
        if budget == max_iter:
            click.echo(
                f"power iteration stalled on a {matrix.shape[0]}x{matrix.shape[0]} "
                "matrix, using dense eigensolve",
                err=True,
            )
        rho = _dense_radius(matrix)

    return rho


def strongly_connected(matrix):
    """True iff the support graph of ``matrix`` is one strongly connected component."""
    matrix = _square(matrix)
    graph = nx.DiGraph()
    graph.add_nodes_from(range(matrix.shape[0]))
    rows, cols = np.nonzero(matrix > 0.0)
    # a_ij > 0 is an edge j -> i
    graph.add_edges_from(zip(cols.tolist(), rows.tolist()))
    return nx.is_strongly_connected(graph)


@dataclass(frozen=True)
class MonodromySet:
    """``products[k] = M(k+p-1)...M(k)`` and its Perron root ``rho[k]``."""

    products: np.ndarray
    rho: np.ndarray

    @property
    def radius(self):
        return float(self.rho[0])


def _period_product(m, k):
    p = m.shape[0]
    product = np.eye(m.shape[1])
    for j in range(p):
        product = m[(k + j) % p] @ product
    return product


def monodromy(mats, tol=1e-12):
    """All ``p`` cyclic monodromy products of ``mats.m`` and their radii."""
    p = mats.m.shape[0]
    products = np.stack([_period_product(mats.m, k) for k in range(p)])
    rho = np.array([spectral_radius(products[k], tol=tol) for k in range(p)])

    spread = float(np.max(np.abs(rho - rho[0])))
    if spread > INVARIANCE_TOL * max(float(rho[0]), 1.0):
        raise ConvergenceError(
            f"monodromy radii disagree across phases (spread {spread:.3e})"
        )

    return MonodromySet(products=products, rho=rho)


@dataclass(frozen=True)
class CyclicLift:
    """``mtilde`` is the ``pn x pn`` block-cyclic matrix, ``mtilde_p`` its ``p``-th power."""

    mtilde: np.ndarray
    mtilde_p: np.ndarray
    radius: float
    p: int

    def block(self, k):
        """Index range of block ``k`` in the lifted state."""
        n = self.mtilde.shape[0] // self.p
        return slice(k * n, (k + 1) * n)


def cyclic_lift(mats, mono=None):
    """
    Block-cyclic reformulation of the periodic linear system.

    ``M(p-1)`` sits in the top-right block and ``M(0) ... M(p-2)`` on the
    block sub-diagonal, so that ``mtilde_p`` is block diagonal with the
    monodromy products ``M_{k+p:k}``.
    """
    p, n = mats.m.shape[0], mats.m.shape[1]
    if mono is None:
        mono = monodromy(mats)

    if p == 1:
        mtilde = np.array(mats.m[0])
    else:
        mtilde = np.zeros((p * n, p * n))
        mtilde[0:n, (p - 1) * n : p * n] = mats.m[p - 1]
        for k in range(p - 1):
            mtilde[(k + 1) * n : (k + 2) * n, k * n : (k + 1) * n] = mats.m[k]

    mtilde_p = np.linalg.matrix_power(mtilde, p)
    assembled = scipy.linalg.block_diag(*mono.products)
    scale = max(1.0, float(np.abs(assembled).max()))
    if not np.allclose(mtilde_p, assembled, rtol=0.0, atol=1e-9 * scale):
        raise ConvergenceError("lifted matrix power disagrees with the monodromy blocks")

    return CyclicLift(
        mtilde=mtilde, mtilde_p=mtilde_p, radius=mono.radius ** (1.0 / p), p=p
    )


@dataclass(frozen=True)
class JsrBounds:
    """Certified ``lower <= JSR <= upper`` from products up to length ``depth``."""

    lower: float
    upper: float
    depth: int
    witness: Tuple[int, ...]
    truncated: bool
    period_max: Optional[float]

    def to_dict(self):
        return {
            "lower": self.lower,
            "upper": self.upper,
            "depth": self.depth,
            "witness": list(self.witness),
            "truncated": self.truncated,
            "period_max": self.period_max,
        }


def jsr_bounds(matrices, depth, max_products=MAX_PRODUCTS):
    """
    Joint spectral radius bounds by enumerating every product of length ``<= depth``.

    lower = max over products of ``rho(Π)^(1/d)``, upper = min over lengths
    of ``(max ||Π||_inf)^(1/d)``. Lengths that would push the enumeration
    past ``max_products`` are skipped and the result flagged ``truncated``.
    ``period_max`` is the largest ``rho(Π)`` over products of exactly as
    many factors as there are matrices.
    """
    mats = [_square(matrix) for matrix in matrices]
    count = len(mats)
    if count == 0:
        raise ValueError("jsr_bounds needs at least one matrix")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")

    reach, total = 0, 0
    while reach < depth and total + count ** (reach + 1) <= max_products:
        reach += 1
        total += count**reach
    if reach == 0:
        raise ValueError("max_products too small for a single length")

    lower, witness = 0.0, ()
    max_norms = np.zeros(reach)
    period_max = None

    stack = [((idx,), mats[idx]) for idx in reversed(range(count))]
    while stack:
        sequence, product = stack.pop()
        d = len(sequence)

        rho = spectral_radius(product, method="dense")
        value = rho ** (1.0 / d)
        if value > lower:
            lower, witness = value, sequence

        max_norms[d - 1] = max(max_norms[d - 1], float(np.abs(product).sum(axis=1).max()))
        if d == count:
            period_max = rho if period_max is None else max(period_max, rho)

        if d < reach:
            for idx in reversed(range(count)):
                stack.append((sequence + (idx,), mats[idx] @ product))

    upper = min(
        float(max_norms[d - 1]) ** (1.0 / d) for d in range(1, reach + 1)
    )
    # floating-point roots can cross when the bounds coincide
    upper = max(upper, lower)

    return JsrBounds(
        lower=float(lower),
        upper=float(upper),
        depth=reach,
        witness=tuple(witness),
        truncated=reach < depth,
        period_max=None if period_max is None else float(period_max),
    )


def subinvariant_vectors(matrix, mu=None):
    """
    Positive ``ξ, η`` with ``Mξ < μξ`` and ``Mᵀη < μη`` entrywise.

    ``ξ = (μI - M)⁻¹𝟙`` and ``η = (μI - Mᵀ)⁻¹𝟙``; ``μ`` defaults to
    ``(1 + ρ)/2`` and must exceed ``ρ(M)``.
    """
    matrix = _square(matrix)
    rho = spectral_radius(matrix)
    if mu is None:
        mu = 0.5 * (1.0 + rho)
    if not rho < mu:
        raise ValueError(f"mu = {mu} must exceed the spectral radius {rho}")

    n = matrix.shape[0]
    shifted = mu * np.eye(n) - matrix
    ones = np.ones(n)
    try:
        xi = scipy.linalg.solve(shifted, ones)
        eta = scipy.linalg.solve(shifted.T, ones)
    except scipy.linalg.LinAlgError as err:
        raise ConvergenceError(f"singular solve at mu = {mu}") from err

    for vector in (xi, eta):
        if not (np.all(np.isfinite(vector)) and np.all(vector > 0.0)):
            raise ConvergenceError(f"sub-invariant vector not positive at mu = {mu}")

    return xi, eta


def _perron_side(matrix, tol, max_iter):
    if matrix.shape[0] <= DENSE_MAX_N:
        max_iter = min(max_iter, STALL_ITER)
    try:
        rho, vector = _shifted_power(matrix, tol, max_iter)
    except ConvergenceError:
        rho, vector = None, None

    if vector is not None:
        vector = vector / vector.max()
        if np.abs(matrix @ vector - rho * vector).max() <= PERRON_RESIDUAL:
            return vector, rho

    values, vectors = np.linalg.eig(matrix)
    idx = int(np.argmax(values.real))
    vector = np.abs(vectors[:, idx].real)
    vector = vector / vector.max()
    return vector, float(values[idx].real)


def perron_vectors(matrix, tol=1e-13, max_iter=MAX_ITER):
    """
    Right and left Perron vectors of an irreducible nonnegative matrix.

    Returns ``(v, u, rho)`` with ``v, u`` positive and scaled to max entry 1.
    """
    matrix = _square(matrix)
    if np.any(matrix < 0.0) or not strongly_connected(matrix):
        raise ValueError("perron_vectors expects an irreducible nonnegative matrix")

    v, rho = _perron_side(matrix, tol, max_iter)
    u, _ = _perron_side(matrix.T, tol, max_iter)

    if not (np.all(v > 0.0) and np.all(u > 0.0)):
        raise ConvergenceError("Perron vectors lost positivity")

    return v, u, rho


def row_sum_bound(mats):
    """Largest row sum over all ``M(k)``; below one the periodic system contracts."""
    return float(np.abs(mats.m).sum(axis=2).max())
