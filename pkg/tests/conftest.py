import numpy as np
import pytest

from periodic_sis import lib


def two_cycle(weight=1.0):
    return [(0, 1, weight), (1, 0, weight)]


def make_schedule(phases, n, h, labels=None):
    """``phases`` is a list of ``(adjacency, beta, delta)`` tuples."""
    return lib.PeriodicSchedule(
        n=n,
        p=len(phases),
        h=h,
        phases=tuple(
            lib.GraphPhase(
                index=k,
                adjacency=adjacency,
                beta=np.broadcast_to(beta, (n,)),
                delta=np.broadcast_to(delta, (n,)),
            )
            for k, (adjacency, beta, delta) in enumerate(phases)
        ),
        labels=labels,
    )


@pytest.fixture
def two_node():
    """p = 1, M = [[0.95, 0.1], [0.1, 0.95]], rho = 1.05."""
    return make_schedule([(two_cycle(), 1.0, 0.5)], n=2, h=0.1)


@pytest.fixture
def two_node_ges():
    """p = 1, M = [[0.85, 0.1], [0.1, 0.85]], rho = 0.95."""
    return make_schedule([(two_cycle(), 1.0, 1.5)], n=2, h=0.1)


@pytest.fixture
def product_unstable():
    """p = 2, M(0) = [[0.9, 0.1], [0.1, 0.9]], M(1) = [[0.9, 0.2], [0.2, 0.9]], rho = 1.10."""
    return make_schedule(
        [(two_cycle(1.0), 1.0, 1.0), (two_cycle(2.0), 1.0, 1.0)], n=2, h=0.1
    )


@pytest.fixture
def control_base():
    """p = 2 fixture for the healing-rate law; the schedule's own deltas are placeholders."""
    return make_schedule(
        [(two_cycle(1.0), 1.0, 0.0), (two_cycle(2.0), 1.0, 0.0)], n=2, h=0.1
    )


@pytest.fixture
def scalar_node():
    """n = 1, no edges, h*delta = 0.5: M = [[0.5]]."""
    return make_schedule([([], 1.0, 1.0)], n=1, h=0.5)


@pytest.fixture
def partial_control():
    """
    p = 3 with phase 0 controllable and phases 1, 2 at M = [[0.95, 0.1], [0.1, 0.95]],
    so rho(gamma) = 1.1025 (1 - 0.1 gamma).
    """
    return make_schedule(
        [
            (two_cycle(), 1.0, 1.0),
            (two_cycle(), 1.0, 0.5),
            (two_cycle(), 1.0, 0.5),
        ],
        n=2,
        h=0.1,
    )


def random_schedule(rng, n=None, p=None, density=0.4):
    """Random schedule satisfying A2-A3, with a ring so A4/A5 hold."""
    n = n or int(rng.integers(2, 9))
    p = p or int(rng.integers(1, 5))
    phases = []
    for _ in range(p):
        adjacency = {}
        for i in range(n):
            adjacency[(i, (i + 1) % n)] = float(rng.uniform(0.5, 2.0))
        for i in range(n):
            for j in range(n):
                if i != j and rng.random() < density:
                    adjacency.setdefault((i, j), float(rng.uniform(0.1, 2.0)))
        beta = rng.uniform(0.2, 1.5, size=n)
        delta = rng.uniform(0.1, 3.0, size=n)
        phases.append(([(i, j, w) for (i, j), w in adjacency.items()], beta, delta))

    worst = 0.0
    for adjacency, beta, delta in phases:
        dense = np.zeros((n, n))
        for i, j, w in adjacency:
            dense[i, j] = w
        worst = max(worst, float((beta * dense.sum(axis=1)).max()), float(delta.max()))
    return make_schedule(phases, n=n, h=float(rng.uniform(0.3, 0.9)) / worst)


@pytest.fixture
def schedule_factory():
    def _factory(seed, **kwargs):
        return random_schedule(np.random.default_rng(seed), **kwargs)

    return _factory
