import os

import numpy as np
import pytest
from numpy.testing import assert_allclose

from periodic_sis import lib
from conftest import make_schedule, two_cycle


def _spec(**kwargs):
    fields = dict(
        n=8,
        p=3,
        ring_width=1,
        edge_probability=0.3,
        weight_range=(1, 4),
        beta=1.0,
        delta=[2.0, 0.5, 0.5],
        seed=3,
        require_a4=True,
    )
    fields.update(kwargs)
    return lib.SyntheticNetSpec(**fields)


def test_generate_synthetic_is_seeded_and_valid():
    first = lib.generate_synthetic(_spec())
    second = lib.generate_synthetic(_spec())
    other = lib.generate_synthetic(_spec(seed=4))

    assert lib.schedule_to_dict(first) == lib.schedule_to_dict(second)
    assert lib.schedule_to_dict(first) != lib.schedule_to_dict(other)

    report = lib.validate_schedule(first)
    assert report.ok
    assert report.gas_ready
    assert first.p == 3 and first.n == 8
    assert first.meta["generator"]["seed"] == 3
    assert first.h == pytest.approx(1.0 / first.meta["max_in_degree"])
    assert_allclose(first.phases[1].delta, np.full(8, 0.5))


def test_generate_synthetic_rejects_bad_specs():
    with pytest.raises(lib.ScheduleError, match="n >= 2"):
        lib.generate_synthetic(_spec(n=1))
    with pytest.raises(lib.ScheduleError, match="weight range"):
        lib.generate_synthetic(_spec(weight_range=(3, 1)))
    with pytest.raises(lib.ScheduleError, match="3 entries"):
        lib.generate_synthetic(_spec(delta=[1.0, 2.0]))
    with pytest.raises(lib.ScheduleError, match="unknown generator keys"):
        lib.SyntheticNetSpec.from_mapping({"n": 4, "colour": "red"})


def test_spec_from_mapping_coerces_weight_range():
    spec = lib.SyntheticNetSpec.from_mapping({"n": 5, "weight_range": [2, 6]})
    assert spec.weight_range == (2, 6)
    assert spec.phase_deltas() == [1.0, 1.0, 1.0]


def test_detect_convergence_on_scalar_decay(scalar_node):
    trajectory = lib.simulate(scalar_node, [1.0], 60)
    stats = lib.detect_convergence(trajectory)
    assert stats.converged
    assert stats.hitting_step == 20
    assert stats.empirical_rate == pytest.approx(0.5, rel=1e-9)


def test_detect_convergence_on_unstable_schedule(product_unstable):
    trajectory = lib.simulate(product_unstable, np.full(2, 0.5), 400)
    stats = lib.detect_convergence(trajectory)
    assert not stats.converged
    assert stats.hitting_step is None
    assert stats.empirical_rate == pytest.approx(1.0, abs=1e-3)


def test_default_burn_in():
    assert lib.default_burn_in(2, 1.1) == 200
    assert lib.default_burn_in(3, 1.0) == lib.BURN_IN_CAP


def test_limit_cycle_is_a_multiple_of_the_period(product_unstable):
    trajectory = lib.simulate(product_unstable, np.array([1.0, 0.0]), 3000)
    cycle = lib.detect_limit_cycle(trajectory, burn_in=1000)
    assert cycle.detected
    assert cycle.period % product_unstable.p == 0
    assert not cycle.fixed_point
    assert cycle.states.shape == (cycle.period, 2)
    assert cycle.states.min() > 0.0
    assert cycle.burn_in % 2 == 0


def test_limit_cycle_is_reproduced_from_other_initial_states(product_unstable):
    rng = np.random.default_rng(17)
    reference = lib.detect_limit_cycle(
        lib.simulate(product_unstable, np.array([1.0, 0.0]), 3000), burn_in=1000
    )
    for _ in range(5):
        x0 = rng.uniform(0.05, 1.0, size=2)
        cycle = lib.detect_limit_cycle(lib.simulate(product_unstable, x0, 3000), burn_in=1000)
        assert cycle.matches(reference, 1e-7)


def test_stable_schedule_settles_on_the_zero_fixed_point(two_node_ges):
    trajectory = lib.simulate(two_node_ges, np.full(2, 0.5), 2000)
    cycle = lib.detect_limit_cycle(trajectory)
    assert cycle.detected
    assert cycle.period == 1
    assert cycle.fixed_point
    assert cycle.states.max() < 1e-8


def test_limit_cycle_needs_a_long_enough_trajectory(product_unstable):
    trajectory = lib.simulate(product_unstable, np.full(2, 0.5), 10)
    with pytest.raises(ValueError, match="burn_in"):
        lib.detect_limit_cycle(trajectory, burn_in=8)


def test_node_colors():
    rgb = lib.node_colors([1.0, 0.0, 0.5])
    assert_allclose(rgb, [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.0, 0.5]])
    assert lib.hex_colors([1.0, 0.0, 0.5]) == ["#ff0000", "#0000ff", "#800080"]


def test_run_scenario_writes_requested_files(product_unstable, tmp_path):
    config = lib.ScenarioConfig(
        schedule=product_unstable,
        init="uniform:0.5",
        steps=2000,
        detect_cycle=True,
        out_dir=str(tmp_path),
        formats=("csv", "json"),
        color_every=100,
    )
    result = lib.run_scenario(config)

    assert result.cycle.detected
    assert not result.convergence.converged
    assert sorted(os.path.basename(path) for path in result.files) == [
        "colors.csv",
        "trajectory.csv",
        "trajectory.json",
    ]
    with open(tmp_path / "colors.csv", encoding="utf-8") as source:
        lines = source.read().splitlines()
    assert lines[0] == "k,node,channel"
    assert len(lines) == 1 + 21 * 2

    data = result.to_dict()
    assert data["steps"] == 2000
    assert data["cycle"]["period"] % 2 == 0


def test_sweep_over_healing_rate(two_node):
    report = lib.sweep(two_node, "delta_scalar", [0.5, 1.5, 20.0], steps=400)
    rows = report.rows
    assert [row.valid for row in rows] == [True, True, False]
    assert rows[0].classification == lib.UNSTABLE
    assert rows[0].rho == pytest.approx(1.05, abs=1e-10)
    assert not rows[0].converged
    assert rows[1].classification == lib.GES
    assert rows[1].converged
    assert rows[1].hitting_step is not None

    table = list(report.table())
    assert table[2] == [20.0, "", "INVALID", "", "", ""]


def test_sweep_over_gain_and_step(partial_control):
    gains = lib.sweep(
        partial_control, "gamma_scalar", [0.0, 2.0], steps=300, controllable_phases=[0]
    )
    assert [row.classification for row in gains.rows] == [lib.UNSTABLE, lib.GES]

    steps = lib.sweep(partial_control, "h", [0.05, 0.1], steps=300)
    assert all(row.valid for row in steps.rows)
    with pytest.raises(ValueError, match="unknown sweep parameter"):
        lib.sweep(partial_control, "beta", [1.0])


def test_emit_sweep_report(two_node, tmp_path):
    report = lib.sweep(two_node, "delta_scalar", [0.5, 1.5], steps=200)
    files = lib.emit_report(report, str(tmp_path / "out"), formats=("csv", "json"))
    assert [os.path.basename(path) for path in files] == ["sweep.csv", "sweep.json"]

    with open(files[0], encoding="utf-8") as source:
        header = source.readline().strip()
    assert header == ",".join(lib.SweepReport.HEADER)

    with pytest.raises(TypeError):
        lib.emit_report(object(), str(tmp_path))


def test_generator_step_size_from_ring_degree():
    schedule = lib.generate_synthetic(
        lib.SyntheticNetSpec(n=4, p=1, ring_width=1, beta=1.0, delta=1.0)
    )
    assert schedule.h == pytest.approx(0.5)
    assert schedule.meta["max_in_degree"] == 2.0
    assert lib.validate_schedule(schedule).gas_ready


def test_detect_convergence_ignores_underflowed_tail(scalar_node):
    trajectory = lib.simulate(scalar_node, [1.0], 3000)
    assert trajectory.norms(2)[-1] == 0.0
    stats = lib.detect_convergence(trajectory)
    assert stats.converged
    assert stats.empirical_rate == pytest.approx(0.5, abs=1e-6)


def test_zero_trajectory_has_zero_rate(scalar_node):
    stats = lib.detect_convergence(lib.simulate(scalar_node, [0.0], 10))
    assert stats.converged
    assert stats.hitting_step == 0
    assert stats.empirical_rate == 0.0


def _endemic_scenario():
    """Period-3 synthetic network with rho well above one."""
    spec = lib.SyntheticNetSpec(
        n=10,
        p=3,
        ring_width=1,
        edge_probability=0.2,
        weight_range=(1, 5),
        beta=1.0,
        delta=[3.0, 0.5, 0.5],
        seed=1,
        require_a4=True,
    )
    return lib.generate_synthetic(spec)


def test_cycle_detected_with_default_burn_in():
    schedule = _endemic_scenario()
    assert lib.classify(schedule, jsr_depth=1).rho_monodromy > 1.0

    result = lib.run_scenario(
        lib.ScenarioConfig(
            schedule=schedule, init="uniform:0.5", steps=5000, detect_cycle=True
        )
    )
    assert result.cycle.detected
    assert result.cycle.period % 3 == 0
    assert not result.cycle.fixed_point
    assert result.cycle.burn_in >= 2500


def test_synthetic_cycle_is_independent_of_the_initial_state():
    schedule = _endemic_scenario()
    rng = np.random.default_rng(29)
    cycles = [
        lib.detect_limit_cycle(lib.simulate(schedule, rng.uniform(0.01, 1.0, 10), 5000))
        for _ in range(5)
    ]
    assert all(cycle.detected for cycle in cycles)
    assert all(cycle.matches(cycles[0], 1e-7) for cycle in cycles[1:])


def test_boundary_scenario_decays_much_slower():
    # p = 1 two-node networks with rho = 1 + 0.1 (1 - delta)
    boundary = make_schedule([(two_cycle(), 1.0, 1.0)], n=2, h=0.1)
    stable = make_schedule([(two_cycle(), 1.0, 1.2)], n=2, h=0.1)
    assert lib.classify(boundary).rho_monodromy == pytest.approx(1.0, abs=1e-10)
    assert lib.classify(stable).rho_monodromy == pytest.approx(0.98, abs=1e-10)

    x0 = np.full(2, 0.5)
    fast = lib.simulate(stable, x0, 2000)
    hitting = lib.detect_convergence(fast).hitting_step
    assert hitting is not None

    slow = lib.simulate(boundary, x0, 2000)
    assert slow.norms(np.inf)[hitting] >= 10 * fast.norms(np.inf)[hitting]
    assert slow.norms(np.inf)[hitting] >= 1e-5


def test_sweep_radius_is_non_increasing_in_healing_rate(schedule_factory):
    for seed in range(8):
        schedule = schedule_factory(900 + seed)
        values = np.linspace(0.0, 0.9 / schedule.h, 6)
        report = lib.sweep(schedule, "delta_scalar", values, steps=20)
        assert all(row.valid for row in report.rows)
        radii = [row.rho for row in report.rows]
        assert all(later <= earlier + 1e-12 for earlier, later in zip(radii, radii[1:]))


def test_sweep_radius_is_non_increasing_in_gain(partial_control):
    report = lib.sweep(
        partial_control, "gamma_scalar", np.linspace(0.0, 8.0, 9), steps=20,
        controllable_phases=[0],
    )
    radii = [row.rho for row in report.rows]
    assert all(row.valid for row in report.rows)
    assert all(later < earlier for earlier, later in zip(radii, radii[1:]))
