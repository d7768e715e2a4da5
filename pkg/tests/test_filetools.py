import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from periodic_sis import lib


SCHEDULE = {
    "n": 2,
    "p": 2,
    "h": 0.1,
    "labels": ["north", "south"],
    "phases": [
        {"adjacency": [[0, 1, 1.0], [1, 0, 1.0]], "beta": [1.0, 1.0], "delta": [1.0, 1.0]},
        {"adjacency": [[0, 1, 3.0]], "beta": [1.0, 1.0], "delta": [2.0, 2.0]},
    ],
}


def _write(path, data):
    with open(path, "w", encoding="utf-8") as dest:
        json.dump(data, dest)
    return str(path)


def test_load_and_save_schedule(tmp_path):
    schedule = lib.load_schedule(_write(tmp_path / "schedule.json", SCHEDULE))
    assert schedule.labels == ("north", "south")
    assert schedule.phases[1].adjacency == ((0, 1, 3.0),)

    lib.save_schedule(schedule, str(tmp_path / "copy.json"))
    with open(tmp_path / "copy.json", encoding="utf-8") as source:
        assert json.load(source) == SCHEDULE


def test_transpose_swaps_edge_direction(tmp_path):
    path = _write(tmp_path / "schedule.json", SCHEDULE)
    schedule = lib.load_schedule(path, transpose=True)
    assert schedule.phases[1].adjacency == ((1, 0, 3.0),)
    mats = lib.build_system_matrices(schedule)
    assert mats.bbar[1][1, 0] == 3.0


@pytest.mark.parametrize(
    "data, message",
    [
        ({"n": 2, "p": 1}, "integer n, p"),
        (dict(SCHEDULE, phases={}), "phases must be a list"),
        (dict(SCHEDULE, phases=[{"beta": [1, 1], "delta": [1, 1]}] * 2), "phase 0 is malformed"),
        (dict(SCHEDULE, h=-0.1), "h must be positive"),
        (dict(SCHEDULE, n=2.5), "n must be a positive integer"),
    ],
)
def test_malformed_schedules(tmp_path, data, message):
    with pytest.raises(lib.ScheduleError, match=message):
        lib.load_schedule(_write(tmp_path / "bad.json", data))


def test_invalid_json_is_a_schedule_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(lib.ScheduleError, match="not valid JSON"):
        lib.load_schedule(str(path))


def test_load_config_by_extension(tmp_path):
    toml_path = tmp_path / "net.toml"
    toml_path.write_text('n = 6\ndelta = [1.0, 2.0]\n', encoding="utf-8")
    yaml_path = tmp_path / "net.yaml"
    yaml_path.write_text("n: 6\ndelta:\n  - 1.0\n  - 2.0\n", encoding="utf-8")

    assert lib.load_config(str(toml_path)) == {"n": 6, "delta": [1.0, 2.0]}
    assert lib.load_config(str(yaml_path)) == {"n": 6, "delta": [1.0, 2.0]}

    ini_path = tmp_path / "net.ini"
    ini_path.write_text("n=6", encoding="utf-8")
    with pytest.raises(lib.ScheduleError, match="unsupported config format"):
        lib.load_config(str(ini_path))


def test_parse_init(tmp_path):
    assert_array_equal(lib.parse_init("zero", 3), [0.0, 0.0, 0.0])
    assert_array_equal(lib.parse_init("node:1", 3), [0.0, 1.0, 0.0])
    assert_array_equal(lib.parse_init("uniform:0.25", 2), [0.25, 0.25])

    path = _write(tmp_path / "x0.json", [0.1, 0.2, 0.3])
    assert_allclose(lib.parse_init(f"file:{path}", 3), [0.1, 0.2, 0.3])


@pytest.mark.parametrize(
    "spec, message",
    [
        ("node:7", "outside"),
        ("node:x", "bad node index"),
        ("uniform:1.5", "outside"),
        ("uniform:abc", "bad level"),
        ("random", "unknown init spec"),
    ],
)
def test_parse_init_errors(spec, message):
    with pytest.raises(lib.ScheduleError, match=message):
        lib.parse_init(spec, 3)


def test_trajectory_csv(scalar_node, tmp_path):
    trajectory = lib.simulate(scalar_node, [1.0], 2)
    path = str(tmp_path / "trajectory.csv")
    lib.write_trajectory_csv(trajectory, path)

    with open(path, encoding="utf-8") as source:
        lines = source.read().splitlines()
    assert lines == ["k,x_0,xbar", "0,1.0,1.0", "1,0.5,0.5", "2,0.25,0.25"]


def test_colors_csv(tmp_path):
    trajectory = lib.Trajectory(states=np.array([[1.0, 0.0], [0.5, 0.5]]), p=1)
    path = str(tmp_path / "colors.csv")
    lib.write_colors_csv(trajectory, path, lib.hex_colors)

    with open(path, encoding="utf-8") as source:
        lines = source.read().splitlines()
    assert lines == [
        "k,node,channel",
        "0,0,#ff0000",
        "0,1,#0000ff",
        "1,0,#800080",
        "1,1,#800080",
    ]
