import csv
import json
import os

import numpy as np
import toml
import yaml

from periodic_sis.lib._errors import ScheduleError
from periodic_sis.lib._model import GraphPhase, PeriodicSchedule, as_state

__all__ = [
    "schedule_from_dict",
    "schedule_to_dict",
    "load_schedule",
    "save_schedule",
    "load_config",
    "parse_init",
    "write_json",
    "write_trajectory_csv",
    "write_colors_csv",
    "write_rows_csv",
]


def schedule_from_dict(data, transpose=False):
    """
    Build a schedule from the JSON layout.

    Adjacency triples ``[i, j, w]`` mean an edge from ``j`` into ``i``;
    ``transpose`` reads them as ``[j, i, w]`` instead.
    """
    try:
        n, p, h = data["n"], data["p"], float(data["h"])
        raw_phases = data["phases"]
    except (KeyError, TypeError, ValueError) as err:
        raise ScheduleError(f"schedule needs integer n, p, float h and phases: {err}")

    if not isinstance(raw_phases, list):
        raise ScheduleError("phases must be a list")

    phases = []
    for k, raw in enumerate(raw_phases):
        try:
            adjacency = [
                (int(j), int(i), float(w)) if transpose else (int(i), int(j), float(w))
                for i, j, w in raw["adjacency"]
            ]
            phases.append(
                GraphPhase(
                    index=k, adjacency=adjacency, beta=raw["beta"], delta=raw["delta"]
                )
            )
        except ScheduleError:
            raise
        except (KeyError, TypeError, ValueError) as err:
            raise ScheduleError(f"phase {k} is malformed: {err}")

    return PeriodicSchedule(
        n=n,
        p=p,
        h=h,
        phases=tuple(phases),
        labels=data.get("labels"),
        meta=data.get("meta", {}),
    )


def schedule_to_dict(schedule):
    data = {
        "n": schedule.n,
        "p": schedule.p,
        "h": schedule.h,
        "phases": [
            {
                "adjacency": [[i, j, w] for i, j, w in phase.adjacency],
                "beta": phase.beta.tolist(),
                "delta": phase.delta.tolist(),
            }
            for phase in schedule.phases
        ],
    }
    if schedule.labels is not None:
        data["labels"] = list(schedule.labels)
    if schedule.meta:
        data["meta"] = dict(schedule.meta)
    return data


def load_schedule(file_path, transpose=False):
    """Load a schedule JSON file."""
    try:
        with open(file_path, "r", encoding="utf-8") as source:
            data = json.load(source)
    except json.JSONDecodeError as err:
        raise ScheduleError(f"{file_path} is not valid JSON: {err}")
    return schedule_from_dict(data, transpose=transpose)


def save_schedule(schedule, file_path):
    write_json(schedule_to_dict(schedule), file_path)


def load_config(file_path):
    """Load a TOML or YAML configuration file, chosen by extension."""
    extension = os.path.splitext(file_path)[1].lower()

    with open(file_path, "r", encoding="utf-8") as source:
        if extension == ".toml":
            return toml.load(source)
        if extension in (".yaml", ".yml"):
            return yaml.safe_load(source) or {}
        if extension == ".json":
            return json.load(source)

    raise ScheduleError(f"unsupported config format {extension!r} for {file_path}")


def parse_init(spec, n):
    """
    Initial condition from ``zero | node:<i> | uniform:<c> | file:<path>``.

    ``file:`` points to a JSON array of ``n`` infection levels.
    """
    kind, _, argument = spec.partition(":")

    if kind == "zero" and not argument:
        return np.zeros(n)

    if kind == "node":
        try:
            node = int(argument)
        except ValueError:
            raise ScheduleError(f"bad node index in {spec!r}")
        if not 0 <= node < n:
            raise ScheduleError(f"node {node} outside [0, {n})")
        x0 = np.zeros(n)
        x0[node] = 1.0
        return x0

    if kind == "uniform":
        try:
            level = float(argument)
        except ValueError:
            raise ScheduleError(f"bad level in {spec!r}")
        return as_state(np.full(n, level), n)

    if kind == "file":
        with open(argument, "r", encoding="utf-8") as source:
            return as_state(json.load(source), n)

    raise ScheduleError(
        f"unknown init spec {spec!r}, expected zero | node:<i> | uniform:<c> | file:<path>"
    )


def write_json(data, file_path):
    with open(file_path, "w", encoding="utf-8") as dest:
        json.dump(data, dest, indent=2)
        dest.write("\n")


def write_trajectory_csv(trajectory, file_path):
    """Rows ``k, x_0, ..., x_{n-1}, xbar``."""
    n = trajectory.states.shape[1]
    xbar = trajectory.xbar

    with open(file_path, "w", newline="", encoding="utf-8") as dest:
        writer = csv.writer(dest)
        writer.writerow(["k"] + [f"x_{i}" for i in range(n)] + ["xbar"])
        for idx, state in enumerate(trajectory.states):
            writer.writerow(
                [trajectory.start + idx]
                + [repr(float(value)) for value in state]
                + [repr(float(xbar[idx]))]
            )


def write_colors_csv(trajectory, file_path, colors, every=1):
    """Rows ``k, node, channel`` for every ``every``-th state."""
    with open(file_path, "w", newline="", encoding="utf-8") as dest:
        writer = csv.writer(dest)
        writer.writerow(["k", "node", "channel"])
        for idx in range(0, trajectory.states.shape[0], every):
            for node, channel in enumerate(colors(trajectory.states[idx])):
                writer.writerow([trajectory.start + idx, node, channel])


def write_rows_csv(file_path, header, rows):
    with open(file_path, "w", newline="", encoding="utf-8") as dest:
        writer = csv.writer(dest)
        writer.writerow(header)
        writer.writerows(rows)
