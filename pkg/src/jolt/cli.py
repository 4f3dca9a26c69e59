"""Command-line front end for trajectory work.

Four subcommands cover the package end to end:

``generate``
    boundary-conditions JSON -> sampled trajectory CSV plus a JSON
    sidecar (coefficients, duration, jerk coefficients, residuals,
    generation time).
``convert``
    waypoint-path JSON -> trajectory CSV plus a metrics JSON
    (junction continuity, geometric deviation from the input path).
``sweep``
    scenario-set JSON -> one CSV row per (scenario, T, seed) run and a
    per-(scenario, T) aggregate CSV.
``bench``
    per-call micro-benchmark of the synthesis kernel -> raw timings
    CSV and a histogram/stats JSON, optionally comparing backends.

Exit codes: 0 success, 2 infeasible input, 3 certification failure,
4 configuration error.  Every failure prints one machine-readable JSON
object on stderr.  ``--fixed-clock`` zeroes all wall-clock fields so
identical inputs and seeds produce byte-identical output files.

Trajectory CSV schema: header ``t,q1..qn,v1..vn,a1..an,j1..jn``, SI
units (seconds, radians and derivatives), values at 1e-9 fixed
precision.  Sample times are rounded to the same precision, so parsing
a timestamp back reproduces the float the row was evaluated at.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from .backend import BACKEND, available_backends, load_backend
from .free_space import certify_spline
from .kinematic_model import ChainModel, Obstacle, line_collision_free, \
    min_distances
from .path_conversion import GeometricPath, path_to_trajectory
from .planner_sim import discrete_frechet, large_slow_scenario, \
    run_simulation, small_fast_scenario, solve_static, \
    static_clutter_scenario
from .spline_core import BoundaryState, JointLimits, MultiSpline, evaluate, \
    limits_array, synchronize_flat, synchronize_states, uniform_limits

__all__ = [
    "CliError",
    "ConfigError",
    "InfeasibleError",
    "CertificationError",
    "CONFIG_SCHEMAS",
    "BOUNDARY_SCHEMA",
    "PATH_SCHEMA",
    "SWEEP_SCHEMA",
    "BENCH_SCHEMA",
    "RunConfig",
    "cmd_generate",
    "cmd_convert",
    "cmd_sweep",
    "cmd_bench",
    "build_parser",
    "main",
]

_DEFAULT_LIMITS = {"pos_max": 2.0 * math.pi, "vel_max": math.pi,
                   "acc_max": 20.0, "jerk_max": 500.0}
_FRECHET_CAP = 1200          # metric polyline size bound (DP is O(N^2))
_WRAP_SAMPLES = 10000        # wrapped-call timing subsample in bench
_BENCH_CHUNK = 250000        # problems generated per block


# ---------------------------------------------------------------------------
# errors and exit codes
# ---------------------------------------------------------------------------


class CliError(Exception):
    """Failure with a stable exit code and machine-readable details."""

    exit_code = 1

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def payload(self) -> dict:
        out = {"error": str(self), "exit_code": self.exit_code}
        out.update(self.details)
        return out


class ConfigError(CliError):
    """Unusable configuration or arguments (exit 4)."""

    exit_code = 4


class InfeasibleError(CliError):
    """Well-formed request with no feasible answer (exit 2)."""

    exit_code = 2


class CertificationError(CliError):
    """Input rejected on collision/certification grounds (exit 3)."""

    exit_code = 3


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def _load_json(path: str, where: str) -> dict:
    def reject_constant(token: str):
        raise ConfigError(f"{where} contains non-finite number {token}",
                          path=str(path))

    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh, parse_constant=reject_constant)
    except OSError as exc:
        raise ConfigError(f"cannot read {where}: {exc}", path=str(path))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{where} is not valid JSON: {exc}",
                          path=str(path))
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object", path=str(path))
    return data


# Published JSON Schemas for the four config file formats.  Every
# object rejects unknown keys; ``_load_json`` rejects non-finite
# numbers at parse time, so schema-valid numbers are always finite.

_NUM = {"type": "number"}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}
_NONNEG_NUM = {"type": "number", "minimum": 0}
_INT = {"type": "integer"}
_POS_INT = {"type": "integer", "minimum": 1}
_BOOL = {"type": "boolean"}
_STR = {"type": "string"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_VEC2 = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

_LIMITS_KEYS = ("pos_max", "vel_max", "acc_max", "jerk_max")
_LIMITS_RECORD = {
    "type": "object", "additionalProperties": False,
    "required": list(_LIMITS_KEYS),
    "properties": {key: _POS_NUM for key in _LIMITS_KEYS},
}
_LIMITS_SPEC = {"anyOf": [_LIMITS_RECORD,
                          {"type": "array", "items": _LIMITS_RECORD,
                           "minItems": 1}]}

_STATE_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "required": ["position"],
    "properties": {"position": _VEC, "velocity": _VEC,
                   "acceleration": _VEC},
}

BOUNDARY_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "required": ["initial", "final", "limits"],
    "properties": {"initial": _STATE_SCHEMA, "final": _STATE_SCHEMA,
                   "limits": _LIMITS_SPEC},
}

_MODEL_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "required": ["link_lengths"],
    "properties": {"link_lengths": {"type": "array", "items": _POS_NUM,
                                    "minItems": 1},
                   "radius": _NONNEG_NUM},
}

_OBSTACLE_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "required": ["shape", "center"],
    "properties": {"shape": {"enum": ["sphere", "box"]},
                   "center": _VEC2, "radius": _POS_NUM,
                   "half_extents": _VEC2, "velocity": _VEC2},
}

PATH_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "required": ["nodes"],
    "properties": {
        "nodes": {"type": "array", "minItems": 2,
                  "items": {"type": "array", "items": _NUM,
                            "minItems": 1}},
        "name": _STR,
        "limits": _LIMITS_SPEC,
        "model": _MODEL_SCHEMA,
        "obstacles": {"type": "array", "items": _OBSTACLE_SCHEMA},
        "delta_t": _POS_NUM,
    },
}

_ARCHETYPES = ("small_fast", "large_slow", "static_clutter")
_MODE = {"enum": ["regular", "safe"]}
_OVERRIDES_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "properties": {
        "max_sim_time": _POS_NUM, "v_obs": _NONNEG_NUM,
        "reach_radius": _POS_NUM, "line_step": _POS_NUM,
        "d_max": _POS_NUM, "bur_delta_t": _POS_NUM, "delta_c": _POS_NUM,
        "obstacle_speed_max": _NONNEG_NUM,
        "obstacle_speed_min": _NONNEG_NUM,
        "rerandomize_on_reflect": _BOOL,
    },
}
_SPEC_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "required": ["archetype"],
    "properties": {
        "archetype": {"enum": list(_ARCHETYPES)},
        "name": _STR, "mode": _MODE, "adversarial": _BOOL,
        "n_obstacles": _POS_INT,
        "pipeline": {"enum": ["online", "static"]},
        "overrides": _OVERRIDES_SCHEMA,
    },
}

SWEEP_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "required": ["scenarios"],
    "properties": {
        "scenarios": {"type": "array", "items": _SPEC_SCHEMA,
                      "minItems": 1},
        "T": {"type": "array", "items": _POS_NUM},
        "seeds": {"type": "array", "items": _INT},
        "mode": _MODE,
        "limits": _LIMITS_SPEC,
        "delta_t": _POS_NUM, "delta_c": _POS_NUM, "d_max": _POS_NUM,
        "R": _POS_NUM,
        "write_csv": _BOOL, "write_json": _BOOL,
    },
}

BENCH_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "properties": {"count": _POS_INT, "seed": _INT,
                   "n_joints": _POS_INT, "limits": _LIMITS_SPEC,
                   "bins": _POS_INT},
}

CONFIG_SCHEMAS = {"generate": BOUNDARY_SCHEMA, "convert": PATH_SCHEMA,
                  "sweep": SWEEP_SCHEMA, "bench": BENCH_SCHEMA}


def _validate(obj, schema: dict, where: str) -> None:
    """Raise ConfigError on the most relevant schema violation."""
    error = best_match(Draft202012Validator(schema).iter_errors(obj))
    if error is not None:
        spot = "".join(f"[{p!r}]" for p in error.absolute_path)
        raise ConfigError(f"{where}{spot}: {error.message}")


def _parse_limits(spec, n_joints: int, where: str) -> tuple:
    """Limits spec: one record applied uniformly, or one per joint."""
    _validate(spec, _LIMITS_SPEC, where)
    records = [spec] * n_joints if isinstance(spec, dict) else list(spec)
    if len(records) != n_joints:
        raise ConfigError(f"{where} must be one record or a list of "
                          f"{n_joints} records, got {len(records)}")
    try:
        return tuple(JointLimits(*(float(rec[k]) for k in _LIMITS_KEYS))
                     for rec in records)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}")


def _limits_echo(limits) -> list:
    return [{"pos_max": l.pos_max, "vel_max": l.vel_max,
             "acc_max": l.acc_max, "jerk_max": l.jerk_max} for l in limits]


def _parse_state(obj, where: str) -> BoundaryState:
    p = np.asarray(obj["position"], dtype=float)
    v = np.asarray(obj.get("velocity", np.zeros(p.size)), dtype=float)
    a = np.asarray(obj.get("acceleration", np.zeros(p.size)), dtype=float)
    for name, arr in (("velocity", v), ("acceleration", a)):
        if arr.size != p.size:
            raise ConfigError(f"{where}.{name} must have the same length "
                              f"as {where}.position ({p.size})")
    return BoundaryState(p, v, a)


def _require_within(state: BoundaryState, limits, which: str) -> None:
    """Infeasible-input check: componentwise limit membership."""
    quantities = (("position", state.position, [l.pos_max for l in limits]),
                  ("velocity", state.velocity, [l.vel_max for l in limits]),
                  ("acceleration", state.acceleration,
                   [l.acc_max for l in limits]))
    for name, values, bounds in quantities:
        for j, (value, bound) in enumerate(zip(values, bounds)):
            if abs(value) > bound:
                raise InfeasibleError(
                    f"infeasible {which} state",
                    joint=j, quantity=name, value=float(value),
                    limit=float(bound))


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.9f}"


def _fmt_bool(b: bool) -> str:
    return "true" if b else "false"


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True))
        fh.write("\n")


def _clock(args):
    return (lambda: 0.0) if args.fixed_clock else time.perf_counter


def _iso_now(args) -> Optional[str]:
    if args.fixed_clock:
        return None
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _segments(traj) -> list:
    return list(traj.segments) if hasattr(traj, "segments") else [traj]


def _sample_times(traj, dt: float, cap: Optional[int] = None) -> list:
    """Sample times ~dt apart with every segment boundary hit exactly.

    Times are rounded to 1e-9 (the CSV precision) so a parsed
    timestamp reproduces the float the row was evaluated at; rounding
    keeps order, and duplicates collapsing onto a boundary are
    dropped.  The last time is rounded up instead, so it never lands
    short of the end and the final row is exactly the terminal
    boundary state (evaluation clips to the trajectory end).  ``cap``
    coarsens dt so the result stays below roughly cap points
    (boundaries are never dropped).
    """
    total = traj.duration
    if cap is not None and dt > 0.0 and total / dt > cap:
        dt = total / cap
    times = [traj.start_time]
    for seg in _segments(traj):
        n = max(1, int(math.ceil(seg.duration / dt - 1e-9))) \
            if seg.duration > 0.0 and dt > 0.0 else 1
        times.extend(seg.start_time + seg.duration * k / n
                     for k in range(1, n + 1))
    end = round(times[-1], 9)
    if end < times[-1]:
        end = round(end + 1e-9, 9)
    out: list = []
    for t in times[:-1]:
        r = round(t, 9)
        if (not out or r > out[-1]) and r < end:
            out.append(r)
    out.append(end)
    return out


def _row_at(traj, t: float) -> list:
    segs = _segments(traj)
    ends = [seg.end_time for seg in segs]
    seg = segs[min(bisect_right(ends, t), len(segs) - 1)]
    tau = t - seg.start_time
    row = [t]
    for order in range(4):
        row.extend(evaluate(js, tau, order, clip=True)
                   for js in seg.splines)
    return row


def _csv_header(n: int) -> list:
    header = ["t"]
    for prefix in ("q", "v", "a", "j"):
        header.extend(f"{prefix}{j + 1}" for j in range(n))
    return header


def _write_trajectory_csv(path: Path, traj, dt: float) -> int:
    times = _sample_times(traj, dt)
    _write_csv(path, _csv_header(traj.n_joints),
               ([_fmt(x) for x in _row_at(traj, t)] for t in times))
    return len(times)


# ---------------------------------------------------------------------------
# geometric deviation metric
# ---------------------------------------------------------------------------


def _arc_fractions(points: np.ndarray) -> np.ndarray:
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    s = np.concatenate(([0.0], np.cumsum(steps)))
    return s / s[-1] if s[-1] > 0.0 else np.zeros(points.shape[0])


def _polyline_at_fractions(nodes: np.ndarray,
                           fracs: np.ndarray) -> np.ndarray:
    steps = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
    s = np.concatenate(([0.0], np.cumsum(steps)))
    targets = np.clip(fracs, 0.0, 1.0) * s[-1]
    idx = np.clip(np.searchsorted(s, targets, side="right") - 1, 0,
                  steps.shape[0] - 1)
    w = (targets - s[idx]) / np.where(steps[idx] > 0.0, steps[idx], 1.0)
    return nodes[idx] + w[:, None] * (nodes[idx + 1] - nodes[idx])


def frechet_to_path(samples, nodes) -> float:
    """Discrete Frechet after matched arc-length resampling.

    Raw discrete Frechet between a densely sampled curve and a sparse
    vertex list measures vertex density (a mid-segment sample is half
    a segment away from both endpoints), not geometry.  Resampling the
    reference polyline at the sample curve's own normalized arc-length
    fractions puts both point sequences under one monotone coupling of
    equal length, so the reported value is the true pointwise
    deviation of a faithful traversal — near zero exactly when the
    curve traces the polyline without cutting corners, overshooting or
    backtracking.
    """
    a = np.atleast_2d(np.asarray(samples, dtype=float))
    b = _polyline_at_fractions(np.atleast_2d(np.asarray(nodes, dtype=float)),
                               _arc_fractions(a))
    return discrete_frechet(a, b)


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    """Synthesize one synchronized trajectory from a request file."""
    data = _load_json(args.input, "boundary-conditions file")
    _validate(data, BOUNDARY_SCHEMA, "boundary-conditions file")
    init = _parse_state(data["initial"], "initial")
    final = _parse_state(data["final"], "final")
    if final.n_joints != init.n_joints:
        raise ConfigError("initial and final states must have the same "
                          "number of joints")
    limits = _parse_limits(data["limits"], init.n_joints, "limits")
    _require_within(init, limits, "initial")
    _require_within(final, limits, "final")

    clock = _clock(args)
    t0 = clock()
    ms = synchronize_states(init, final, limits, args.delta_c)
    gen_seconds = clock() - t0
    if ms is None:
        raise InfeasibleError("no feasible synchronized trajectory",
                              delta_c=args.delta_c)

    out = _out_dir(args)
    csv_path = out / "trajectory.csv"
    n_rows = _write_trajectory_csv(csv_path, ms, args.period_ms * 1e-3)

    end = ms.state(ms.end_time)
    sidecar = {
        "backend": BACKEND,
        "c_star": [s.coefficients[2] for s in ms.splines],
        "coefficients": ms.coefficient_matrix().tolist(),
        "csv": {"file": csv_path.name, "rows": n_rows,
                "period_ms": args.period_ms},
        "delta_c": args.delta_c,
        "generated_at": _iso_now(args),
        "generation_seconds": gen_seconds,
        "limits": _limits_echo(limits),
        "n_joints": ms.n_joints,
        "residuals": {
            "position": np.abs(end.position - final.position).tolist(),
            "velocity": np.abs(end.velocity - final.velocity).tolist(),
            "acceleration": np.abs(end.acceleration
                                   - final.acceleration).tolist(),
        },
        "t_f": ms.duration,
    }
    json_path = out / "trajectory.json"
    _write_json(json_path, sidecar)
    print(f"generate: t_f = {ms.duration:.6f} s, {n_rows} rows -> "
          f"{csv_path} + {json_path}")
    return 0


# ---------------------------------------------------------------------------
# convert
# ---------------------------------------------------------------------------


def _parse_model(obj, where: str) -> ChainModel:
    try:
        return ChainModel([float(x) for x in obj["link_lengths"]],
                          float(obj.get("radius", 0.0)))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}")


def _parse_obstacle(obj, where: str, allow_moving: bool) -> Obstacle:
    center = [float(x) for x in obj["center"]]
    velocity = [float(x) for x in obj["velocity"]] \
        if "velocity" in obj else None
    try:
        if obj["shape"] == "sphere":
            if "radius" not in obj:
                raise ConfigError(f"{where}: sphere needs 'radius'")
            ob = Obstacle.sphere(center, float(obj["radius"]),
                                 velocity=velocity)
        else:
            if "half_extents" not in obj:
                raise ConfigError(f"{where}: box needs 'half_extents'")
            ob = Obstacle.box(center,
                              [float(x) for x in obj["half_extents"]],
                              velocity=velocity)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}")
    if not allow_moving and ob.speed > 0.0:
        raise ConfigError(f"{where}: obstacles must be static here")
    return ob


def _junction_report(traj) -> dict:
    segs = _segments(traj)
    gap = pj = vj = aj = 0.0
    for prev, cur in zip(segs, segs[1:]):
        gap = max(gap, abs(cur.start_time - prev.end_time))
        a = prev.state(prev.end_time)
        b = cur.state(cur.start_time)
        pj = max(pj, float(np.max(np.abs(a.position - b.position))))
        vj = max(vj, float(np.max(np.abs(a.velocity - b.velocity))))
        aj = max(aj, float(np.max(np.abs(a.acceleration
                                         - b.acceleration))))
    return {"n_junctions": len(segs) - 1, "max_time_gap": gap,
            "max_position_jump": pj, "max_velocity_jump": vj,
            "max_acceleration_jump": aj}


def cmd_convert(args) -> int:
    """Convert a waypoint path file into a trajectory plus metrics."""
    data = _load_json(args.input, "path file")
    _validate(data, PATH_SCHEMA, "path file")
    nodes_raw = data["nodes"]
    width = len(nodes_raw[0])
    for i, nd in enumerate(nodes_raw):
        if len(nd) != width:
            raise ConfigError(f"nodes[{i}] has length {len(nd)}, "
                              f"expected {width} like nodes[0]")
    nodes = np.array(nodes_raw, dtype=float)
    try:
        path = GeometricPath(nodes, provenance=data.get("name", ""))
    except ValueError as exc:
        raise ConfigError(f"invalid path: {exc}")
    n = path.n_joints
    limits = _parse_limits(data["limits"], n, "limits") \
        if "limits" in data else uniform_limits(n, **_DEFAULT_LIMITS)
    for i, node in enumerate(nodes):
        for j, lim in enumerate(limits):
            if abs(node[j]) > lim.pos_max:
                raise InfeasibleError("path node outside position limits",
                                      node=i, joint=j, value=float(node[j]),
                                      limit=lim.pos_max)

    obstacles = [
        _parse_obstacle(ob, f"obstacles[{i}]", allow_moving=False)
        for i, ob in enumerate(data.get("obstacles", []))]
    model = None
    if "model" in data:
        model = _parse_model(data["model"], "model")
        if model.n_joints != n:
            raise ConfigError("model joint count does not match the path")
    elif obstacles:
        if n != 2:
            raise ConfigError("obstacles need an explicit model for "
                              f"{n}-joint paths")
        model = ChainModel([0.5, 0.5], 0.02)
    if obstacles:
        for i in range(path.n_nodes - 1):
            if not line_collision_free(model, nodes[i], nodes[i + 1],
                                       obstacles):
                raise CertificationError(
                    "colliding segment", segment=i,
                    from_node=nodes[i].tolist(),
                    to_node=nodes[i + 1].tolist())

    T = args.period_ms * 1e-3
    delta_t = float(data["delta_t"]) if "delta_t" in data \
        else max(T / 10.0, 0.01)
    if args.no_interpolation:
        def certifier(_ms: MultiSpline) -> bool:
            return False
    elif obstacles:
        def certifier(ms: MultiSpline) -> bool:
            q0 = ms.state(ms.start_time).position
            report = min_distances(model, q0, obstacles)
            if report.collision or float(np.min(report.distances)) <= 0.0:
                return False
            return certify_spline(ms, model, report, delta_t,
                                  0.0).fully_certified
    else:
        def certifier(_ms: MultiSpline) -> bool:
            return True

    clock = _clock(args)
    t0 = clock()
    trajectory = path_to_trajectory(path, args.dmax, T, limits, certifier,
                                    mode="static", delta_c=args.delta_c)
    conv_seconds = clock() - t0

    out = _out_dir(args)
    csv_path = out / "trajectory.csv"
    n_rows = _write_trajectory_csv(csv_path, trajectory, T / 10.0)
    metric_times = _sample_times(trajectory, T / 10.0, cap=_FRECHET_CAP)
    samples = np.array([_row_at(trajectory, t)[1:1 + n]
                        for t in metric_times])
    metrics = {
        "T": T,
        "backend": BACKEND,
        "conversion_seconds": conv_seconds,
        "csv": {"file": csv_path.name, "rows": n_rows},
        "d_max": args.dmax,
        "duration": trajectory.duration,
        "frechet_to_input": frechet_to_path(samples, nodes),
        "interpolation": not args.no_interpolation,
        "junctions": _junction_report(trajectory),
        "n_input_nodes": path.n_nodes,
        "n_joints": n,
        "n_obstacles": len(obstacles),
        "n_segments": trajectory.n_segments,
        "name": data.get("name", ""),
        "generated_at": _iso_now(args),
    }
    json_path = out / "metrics.json"
    _write_json(json_path, metrics)
    print(f"convert: {path.n_nodes} nodes -> {trajectory.n_segments} "
          f"segments, {trajectory.duration:.6f} s, deviation "
          f"{metrics['frechet_to_input']:.3e} -> {csv_path} + {json_path}")
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Validated sweep settings: scenario specs plus typed overrides.

    Merged from the scenario-set file and command-line flags (flags
    win); unknown keys and wrongly typed values are rejected at load
    time.  File-level and flag overrides apply to every scenario and
    take precedence over per-scenario override entries.
    """

    scenario_path: str
    out_dir: str
    scenario_specs: tuple
    t_values: tuple
    seeds: tuple
    mode: Optional[str] = None
    limits_spec: Optional[object] = None
    delta_t: Optional[float] = None
    delta_c: Optional[float] = None
    d_max: Optional[float] = None
    reach_radius: Optional[float] = None
    write_csv: bool = True
    write_json: bool = True
    fixed_clock: bool = False


def _normalize_spec(spec: dict, index: int) -> dict:
    where = f"scenarios[{index}]"
    archetype = spec["archetype"]
    static = archetype == "static_clutter"
    if spec.get("adversarial") and static:
        raise ConfigError(f"{where}: 'adversarial' applies to dynamic "
                          "archetypes only")
    if "n_obstacles" in spec and not static:
        raise ConfigError(f"{where}: 'n_obstacles' applies to "
                          "static_clutter only")
    return {"name": spec.get("name", f"{archetype}-{index}"),
            "archetype": archetype, "mode": spec.get("mode"),
            "adversarial": bool(spec.get("adversarial", False)),
            "n_obstacles": int(spec.get("n_obstacles", 5)),
            "pipeline": spec.get("pipeline",
                                 "static" if static else "online"),
            "overrides": dict(spec.get("overrides", {}))}


def _load_run_config(args) -> RunConfig:
    raw = _load_json(args.config, "sweep config")
    _validate(raw, SWEEP_SCHEMA, "sweep config")
    specs = tuple(_normalize_spec(spec, i)
                  for i, spec in enumerate(raw["scenarios"]))
    names = [s["name"] for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError("scenario names must be unique", names=names)

    if args.period_ms is not None:
        t_values = [args.period_ms * 1e-3]
    else:
        t_values = [float(t) for t in raw.get("T", [])]
    if args.seed is not None:
        seeds = [args.seed]
    else:
        seeds = raw.get("seeds", [])
    mode = args.mode or raw.get("mode")
    limits_spec = raw.get("limits")
    if limits_spec is not None:
        _parse_limits(limits_spec, 2, "limits")     # validate early
    return RunConfig(
        scenario_path=args.config, out_dir=args.out,
        scenario_specs=specs, t_values=tuple(t_values),
        seeds=tuple(int(s) for s in seeds), mode=mode,
        limits_spec=limits_spec,
        delta_t=raw.get("delta_t"),
        delta_c=args.delta_c if args.delta_c is not None
        else raw.get("delta_c"),
        d_max=args.dmax if args.dmax is not None else raw.get("d_max"),
        reach_radius=raw.get("R"),
        write_csv=raw.get("write_csv", True),
        write_json=raw.get("write_json", True),
        fixed_clock=args.fixed_clock)


def _worker_cap(n_jobs: int) -> int:
    env = os.environ.get("CFS45_THREADS", "").strip()
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(
                f"CFS45_THREADS must be an integer, got {env!r}")
        if cap < 1:
            raise ConfigError("CFS45_THREADS must be >= 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_jobs))


def _scenario_from_job(job: dict):
    over = dict(job["overrides"])
    if job["limits_spec"] is not None:
        over["limits"] = _parse_limits(job["limits_spec"], 2, "limits")
    factory = {"small_fast": small_fast_scenario,
               "large_slow": large_slow_scenario,
               "static_clutter": static_clutter_scenario}[job["archetype"]]
    kwargs = {}
    if job["mode"] is not None:
        kwargs["mode"] = job["mode"]
    if job["archetype"] == "static_clutter":
        kwargs["n_obstacles"] = job["n_obstacles"]
    else:
        kwargs["adversarial"] = job["adversarial"]
    return factory(job["seed"], T=job["T"], **kwargs, **over)


def _sweep_run(job: dict) -> dict:
    """One sweep run; failures are reported, never raised."""
    try:
        scenario = _scenario_from_job(job)
        clock = (lambda: 0.0) if job["fixed_clock"] else None
        if job["pipeline"] == "static":
            record = solve_static(scenario, clock=clock)
        else:
            record = run_simulation(scenario, clock=clock)
        return {"status": "ok", "record": dataclasses.asdict(record)}
    except Exception as exc:                  # per-run isolation
        return {"status": "error", "error": f"{type(exc).__name__}: {exc}"}


_RUN_COLUMNS = ("classic_success", "adjusted_success", "algorithm_time",
                "planner_compute_time", "mean_call_time", "p95_call_time",
                "path_length", "jerk_l1", "collision_type", "n_periods",
                "limit_ok", "q_end")


def _run_row(job: dict, result: dict) -> list:
    row = [job["name"], _fmt(job["T"]), str(job["seed"]), result["status"]]
    if result["status"] != "ok":
        return row + [""] * len(_RUN_COLUMNS) + [result["error"]]
    rec = result["record"]
    for col in _RUN_COLUMNS:
        value = rec[col]
        if col == "q_end":
            row.append(";".join(_fmt(x) for x in value))
        elif isinstance(value, bool):
            row.append(_fmt_bool(value))
        elif isinstance(value, float):
            row.append(_fmt(value))
        else:
            row.append(str(value))
    return row + [""]


def cmd_sweep(args) -> int:
    """Run every (scenario, T, seed) combination and tabulate results."""
    cfg = _load_run_config(args)
    out = _out_dir(args)
    global_over = {}
    if cfg.delta_t is not None:
        global_over["bur_delta_t"] = cfg.delta_t
    if cfg.delta_c is not None:
        global_over["delta_c"] = cfg.delta_c
    if cfg.d_max is not None:
        global_over["d_max"] = cfg.d_max
    if cfg.reach_radius is not None:
        global_over["reach_radius"] = cfg.reach_radius

    jobs = []
    for spec in cfg.scenario_specs:
        overrides = dict(spec["overrides"])
        overrides.update(global_over)
        for T in cfg.t_values:
            for seed in cfg.seeds:
                jobs.append({
                    "name": spec["name"], "archetype": spec["archetype"],
                    "T": T, "seed": seed,
                    "mode": cfg.mode if cfg.mode is not None
                    else spec["mode"],
                    "adversarial": spec["adversarial"],
                    "n_obstacles": spec["n_obstacles"],
                    "pipeline": spec["pipeline"],
                    "overrides": overrides,
                    "limits_spec": cfg.limits_spec,
                    "fixed_clock": cfg.fixed_clock,
                })

    clock = _clock(args)
    t0 = clock()
    workers = _worker_cap(len(jobs)) if jobs else 1
    if workers <= 1 or len(jobs) <= 1:
        results = [_sweep_run(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_run, jobs))
    wall_seconds = clock() - t0

    groups: dict = {}
    for job, result in zip(jobs, results):
        groups.setdefault((job["name"], job["T"]), []).append(result)
    aggregate_rows = []
    for (name, T), group in groups.items():
        ok = [r["record"] for r in group if r["status"] == "ok"]
        n_err = len(group) - len(ok)
        mean = lambda key: _fmt(float(np.mean([r[key] for r in ok]))) \
            if ok else ""
        aggregate_rows.append([
            name, _fmt(T), str(len(group)), str(n_err),
            mean("adjusted_success"), mean("algorithm_time"),
            mean("path_length"),
            _fmt(float(np.mean([r["classic_success"] for r in ok])))
            if ok else ""])

    n_errors = sum(1 for r in results if r["status"] != "ok")
    if cfg.write_csv:
        _write_csv(out / "runs.csv",
                   ["scenario", "T", "seed", "status", *_RUN_COLUMNS,
                    "error"],
                   (_run_row(job, result)
                    for job, result in zip(jobs, results)))
        _write_csv(out / "aggregate.csv",
                   ["scenario", "T", "n_runs", "n_errors",
                    "mean_adjusted_success", "mean_algorithm_time",
                    "mean_path_length", "classic_success_rate"],
                   aggregate_rows)
    if cfg.write_json:
        _write_json(out / "sweep.json", {
            "backend": BACKEND,
            "config": {"scenario_path": cfg.scenario_path,
                       "scenarios": [s["name"]
                                     for s in cfg.scenario_specs],
                       "T": list(cfg.t_values),
                       "seeds": list(cfg.seeds), "mode": cfg.mode},
            "generated_at": _iso_now(args),
            "n_errors": n_errors,
            "n_runs": len(jobs),
            "wall_seconds": wall_seconds,
            "workers": workers,
        })
    print(f"sweep: {len(jobs) - n_errors}/{len(jobs)} runs ok -> "
          f"{out / 'runs.csv'}, {out / 'aggregate.csv'}")
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def _bench_chunks(rng: np.random.Generator, limits, count: int):
    """Random boundary-condition problems, block by block.

    The draw mirrors the replanning hot path: a moving initial state
    (acceleration at half scale, velocity under the braking-headroom
    cap vel_max - a^2/(2 jerk_max) at 80%, biased toward the target)
    and a rest final state at a uniform random position.  Draws
    consume the stream in a fixed block order, so the problem set is a
    pure function of the seed.
    """
    n = len(limits)
    pos = np.array([min(l.pos_max, math.pi) for l in limits])
    acc = np.array([l.acc_max for l in limits])
    vel = np.array([l.vel_max for l in limits])
    jerk = np.array([l.jerk_max for l in limits])
    done = 0
    while done < count:
        m = min(_BENCH_CHUNK, count - done)
        init = np.empty((m, 3 * n))
        final = np.zeros((m, 3 * n))
        p0 = rng.uniform(-pos, pos, (m, n))
        pf = rng.uniform(-pos, pos, (m, n))
        a = rng.uniform(-0.5, 0.5, (m, n)) * acc
        cap = vel - a * a / (2.0 * jerk)
        v = np.where(pf >= p0, 1.0, -1.0) * rng.uniform(0.0, 0.8,
                                                        (m, n)) * cap
        init[:, 0::3] = p0
        init[:, 1::3] = v
        init[:, 2::3] = a
        final[:, 0::3] = pf
        yield init, final
        done += m


def _bench_stats(times_s: np.ndarray, n_ok: int, bins: int) -> dict:
    counts, edges = np.histogram(times_s, bins=bins)
    return {
        "n_success": int(n_ok),
        "median_seconds": float(np.median(times_s)),
        "mean_seconds": float(np.mean(times_s)),
        "p95_seconds": float(np.percentile(times_s, 95.0)),
        "p99_seconds": float(np.percentile(times_s, 99.0)),
        "min_seconds": float(np.min(times_s)),
        "max_seconds": float(np.max(times_s)),
        "histogram": {"edges": edges.tolist(),
                      "counts": counts.tolist()},
    }


def cmd_bench(args) -> int:
    """Per-call timing of the synthesis kernel on random problems."""
    cfg = {"count": 10000, "seed": 0, "n_joints": 6, "bins": 60,
           "limits": dict(_DEFAULT_LIMITS)}
    if args.config is not None:
        file_cfg = _load_json(args.config, "bench config")
        _validate(file_cfg, BENCH_SCHEMA, "bench config")
        cfg.update(file_cfg)
    for flag, key in (("count", "count"), ("seed", "seed"),
                      ("joints", "n_joints"), ("bins", "bins")):
        value = getattr(args, flag)
        if value is not None:
            cfg[key] = value
    if cfg["count"] < 1:
        raise ConfigError("count must be >= 1")
    if cfg["n_joints"] < 1 or cfg["bins"] < 1:
        raise ConfigError("n_joints and bins must be >= 1")
    limits = _parse_limits(cfg["limits"], cfg["n_joints"], "limits")
    lim_flat = limits_array(limits)
    delta_c = min((l.jerk_max / 6.0) * 1e-3 for l in limits)
    count, n = cfg["count"], cfg["n_joints"]

    timer = (lambda: 0) if args.fixed_clock else time.perf_counter_ns
    backends = available_backends() if args.compare else [BACKEND]
    results = {}
    all_times = {}
    sha = None
    for name in backends:
        kern = load_backend(name)
        sync = kern.sync_quintic
        rng = np.random.default_rng(cfg["seed"])
        digest = hashlib.sha256()
        times = np.empty(count)
        out = np.empty(6 * n)
        n_ok = 0
        base = 0
        for init, final in _bench_chunks(rng, limits, count):
            if name == backends[0]:
                digest.update(init.tobytes())
                digest.update(final.tobytes())
            for i in range(init.shape[0]):
                a, b = init[i], final[i]
                t0 = timer()
                ok, _tf = sync(a, b, lim_flat, delta_c, out)
                t1 = timer()
                times[base + i] = t1 - t0
                n_ok += ok
            base += init.shape[0]
        if sha is None:
            sha = digest.hexdigest()
        times_s = times * 1e-9
        results[name] = _bench_stats(times_s, n_ok, cfg["bins"])
        all_times[name] = times_s

    # Wrapped-call timing on a subsample: the same search through the
    # record-building entry point, for the full user-visible cost.
    rng = np.random.default_rng(cfg["seed"])
    m = min(count, _WRAP_SAMPLES)
    wrapped = np.empty(m)
    filled = 0
    for init, final in _bench_chunks(rng, limits, m):
        for i in range(init.shape[0]):
            a, b = init[i], final[i]
            t0 = timer()
            synchronize_flat(a, b, lim_flat, delta_c)
            t1 = timer()
            wrapped[filled + i] = t1 - t0
        filled += init.shape[0]

    out_dir = _out_dir(args)
    csv_path = out_dir / "timings.csv"
    header = ["sample"] + [f"seconds_{name}" for name in backends]
    _write_csv(csv_path, header,
               ([str(i)] + [_fmt(all_times[name][i]) for name in backends]
                for i in range(count)))
    report = {
        "backend_default": BACKEND,
        "bins": cfg["bins"],
        "count": count,
        "generated_at": _iso_now(args),
        "limits": _limits_echo(limits),
        "n_joints": n,
        "problems_sha256": sha,
        "results": results,
        "seed": cfg["seed"],
        "timed_call": "per-call synthesis kernel (inputs pre-flattened, "
                      "output buffer reused; record construction "
                      "excluded)",
        "wrapped": {"backend": BACKEND, "samples": m,
                    "median_seconds": float(np.median(wrapped * 1e-9))},
    }
    json_path = out_dir / "bench.json"
    _write_json(json_path, report)
    summary = ", ".join(
        f"{name} median {results[name]['median_seconds']:.3e} s"
        for name in backends)
    print(f"bench: {count} calls, {n} joints -> {summary} "
          f"({csv_path} + {json_path})")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Argument errors surface as ConfigError (exit 4), not SystemExit."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="jolt",
        description="Jerk-limited online trajectory toolkit: generate "
                    "synchronized splines, convert waypoint paths, sweep "
                    "planner scenarios and micro-benchmark the synthesis "
                    "kernel.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, period_default=None):
        p.add_argument("--out", default=".",
                       help="output directory (created if missing)")
        p.add_argument("--fixed-clock", action="store_true",
                       help="zero all wall-clock fields for byte-identical "
                            "outputs")
        if period_default is not None:
            p.add_argument("--period-ms", type=float,
                           default=period_default,
                           help="period in milliseconds "
                                f"(default {period_default})")

    g = sub.add_parser(
        "generate", help="boundary conditions -> trajectory CSV + sidecar")
    g.add_argument("input", help="boundary-conditions JSON file")
    common(g, period_default=1.0)
    g.add_argument("--delta-c", type=float, default=None,
                   help="jerk-coefficient search resolution")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser(
        "convert", help="waypoint path -> trajectory CSV + metrics")
    c.add_argument("input", help="path JSON file")
    common(c, period_default=50.0)
    c.add_argument("--dmax", type=float, default=0.5,
                   help="maximum node gap after densification (rad)")
    c.add_argument("--delta-c", type=float, default=None,
                   help="jerk-coefficient search resolution")
    c.add_argument("--no-interpolation", action="store_true",
                   help="disable corner cutting; the trajectory traces "
                        "the input polyline exactly")
    c.set_defaults(func=cmd_convert)

    s = sub.add_parser(
        "sweep", help="scenario set -> per-run and aggregate CSV tables")
    s.add_argument("config", help="scenario-set JSON file")
    common(s)
    s.add_argument("--period-ms", type=float, default=None,
                   help="override the config's T list with one period")
    s.add_argument("--mode", choices=("regular", "safe"), default=None,
                   help="override every scenario's mode")
    s.add_argument("--seed", type=int, default=None,
                   help="override the config's seed list with one seed")
    s.add_argument("--dmax", type=float, default=None,
                   help="override the conversion node gap (rad)")
    s.add_argument("--delta-c", type=float, default=None,
                   help="jerk-coefficient search resolution")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser(
        "bench", help="micro-benchmark the synthesis kernel")
    b.add_argument("config", nargs="?", default=None,
                   help="optional bench JSON file (count, seed, n_joints, "
                        "limits, bins)")
    common(b)
    b.add_argument("--count", type=int, default=None,
                   help="number of random problems (default 10000)")
    b.add_argument("--seed", type=int, default=None,
                   help="problem-set seed (default 0)")
    b.add_argument("--joints", type=int, default=None,
                   help="joint count (default 6)")
    b.add_argument("--bins", type=int, default=None,
                   help="histogram bin count (default 60)")
    b.add_argument("--compare", action="store_true",
                   help="time every available backend on the same "
                        "problem set")
    b.set_defaults(func=cmd_bench)
    return parser


def _validate_common(args) -> None:
    period = getattr(args, "period_ms", None)
    if period is not None and not (period > 0.0 and math.isfinite(period)):
        raise ConfigError("--period-ms must be finite and > 0")
    for name in ("dmax", "delta_c"):
        value = getattr(args, name, None)
        if value is not None and not (value > 0.0 and math.isfinite(value)):
            raise ConfigError(f"--{name.replace('_', '-')} must be finite "
                              "and > 0")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _validate_common(args)
        return args.func(args)
    except CliError as err:
        sys.stderr.write(json.dumps(err.payload(), sort_keys=True) + "\n")
        return err.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
