"""Deterministic planar-arm simulation with moving obstacles.

A scenario couples a capsule-chain arm with a set of translating
obstacles and a planner period T.  Each period the simulator senses
clearances once, replans with a line-of-sight random step toward the
goal, and drives the resulting trajectory at a control resolution of
T/10 while the obstacles keep moving and reflecting off the workspace
bounds.  In safe mode every driven trajectory is the certified prefix
of the plan plus a certified braking appendix, so the arm is provably
at rest before anything can touch it (contacts can only be of the
standing kind); in regular mode the raw plan is driven, which is the
baseline that moving obstacles can legitimately hit.

Static scenes additionally get an offline solver: a random tree is
grown until the goal connects, the node path is shortcut, and the
whole path is converted into one smooth trajectory that terminates at
the goal at rest.

Metrics follow the conventions of the surrounding modules: success is
distance-normalized, smoothness is the exact L1 norm of jerk, and
geometric deviation is the discrete Frechet distance between sampled
polylines.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .free_space import SafeTrajectory, build_safe_trajectory, certify_spline
from .kinematic_model import (ChainModel, DistanceReport, Obstacle,
                              batch_clearances, min_distances)
from .path_conversion import GeometricPath, path_to_trajectory, target_reached
from .spline_core import (BoundaryState, JointLimits, MultiSpline,
                          synchronize_states, uniform_limits)

__all__ = [
    "Scenario",
    "SimRecord",
    "StepPlan",
    "adjusted_success",
    "path_length",
    "discrete_frechet",
    "jerk_l1",
    "line_free",
    "step_environment",
    "orrt_step",
    "orrt_tree",
    "run_simulation",
    "solve_static",
    "small_fast_scenario",
    "large_slow_scenario",
    "static_clutter_scenario",
]

_EXACT_POS_TOL = 1e-6
_EXACT_REST_TOL = 1e-6
_REST_SPEED_FRACTION = 1e-3
_CONTACT_SPEED = 1e-6
_MAX_TARGET_SAMPLES = 100
_CLEAR_MARGIN = 0.05

Clock = Callable[[], float]


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


def _limits_tuple(limits) -> tuple:
    if isinstance(limits, JointLimits):
        raise ValueError("limits must be a sequence, one entry per joint")
    return tuple(limits)


@dataclass(frozen=True, eq=False)
class Scenario:
    """One simulated world: arm, obstacles, goal and planner settings."""

    model: ChainModel
    limits: tuple
    obstacles: tuple
    q_start: np.ndarray
    q_goal: np.ndarray
    T: float
    mode: str = "safe"
    seed: int = 0
    max_sim_time: float = 20.0
    v_obs: float = 0.0
    bounds_lo: np.ndarray = field(
        default_factory=lambda: np.array([-1.5, -1.5]))
    bounds_hi: np.ndarray = field(
        default_factory=lambda: np.array([1.5, 1.5]))
    obstacle_speed_max: float = 0.0
    obstacle_speed_min: float = 0.0
    rerandomize_on_reflect: bool = False
    reach_radius: float = 0.1
    line_step: float = 0.05
    d_max: float = 0.5
    bur_delta_t: Optional[float] = None
    delta_c: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("regular", "safe"):
            raise ValueError("mode must be 'regular' or 'safe'")
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ValueError("T must be finite and > 0")
        if self.delta_c is not None and not (self.delta_c > 0.0
                                             and math.isfinite(self.delta_c)):
            raise ValueError("delta_c must be finite and > 0")
        if not (self.max_sim_time > 0.0):
            raise ValueError("max_sim_time must be > 0")
        if self.v_obs < 0.0:
            raise ValueError("v_obs must be >= 0")
        if not (self.line_step > 0.0 and self.d_max > 0.0
                and self.reach_radius > 0.0):
            raise ValueError("line_step, d_max, reach_radius must be > 0")
        limits = _limits_tuple(self.limits)
        if len(limits) != self.model.n_joints:
            raise ValueError("one limit set per joint required")
        object.__setattr__(self, "limits", limits)
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for name in ("q_start", "q_goal"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (self.model.n_joints,) or not np.all(
                    np.isfinite(v)):
                raise ValueError(f"{name} must be a finite joint vector")
            object.__setattr__(self, name, v)
            v.flags.writeable = False
        for q, name in ((self.q_start, "q_start"), (self.q_goal, "q_goal")):
            if np.any(np.abs(q) > np.array([l.pos_max for l in limits])):
                raise ValueError(f"{name} violates position limits")
            if self.obstacles and min_distances(self.model, q,
                                                self.obstacles).collision:
                raise ValueError(f"{name} is in collision at t = 0")
        lo = np.asarray(self.bounds_lo, dtype=float)
        hi = np.asarray(self.bounds_hi, dtype=float)
        if lo.shape != (2,) or hi.shape != (2,) or np.any(lo >= hi):
            raise ValueError("workspace bounds must satisfy lo < hi")
        object.__setattr__(self, "bounds_lo", lo)
        object.__setattr__(self, "bounds_hi", hi)

    @property
    def n_joints(self) -> int:
        return self.model.n_joints

    @property
    def control_dt(self) -> float:
        return self.T / 10.0

    @property
    def certification_dt(self) -> float:
        """Node spacing for trajectory certification (override or rule)."""
        if self.bur_delta_t is not None:
            return self.bur_delta_t
        return max(self.T / 10.0, 0.01)


@dataclass(frozen=True)
class SimRecord:
    """Outcome of one simulation run.

    The trajectory-derived fields (success, times in simulated
    seconds, path length, jerk, collision type, q_end) are
    deterministic given (scenario, seed); the wall-clock fields
    (planner_compute_time, mean/p95 call time) measure the host
    machine and are excluded from the determinism contract unless the
    run used a fixed clock.
    """

    classic_success: bool
    adjusted_success: float
    algorithm_time: float
    planner_compute_time: float
    mean_call_time: float
    p95_call_time: float
    path_length: float
    jerk_l1: float
    collision_type: str
    n_periods: int
    limit_ok: bool
    q_end: tuple

    def __post_init__(self):
        if self.collision_type not in ("none", "I", "II"):
            raise ValueError("collision_type must be none, I or II")
        if not (0.0 <= self.adjusted_success <= 1.0):
            raise ValueError("adjusted_success must lie in [0, 1]")
        if self.classic_success and self.adjusted_success != 1.0:
            raise ValueError("classic success requires adjusted == 1")
        if self.classic_success and self.collision_type != "none":
            raise ValueError("classic success excludes collisions")


@dataclass(frozen=True, eq=False)
class StepPlan:
    """One planner period's decision."""

    target: Optional[np.ndarray]
    trajectory: Optional[object]      # MultiSpline or SafeTrajectory
    held: bool
    n_samples: int
    certified_horizon: float = 0.0


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def adjusted_success(q_start, q_end, q_goal) -> float:
    """Distance-normalized progress toward the goal, clamped to [0, 1].

    1 - |q_end - q_goal| / |q_start - q_goal|; a run that starts at
    the goal counts as full success.
    """
    q_start = np.asarray(q_start, dtype=float)
    q_end = np.asarray(q_end, dtype=float)
    q_goal = np.asarray(q_goal, dtype=float)
    denom = float(np.linalg.norm(q_start - q_goal))
    if denom == 0.0:
        return 1.0
    value = 1.0 - float(np.linalg.norm(q_end - q_goal)) / denom
    return min(1.0, max(0.0, value))


def path_length(points) -> float:
    """Polyline length in joint space (rad)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def discrete_frechet(poly_a, poly_b) -> float:
    """Discrete Frechet distance between two point sequences.

    Standard dynamic program over the coupling lattice: the value at
    (i, j) is the larger of the pairwise distance and the smallest of
    the three predecessor couplings.
    """
    a = np.atleast_2d(np.asarray(poly_a, dtype=float))
    b = np.atleast_2d(np.asarray(poly_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("polylines must be non-empty")
    dist = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    na, nb = dist.shape
    row = np.empty(nb)
    row[0] = dist[0, 0]
    for j in range(1, nb):
        row[j] = max(row[j - 1], dist[0, j])
    for i in range(1, na):
        prev = row.copy()
        row[0] = max(prev[0], dist[i, 0])
        for j in range(1, nb):
            row[j] = max(min(prev[j], prev[j - 1], row[j - 1]),
                         dist[i, j])
    return float(row[-1])


def _quadratic_roots_in(c2: float, c1: float, c0: float, lo: float,
                        hi: float) -> list:
    """Real roots of c2 x^2 + c1 x + c0 inside the open interval."""
    roots: list = []
    if c2 != 0.0:
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc > 0.0:
            s = math.sqrt(disc)
            roots = [(-c1 - s) / (2.0 * c2), (-c1 + s) / (2.0 * c2)]
        elif disc == 0.0:
            roots = [-c1 / (2.0 * c2)]
    elif c1 != 0.0:
        roots = [-c0 / c1]
    return sorted(r for r in roots if lo < r < hi)


def _joint_jerk_l1(coeffs, lo: float, hi: float) -> float:
    """Exact integral of |jerk| for one polynomial joint over [lo, hi].

    The jerk of a quintic is quadratic (linear for the quartic stop
    family), so the integral splits at its sign changes and each piece
    is the absolute difference of the cubic antiderivative.
    """
    if hi <= lo:
        return 0.0
    a, b, c = coeffs[0], coeffs[1], coeffs[2]

    def anti(t: float) -> float:
        return 20.0 * a * t ** 3 + 12.0 * b * t ** 2 + 6.0 * c * t

    cuts = [lo] + _quadratic_roots_in(60.0 * a, 24.0 * b, 6.0 * c, lo,
                                      hi) + [hi]
    total = 0.0
    for x0, x1 in zip(cuts, cuts[1:]):
        total += abs(anti(x1) - anti(x0))
    return total


def _component_splines(obj) -> list:
    """Time-ordered MultiSplines inside any trajectory-like object."""
    if isinstance(obj, MultiSpline):
        return [obj]
    if isinstance(obj, SafeTrajectory):
        return [obj.regular_prefix, obj.emergency]
    segments = getattr(obj, "segments", None)
    if segments is not None:
        return list(segments)
    raise TypeError(f"cannot extract splines from {type(obj).__name__}")


def jerk_l1(trajectory, t0: Optional[float] = None,
            t1: Optional[float] = None) -> float:
    """Summed exact L1 norm of jerk over all joints (rad/s^2).

    Accepts a MultiSpline, a safe trajectory, or any object exposing
    contiguous MultiSpline ``segments``.  The optional window [t0, t1]
    restricts the integral (absolute times); outside every segment the
    motion is a held rest state contributing nothing.
    """
    total = 0.0
    for ms in _component_splines(trajectory):
        lo_abs = ms.start_time if t0 is None else max(t0, ms.start_time)
        hi_abs = ms.end_time if t1 is None else min(t1, ms.end_time)
        if hi_abs <= lo_abs:
            continue
        for joint in ms.splines:
            total += _joint_jerk_l1(joint.coefficients,
                                    lo_abs - ms.start_time,
                                    hi_abs - ms.start_time)
    return total


# ---------------------------------------------------------------------------
# vectorised visibility
# ---------------------------------------------------------------------------


def _line_lattice(q_a: np.ndarray, q_b: np.ndarray,
                  step: float) -> np.ndarray:
    """Evenly spaced configurations covering the segment, ends included."""
    span = float(np.max(np.abs(q_b - q_a)))
    n_steps = max(1, int(math.ceil(span / step)))
    s = np.linspace(0.0, 1.0, n_steps + 1)
    return q_a + s[:, None] * (q_b - q_a)


def line_free(model: ChainModel, q_a, q_b, obstacles: Sequence[Obstacle],
              step: float = 0.05) -> bool:
    """Dense straight-line collision check, vectorized over samples."""
    if not obstacles:
        return True
    q_a = np.asarray(q_a, dtype=float)
    q_b = np.asarray(q_b, dtype=float)
    clear = batch_clearances(model, _line_lattice(q_a, q_b, step),
                             obstacles)
    return bool(np.min(clear) > 0.0)


def _first_visible(model: ChainModel, q_from: np.ndarray, targets,
                   obstacles: Sequence[Obstacle], step: float,
                   chunk: int = 8) -> Optional[int]:
    """Index of the first target whose connecting line is collision-free.

    Candidates with an in-collision endpoint are screened out in one
    batch; the survivors' line lattices are evaluated in small chunks
    so the common case (an early candidate is visible) stays cheap.
    """
    if not len(targets):
        return None
    if not obstacles:
        return 0
    targets = [np.asarray(t, dtype=float) for t in targets]
    end_clear = batch_clearances(model, np.asarray(targets), obstacles)
    end_ok = np.min(end_clear, axis=1) > 0.0
    for c0 in range(0, len(targets), chunk):
        idxs = [k for k in range(c0, min(c0 + chunk, len(targets)))
                if end_ok[k]]
        if not idxs:
            continue
        lattices = [_line_lattice(q_from, targets[k], step) for k in idxs]
        counts = np.array([len(lat) for lat in lattices])
        clear = batch_clearances(model, np.concatenate(lattices),
                                 obstacles)
        row_ok = np.all(clear > 0.0, axis=1)
        offsets = np.concatenate(([0], np.cumsum(counts)))
        for pos, k in enumerate(idxs):
            if bool(np.all(row_ok[offsets[pos]:offsets[pos + 1]])):
                return k
    return None


# ---------------------------------------------------------------------------
# environment
# ---------------------------------------------------------------------------


def _random_velocity(rng: np.random.Generator, speed_max: float,
                     speed_min: float = 0.0) -> np.ndarray:
    angle = rng.uniform(0.0, 2.0 * math.pi)
    speed = rng.uniform(speed_min, speed_max)
    return speed * np.array([math.cos(angle), math.sin(angle)])


def step_environment(obstacles: Sequence[Obstacle], dt: float, bounds_lo,
                     bounds_hi, rng: Optional[np.random.Generator] = None,
                     speed_max: Optional[float] = None,
                     speed_min: float = 0.0,
                     rerandomize: bool = False) -> list:
    """Translate obstacles by velocity * dt, reflecting at the bounds.

    A center component crossing a bound is mirrored back inside and
    the matching velocity component flips sign.  When ``rerandomize``
    is set (and an rng is supplied), a reflecting obstacle instead
    draws a fresh random velocity, re-oriented to point away from the
    bound it hit.
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ValueError("dt must be finite and > 0")
    lo = np.asarray(bounds_lo, dtype=float)
    hi = np.asarray(bounds_hi, dtype=float)
    out = []
    for ob in obstacles:
        center = ob.center + ob.velocity * dt
        velocity = ob.velocity.copy()
        hit_axes = []
        for axis in range(2):
            if center[axis] < lo[axis]:
                center[axis] = 2.0 * lo[axis] - center[axis]
                velocity[axis] = abs(velocity[axis])
                hit_axes.append((axis, +1.0))
            elif center[axis] > hi[axis]:
                center[axis] = 2.0 * hi[axis] - center[axis]
                velocity[axis] = -abs(velocity[axis])
                hit_axes.append((axis, -1.0))
        if hit_axes and rerandomize and rng is not None:
            cap = speed_max if speed_max is not None else ob.speed
            velocity = _random_velocity(rng, cap, min(speed_min, cap))
            for axis, sign in hit_axes:
                velocity[axis] = sign * abs(velocity[axis])
        out.append(Obstacle(ob.shape, center, ob.radius, ob.half_extents,
                            velocity))
    return out


# ---------------------------------------------------------------------------
# planner step
# ---------------------------------------------------------------------------


def _sample_target(state: BoundaryState, scenario: Scenario,
                   obstacles: Sequence[Obstacle],
                   rng: np.random.Generator) -> tuple:
    """Goal if line-of-sight, else the first visible of 100 random draws."""
    q = state.position
    if line_free(scenario.model, q, scenario.q_goal, obstacles,
                 scenario.line_step):
        return scenario.q_goal, 0
    pos_max = np.array([l.pos_max for l in scenario.limits])
    draws = rng.uniform(-pos_max, pos_max,
                        size=(_MAX_TARGET_SAMPLES, len(pos_max)))
    idx = _first_visible(scenario.model, q, draws, obstacles,
                         scenario.line_step)
    if idx is None:
        return None, _MAX_TARGET_SAMPLES
    return draws[idx], idx + 1


def _wrap_safe(plan: MultiSpline, gbur, limits,
               delta_c: Optional[float] = None) -> Optional[SafeTrajectory]:
    """Longest certified prefix whose braking appendix also certifies.

    Wrapping at the full certified terminal fails exactly when the
    chain exhausted the clearance budget there, leaving nothing for
    the stop; retreating along the bur chain trades motion horizon for
    braking room, keeping safe mode able to advance at all.
    """
    safe = build_safe_trajectory(plan, gbur, limits, delta_c)
    if safe is not None:
        return safe
    for k in range(gbur.n_burs - 1, 0, -1):
        reduced = dataclasses.replace(
            gbur, burs=gbur.burs[:k],
            terminal_node=gbur.burs[k - 1].last_node,
            terminal_time=gbur.burs[k - 1].last_time,
            reached_goal=False)
        safe = build_safe_trajectory(plan, reduced, limits, delta_c)
        if safe is not None:
            return safe
    return None


def orrt_step(state: BoundaryState, scenario: Scenario,
              obstacles: Sequence[Obstacle], report: DistanceReport,
              rng: np.random.Generator) -> StepPlan:
    """One planning period: pick a visible target and plan toward it.

    The goal is targeted whenever the straight joint-space segment to
    it is collision-free; otherwise up to 100 uniform random
    configurations are drawn and the first visible one is used.  The
    local trajectory brings the arm to rest at the target.  In safe
    mode it is certified and wrapped into a certified prefix plus
    braking appendix; a failed wrap (or no visible target, or no
    synthesizable segment) yields a hold decision, meaning the caller
    keeps driving the previous plan — whose braking appendix remains
    certified — for this period.
    """
    target, n_samples = _sample_target(state, scenario, obstacles, rng)
    if target is None:
        return StepPlan(None, None, True, n_samples)
    goal_state = BoundaryState.rest(target)
    plan = synchronize_states(state, goal_state, scenario.limits,
                              scenario.delta_c)
    if plan is None:
        return StepPlan(target, None, True, n_samples)
    if scenario.mode == "regular":
        return StepPlan(target, plan, False, n_samples,
                        certified_horizon=plan.end_time)
    result = certify_spline(plan, scenario.model, report,
                            scenario.certification_dt, scenario.v_obs)
    if result.rejected or result.gbur is None or result.gbur.is_empty:
        return StepPlan(target, None, True, n_samples)
    safe = _wrap_safe(plan, result.gbur, scenario.limits, scenario.delta_c)
    if safe is None:
        return StepPlan(target, None, True, n_samples)
    return StepPlan(target, safe, False, n_samples,
                    certified_horizon=safe.junction_time)


# ---------------------------------------------------------------------------
# simulation loop
# ---------------------------------------------------------------------------


def _limit_violated(state: BoundaryState, limits) -> bool:
    for i, lim in enumerate(limits):
        if (abs(state.position[i]) > lim.pos_max + 1e-9
                or abs(state.velocity[i]) > lim.vel_max + 1e-9
                or abs(state.acceleration[i]) > lim.acc_max + 1e-9):
            return True
    return False


def _hold_plan(state: BoundaryState, limits) -> MultiSpline:
    return synchronize_states(state, BoundaryState.rest(state.position),
                              limits)


def _goal_test(scenario: Scenario) -> Callable:
    """Arrival predicate: speed-scaled reach test, or exact rest arrival.

    The reach radius shrinks with speed, so the reach test is paired
    with a near-rest speed gate (0.1% of the joint velocity-limit
    vector norm); the second branch accepts the held end state of a
    goal-targeted segment, whose residuals sit well under 1e-6.
    """
    vel_norm_max = float(np.linalg.norm(
        [l.vel_max for l in scenario.limits]))
    rest_speed = _REST_SPEED_FRACTION * vel_norm_max

    def reached(s: BoundaryState) -> bool:
        speed = float(np.linalg.norm(s.velocity))
        if speed <= rest_speed and target_reached(
                s.position, s.velocity, scenario.q_goal,
                scenario.reach_radius, scenario.limits):
            return True
        return (float(np.linalg.norm(s.position - scenario.q_goal))
                <= _EXACT_POS_TOL and speed <= _EXACT_REST_TOL)

    return reached


def run_simulation(scenario: Scenario, clock: Optional[Clock] = None,
                   trace: Optional[list] = None) -> SimRecord:
    """Run one scenario to goal, collision or timeout.

    Per period: sense clearances once, plan (wall-clocked), then drive
    the active plan for T seconds in ten control substeps while the
    obstacles advance and reflect.  Contact during motion is a type-I
    collision; contact with the arm at rest (speed <= 1e-6) is type
    II.  On arrival the final state snaps to the goal exactly.  Pass
    ``clock=lambda: 0.0`` for bit-identical records.
    """
    if clock is None:
        clock = time.perf_counter
    rng = np.random.default_rng(scenario.seed)
    obstacles = list(scenario.obstacles)
    state = BoundaryState.rest(scenario.q_start, timestamp=0.0)
    current: object = _hold_plan(state, scenario.limits)
    dt = scenario.control_dt
    reached_test = _goal_test(scenario)

    t = 0.0
    n_periods = 0
    call_times: list = []
    executed_path = [np.array(scenario.q_start)]
    total_jerk = 0.0
    collision_type = "none"
    reached = False
    limit_ok = True

    if trace is not None:
        trace.append((t, state.position.copy(), state.velocity.copy(),
                      state.acceleration.copy()))

    while True:
        if reached_test(state):
            reached = True
            break
        if t >= scenario.max_sim_time - 1e-12:
            break
        report = min_distances(scenario.model, state.position, obstacles,
                               measured_at=t)
        if report.collision:
            collision_type = "I" if float(np.linalg.norm(
                state.velocity)) > _CONTACT_SPEED else "II"
            break
        t_call = clock()
        plan = orrt_step(state, scenario, obstacles, report, rng)
        call_times.append(clock() - t_call)
        if plan.trajectory is not None:
            current = plan.trajectory
        collided = False
        for i in range(1, 11):
            t_sub = t + dt * i
            obstacles = step_environment(
                obstacles, dt, scenario.bounds_lo, scenario.bounds_hi,
                rng=rng, speed_max=scenario.obstacle_speed_max,
                speed_min=scenario.obstacle_speed_min,
                rerandomize=scenario.rerandomize_on_reflect)
            new_state = current.state(t_sub, clip=True)
            if _limit_violated(new_state, scenario.limits):
                limit_ok = False
            total_jerk += jerk_l1(current, t_sub - dt, t_sub)
            executed_path.append(new_state.position.copy())
            if trace is not None:
                trace.append((t_sub, new_state.position.copy(),
                              new_state.velocity.copy(),
                              new_state.acceleration.copy()))
            in_contact = bool(np.min(batch_clearances(
                scenario.model, new_state.position[None, :],
                obstacles)) <= 0.0) if obstacles else False
            state = new_state
            if in_contact:
                speed = float(np.linalg.norm(new_state.velocity))
                collision_type = "I" if speed > _CONTACT_SPEED else "II"
                collided = True
                break
        t = state.timestamp
        n_periods += 1
        if collided:
            break

    q_end = np.array(scenario.q_goal) if reached else state.position
    return SimRecord(
        classic_success=reached,
        adjusted_success=1.0 if reached else adjusted_success(
            scenario.q_start, q_end, scenario.q_goal),
        algorithm_time=t,
        planner_compute_time=float(sum(call_times)),
        mean_call_time=float(np.mean(call_times)) if call_times else 0.0,
        p95_call_time=float(np.percentile(call_times, 95.0))
        if call_times else 0.0,
        path_length=path_length(executed_path),
        jerk_l1=total_jerk,
        collision_type=collision_type,
        n_periods=n_periods,
        limit_ok=limit_ok,
        q_end=tuple(float(x) for x in q_end),
    )


# ---------------------------------------------------------------------------
# static solver: random tree + conversion
# ---------------------------------------------------------------------------


def orrt_tree(scenario: Scenario, rng: np.random.Generator,
              max_iters: int = 4000) -> list:
    """Grow a random tree through static obstacles until the goal connects.

    Each iteration draws a uniform configuration, attaches it to the
    nearest tree node (among the eight closest) reachable by a
    collision-free straight segment, and then tries to connect the new
    node straight to the goal.  The returned node path (start ... goal)
    is greedily shortcut so every edge is a collision-free straight
    segment.
    """
    model, obstacles = scenario.model, scenario.obstacles
    step = scenario.line_step
    if line_free(model, scenario.q_start, scenario.q_goal, obstacles, step):
        return [np.array(scenario.q_start), np.array(scenario.q_goal)]
    nodes = [np.array(scenario.q_start)]
    parent = [-1]
    pos_max = np.array([l.pos_max for l in scenario.limits])
    for _ in range(max_iters):
        q_rand = rng.uniform(-pos_max, pos_max)
        order = np.argsort([float(np.linalg.norm(q_rand - n))
                            for n in nodes])
        attach = next((int(k) for k in order[:8]
                       if line_free(model, nodes[int(k)], q_rand,
                                    obstacles, step)), None)
        if attach is None:
            continue
        nodes.append(q_rand)
        parent.append(attach)
        if line_free(model, q_rand, scenario.q_goal, obstacles, step):
            path = [np.array(scenario.q_goal), q_rand]
            k = attach
            while k >= 0:
                path.append(nodes[k])
                k = parent[k]
            path.reverse()
            return _shortcut(model, path, obstacles, step)
    raise RuntimeError("random tree failed to connect start and goal")


def _shortcut(model: ChainModel, path: list, obstacles,
              step: float) -> list:
    out = [path[0]]
    i = 0
    while i < len(path) - 1:
        j = len(path) - 1
        while j > i + 1 and not line_free(model, path[i], path[j],
                                          obstacles, step):
            j -= 1
        out.append(path[j])
        i = j
    return out


def _static_certifier(scenario: Scenario) -> Callable:
    """Full-segment certificate against the scenario's (static) obstacles."""
    def certifier(spline: MultiSpline) -> bool:
        q0 = spline.state(spline.start_time).position
        report = min_distances(scenario.model, q0, scenario.obstacles)
        if report.collision or (len(scenario.obstacles)
                                and float(np.min(report.distances)) <= 0.0):
            return False
        return certify_spline(spline, scenario.model, report,
                              scenario.certification_dt,
                              0.0).fully_certified
    return certifier


def solve_static(scenario: Scenario, clock: Optional[Clock] = None,
                 max_iters: int = 4000) -> SimRecord:
    """Plan once through a static scene and drive the result open loop.

    A random tree finds a piecewise-straight path, conversion turns it
    into one smooth trajectory ending at the goal at rest, and the
    drive is audited at control resolution for limits and contact.
    """
    if any(ob.speed > 0.0 for ob in scenario.obstacles):
        raise ValueError("solve_static requires static obstacles")
    if clock is None:
        clock = time.perf_counter
    rng = np.random.default_rng(scenario.seed)
    t_call = clock()
    path = orrt_tree(scenario, rng, max_iters)
    trajectory = path_to_trajectory(
        GeometricPath(np.array(path)), scenario.d_max, scenario.T,
        scenario.limits, _static_certifier(scenario), mode="static",
        reach_radius=scenario.reach_radius, delta_c=scenario.delta_c)
    plan_time = clock() - t_call

    dt = scenario.control_dt
    n_samples = int(math.ceil(trajectory.duration / dt)) + 1
    times = trajectory.start_time + dt * np.arange(n_samples)
    states = [trajectory.state(min(float(tt), trajectory.end_time))
              for tt in times]
    end_state = trajectory.end_state()
    if abs(float(times[-1]) - trajectory.end_time) > 1e-12:
        states.append(end_state)
    limit_ok = not any(_limit_violated(s, scenario.limits)
                       for s in states)
    collision_type = "none"
    if scenario.obstacles:
        clear = batch_clearances(scenario.model,
                                 np.array([s.position for s in states]),
                                 scenario.obstacles)
        bad = np.where(np.min(clear, axis=1) <= 0.0)[0]
        if bad.size:
            s = states[int(bad[0])]
            collision_type = "I" if float(np.linalg.norm(
                s.velocity)) > _CONTACT_SPEED else "II"

    reached = (collision_type == "none"
               and _goal_test(scenario)(end_state))
    q_end = np.array(scenario.q_goal) if reached else end_state.position
    return SimRecord(
        classic_success=reached,
        adjusted_success=1.0 if reached else adjusted_success(
            scenario.q_start, q_end, scenario.q_goal),
        algorithm_time=trajectory.duration,
        planner_compute_time=plan_time,
        mean_call_time=plan_time,
        p95_call_time=plan_time,
        path_length=path_length([s.position for s in states]),
        jerk_l1=jerk_l1(trajectory),
        collision_type=collision_type,
        n_periods=1,
        limit_ok=limit_ok,
        q_end=tuple(float(x) for x in q_end),
    )


# ---------------------------------------------------------------------------
# scenario factories
# ---------------------------------------------------------------------------


def _default_model() -> ChainModel:
    return ChainModel([0.5, 0.5], 0.02)


def _default_limits(n: int):
    return uniform_limits(n, 2.0 * math.pi, math.pi, 20.0, 500.0)


def _clear_config(rng: np.random.Generator, model: ChainModel, obstacles,
                  pos_max: np.ndarray, margin: float,
                  max_tries: int = 400) -> np.ndarray:
    for _ in range(max_tries):
        q = rng.uniform(-pos_max, pos_max)
        if not obstacles:
            return q
        rep = min_distances(model, q, obstacles)
        if float(np.min(rep.distances)) >= margin:
            return q
    raise RuntimeError("could not draw a clear configuration")


def _clear_obstacle(rng: np.random.Generator, model: ChainModel, configs,
                    factory, margin: float,
                    max_tries: int = 400) -> Obstacle:
    for _ in range(max_tries):
        ob = factory()
        if all(float(np.min(min_distances(model, q, [ob]).distances))
               >= margin for q in configs):
            return ob
    raise RuntimeError("could not place a clear obstacle")


def small_fast_scenario(seed: int, T: float = 0.05, mode: str = "safe",
                        adversarial: bool = False,
                        **overrides) -> Scenario:
    """Ten small spheres darting through the workspace (speeds to 1.6).

    Obstacles re-draw a random velocity whenever they reflect off the
    workspace bounds; start and goal keep a 0.05 m clearance margin at
    t = 0.  ``adversarial`` pins every obstacle speed (including
    reflection redraws) to the 1.6 bound.
    """
    rng = np.random.default_rng((seed, 1))
    model = _default_model()
    limits = _default_limits(model.n_joints)
    pos_max = np.array([min(l.pos_max, math.pi) for l in limits])
    q_start = rng.uniform(-pos_max, pos_max)
    q_goal = rng.uniform(-pos_max, pos_max)
    while float(np.linalg.norm(q_goal - q_start)) < 1.0:
        q_goal = rng.uniform(-pos_max, pos_max)
    speed_max = 1.6
    speed_min = speed_max if adversarial else 0.2
    obstacles = []
    for _ in range(10):
        def make():
            return Obstacle.sphere(
                rng.uniform(-1.35, 1.35, 2),
                float(rng.uniform(0.06, 0.12)),
                velocity=_random_velocity(rng, speed_max, speed_min))
        obstacles.append(_clear_obstacle(rng, model, (q_start, q_goal),
                                         make, _CLEAR_MARGIN))
    base = dict(model=model, limits=limits, obstacles=tuple(obstacles),
                q_start=q_start, q_goal=q_goal, T=T, mode=mode, seed=seed,
                max_sim_time=20.0, v_obs=speed_max,
                obstacle_speed_max=speed_max,
                obstacle_speed_min=speed_min,
                rerandomize_on_reflect=True)
    base.update(overrides)
    return Scenario(**base)


def large_slow_scenario(seed: int, T: float = 0.05, mode: str = "safe",
                        adversarial: bool = False,
                        **overrides) -> Scenario:
    """Four large boxes drifting slowly (speeds to 0.3) from fixed posts.

    ``adversarial`` pins every box speed to the 0.3 bound.
    """
    rng = np.random.default_rng((seed, 2))
    model = _default_model()
    limits = _default_limits(model.n_joints)
    speed_max = 0.3
    speed_min = speed_max if adversarial else 0.05
    posts = np.array([[0.95, 0.95], [-0.95, 0.95], [-0.95, -0.95],
                      [0.95, -0.95]])
    obstacles = tuple(
        Obstacle.box(c, (0.25, 0.25),
                     velocity=_random_velocity(rng, speed_max, speed_min))
        for c in posts)
    pos_max = np.array([min(l.pos_max, math.pi) for l in limits])
    q_start = _clear_config(rng, model, obstacles, pos_max, _CLEAR_MARGIN)
    q_goal = _clear_config(rng, model, obstacles, pos_max, _CLEAR_MARGIN)
    while float(np.linalg.norm(q_goal - q_start)) < 1.0:
        q_goal = _clear_config(rng, model, obstacles, pos_max,
                               _CLEAR_MARGIN)
    base = dict(model=model, limits=limits, obstacles=obstacles,
                q_start=q_start, q_goal=q_goal, T=T, mode=mode, seed=seed,
                max_sim_time=20.0, v_obs=speed_max,
                obstacle_speed_max=speed_max,
                obstacle_speed_min=speed_min,
                rerandomize_on_reflect=False)
    base.update(overrides)
    return Scenario(**base)


def _grid_connected(model: ChainModel, obstacles, q_start, q_goal,
                    pos_max: np.ndarray, cells: int = 64) -> bool:
    """Breadth-first connectivity of start and goal on a C-space grid."""
    axes = [np.linspace(-m, m, cells) for m in pos_max]
    grid = np.stack(np.meshgrid(axes[0], axes[1], indexing="ij"),
                    axis=-1).reshape(-1, 2)
    clear = batch_clearances(model, grid, obstacles)
    free = (np.min(clear, axis=1) > 0.0).reshape(cells, cells)

    def cell_of(q):
        idx = []
        for axis, m in enumerate(pos_max):
            k = int(round((q[axis] + m) / (2.0 * m) * (cells - 1)))
            idx.append(min(max(k, 0), cells - 1))
        return tuple(idx)

    start, goal = cell_of(q_start), cell_of(q_goal)
    if not (free[start] and free[goal]):
        return False
    seen = np.zeros_like(free)
    seen[start] = True
    queue = [start]
    while queue:
        i, j = queue.pop()
        if (i, j) == goal:
            return True
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ni, nj = i + di, j + dj
            if 0 <= ni < cells and 0 <= nj < cells and free[ni, nj] \
                    and not seen[ni, nj]:
                seen[ni, nj] = True
                queue.append((ni, nj))
    return False


def static_clutter_scenario(seed: int, T: float = 0.05,
                            mode: str = "regular", n_obstacles: int = 5,
                            **overrides) -> Scenario:
    """Static spheres with grid-checked start-goal connectivity.

    Scenes are redrawn until a 64x64 joint-space occupancy grid
    connects start and goal, so a sampling planner always has a
    corridor to find.
    """
    rng = np.random.default_rng((seed, 3))
    model = _default_model()
    limits = _default_limits(model.n_joints)
    pos_max = np.array([min(l.pos_max, math.pi) for l in limits])
    for _ in range(200):
        q_start = rng.uniform(-pos_max, pos_max)
        q_goal = rng.uniform(-pos_max, pos_max)
        if float(np.linalg.norm(q_goal - q_start)) < 1.0:
            continue
        try:
            obstacles = tuple(
                _clear_obstacle(
                    rng, model, (q_start, q_goal),
                    lambda: Obstacle.sphere(
                        rng.uniform(-1.35, 1.35, 2),
                        float(rng.uniform(0.08, 0.16))),
                    _CLEAR_MARGIN, max_tries=100)
                for _ in range(n_obstacles))
        except RuntimeError:
            continue
        if _grid_connected(model, obstacles, q_start, q_goal, pos_max):
            base = dict(model=model, limits=limits, obstacles=obstacles,
                        q_start=q_start, q_goal=q_goal, T=T, mode=mode,
                        seed=seed, max_sim_time=30.0, v_obs=0.0,
                        obstacle_speed_max=0.0)
            base.update(overrides)
            return Scenario(**base)
    raise RuntimeError("could not draw a connected static scene")
