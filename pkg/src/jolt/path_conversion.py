"""Waypoint paths to jerk-limited spline trajectories.

A geometric path is first reshaped — collinear interior nodes removed,
long gaps subdivided — then converted into a chain of synchronized
splines.  Interior nodes that sit on straight runs ("through" nodes)
carry a velocity estimate along the run so the robot does not stop at
them; corner and terminal nodes are visited at rest.  Where the
certifier allows it, corners are cut: the conversion first tries the
direct two-nodes-ahead spline, then searches, by bisecting the
departure time along the corner-bound carrier segment, for the
earliest departure whose spline to the node after the corner is still
certified.  When nothing certifies, the carrier segment itself is kept
— it traces the polyline exactly, because a spline whose boundary
velocities are parallel to the node gap degenerates to the straight
segment — so the worst case reproduces the input path geometrically.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .spline_core import BoundaryState, JointLimits, MultiSpline, \
    synchronize_states

__all__ = [
    "GeometricPath",
    "Trajectory",
    "simplify_and_densify",
    "rest_node_mask",
    "estimate_waypoint_velocity",
    "interpolating_spline_bisection",
    "path_to_trajectory",
    "target_reached",
]

_COLLINEAR_TOL = 1e-9
_MIN_SUBDIVISION_GAP = 1e-6
_BISECTION_GUARD = 200

Certifier = Callable[[MultiSpline], bool]


def _limits_list(limits, n: int) -> list:
    if isinstance(limits, JointLimits):
        return [limits] * n
    lims = list(limits)
    if len(lims) != n:
        raise ValueError(f"expected {n} joint limits, got {len(lims)}")
    return lims


def _vel_max_vector(limits, n: int) -> np.ndarray:
    return np.array([l.vel_max for l in _limits_list(limits, n)])


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GeometricPath:
    """Ordered waypoints in joint space with a provenance note.

    Consecutive nodes must be distinct; the first and last nodes are
    the start and goal.  Straight-line collision-freeness between
    consecutive nodes is the supplier's contract, not re-checked here.
    """

    nodes: np.ndarray          # (N, n)
    provenance: str = ""

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[0] < 2 or nodes.shape[1] < 1:
            raise ValueError("path needs a (N>=2, n>=1) node array")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("path nodes must be finite")
        gaps = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
        if np.any(gaps == 0.0):
            raise ValueError("consecutive path nodes must be distinct")
        object.__setattr__(self, "nodes", nodes)
        nodes.flags.writeable = False

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_joints(self) -> int:
        return self.nodes.shape[1]

    @property
    def start(self) -> np.ndarray:
        return self.nodes[0]

    @property
    def goal(self) -> np.ndarray:
        return self.nodes[-1]

    def length(self) -> float:
        """Total Euclidean joint-space length of the polyline."""
        return float(np.sum(np.linalg.norm(np.diff(self.nodes, axis=0),
                                           axis=1)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Contiguous spline segments, optionally tagged as safe.

    Junctions are validated to be continuous in position, velocity and
    acceleration within 1e-8 and contiguous in time within 1e-9.
    """

    segments: tuple
    tag: str = "regular"

    def __post_init__(self):
        if not self.segments:
            raise ValueError("trajectory needs at least one segment")
        if self.tag not in ("regular", "safe"):
            raise ValueError("tag must be 'regular' or 'safe'")
        for prev, cur in zip(self.segments, self.segments[1:]):
            if abs(cur.start_time - prev.end_time) > 1e-9:
                raise ValueError("segments must be contiguous in time")
            a = prev.state(prev.end_time)
            b = cur.state(cur.start_time)
            jump = max(np.max(np.abs(a.position - b.position)),
                       np.max(np.abs(a.velocity - b.velocity)),
                       np.max(np.abs(a.acceleration - b.acceleration)))
            if jump > 1e-8:
                raise ValueError(f"junction discontinuity {jump:.3e}")

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def n_joints(self) -> int:
        return self.segments[0].n_joints

    @property
    def start_time(self) -> float:
        return self.segments[0].start_time

    @property
    def end_time(self) -> float:
        return self.segments[-1].end_time

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time

    def state(self, t: float, clip: bool = False) -> BoundaryState:
        """Boundary state at absolute time t across all segments."""
        ends = [seg.end_time for seg in self.segments]
        idx = min(bisect_right(ends, t), len(self.segments) - 1)
        return self.segments[idx].state(t, clip=clip)

    def end_state(self) -> BoundaryState:
        return self.segments[-1].state(self.end_time)


# ---------------------------------------------------------------------------
# path shaping
# ---------------------------------------------------------------------------


def _on_segment(a: np.ndarray, b: np.ndarray, c: np.ndarray,
                tol: float = _COLLINEAR_TOL) -> bool:
    """True when b lies on the segment a->c within tol."""
    u = c - a
    denom = float(u @ u)
    if denom <= tol * tol:
        return False
    s = float((b - a) @ u) / denom
    if s < 0.0 or s > 1.0:
        return False
    return float(np.linalg.norm(b - (a + s * u))) <= tol


def simplify_and_densify(path: GeometricPath,
                         d_max: float) -> GeometricPath:
    """Drop redundant interior nodes, then cap every gap at d_max.

    Interior nodes lying on the segment between their surviving
    neighbours (residual <= 1e-9) are removed; afterwards every gap
    longer than d_max is split into equal parts by evenly spaced
    inserted nodes, so consecutive nodes end up at most d_max apart
    while the polyline's shape is unchanged.
    """
    if not (d_max > 0.0 and math.isfinite(d_max)):
        raise ValueError("d_max must be finite and > 0")
    nodes = path.nodes
    keep = [0]
    for j in range(1, nodes.shape[0] - 1):
        if not _on_segment(nodes[keep[-1]], nodes[j], nodes[j + 1]):
            keep.append(j)
    keep.append(nodes.shape[0] - 1)
    slim = nodes[keep]
    out = [slim[0]]
    for a, b in zip(slim, slim[1:]):
        pieces = max(1, int(math.ceil(
            float(np.linalg.norm(b - a)) / d_max - 1e-12)))
        for i in range(1, pieces + 1):
            out.append(a + (i / pieces) * (b - a))
    return GeometricPath(np.array(out), path.provenance)


def rest_node_mask(nodes: np.ndarray,
                   tol: float = _COLLINEAR_TOL) -> np.ndarray:
    """Which nodes must be visited at rest: endpoints and corners.

    Interior nodes collinear with their neighbours sit on a straight
    run and may be passed through with velocity; all others anchor a
    direction change and carry zero velocity and acceleration.
    """
    nodes = np.asarray(nodes, dtype=float)
    mask = np.ones(nodes.shape[0], dtype=bool)
    for j in range(1, nodes.shape[0] - 1):
        if _on_segment(nodes[j - 1], nodes[j], nodes[j + 1], tol):
            mask[j] = False
    return mask


def estimate_waypoint_velocity(q_k, q_k1, T: float, limits) -> np.ndarray:
    """Pass-through velocity at a straight-run node, aimed at the next.

    The crossing time is T stretched just enough to keep every
    component within its velocity limit: t = max(T, max_i |dq_i| /
    vel_max_i), so the binding joint moves exactly at its limit when
    the gap is wide and at dq/T otherwise.
    """
    if not (T > 0.0 and math.isfinite(T)):
        raise ValueError("T must be finite and > 0")
    q_k = np.asarray(q_k, dtype=float)
    dq = np.asarray(q_k1, dtype=float) - q_k
    vel_max = _vel_max_vector(limits, dq.shape[0])
    t = max(T, float(np.max(np.abs(dq) / vel_max)))
    return dq / t


def target_reached(q_curr, qdot_curr, q_target, R: float,
                   limits) -> bool:
    """Speed-scaled arrival test around a tracked target.

    The acceptance radius grows with current speed — n R |qdot| /
    |qdot_max| — so a fast pass-by hands over early while an exact
    stop is required when at rest (zero radius).  An exact position
    match always counts as reached.
    """
    if not (R > 0.0 and math.isfinite(R)):
        raise ValueError("R must be finite and > 0")
    q_curr = np.asarray(q_curr, dtype=float)
    q_target = np.asarray(q_target, dtype=float)
    if np.array_equal(q_curr, q_target):
        return True
    n = q_curr.shape[0]
    vel_norm = float(np.linalg.norm(_vel_max_vector(limits, n)))
    radius = n * R * float(np.linalg.norm(qdot_curr)) / vel_norm
    return float(np.linalg.norm(q_curr - q_target)) <= radius


# ---------------------------------------------------------------------------
# pass-through speed capping
# ---------------------------------------------------------------------------


def _leaves_chord(segment: MultiSpline, q_a: np.ndarray, q_b: np.ndarray,
                  tol: float = _COLLINEAR_TOL, samples: int = 257) -> bool:
    """True when the segment strays off the chord q_a -> q_b.

    Checks both cross-track deviation and over/under-run of the chord
    span, densely sampled.  Used to keep uncertified carrier segments
    exactly on the polyline.
    """
    u = q_b - q_a
    length = float(np.linalg.norm(u))
    u_hat = u / length
    ts = np.linspace(segment.start_time, segment.end_time, samples)
    pos = np.array([segment.state(t, clip=True).position for t in ts])
    rel = pos - q_a
    s = rel @ u_hat
    cross = np.linalg.norm(rel - np.outer(s, u_hat), axis=1)
    return (float(s.min()) < -tol or float(s.max()) > length + tol
            or float(cross.max()) > tol)


def _capped_velocities(nodes: np.ndarray, vels: np.ndarray, limits,
                       delta_c) -> np.ndarray:
    """Reduce pass-through speeds until every hop stays on its chord.

    The jerk bound can force the minimum-duration segment between two
    moving node states to swing beyond the chord (most visibly on the
    first and last hops of a straight run, where speed is gained or
    shed).  Halving the faster endpoint's speed until the realized
    segment is chord-exact restores the geometric-coincidence
    guarantee; at-rest hops are exactly monotone, so the relaxation
    always terminates.
    """
    v = np.array(vels, dtype=float)
    zeros = np.zeros(nodes.shape[1])
    for _ in range(60 * nodes.shape[0]):
        dirty = False
        for j in range(nodes.shape[0] - 1):
            a = BoundaryState(nodes[j], v[j], zeros)
            b = BoundaryState(nodes[j + 1], v[j + 1], zeros)
            sp = synchronize_states(a, b, limits, delta_c)
            if sp is not None and not _leaves_chord(sp, nodes[j],
                                                    nodes[j + 1]):
                continue
            dirty = True
            tgt = j if (np.linalg.norm(v[j])
                        > np.linalg.norm(v[j + 1])) else j + 1
            v[tgt] *= 0.5
            if np.linalg.norm(v[tgt]) < 1e-12:
                v[tgt] = 0.0
        if not dirty:
            return v
    raise RuntimeError("pass-through speed capping did not converge")


# ---------------------------------------------------------------------------
# corner interpolation
# ---------------------------------------------------------------------------


def interpolating_spline_bisection(carrier: MultiSpline,
                                   target: BoundaryState,
                                   threshold: float,
                                   certifier: Certifier,
                                   limits,
                                   delta_c: Optional[float] = None
                                   ) -> Optional[MultiSpline]:
    """Earliest certified departure from a carrier toward a target.

    Probes departure times on the carrier by bisection, starting at
    the midpoint of its span: a certified candidate (built from the
    carrier's full state at the probe time) moves the probe earlier,
    a failed one later.  Stops when the probe step falls to the
    threshold and returns the last certified candidate, whose
    start_time is the chosen departure; None when no probe certified
    (the corner must then be visited at rest).
    """
    if not (threshold > 0.0 and math.isfinite(threshold)):
        raise ValueError("threshold must be finite and > 0")
    lo, hi = carrier.start_time, carrier.end_time
    t = 0.5 * (lo + hi)
    best: Optional[MultiSpline] = None
    for _ in range(_BISECTION_GUARD):
        candidate = synchronize_states(carrier.state(t), target, limits,
                                       delta_c)
        if candidate is not None and certifier(candidate):
            best = candidate
            hi = t
        else:
            lo = t
        t_next = 0.5 * (lo + hi)
        if abs(t_next - t) <= threshold:
            break
        t = t_next
    return best


# ---------------------------------------------------------------------------
# conversion
# ---------------------------------------------------------------------------


def _connect_robust(cur: BoundaryState, q_to: np.ndarray,
                    v_to: np.ndarray, limits, delta_c) -> list:
    """Segments from cur to the node, degrading gracefully.

    Tries the node's pass-through velocity first, then a full stop at
    the node, then recursive midpoint subdivision with rest stops —
    rest-to-rest segments always synthesize, so only the leading
    moving-start piece can need splitting.
    """
    target = BoundaryState(q_to, v_to, np.zeros_like(v_to))
    sp = synchronize_states(cur, target, limits, delta_c)
    if sp is not None:
        return [sp]
    if np.any(v_to != 0.0):
        target = BoundaryState.rest(q_to)
        sp = synchronize_states(cur, target, limits, delta_c)
        if sp is not None:
            return [sp]
    gap = float(np.linalg.norm(q_to - cur.position))
    if gap < _MIN_SUBDIVISION_GAP:
        raise RuntimeError(
            "no synchronized segment despite vanishing gap "
            f"(|dq| = {gap:.3e})")
    mid = 0.5 * (cur.position + q_to)
    first = _connect_robust(cur, mid, np.zeros_like(mid), limits, delta_c)
    cur2 = first[-1].state(first[-1].end_time)
    return first + _connect_robust(cur2, q_to, np.zeros_like(mid), limits,
                                   delta_c)


def path_to_trajectory(path: GeometricPath, d_max: float, T: float,
                       limits, certifier: Certifier,
                       mode: str = "static", *,
                       threshold: Optional[float] = None,
                       reach_radius: float = 0.1,
                       delta_c: Optional[float] = None,
                       start_time: float = 0.0) -> Trajectory:
    """Convert a waypoint path into a contiguous spline trajectory.

    Static mode walks the reshaped node list with two-ahead corner
    cutting: the direct spline to the node after next is kept when the
    certifier accepts it; otherwise the carrier to the next node is
    synthesized and a certified interpolating spline is searched by
    departure-time bisection (threshold defaults to T/100) — failing
    that, the carrier alone is kept and the corner is visited at rest.
    Pass-through speeds are pre-capped so that every uncertified
    carrier traces its polyline chord exactly; only certified
    (corner-cutting) segments may deviate from the input path.  The
    goal is always reached at rest.

    Dynamic single-target mode tracks one node at a time, handing over
    to the next node as soon as the speed-scaled arrival test fires
    (radius parameter ``reach_radius``); the certifier is not consulted
    — per-tick certification is the caller's loop's job.
    """
    if mode not in ("static", "dynamic-single-target"):
        raise ValueError("mode must be 'static' or 'dynamic-single-target'")
    dense = simplify_and_densify(path, d_max)
    nodes = dense.nodes
    n_nodes, n = nodes.shape
    at_rest = rest_node_mask(nodes)
    vels = np.zeros_like(nodes)
    for j in range(n_nodes - 1):
        if not at_rest[j]:
            vels[j] = estimate_waypoint_velocity(nodes[j], nodes[j + 1],
                                                 T, limits)
    if threshold is None:
        threshold = T / 100.0
    if mode == "static":
        vels = _capped_velocities(nodes, vels, limits, delta_c)

    segments: list = []
    cur = BoundaryState.rest(nodes[0], timestamp=start_time)

    def advance(pieces):
        nonlocal cur
        segments.extend(pieces)
        cur = pieces[-1].state(pieces[-1].end_time)

    if mode == "dynamic-single-target":
        for j in range(1, n_nodes):
            terminal = j == n_nodes - 1
            v_to = np.zeros(n) if terminal else vels[j]
            pieces = _connect_robust(cur, nodes[j], v_to, limits, delta_c)
            if not terminal:
                pieces[-1] = _truncate_at_reach(pieces[-1], nodes[j],
                                                reach_radius, limits)
            advance(pieces)
        return Trajectory(tuple(segments), "regular")

    k = 0
    while k < n_nodes - 2:
        target2 = BoundaryState(nodes[k + 2], vels[k + 2], np.zeros(n))
        direct = synchronize_states(cur, target2, limits, delta_c)
        if direct is not None and certifier(direct):
            advance([direct])
            k += 2
            continue
        pieces = _connect_robust(cur, nodes[k + 1], vels[k + 1], limits,
                                 delta_c)
        if len(pieces) == 1:
            cand = interpolating_spline_bisection(pieces[0], target2,
                                                  threshold, certifier,
                                                  limits, delta_c)
            if cand is not None:
                prefix = pieces[0].truncated(cand.start_time
                                             - pieces[0].start_time)
                advance([prefix, cand])
                k += 2
                continue
        advance(pieces)
        k += 1
    if k == n_nodes - 2:
        advance(_connect_robust(cur, nodes[-1], np.zeros(n), limits,
                                delta_c))
    return Trajectory(tuple(segments), "regular")


def _truncate_at_reach(segment: MultiSpline, q_target: np.ndarray,
                       R: float, limits,
                       samples: int = 256) -> MultiSpline:
    """Cut a tracking segment at the first speed-scaled arrival time."""
    for i in range(1, samples + 1):
        t = segment.start_time + segment.duration * i / samples
        s = segment.state(t, clip=True)
        if target_reached(s.position, s.velocity, q_target, R, limits):
            return segment.truncated(t - segment.start_time)
    return segment
