"""Collision-free volume certification around spline trajectories.

A *bubble* is a diamond-shaped joint-space volume around a root
configuration, built from one set of per-link obstacle clearances: any
configuration whose weighted joint displacement stays below the stored
clearances is guaranteed collision-free, because the weights are the
enclosing radii that bound workspace displacement (see
``kinematic_model``).  Straight segments from the root to member
configurations ("spines") are therefore collision-free as a whole.

A *bur* walks a spline's sampled nodes in time order, keeping the
spines that stay inside the root's bubble; chaining burs — each new
root is the previous bur's last node, with clearances refreshed
against the stored separating planes — certifies a whole segment or a
prefix of it.  For obstacles moving at a bounded speed the clearances
shrink linearly with elapsed time since sensing, which turns the same
membership test into a time-aware certificate.

``build_safe_trajectory`` welds a certified prefix to a synchronized
braking segment so that the robot always owns a fully certified way to
come to rest.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .kinematic_model import ChainModel, DistanceReport, distances_to_planes
from .spline_core import BoundaryState, MultiSpline, evaluate_multi, \
    synchronize_stop

__all__ = [
    "Bubble",
    "Bur",
    "GBur",
    "CertStatus",
    "CertifyResult",
    "SafeTrajectory",
    "bubble_contains",
    "spine_max_parameter",
    "compute_bur",
    "compute_gbur",
    "certify_spline",
    "build_safe_trajectory",
]

_TIME_EPS = 1e-12


def _position(spline: MultiSpline, t: float) -> np.ndarray:
    """Joint positions at absolute time t (clamped to the span)."""
    return evaluate_multi(spline, t - spline.start_time, 0, clip=True)


# ---------------------------------------------------------------------------
# bubbles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Bubble:
    """Free-space volume around ``root`` backed by one measurement.

    ``distances[l]`` is link l's obstacle clearance at the root (or its
    plane-based underestimate), ``birth_time`` the sensing timestamp the
    clearances count from when obstacles move.
    """

    root: np.ndarray
    distances: np.ndarray
    birth_time: float = 0.0

    def __post_init__(self):
        root = np.asarray(self.root, dtype=float)
        d = np.asarray(self.distances, dtype=float)
        if root.ndim != 1 or d.shape != root.shape:
            raise ValueError("root and distances must be matching vectors")
        if np.any(np.isnan(d)) or np.any(d <= 0.0):
            raise ValueError("bubble clearances must be > 0 at creation")
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "distances", d)

    @property
    def n_joints(self) -> int:
        return self.root.shape[0]


def bubble_contains(bubble: Bubble, radii, y, query_time: Optional[float]
                    = None, v_obs: float = 0.0) -> bool:
    """Membership of configuration y, optionally time-expanded.

    True iff for every link l the partial displacement bound
    sum_{i<=l} radii[i] * |y_i - root_i| stays within the link's
    clearance, reduced by v_obs * (query_time - birth_time) when
    obstacles may move.  query_time must not precede the birth time;
    it defaults to the birth time (the static test, v_obs irrelevant).
    """
    y = np.asarray(y, dtype=float)
    r = np.asarray(radii, dtype=float)
    reach = np.cumsum(r * np.abs(y - bubble.root))
    slack = bubble.distances
    if v_obs != 0.0 and query_time is not None:
        slack = slack - v_obs * (query_time - bubble.birth_time)
    return bool(np.all(reach <= slack))


def spine_max_parameter(q0, qf, d_c: float, radii) -> float:
    """Largest s in [0, 1] with q0 + s (qf - q0) still certified.

    The weighted displacement grows linearly along the segment, so the
    crossing parameter is d_c over the full-segment displacement bound,
    clamped to [0, 1].  A zero-length segment is wholly inside (1.0).
    """
    q0 = np.asarray(q0, dtype=float)
    qf = np.asarray(qf, dtype=float)
    r = np.asarray(radii, dtype=float)
    denom = float(np.sum(r * np.abs(qf - q0)))
    if denom == 0.0:
        return 1.0
    if d_c <= 0.0:
        return 0.0
    return min(d_c / denom, 1.0)


# ---------------------------------------------------------------------------
# burs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Bur:
    """Accepted spines from one root along a spline's node sequence.

    ``nodes``/``node_times`` hold the accepted endpoints in walk order
    (absolute times).  An empty bur (no accepted node) keeps only the
    root.  Every stored node passed the root bubble's membership test,
    so each straight spine root -> node is collision-free.
    """

    root: np.ndarray
    root_time: float
    nodes: tuple = ()
    node_times: tuple = ()
    bubble: Optional[Bubble] = None

    def __post_init__(self):
        if len(self.nodes) != len(self.node_times):
            raise ValueError("nodes and node_times must align")
        prev = self.root_time
        for t in self.node_times:
            if t < prev - _TIME_EPS:
                raise ValueError("node times must not decrease")
            prev = t

    @property
    def is_empty(self) -> bool:
        return not self.nodes

    @property
    def last_node(self) -> np.ndarray:
        return self.nodes[-1] if self.nodes else self.root

    @property
    def last_time(self) -> float:
        return self.node_times[-1] if self.nodes else self.root_time

    @property
    def spines(self) -> tuple:
        """(root, endpoint) pairs, one per accepted node."""
        return tuple((self.root, node) for node in self.nodes)


def compute_bur(spline: MultiSpline, delta_t: float, distances, radii,
                v_obs: float = 0.0, root_time: Optional[float] = None,
                birth_time: Optional[float] = None) -> Bur:
    """Walk the spline's nodes from one root while membership holds.

    Nodes sit at root_time + k delta_t (k >= 1) with the segment end
    appended, all in absolute time; the walk stops at the first node
    falling outside the root's bubble.  Non-positive clearances yield
    an empty bur immediately (no bubble exists).  ``birth_time`` is the
    sensing timestamp the moving-obstacle reduction counts from; it
    defaults to the root time.
    """
    if not (delta_t > 0.0 and math.isfinite(delta_t)):
        raise ValueError("delta_t must be finite and > 0")
    t_root = spline.start_time if root_time is None else float(root_time)
    t0 = t_root if birth_time is None else float(birth_time)
    d = np.asarray(distances, dtype=float)
    r = np.asarray(radii, dtype=float)
    q_root = _position(spline, t_root)
    if np.any(np.isnan(d)) or np.any(d <= 0.0):
        return Bur(q_root, t_root)
    bubble = Bubble(q_root, d, t0)
    t_end = spline.end_time
    times = []
    k = 1
    while t_root + k * delta_t < t_end - _TIME_EPS:
        times.append(t_root + k * delta_t)
        k += 1
    times.append(t_end)
    nodes: list = []
    accepted: list = []
    for t in times:
        y = _position(spline, t)
        if not bubble_contains(bubble, r, y, t, v_obs):
            break
        nodes.append(y)
        accepted.append(t)
    return Bur(q_root, t_root, tuple(nodes), tuple(accepted), bubble)


# ---------------------------------------------------------------------------
# generalized burs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GBur:
    """Chained burs along one spline, plus the certification context.

    Each bur is rooted at the previous bur's last node; the terminal
    node is the farthest certified configuration.  ``reached_goal``
    marks whether the walk arrived at the spline's end.  The model,
    distance report, obstacle speed bound and node spacing that built
    the chain ride along so downstream assembly can certify follow-up
    segments against the very same measurement.
    """

    burs: tuple
    terminal_node: np.ndarray
    terminal_time: float
    reached_goal: bool
    model: ChainModel
    report: DistanceReport
    v_obs: float = 0.0
    delta_t: float = field(default=0.0)

    def __post_init__(self):
        prev = None
        for bur in self.burs:
            if bur.is_empty:
                raise ValueError("chained burs must be non-empty")
            if prev is not None:
                if not np.array_equal(bur.root, prev.last_node) or \
                        bur.root_time < prev.last_time - _TIME_EPS:
                    raise ValueError("bur roots must chain last nodes")
            prev = bur

    @property
    def n_burs(self) -> int:
        return len(self.burs)

    @property
    def stalled(self) -> bool:
        return not self.reached_goal

    @property
    def is_empty(self) -> bool:
        return not self.burs


def compute_gbur(spline: MultiSpline, model: ChainModel,
                 report: DistanceReport, delta_t: float,
                 v_obs: float = 0.0,
                 initial_distances=None) -> GBur:
    """Chain burs along the spline from one distance measurement.

    The first bur uses the report's per-link clearances (valid at the
    spline's root, where the measurement was taken); every later root
    refreshes its clearances against the stored separating planes
    only — obstacle geometry is never re-measured.  Pass
    ``initial_distances`` when the spline starts somewhere other than
    the measured configuration (plane-based underestimates there).
    The walk ends at the spline's end or at the first empty bur.
    """
    radii = model.enclosing_radii
    t_sense = report.measured_at
    d = report.distances if initial_distances is None \
        else np.asarray(initial_distances, dtype=float)
    cur_time = spline.start_time
    t_end = spline.end_time
    burs = []
    reached = False
    while True:
        bur = compute_bur(spline, delta_t, d, radii, v_obs,
                          root_time=cur_time, birth_time=t_sense)
        if bur.is_empty:
            break
        burs.append(bur)
        cur_time = bur.last_time
        if cur_time >= t_end - _TIME_EPS:
            reached = True
            break
        d = distances_to_planes(model, bur.last_node, report)
    if burs:
        terminal = burs[-1].last_node
        t_term = burs[-1].last_time
    else:
        terminal = _position(spline, spline.start_time)
        t_term = spline.start_time
    return GBur(tuple(burs), terminal, t_term, reached, model, report,
                float(v_obs), float(delta_t))


# ---------------------------------------------------------------------------
# certification verdicts
# ---------------------------------------------------------------------------


class CertStatus(enum.Enum):
    FULLY_CERTIFIED = "fully_certified"
    CERTIFIED_PREFIX = "certified_prefix"
    REJECTED = "rejected"


@dataclass(frozen=True, eq=False)
class CertifyResult:
    """Outcome of certifying one spline: verdict, horizon, evidence."""

    status: CertStatus
    t_cert: float
    gbur: GBur

    @property
    def fully_certified(self) -> bool:
        return self.status is CertStatus.FULLY_CERTIFIED

    @property
    def rejected(self) -> bool:
        return self.status is CertStatus.REJECTED


def certify_spline(spline: MultiSpline, model: ChainModel,
                   report: DistanceReport, delta_t: float,
                   v_obs: float = 0.0,
                   initial_distances=None) -> CertifyResult:
    """Certify a spline fully, up to a prefix time, or not at all.

    ``t_cert`` is the absolute time up to which following the spline is
    certified collision-free: the segment end when fully certified, the
    terminal node's time for a prefix, the start time when rejected
    (terminal equals root).
    """
    gbur = compute_gbur(spline, model, report, delta_t, v_obs,
                        initial_distances)
    if gbur.reached_goal:
        return CertifyResult(CertStatus.FULLY_CERTIFIED, spline.end_time,
                             gbur)
    if gbur.burs:
        return CertifyResult(CertStatus.CERTIFIED_PREFIX,
                             gbur.terminal_time, gbur)
    return CertifyResult(CertStatus.REJECTED, spline.start_time, gbur)


# ---------------------------------------------------------------------------
# safe trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SafeTrajectory:
    """Certified prefix welded to a braking segment ending at rest.

    The junction is state-continuous (position, velocity, acceleration
    within 1e-8) and the braking segment ends with |v|, |a| <= 1e-8;
    both are enforced at construction.  ``horizon`` is the absolute
    time up to which the combined motion is certified (the braking
    segment's end).
    """

    regular_prefix: MultiSpline
    emergency: MultiSpline
    horizon: float

    def __post_init__(self):
        pre, emg = self.regular_prefix, self.emergency
        if abs(emg.start_time - pre.end_time) > 1e-9:
            raise ValueError("segments must be contiguous in time")
        a = pre.state(pre.end_time)
        b = emg.state(emg.start_time)
        gap = max(np.max(np.abs(a.position - b.position)),
                  np.max(np.abs(a.velocity - b.velocity)),
                  np.max(np.abs(a.acceleration - b.acceleration)))
        if gap > 1e-8:
            raise ValueError(f"junction discontinuity {gap:.3e}")
        end = emg.state(emg.end_time)
        if max(np.max(np.abs(end.velocity)),
               np.max(np.abs(end.acceleration))) > 1e-8:
            raise ValueError("braking segment must end at rest")

    @property
    def junction_time(self) -> float:
        return self.regular_prefix.end_time

    @property
    def end_time(self) -> float:
        return self.emergency.end_time

    @property
    def stop_position(self) -> np.ndarray:
        return self.emergency.state(self.emergency.end_time).position

    def state(self, t: float, clip: bool = False) -> BoundaryState:
        """Boundary state at absolute time t across both segments."""
        if t <= self.junction_time:
            return self.regular_prefix.state(t, clip=clip)
        return self.emergency.state(t, clip=clip)


def build_safe_trajectory(regular: MultiSpline, gbur: GBur, limits,
                          delta_c: Optional[float] = None
                          ) -> Optional[SafeTrajectory]:
    """Truncate at the certified terminal and append a certified stop.

    The regular spline is cut at the generalized bur's terminal node;
    a synchronized braking segment is synthesized from the state there
    and certified against the same measurement (clearances refreshed
    through the stored planes).  Returns None when the bur chain is
    empty, no braking segment exists, or its certification fails — the
    caller then keeps following the previous iteration's safe
    trajectory, which still ends in a certified stop.
    """
    if gbur.is_empty:
        return None
    t_new = gbur.terminal_time
    prefix = regular.truncated(t_new - regular.start_time)
    state = regular.state(t_new)
    emergency = synchronize_stop(state, limits, delta_c)
    if emergency is None:
        return None
    d_new = distances_to_planes(gbur.model, state.position, gbur.report)
    stop_cert = compute_gbur(emergency, gbur.model, gbur.report,
                             gbur.delta_t, gbur.v_obs,
                             initial_distances=d_new)
    if not stop_cert.reached_goal:
        return None
    return SafeTrajectory(prefix, emergency, emergency.end_time)
