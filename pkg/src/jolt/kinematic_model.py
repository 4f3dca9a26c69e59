"""Planar serial-chain geometry.

A robot is a chain of rigid links in the plane, each link a capsule
(segment with radius) hinged to the previous one by a revolute joint.
This module provides forward kinematics, per-joint enclosing radii
(the reach bound that converts joint deltas into workspace
displacement bounds), exact capsule-to-obstacle distances with
nearest-point pairs, separating-plane distance underestimates, and
densely sampled straight-line collision checks.

Obstacles are convex: axis-aligned boxes or spheres (discs in the
plane), optionally moving with a constant velocity.  All types are
immutable values and all operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "ChainModel",
    "Obstacle",
    "DistanceReport",
    "forward_kinematics",
    "joint_points",
    "joint_points_batch",
    "enclosing_radii",
    "segment_shape_distance",
    "min_distances",
    "distances_to_planes",
    "line_collision_free",
    "batch_clearances",
]

_SHAPES = ("sphere", "box")


def _as_vec(x, n: Optional[int] = None, name: str = "value") -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} must have length {n}, got {v.shape[0]}")
    return v


@dataclass(frozen=True, eq=False)
class ChainModel:
    """Immutable planar chain: capsule links joined by revolute joints.

    ``enclosing_radii`` holds the conservative (configuration
    independent) per-joint reach bounds: joint i's value covers the
    farthest point of links i..n at the outstretched pose plus the
    largest downstream capsule radius.
    """

    link_lengths: np.ndarray
    link_radii: np.ndarray
    pos_limits: np.ndarray
    enclosing_radii: np.ndarray = field(init=False)

    def __init__(self, link_lengths, link_radii=0.0, pos_limits=2.0 * math.pi):
        lengths = _as_vec(link_lengths, name="link_lengths")
        n = lengths.shape[0]
        if n < 1:
            raise ValueError("a chain needs at least one link")
        if np.any(~np.isfinite(lengths)) or np.any(lengths <= 0.0):
            raise ValueError("link lengths must be finite and > 0")
        radii = np.broadcast_to(np.asarray(link_radii, dtype=float),
                                (n,)).copy()
        if np.any(~np.isfinite(radii)) or np.any(radii < 0.0):
            raise ValueError("link radii must be finite and >= 0")
        lims = np.broadcast_to(np.asarray(pos_limits, dtype=float),
                               (n,)).copy()
        if np.any(~np.isfinite(lims)) or np.any(lims <= 0.0):
            raise ValueError("position limits must be finite and > 0")
        # farthest reach beyond each joint, at the outstretched pose
        reach = np.cumsum(lengths[::-1])[::-1]
        fat = np.maximum.accumulate(radii[::-1])[::-1]
        for name, val in (("link_lengths", lengths), ("link_radii", radii),
                          ("pos_limits", lims),
                          ("enclosing_radii", reach + fat)):
            object.__setattr__(self, name, val)
        for arr in (self.link_lengths, self.link_radii, self.pos_limits,
                    self.enclosing_radii):
            arr.flags.writeable = False

    @property
    def n_joints(self) -> int:
        return self.link_lengths.shape[0]

    def within_limits(self, q, tol: float = 1e-9) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(np.abs(q) <= self.pos_limits + tol))


@dataclass(frozen=True, eq=False)
class Obstacle:
    """Convex planar obstacle: a disc ("sphere") or axis-aligned box."""

    shape: str
    center: np.ndarray
    radius: float = 0.0
    half_extents: Optional[np.ndarray] = None
    velocity: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValueError(f"shape must be one of {_SHAPES}")
        object.__setattr__(self, "center",
                           _as_vec(self.center, 2, "center"))
        vel = np.zeros(2) if self.velocity is None else \
            _as_vec(self.velocity, 2, "velocity")
        object.__setattr__(self, "velocity", vel)
        if self.shape == "sphere":
            if not (math.isfinite(self.radius) and self.radius > 0.0):
                raise ValueError("sphere radius must be finite and > 0")
        else:
            if self.half_extents is None:
                raise ValueError("box obstacles need half_extents")
            he = _as_vec(self.half_extents, 2, "half_extents")
            if np.any(~np.isfinite(he)) or np.any(he <= 0.0):
                raise ValueError("half extents must be finite and > 0")
            object.__setattr__(self, "half_extents", he)

    @classmethod
    def sphere(cls, center, radius: float, velocity=None) -> "Obstacle":
        return cls("sphere", np.asarray(center, float), float(radius),
                   None, velocity)

    @classmethod
    def box(cls, center, half_extents, velocity=None) -> "Obstacle":
        return cls("box", np.asarray(center, float), 0.0,
                   np.asarray(half_extents, float), velocity)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))

    def moved(self, dt: float) -> "Obstacle":
        """The same obstacle after coasting dt seconds."""
        return Obstacle(self.shape, self.center + self.velocity * dt,
                        self.radius, self.half_extents, self.velocity)

    def with_velocity(self, velocity) -> "Obstacle":
        return Obstacle(self.shape, self.center, self.radius,
                        self.half_extents, velocity)


@dataclass(frozen=True, eq=False)
class DistanceReport:
    """Per-link obstacle clearances with nearest points and planes.

    ``distances[i]`` is link i's smallest capsule-to-obstacle surface
    distance (0 on contact or penetration, +inf with no obstacles).
    ``nearest_robot``/``nearest_obstacle`` hold the per-(link, obstacle)
    surface points R and O; each separating plane passes through O with
    unit normal pointing from O toward R (zero normal marks a touching
    or penetrating pair whose plane cannot separate).  ``measured_at``
    is the sensing timestamp the distances were valid at.
    """

    distances: np.ndarray          # (n,)
    pair_distances: np.ndarray     # (n, m)
    nearest_robot: np.ndarray      # (n, m, 2)
    nearest_obstacle: np.ndarray   # (n, m, 2)
    plane_normals: np.ndarray      # (n, m, 2), unit or zero rows
    collision: bool
    measured_at: float = 0.0

    @property
    def n_links(self) -> int:
        return self.distances.shape[0]

    @property
    def n_obstacles(self) -> int:
        return self.pair_distances.shape[1]

    def min_clearance(self) -> float:
        return float(np.min(self.distances))


# ---------------------------------------------------------------------------
# forward kinematics
# ---------------------------------------------------------------------------


def joint_points(model: ChainModel, q) -> np.ndarray:
    """Base + joint + end-effector positions: (n+1, 2), base at origin."""
    q = _as_vec(q, model.n_joints, "q")
    angles = np.cumsum(q)
    steps = np.stack([model.link_lengths * np.cos(angles),
                      model.link_lengths * np.sin(angles)], axis=1)
    pts = np.empty((model.n_joints + 1, 2))
    pts[0] = 0.0
    np.cumsum(steps, axis=0, out=pts[1:])
    return pts


def joint_points_batch(model: ChainModel, Q) -> np.ndarray:
    """joint_points for a whole batch of configurations: (B, n+1, 2)."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != model.n_joints:
        raise ValueError(f"Q must have shape (B, {model.n_joints})")
    angles = np.cumsum(Q, axis=1)
    steps = np.stack([model.link_lengths * np.cos(angles),
                      model.link_lengths * np.sin(angles)], axis=2)
    pts = np.zeros((Q.shape[0], model.n_joints + 1, 2))
    np.cumsum(steps, axis=1, out=pts[:, 1:])
    return pts


def forward_kinematics(model: ChainModel, q) -> list:
    """Per-link segments [(start, end), ...] at configuration q."""
    q = _as_vec(q, model.n_joints, "q")
    if not model.within_limits(q):
        raise ValueError("configuration outside the joint position limits")
    pts = joint_points(model, q)
    return [(pts[i], pts[i + 1]) for i in range(model.n_joints)]


def enclosing_radii(model: ChainModel, q=None,
                    config_dependent: bool = False) -> np.ndarray:
    """Per-joint reach bounds r.

    The default (static) variant is configuration independent: links
    i..n fully outstretched plus their largest capsule radius — valid
    over any motion, which is what displacement bounds need.  The
    configuration-dependent variant measures the farthest link endpoint
    from each joint at the given q (exact, since distance is convex
    along each segment) and adds the same radius term.
    """
    if not config_dependent:
        return model.enclosing_radii.copy()
    if q is None:
        raise ValueError("the configuration-dependent variant needs q")
    pts = joint_points(model, q)
    n = model.n_joints
    fat = np.maximum.accumulate(model.link_radii[::-1])[::-1]
    out = np.empty(n)
    for i in range(n):
        d = np.linalg.norm(pts[i + 1:] - pts[i], axis=1)
        out[i] = float(np.max(d)) + fat[i]
    return out


# ---------------------------------------------------------------------------
# exact distance primitives
# ---------------------------------------------------------------------------


def _point_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray):
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    nearest = a + t * ab
    return float(np.linalg.norm(p - nearest)), nearest


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _segments_intersect(a0, a1, b0, b1) -> bool:
    d1 = _orient(b0, b1, a0)
    d2 = _orient(b0, b1, a1)
    d3 = _orient(a0, a1, b0)
    d4 = _orient(a0, a1, b1)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


def _segment_segment(a0, a1, b0, b1):
    """Exact 2-D segment-to-segment distance with the nearest pair."""
    if _segments_intersect(a0, a1, b0, b1):
        # crossing point via the parametric solve
        r = a1 - a0
        s = b1 - b0
        denom = r[0] * s[1] - r[1] * s[0]
        t = ((b0[0] - a0[0]) * s[1] - (b0[1] - a0[1]) * s[0]) / denom
        x = a0 + t * r
        return 0.0, x.copy(), x.copy()
    best = None
    for p, (u, v), flip in ((a0, (b0, b1), False), (a1, (b0, b1), False),
                            (b0, (a0, a1), True), (b1, (a0, a1), True)):
        d, nearest = _point_segment(p, u, v)
        if best is None or d < best[0]:
            best = (d, nearest, p) if flip else (d, p, nearest)
    return best


def _point_box_surface(p: np.ndarray, center: np.ndarray,
                       half: np.ndarray):
    """Distance from a point to a solid box and the surface point.

    Inside the box the distance is 0 and the surface point is the
    nearest boundary point.
    """
    rel = p - center
    clamped = np.clip(rel, -half, half)
    if np.all(np.abs(rel) <= half):  # inside: project to nearest face
        gap = half - np.abs(rel)
        axis = int(np.argmin(gap))
        onto = clamped.copy()
        onto[axis] = math.copysign(half[axis], rel[axis] if rel[axis] != 0.0
                                   else 1.0)
        return 0.0, center + onto
    surf = center + clamped
    return float(np.linalg.norm(p - surf)), surf


def _box_edges(center: np.ndarray, half: np.ndarray):
    c = np.array([
        [center[0] - half[0], center[1] - half[1]],
        [center[0] + half[0], center[1] - half[1]],
        [center[0] + half[0], center[1] + half[1]],
        [center[0] - half[0], center[1] + half[1]],
    ])
    return [(c[k], c[(k + 1) % 4]) for k in range(4)]


def segment_shape_distance(p0, p1, radius: float, obstacle: Obstacle):
    """Exact capsule-to-obstacle distance with surface nearest points.

    Returns (d, robot_point, obstacle_point): d is the surface-to-
    surface distance clamped at 0; the points lie on the capsule and
    obstacle surfaces (on contact they coincide with the axis nearest
    point / boundary).
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    if obstacle.shape == "sphere":
        d_axis, on_axis = _point_segment(obstacle.center, p0, p1)
        if d_axis <= 1e-15:  # axis through the centre: no direction
            return 0.0, on_axis, on_axis.copy()
        u = (on_axis - obstacle.center) / d_axis  # centre -> axis
        o_surf = obstacle.center + obstacle.radius * u
        gap = d_axis - obstacle.radius - radius
        if gap <= 0.0:
            return 0.0, on_axis - min(radius, max(d_axis - obstacle.radius,
                                                  0.0)) * u, o_surf
        return gap, on_axis - radius * u, o_surf
    # box: zero distance when an endpoint is inside, else closest of
    # the four boundary edges
    half = obstacle.half_extents
    inside0 = np.all(np.abs(p0 - obstacle.center) <= half)
    inside1 = np.all(np.abs(p1 - obstacle.center) <= half)
    if inside0 or inside1:
        p = p0 if inside0 else p1
        _, surf = _point_box_surface(p, obstacle.center, half)
        return 0.0, p.copy(), surf
    best = None
    for e0, e1 in _box_edges(obstacle.center, half):
        d, on_a, on_b = _segment_segment(p0, p1, e0, e1)
        if best is None or d < best[0]:
            best = (d, on_a, on_b)
    d_axis, on_axis, o_surf = best
    gap = d_axis - radius
    if gap <= 0.0 or d_axis <= 1e-15:
        return 0.0, on_axis, o_surf
    u = (o_surf - on_axis) / d_axis  # axis -> obstacle
    return gap, on_axis + radius * u, o_surf


# ---------------------------------------------------------------------------
# reports, planes, sampling
# ---------------------------------------------------------------------------


def min_distances(model: ChainModel, q, obstacles: Sequence[Obstacle],
                  measured_at: float = 0.0) -> DistanceReport:
    """Exact per-link clearances against every obstacle, with planes."""
    pts = joint_points(model, q)
    n = model.n_joints
    m = len(obstacles)
    pair = np.full((n, m), np.inf)
    near_r = np.zeros((n, m, 2))
    near_o = np.zeros((n, m, 2))
    normals = np.zeros((n, m, 2))
    collision = False
    for i in range(n):
        for j, ob in enumerate(obstacles):
            d, rp, op = segment_shape_distance(pts[i], pts[i + 1],
                                               model.link_radii[i], ob)
            pair[i, j] = d
            near_r[i, j] = rp
            near_o[i, j] = op
            gap = np.linalg.norm(rp - op)
            if d > 0.0 and gap > 0.0:
                normals[i, j] = (rp - op) / gap
            elif d == 0.0:
                collision = True
            # else: numerically touching (d > 0, coincident surface
            # points) — keep the zero normal, which downstream plane
            # queries treat as zero clearance
    dist = pair.min(axis=1) if m else np.full(n, np.inf)
    return DistanceReport(dist, pair, near_r, near_o, normals,
                          collision, measured_at)


def distances_to_planes(model: ChainModel, q_new,
                        report: DistanceReport) -> np.ndarray:
    """Per-link distance underestimates from stored separating planes.

    Each link's capsule at q_new is measured against its own row of
    planes: the signed axis distance is linear along the segment so the
    endpoint minimum is exact; the capsule radius is subtracted and the
    result clamped at 0.  Zero-normal (touching) planes yield 0.  The
    result never exceeds the true obstacle distance at q_new.
    """
    pts = joint_points(model, q_new)
    n = model.n_joints
    m = report.n_obstacles
    if m == 0:
        return np.full(n, np.inf)
    out = np.empty(n)
    for i in range(n):
        d_i = np.inf
        for j in range(m):
            nrm = report.plane_normals[i, j]
            if nrm[0] == 0.0 and nrm[1] == 0.0:
                d_i = 0.0
                break
            origin = report.nearest_obstacle[i, j]
            s0 = float(nrm @ (pts[i] - origin))
            s1 = float(nrm @ (pts[i + 1] - origin))
            d = min(s0, s1) - model.link_radii[i]
            d_i = min(d_i, max(d, 0.0))
        out[i] = d_i
    return out


def line_collision_free(model: ChainModel, q_a, q_b,
                        obstacles: Sequence[Obstacle],
                        step: float = 0.01) -> bool:
    """Dense straight-line check at joint resolution ``step`` (rad)."""
    q_a = _as_vec(q_a, model.n_joints, "q_a")
    q_b = _as_vec(q_b, model.n_joints, "q_b")
    if not obstacles:
        return True
    span = float(np.max(np.abs(q_b - q_a)))
    n_steps = max(1, int(math.ceil(span / step)))
    for k in range(n_steps + 1):
        q = q_a + (k / n_steps) * (q_b - q_a)
        if min_distances(model, q, obstacles).collision:
            return False
    return True


# ---------------------------------------------------------------------------
# vectorised clearances (audit-scale batches)
# ---------------------------------------------------------------------------


def _batch_point_segment_dist(P, A, B):
    """Distances point-to-segment, broadcast over leading axes."""
    AB = B - A
    denom = np.einsum("...k,...k->...", AB, AB)
    t = np.einsum("...k,...k->...", P - A, AB) / np.where(denom == 0.0, 1.0,
                                                          denom)
    t = np.clip(t, 0.0, 1.0)[..., None]
    nearest = A + t * AB
    return np.linalg.norm(P - nearest, axis=-1)


def _batch_segment_segment_dist(A0, A1, B0, B1):
    """Segment-to-segment distances, broadcast over leading axes."""
    d = np.minimum(
        np.minimum(_batch_point_segment_dist(A0, B0, B1),
                   _batch_point_segment_dist(A1, B0, B1)),
        np.minimum(_batch_point_segment_dist(B0, A0, A1),
                   _batch_point_segment_dist(B1, A0, A1)))

    def orient(a, b, c):
        ab = b - a
        ac = c - a
        return ab[..., 0] * ac[..., 1] - ab[..., 1] * ac[..., 0]

    cross = (((orient(B0, B1, A0) > 0) != (orient(B0, B1, A1) > 0))
             & ((orient(A0, A1, B0) > 0) != (orient(A0, A1, B1) > 0)))
    return np.where(cross, 0.0, d)


def batch_clearances(model: ChainModel, Q,
                     obstacles: Sequence[Obstacle]) -> np.ndarray:
    """Signed per-link clearances for a batch of configurations.

    Returns (B, n): surface-to-surface clearance per link, minimum over
    all obstacles; negative values indicate penetration depth along the
    axis metric (sign is what collision audits need).  With no
    obstacles every entry is +inf.
    """
    Q = np.asarray(Q, dtype=float)
    pts = joint_points_batch(model, Q)           # (B, n+1, 2)
    A = pts[:, :-1, :]                           # (B, n, 2)
    B = pts[:, 1:, :]
    nB, n = Q.shape[0], model.n_joints
    out = np.full((nB, n), np.inf)
    for ob in obstacles:
        if ob.shape == "sphere":
            d_axis = _batch_point_segment_dist(
                np.broadcast_to(ob.center, A.shape), A, B)
            d = d_axis - ob.radius - model.link_radii
        else:
            edges = _box_edges(ob.center, ob.half_extents)
            d_axis = np.full((nB, n), np.inf)
            for e0, e1 in edges:
                d_axis = np.minimum(d_axis, _batch_segment_segment_dist(
                    A, B, np.broadcast_to(e0, A.shape),
                    np.broadcast_to(e1, A.shape)))
            inside = (np.all(np.abs(A - ob.center) <= ob.half_extents,
                             axis=-1)
                      | np.all(np.abs(B - ob.center) <= ob.half_extents,
                               axis=-1))
            d_axis = np.where(inside, 0.0, d_axis)
            d = d_axis - model.link_radii
        out = np.minimum(out, d)
    return out
