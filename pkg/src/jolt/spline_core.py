"""Spline synthesis: jerk-bounded quintic segments and quartic stops.

A joint trajectory segment is a degree-5 polynomial

    p(t) = a*t**5 + b*t**4 + c*t**3 + d*t**2 + e*t + f,   t in [0, duration]

whose first three coefficients (f, e, d) absorb the initial state and
whose remaining freedom is spent matching a target end state.  The
third-order coefficient c doubles as the tunable "initial jerk / 6";
it is searched inside [-jerk_max/6, +jerk_max/6] so the segment can
trade duration against limit headroom.  Braking segments are quartics
(a = 0) with a free final position and a rest end state.

The numeric heavy lifting lives in the backend kernels
(``jolt.backend.kernels``); this module provides the typed API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .backend import kernels

__all__ = [
    "JointLimits",
    "BoundaryState",
    "JointSpline",
    "MultiSpline",
    "ConstraintReport",
    "default_delta_c",
    "uniform_limits",
    "limits_array",
    "evaluate",
    "evaluate_multi",
    "solve_cubic_min_positive",
    "quintic_candidates",
    "quartic_stop_candidates",
    "check_constraints",
    "select_jerk_bisection",
    "synchronize",
    "synchronize_states",
    "synchronize_flat",
    "synchronize_stop_flat",
    "synchronize_stop",
    "stop_states",
]

RESIDUAL_TOL = 1e-8
_ORDER_NAMES = ("P", "V", "A", "J")


@dataclass(frozen=True, slots=True)
class JointLimits:
    """Symmetric per-joint kinematic bounds (all strictly positive)."""

    pos_max: float
    vel_max: float
    acc_max: float
    jerk_max: float

    def __post_init__(self):
        for name in ("pos_max", "vel_max", "acc_max", "jerk_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")


def uniform_limits(n: int, pos_max: float, vel_max: float, acc_max: float,
                   jerk_max: float) -> tuple[JointLimits, ...]:
    """The same JointLimits record repeated for n joints."""
    one = JointLimits(pos_max, vel_max, acc_max, jerk_max)
    return (one,) * n


def limits_array(limits: Sequence[JointLimits]) -> np.ndarray:
    """Flatten JointLimits records to the kernels' (4n,) layout."""
    out = np.empty(4 * len(limits))
    for j, lim in enumerate(limits):
        out[4 * j] = lim.pos_max
        out[4 * j + 1] = lim.vel_max
        out[4 * j + 2] = lim.acc_max
        out[4 * j + 3] = lim.jerk_max
    return out


def default_delta_c(limits: JointLimits) -> float:
    """Termination width for the jerk-coefficient search.

    One thousandth of the admissible coefficient range's half-width.
    """
    return (limits.jerk_max / 6.0) * 1e-3


@dataclass(frozen=True, slots=True)
class BoundaryState:
    """Joint positions/velocities/accelerations at one instant."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.position, dtype=float))
        v = np.atleast_1d(np.asarray(self.velocity, dtype=float))
        a = np.atleast_1d(np.asarray(self.acceleration, dtype=float))
        if not (p.shape == v.shape == a.shape) or p.ndim != 1:
            raise ValueError("position/velocity/acceleration must share "
                             "one (n,) shape")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "acceleration", a)

    @classmethod
    def single(cls, p: float, v: float = 0.0, a: float = 0.0,
               timestamp: float = 0.0) -> "BoundaryState":
        return cls(np.array([p]), np.array([v]), np.array([a]), timestamp)

    @classmethod
    def rest(cls, position, timestamp: float = 0.0) -> "BoundaryState":
        p = np.atleast_1d(np.asarray(position, dtype=float))
        z = np.zeros_like(p)
        return cls(p, z, z.copy(), timestamp)

    @property
    def n_joints(self) -> int:
        return self.position.shape[0]

    def flat(self) -> np.ndarray:
        """Interleaved (p, v, a) * n kernel layout."""
        out = np.empty(3 * self.n_joints)
        out[0::3] = self.position
        out[1::3] = self.velocity
        out[2::3] = self.acceleration
        return out

    def within(self, limits: Sequence[JointLimits], tol: float = 1e-9) -> bool:
        """Componentwise |value| <= limit + tol for every joint."""
        for j, lim in enumerate(limits):
            if abs(self.position[j]) > lim.pos_max + tol:
                return False
            if abs(self.velocity[j]) > lim.vel_max + tol:
                return False
            if abs(self.acceleration[j]) > lim.acc_max + tol:
                return False
        return True


@dataclass(frozen=True, slots=True)
class JointSpline:
    """One joint's polynomial segment on [0, duration].

    coefficients are (a, b, c, d, e, f), highest power first; braking
    (quartic) segments carry a = 0 and order = 4.
    """

    coefficients: tuple[float, ...]
    duration: float
    order: int = 5

    def __post_init__(self):
        if len(self.coefficients) != 6:
            raise ValueError("coefficients must have length 6")
        if self.duration < 0.0 or not math.isfinite(self.duration):
            raise ValueError("duration must be finite and >= 0")
        if self.order not in (4, 5):
            raise ValueError("order must be 4 or 5")
        if self.order == 4 and self.coefficients[0] != 0.0:
            raise ValueError("quartic segments must have a = 0")


@dataclass(frozen=True, slots=True)
class MultiSpline:
    """Per-joint segments sharing one duration, anchored at start_time."""

    splines: tuple[JointSpline, ...]
    duration: float
    start_time: float = 0.0

    def __post_init__(self):
        if not self.splines:
            raise ValueError("MultiSpline needs at least one joint")
        for s in self.splines:
            if abs(s.duration - self.duration) > 1e-12 * max(1.0, self.duration):
                raise ValueError("all joint splines must share the duration")

    @property
    def n_joints(self) -> int:
        return len(self.splines)

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration

    def coefficient_matrix(self) -> np.ndarray:
        return np.array([s.coefficients for s in self.splines])

    def state(self, t: float, clip: bool = False) -> BoundaryState:
        """Boundary state at absolute time t (clip clamps to the span)."""
        tau = t - self.start_time
        p = evaluate_multi(self, tau, 0, clip=clip)
        v = evaluate_multi(self, tau, 1, clip=clip)
        a = evaluate_multi(self, tau, 2, clip=clip)
        return BoundaryState(p, v, a, timestamp=t)

    def truncated(self, new_duration: float) -> "MultiSpline":
        """Same polynomials on the shorter span [0, new_duration]."""
        if not 0.0 <= new_duration <= self.duration + 1e-12:
            raise ValueError("truncation must stay inside the segment span")
        new_duration = min(new_duration, self.duration)
        return MultiSpline(
            tuple(JointSpline(s.coefficients, new_duration, s.order)
                  for s in self.splines),
            new_duration, self.start_time)


@dataclass(frozen=True, slots=True)
class ConstraintReport:
    """Outcome of extremum-based limit verification for one segment."""

    satisfied: bool
    worst_ratio: float
    violating_order: Optional[str] = None
    violating_time: Optional[float] = None


def evaluate(spline: JointSpline, t: float, order: int = 0,
             clip: bool = False) -> float:
    """Value of the segment's order-th derivative at local time t.

    t must lie in [0, duration] unless clip=True, which clamps t to
    the segment span (used when streaming states past a segment end).
    """
    tf = spline.duration
    if clip:
        t = 0.0 if t < 0.0 else (tf if t > tf else t)
    else:
        slack = 1e-9 * max(1.0, tf)
        if t < -slack or t > tf + slack:
            raise ValueError(f"t={t} outside segment span [0, {tf}]")
    a, b, c, d, e, f = spline.coefficients
    return kernels.poly_eval(a, b, c, d, e, f, t, order)


def evaluate_multi(ms: MultiSpline, t: float, order: int = 0,
                   clip: bool = False) -> np.ndarray:
    """Vector of per-joint derivative values at local time t."""
    return np.array([evaluate(s, t, order, clip=clip) for s in ms.splines])


def solve_cubic_min_positive(c3: float, c2: float, c1: float,
                             c0: float) -> Optional[float]:
    """Smallest strictly positive real root of a cubic, or None.

    Degrades to the quadratic/linear formula when leading coefficients
    are exactly zero; near-real conjugate pairs count as real and every
    root gets one Newton polish step.
    """
    r = kernels.solve_cubic_min_positive(c3, c2, c1, c0)
    return None if math.isnan(r) else r


def _limit_tuple(limits: JointLimits):
    return limits.pos_max, limits.vel_max, limits.acc_max, limits.jerk_max


def _single(state: BoundaryState):
    if state.n_joints != 1:
        raise ValueError("this operation is per-joint; pass a 1-joint state")
    return float(state.position[0]), float(state.velocity[0]), \
        float(state.acceleration[0])


def quintic_candidates(init: BoundaryState, final: BoundaryState,
                       c: float, limits: JointLimits) -> list[JointSpline]:
    """All duration candidates for one joint at a fixed coefficient c.

    One candidate per strictly positive real root of the final-time
    cubic; each reproduces the requested end state to RESIDUAL_TOL or
    is dropped.  Candidates are returned whether or not they satisfy
    the kinematic limits (filtering is the caller's job).  An
    identical rest-to-rest pair yields the zero-duration constant
    segment.
    """
    if abs(6.0 * c) > limits.jerk_max + 1e-9:
        raise ValueError("c outside the admissible jerk range")
    p0, v0, a0 = _single(init)
    pf, vf, af = _single(final)
    d, e, f = 0.5 * a0, v0, p0
    if (abs(pf - p0) <= 1e-12 and abs(v0) <= 1e-12 and abs(vf) <= 1e-12
            and abs(a0) <= 1e-12 and abs(af) <= 1e-12):
        return [JointSpline((0.0, 0.0, 0.0, d, e, f), 0.0)]
    c3, c2, c1, c0 = kernels.final_time_cubic(c, d, e, f, pf, vf, af)
    out = []
    for tf in kernels.cubic_real_roots(c3, c2, c1, c0):
        if tf <= 0.0:
            continue
        a, b = kernels.coeffs_for_final_time(c, tf, d, e, f, pf, vf, af)
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        if kernels.boundary_residual(a, b, c, d, e, f, tf, pf, vf, af) \
                > RESIDUAL_TOL:
            continue
        out.append(JointSpline((a, b, c, d, e, f), tf))
    return out


def quartic_stop_candidates(init: BoundaryState, c: float,
                            limits: JointLimits) -> list[JointSpline]:
    """Braking candidates for one joint at a fixed coefficient c.

    The final position is free; candidates come from the positive
    roots of the stop-time quadratic and reproduce zero end velocity
    and acceleration to RESIDUAL_TOL.  A rest initial state yields the
    zero-duration constant segment.
    """
    if abs(6.0 * c) > limits.jerk_max + 1e-9:
        raise ValueError("c outside the admissible jerk range")
    p0, v0, a0 = _single(init)
    d, e, f = 0.5 * a0, v0, p0
    if abs(v0) <= 1e-12 and abs(a0) <= 1e-12:
        return [JointSpline((0.0, 0.0, 0.0, 0.0, e, f), 0.0, order=4)]
    out = []
    for tf in kernels.stop_time_roots(c, d, e):
        if tf <= 0.0:
            continue
        b = kernels.stop_b(c, tf, d)
        if not math.isfinite(b):
            continue
        if kernels.stop_residual(b, c, d, e, tf) > RESIDUAL_TOL:
            continue
        out.append(JointSpline((0.0, b, c, d, e, f), tf, order=4))
    return out


def check_constraints(spline: JointSpline,
                      limits: JointLimits) -> ConstraintReport:
    """Limit verification at analytically located extremal times.

    Position extrema come from bracketed bisection of the (up to
    quartic) velocity on a 64-point grid; velocity/acceleration/jerk
    extrema from the cubic/quadratic/linear root formulas; endpoints
    are always included.  Satisfied means every |value| stays within
    limit + 1e-9.
    """
    a, b, c, d, e, f = spline.coefficients
    ok, worst, vo, vt = kernels.check_limits(
        a, b, c, d, e, f, spline.duration, *_limit_tuple(limits))
    if ok:
        return ConstraintReport(True, worst)
    return ConstraintReport(False, worst, _ORDER_NAMES[vo], vt)


def select_jerk_bisection(init: BoundaryState, final: BoundaryState,
                          limits: JointLimits,
                          delta_c: Optional[float] = None
                          ) -> Optional[tuple[float, float]]:
    """Search the jerk coefficient range for one joint; (c*, t*) or None.

    Both endpoints of [-jerk_max/6, +jerk_max/6] are probed first and
    an immediately feasible endpoint wins with its minimal duration;
    otherwise the interval is bisected (the first interior probe of
    the symmetric range is exactly 0) keeping the smallest feasible
    duration until the width drops below delta_c.  None means no
    positive-duration candidate exists at either endpoint or nothing
    feasible was found.
    """
    if delta_c is None:
        delta_c = default_delta_c(limits)
    p0, v0, a0 = _single(init)
    pf, vf, af = _single(final)
    found, c, tf, _, _ = kernels.select_jerk(
        p0, v0, a0, pf, vf, af, *_limit_tuple(limits), delta_c)
    return (c, tf) if found else None


def _limits_seq(limits, n: int) -> Sequence[JointLimits]:
    if isinstance(limits, JointLimits):
        return (limits,) * n
    limits = tuple(limits)
    if len(limits) != n:
        raise ValueError(f"expected {n} JointLimits records, got {len(limits)}")
    return limits


def synchronize(per_joint_problems: Sequence[tuple], delta_c: Optional[float]
                = None, start_time: float = 0.0) -> Optional[MultiSpline]:
    """Couple per-joint (init, final, limits) problems to one duration.

    Each problem is (init, final, limits) with 1-joint BoundaryStates
    (or plain (p, v, a) triples) and a JointLimits record.  Durations
    are selected per joint, the maximum wins, and every joint is
    re-solved at the common duration; None when any joint fails
    selection or re-verification.
    """
    n = len(per_joint_problems)
    init = np.empty(3 * n)
    final = np.empty(3 * n)
    lims = []
    for j, (ini, fin, lim) in enumerate(per_joint_problems):
        if isinstance(ini, BoundaryState):
            init[3 * j:3 * j + 3] = _single(ini)
        else:
            init[3 * j:3 * j + 3] = ini
        if isinstance(fin, BoundaryState):
            final[3 * j:3 * j + 3] = _single(fin)
        else:
            final[3 * j:3 * j + 3] = fin
        lims.append(lim)
    dc = min(default_delta_c(l) for l in lims) if delta_c is None else delta_c
    out = np.empty(6 * n)
    ok, tf = kernels.sync_quintic(init, final, limits_array(lims), dc, out)
    if not ok:
        return None
    return _multi_from_flat(out, tf, n, 5, start_time)


def synchronize_states(init: BoundaryState, final: BoundaryState,
                       limits, delta_c: Optional[float] = None,
                       start_time: Optional[float] = None
                       ) -> Optional[MultiSpline]:
    """synchronize() for whole-robot BoundaryStates (the common case)."""
    n = init.n_joints
    if final.n_joints != n:
        raise ValueError("init/final joint counts differ")
    lims = _limits_seq(limits, n)
    dc = min(default_delta_c(l) for l in lims) if delta_c is None else delta_c
    out = np.empty(6 * n)
    ok, tf = kernels.sync_quintic(init.flat(), final.flat(),
                                  limits_array(lims), dc, out)
    if not ok:
        return None
    t0 = init.timestamp if start_time is None else start_time
    return _multi_from_flat(out, tf, n, 5, t0)


def synchronize_stop(init: BoundaryState, limits,
                     delta_c: Optional[float] = None,
                     start_time: Optional[float] = None
                     ) -> Optional[MultiSpline]:
    """Synchronised braking segment bringing every joint to rest."""
    n = init.n_joints
    lims = _limits_seq(limits, n)
    dc = min(default_delta_c(l) for l in lims) if delta_c is None else delta_c
    out = np.empty(6 * n)
    ok, tf = kernels.sync_stop(init.flat(), limits_array(lims), dc, out)
    if not ok:
        return None
    t0 = init.timestamp if start_time is None else start_time
    return _multi_from_flat(out, tf, n, 4, t0)


def stop_states(ms: MultiSpline) -> BoundaryState:
    """End state of a segment (rest for braking segments)."""
    return ms.state(ms.end_time)


def synchronize_flat(init_flat: np.ndarray, final_flat: np.ndarray,
                     limits_flat: np.ndarray, delta_c: float,
                     start_time: float = 0.0) -> Optional[MultiSpline]:
    """synchronize() on pre-flattened kernel-layout arrays.

    Identical result to synchronize_states; this entry point skips the
    per-call record marshalling so hot callers (benchmarks, the
    planning loop) pay only for the search itself plus result
    construction.
    """
    n = init_flat.shape[0] // 3
    out = np.empty(6 * n)
    ok, tf = kernels.sync_quintic(init_flat, final_flat, limits_flat,
                                  delta_c, out)
    if not ok:
        return None
    return _multi_from_flat(out, tf, n, 5, start_time)


def synchronize_stop_flat(init_flat: np.ndarray, limits_flat: np.ndarray,
                          delta_c: float, start_time: float = 0.0
                          ) -> Optional[MultiSpline]:
    """synchronize_stop() on pre-flattened kernel-layout arrays."""
    n = init_flat.shape[0] // 3
    out = np.empty(6 * n)
    ok, tf = kernels.sync_stop(init_flat, limits_flat, delta_c, out)
    if not ok:
        return None
    return _multi_from_flat(out, tf, n, 4, start_time)


def _multi_from_flat(flat: np.ndarray, tf: float, n: int, order: int,
                     start_time: float) -> MultiSpline:
    vals = flat.tolist()
    splines = tuple(
        JointSpline(tuple(vals[6 * j:6 * j + 6]), tf, order=order)
        for j in range(n))
    return MultiSpline(splines, tf, start_time)
