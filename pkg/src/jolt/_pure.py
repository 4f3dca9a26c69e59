"""Scalar trajectory kernels - pure-Python reference backend.

A trajectory segment for one joint is the quintic polynomial

    p(t) = a*t**5 + b*t**4 + c*t**3 + d*t**2 + e*t + f,  t in [0, t_f]

with quartic (braking) segments carried in the same layout with a = 0.
This module holds the flat, allocation-light scalar routines behind
spline synthesis: polynomial evaluation, real root extraction, final
time selection, kinematic-limit verification and multi-joint
synchronisation.  ``jolt._kernels`` is the compiled twin with
operation-for-operation identical arithmetic; ``jolt.backend`` picks
one of the two at import time.

Functions deliberately traffic in plain floats and flat float
sequences (length 3n state vectors, 4n limit vectors, 6n coefficient
vectors) so that both backends can share a single calling convention.
"""

from __future__ import annotations

import math

# Tolerance registry shared by both backends.
IM_TOL = 1e-10          # |imag| <= IM_TOL*max(1,|real|) counts as a real root
LIMIT_SLACK = 1e-9      # absolute slack when comparing |value| against a limit
RESIDUAL_TOL = 1e-8     # boundary reconstruction residual accepted per candidate
DEGEN_TOL = 1e-12       # below this, boundary states count as "already there"
POS_GRID = 64           # sample count for bracketing position extrema
ROOT_DEDUPE = 1e-12     # relative spacing under which two roots collapse

# Probe outcome states used by the jerk-selection search.
_NO_REAL = 0
_REAL_VIOLATING = 1
_FEASIBLE = 2


def _cbrt(x):
    # Portable real cube root (Python 3.10 has no math.cbrt); pow-based
    # so the compiled twin can reproduce it bit-for-bit via libm pow.
    if x >= 0.0:
        return x ** (1.0 / 3.0)
    return -((-x) ** (1.0 / 3.0))


def poly_eval(a, b, c, d, e, f, t, order):
    """Evaluate the segment polynomial or one of its derivatives.

    order 0..4 selects position, velocity, acceleration, jerk or snap.
    """
    if order == 0:
        return ((((a * t + b) * t + c) * t + d) * t + e) * t + f
    if order == 1:
        return (((5.0 * a * t + 4.0 * b) * t + 3.0 * c) * t + 2.0 * d) * t + e
    if order == 2:
        return ((20.0 * a * t + 12.0 * b) * t + 6.0 * c) * t + 2.0 * d
    if order == 3:
        return (60.0 * a * t + 24.0 * b) * t + 6.0 * c
    if order == 4:
        return 120.0 * a * t + 24.0 * b
    raise ValueError("order must be in 0..4")


def _newton_polish(c3, c2, c1, c0, x):
    fx = ((c3 * x + c2) * x + c1) * x + c0
    dfx = (3.0 * c3 * x + 2.0 * c2) * x + c1
    if dfx != 0.0:
        x = x - fx / dfx
    return x


def _push_root(roots, count, x):
    # Insert keeping ascending order; drop near-duplicates.
    for i in range(count):
        if abs(x - roots[i]) <= ROOT_DEDUPE * max(1.0, abs(x)):
            return count
    roots.append(x)
    count += 1
    i = count - 1
    while i > 0 and roots[i - 1] > roots[i]:
        roots[i - 1], roots[i] = roots[i], roots[i - 1]
        i -= 1
    return count


def quadratic_real_roots(q2, q1, q0):
    """Real roots of q2*x**2 + q1*x + q0, ascending tuple."""
    if q2 == 0.0:
        if q1 == 0.0:
            return ()
        return (-q0 / q1,)
    disc = q1 * q1 - 4.0 * q2 * q0
    if disc < 0.0:
        return ()
    sq = math.sqrt(disc)
    if q1 >= 0.0:
        w = -0.5 * (q1 + sq)
    else:
        w = -0.5 * (q1 - sq)
    if w != 0.0:
        x1 = w / q2
        x2 = q0 / w
    else:
        x1 = 0.0
        x2 = 0.0
    if x1 > x2:
        x1, x2 = x2, x1
    if x1 == x2:
        return (x1,)
    return (x1, x2)


def cubic_real_roots(c3, c2, c1, c0):
    """Real roots of c3*x**3 + c2*x**2 + c1*x + c0, ascending tuple.

    Closed-form resolution on the depressed cubic; a conjugate pair
    whose imaginary part is below IM_TOL (relative) is folded into one
    real root.  Every root receives one Newton polish step against the
    original coefficients.  Degrades to the quadratic/linear solver
    when leading coefficients vanish exactly.
    """
    if c3 == 0.0:
        roots = quadratic_real_roots(c2, c1, c0)
        out = []
        n = 0
        for x in roots:
            n = _push_root(out, n, _newton_polish(c3, c2, c1, c0, x))
        return tuple(out)

    p = c2 / c3
    q = c1 / c3
    r = c0 / c3
    # depressed cubic x = y - p/3:  y**3 + P*y + Q
    P = q - p * p / 3.0
    Q = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r
    shift = -p / 3.0
    disc = 0.25 * Q * Q + P * P * P / 27.0

    out = []
    n = 0
    if disc > 0.0:
        sq = math.sqrt(disc)
        u = _cbrt(-0.5 * Q + sq)
        v = _cbrt(-0.5 * Q - sq)
        y_real = u + v
        n = _push_root(out, n, _newton_polish(c3, c2, c1, c0, y_real + shift))
        # conjugate pair: real part -y_real/2, imag (sqrt(3)/2)*(u - v)
        im = 0.8660254037844386 * (u - v)
        re = -0.5 * y_real + shift
        if abs(im) <= IM_TOL * max(1.0, abs(re)):
            n = _push_root(out, n, _newton_polish(c3, c2, c1, c0, re))
    elif disc == 0.0:
        if P == 0.0:
            n = _push_root(out, n, _newton_polish(c3, c2, c1, c0, shift))
        else:
            x_single = 3.0 * Q / P + shift
            x_double = -1.5 * Q / P + shift
            n = _push_root(out, n, _newton_polish(c3, c2, c1, c0, x_single))
            n = _push_root(out, n, _newton_polish(c3, c2, c1, c0, x_double))
    else:
        m = 2.0 * math.sqrt(-P / 3.0)
        arg = 3.0 * Q / (P * m)
        if arg > 1.0:
            arg = 1.0
        elif arg < -1.0:
            arg = -1.0
        theta = math.acos(arg) / 3.0
        for k in range(3):
            x = m * math.cos(theta - 2.0943951023931953 * k) + shift
            n = _push_root(out, n, _newton_polish(c3, c2, c1, c0, x))
    return tuple(out)


def solve_cubic_min_positive(c3, c2, c1, c0):
    """Smallest strictly positive real root, or nan when none exists."""
    for x in cubic_real_roots(c3, c2, c1, c0):
        if x > 0.0:
            return x
    return math.nan


def final_time_cubic(c, d, e, f, pf, vf, af):
    """Coefficients (c3, c2, c1, c0) of the final-time condition.

    Eliminating the two top polynomial coefficients from the three
    end-state equations leaves one cubic in the segment duration whose
    leading coefficient is the probed third-order coefficient c.
    """
    return (c, 3.0 * d - 0.5 * af, 6.0 * e + 4.0 * vf, 10.0 * (f - pf))


def coeffs_for_final_time(c, tf, d, e, f, pf, vf, af):
    """Back-substitute the two leading coefficients (a, b) for a root tf."""
    tf2 = tf * tf
    tf3 = tf2 * tf
    b = (-1.5 * c * tf2 + (-1.5 * d - 0.25 * af) * tf - e + vf) / tf3
    a = (-12.0 * b * tf2 - 6.0 * c * tf - 2.0 * d + af) / (20.0 * tf3)
    return a, b


def resolve_c_at(tf, d, e, f, pf, vf, af):
    """Third-order coefficient solving the final-time condition at fixed tf."""
    tf2 = tf * tf
    return -((3.0 * d - 0.5 * af) * tf2 + (6.0 * e + 4.0 * vf) * tf
             + 10.0 * (f - pf)) / (tf2 * tf)


def boundary_residual(a, b, c, d, e, f, tf, pf, vf, af):
    """Largest absolute end-state reconstruction error (pos, vel, acc)."""
    rp = abs(poly_eval(a, b, c, d, e, f, tf, 0) - pf)
    rv = abs(poly_eval(a, b, c, d, e, f, tf, 1) - vf)
    ra = abs(poly_eval(a, b, c, d, e, f, tf, 2) - af)
    r = rp
    if rv > r:
        r = rv
    if ra > r:
        r = ra
    return r


def _bisect_root(a, b, c, d, e, f, order, lo, hi):
    # Bisect a bracketed sign change of the given derivative order.
    flo = poly_eval(a, b, c, d, e, f, lo, order)
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = poly_eval(a, b, c, d, e, f, mid, order)
        if (fm > 0.0) == (flo > 0.0):
            lo = mid
            flo = fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def check_limits(a, b, c, d, e, f, tf, pos_max, vel_max, acc_max, jerk_max,
                 fast=False):
    """Verify |p|,|v|,|acc|,|jerk| within limits over [0, tf].

    Extrema candidates per order: both endpoints plus the interior
    roots of the next derivative.  Position uses a POS_GRID-point scan
    of the (possibly quartic) velocity with bracketed bisection on sign
    changes - no closed-form quartic solver.  Velocity/acceleration/
    jerk use the analytic cubic/quadratic/linear root formulas.  A
    value violates its limit when it exceeds limit + LIMIT_SLACK.

    Returns (ok, worst_ratio, violating_order, violating_time) where
    violating_order is 0..3 (-1 when ok) and worst_ratio is the largest
    |value|/limit seen across all orders.  With fast=True the scan
    aborts at the first violation (cheap orders first) and worst_ratio
    only covers what was inspected.
    """
    worst_ratio = 0.0
    viol_ratio = -1.0
    viol_order = -1
    viol_time = 0.0

    orders = (3, 2, 1, 0) if fast else (0, 1, 2, 3)
    limits = (pos_max, vel_max, acc_max, jerk_max)

    for order in orders:
        limit = limits[order]
        if order == 0:
            # endpoint + grid values, then bisected velocity sign changes
            if tf == 0.0:
                times = [0.0]
            else:
                step = tf / (POS_GRID - 1.0)
                times = [i * step for i in range(POS_GRID - 1)]
                times.append(tf)
                prev_t = times[0]
                prev_v = poly_eval(a, b, c, d, e, f, prev_t, 1)
                brackets = []
                for i in range(1, POS_GRID):
                    cur_t = times[i]
                    cur_v = poly_eval(a, b, c, d, e, f, cur_t, 1)
                    if (prev_v > 0.0) != (cur_v > 0.0) and len(brackets) < 8:
                        brackets.append((prev_t, cur_t))
                    prev_t = cur_t
                    prev_v = cur_v
                for lo, hi in brackets:
                    times.append(_bisect_root(a, b, c, d, e, f, 1, lo, hi))
        elif order == 1:
            times = [0.0, tf]
            for x in cubic_real_roots(20.0 * a, 12.0 * b, 6.0 * c, 2.0 * d):
                if 0.0 < x < tf:
                    times.append(x)
        elif order == 2:
            times = [0.0, tf]
            for x in quadratic_real_roots(60.0 * a, 24.0 * b, 6.0 * c):
                if 0.0 < x < tf:
                    times.append(x)
        else:
            times = [0.0, tf]
            if a != 0.0:
                x = -b / (5.0 * a)
                if 0.0 < x < tf:
                    times.append(x)

        for t in times:
            val = abs(poly_eval(a, b, c, d, e, f, t, order))
            ratio = val / limit
            if ratio > worst_ratio:
                worst_ratio = ratio
            if val > limit + LIMIT_SLACK and ratio > viol_ratio:
                viol_ratio = ratio
                viol_order = order
                viol_time = t
        if fast and viol_order >= 0:
            return False, worst_ratio, viol_order, viol_time

    return viol_order < 0, worst_ratio, viol_order, viol_time


def _probe_quintic(cc, d, e, f, pf, vf, af,
                   pos_max, vel_max, acc_max, jerk_max):
    """Evaluate one probed third-order coefficient.

    Returns (status, tf, a, b): status _FEASIBLE with the minimal
    passing root, _REAL_VIOLATING when positive real roots exist but
    none passes, _NO_REAL otherwise.
    """
    c3, c2, c1, c0 = final_time_cubic(cc, d, e, f, pf, vf, af)
    any_positive = False
    for tf in cubic_real_roots(c3, c2, c1, c0):
        if tf <= 0.0:
            continue
        any_positive = True
        a, b = coeffs_for_final_time(cc, tf, d, e, f, pf, vf, af)
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        if boundary_residual(a, b, cc, d, e, f, tf, pf, vf, af) > RESIDUAL_TOL:
            continue
        ok, _, _, _ = check_limits(a, b, cc, d, e, f, tf,
                                   pos_max, vel_max, acc_max, jerk_max,
                                   fast=True)
        if ok:
            return _FEASIBLE, tf, a, b
    if any_positive:
        return _REAL_VIOLATING, 0.0, 0.0, 0.0
    return _NO_REAL, 0.0, 0.0, 0.0


def _is_degenerate(p0, v0, a0, pf, vf, af):
    return (abs(pf - p0) <= DEGEN_TOL and abs(v0) <= DEGEN_TOL
            and abs(vf) <= DEGEN_TOL and abs(a0) <= DEGEN_TOL
            and abs(af) <= DEGEN_TOL)


def select_jerk(p0, v0, a0, pf, vf, af,
                pos_max, vel_max, acc_max, jerk_max, dc):
    """Pick the third-order coefficient by endpoint probing + bisection.

    The admissible range is [-jerk_max/6, +jerk_max/6] (the segment's
    initial jerk is 6c).  Both endpoints are probed first: if either
    yields a constraint-satisfying positive root the minimal-duration
    endpoint wins outright; if neither endpoint produces any positive
    real root the search reports failure.  Otherwise the interval is
    bisected (midpoint of a symmetric range starts at exactly 0):
    a feasible midpoint is recorded and the search continues toward
    the current left edge, a constraint-violating midpoint discards
    the left half, a rootless midpoint discards the right half.  The
    sides are swapped up front when only the right endpoint violates
    constraints, so "left" is always the violating direction.  The
    search stops when the interval width falls below dc and returns
    the best (smallest-duration) feasible candidate found.

    Returns (found, c, tf, a, b).
    """
    d = 0.5 * a0
    e = v0
    f = p0
    if _is_degenerate(p0, v0, a0, pf, vf, af):
        return True, 0.0, 0.0, 0.0, 0.0

    c_lo = -jerk_max / 6.0
    c_hi = jerk_max / 6.0
    st_lo, tf_lo, a_lo, b_lo = _probe_quintic(
        c_lo, d, e, f, pf, vf, af, pos_max, vel_max, acc_max, jerk_max)
    st_hi, tf_hi, a_hi, b_hi = _probe_quintic(
        c_hi, d, e, f, pf, vf, af, pos_max, vel_max, acc_max, jerk_max)

    if st_lo == _FEASIBLE and (st_hi != _FEASIBLE or tf_lo <= tf_hi):
        return True, c_lo, tf_lo, a_lo, b_lo
    if st_hi == _FEASIBLE:
        return True, c_hi, tf_hi, a_hi, b_hi
    if st_lo == _NO_REAL and st_hi == _NO_REAL:
        return False, 0.0, 0.0, 0.0, 0.0

    left = c_lo
    right = c_hi
    if st_hi == _REAL_VIOLATING and st_lo == _NO_REAL:
        left, right = right, left

    found = False
    best_c = 0.0
    best_tf = 0.0
    best_a = 0.0
    best_b = 0.0
    guard = 0
    while abs(right - left) > dc and guard < 200:
        guard += 1
        cm = 0.5 * (left + right)
        st, tf, a, b = _probe_quintic(
            cm, d, e, f, pf, vf, af, pos_max, vel_max, acc_max, jerk_max)
        if st == _FEASIBLE:
            if not found or tf < best_tf:
                found = True
                best_c = cm
                best_tf = tf
                best_a = a
                best_b = b
            right = cm
        elif st == _REAL_VIOLATING:
            left = cm
        else:
            right = cm
    return found, best_c, best_tf, best_a, best_b


def sync_quintic(init, final, limits, dc, out):
    """Synchronise n joints onto one duration; write 6n coefficients.

    init/final are flat (p, v, a)*n sequences, limits is a flat
    (pos, vel, acc, jerk)*n sequence, out receives (a, b, c, d, e, f)
    per joint.  Per joint the duration is selected independently, the
    common duration is the maximum, and every joint is re-solved at
    the common duration (the final-time condition becomes linear in
    the third-order coefficient).  Fails when any joint's re-solved
    coefficient leaves the admissible jerk range, when a boundary
    residual exceeds RESIDUAL_TOL, or when re-verification of the
    kinematic limits fails.

    Returns (ok, tf).
    """
    n = len(init) // 3
    tf = 0.0
    for j in range(n):
        p0 = init[3 * j]
        v0 = init[3 * j + 1]
        a0 = init[3 * j + 2]
        pf = final[3 * j]
        vf = final[3 * j + 1]
        af = final[3 * j + 2]
        found, _, tfj, _, _ = select_jerk(
            p0, v0, a0, pf, vf, af,
            limits[4 * j], limits[4 * j + 1], limits[4 * j + 2],
            limits[4 * j + 3], dc)
        if not found:
            return False, math.nan
        if tfj > tf:
            tf = tfj

    for j in range(n):
        p0 = init[3 * j]
        v0 = init[3 * j + 1]
        a0 = init[3 * j + 2]
        pf = final[3 * j]
        vf = final[3 * j + 1]
        af = final[3 * j + 2]
        d = 0.5 * a0
        e = v0
        f = p0
        if tf == 0.0:
            a = b = c = 0.0
        else:
            c = resolve_c_at(tf, d, e, f, pf, vf, af)
            if abs(6.0 * c) > limits[4 * j + 3] + LIMIT_SLACK:
                return False, math.nan
            a, b = coeffs_for_final_time(c, tf, d, e, f, pf, vf, af)
            if not (math.isfinite(a) and math.isfinite(b)):
                return False, math.nan
            if boundary_residual(a, b, c, d, e, f, tf, pf, vf, af) > RESIDUAL_TOL:
                return False, math.nan
            ok, _, _, _ = check_limits(
                a, b, c, d, e, f, tf,
                limits[4 * j], limits[4 * j + 1], limits[4 * j + 2],
                limits[4 * j + 3], fast=True)
            if not ok:
                return False, math.nan
        out[6 * j] = a
        out[6 * j + 1] = b
        out[6 * j + 2] = c
        out[6 * j + 3] = d
        out[6 * j + 4] = e
        out[6 * j + 5] = f
    return True, tf


def stop_time_roots(c, d, e):
    """Positive durations bringing velocity and acceleration to zero.

    Eliminating the quartic's leading coefficient from the two
    end-rest equations leaves c*tf**2 + (4d/3)*tf + e = 0.
    """
    return quadratic_real_roots(c, 4.0 * d / 3.0, e)


def stop_b(c, tf, d):
    """Quartic leading coefficient enforcing zero end acceleration."""
    return -(6.0 * c * tf + 2.0 * d) / (12.0 * tf * tf)


def resolve_stop_c_at(tf, d, e):
    """Third-order coefficient solving the stop condition at fixed tf."""
    return -((4.0 * d / 3.0) * tf + e) / (tf * tf)


def stop_residual(b, c, d, e, tf):
    rv = abs(poly_eval(0.0, b, c, d, e, 0.0, tf, 1))
    ra = abs(poly_eval(0.0, b, c, d, e, 0.0, tf, 2))
    return rv if rv > ra else ra


def _probe_stop(cc, d, e, f, pos_max, vel_max, acc_max, jerk_max):
    any_positive = False
    for tf in stop_time_roots(cc, d, e):
        if tf <= 0.0:
            continue
        any_positive = True
        b = stop_b(cc, tf, d)
        if not math.isfinite(b):
            continue
        if stop_residual(b, cc, d, e, tf) > RESIDUAL_TOL:
            continue
        ok, _, _, _ = check_limits(0.0, b, cc, d, e, f, tf,
                                   pos_max, vel_max, acc_max, jerk_max,
                                   fast=True)
        if ok:
            return _FEASIBLE, tf, b
    if any_positive:
        return _REAL_VIOLATING, 0.0, 0.0
    return _NO_REAL, 0.0, 0.0


def select_jerk_stop(p0, v0, a0, pos_max, vel_max, acc_max, jerk_max, dc):
    """Jerk selection for a braking segment (free final position).

    Same endpoint-probe + bisection scheme as select_jerk, with
    candidates drawn from the stop-time quadratic.  Returns
    (found, c, tf, b); the final position is whatever the quartic
    lands on.
    """
    d = 0.5 * a0
    e = v0
    f = p0
    if abs(v0) <= DEGEN_TOL and abs(a0) <= DEGEN_TOL:
        return True, 0.0, 0.0, 0.0

    c_lo = -jerk_max / 6.0
    c_hi = jerk_max / 6.0
    st_lo, tf_lo, b_lo = _probe_stop(
        c_lo, d, e, f, pos_max, vel_max, acc_max, jerk_max)
    st_hi, tf_hi, b_hi = _probe_stop(
        c_hi, d, e, f, pos_max, vel_max, acc_max, jerk_max)

    if st_lo == _FEASIBLE and (st_hi != _FEASIBLE or tf_lo <= tf_hi):
        return True, c_lo, tf_lo, b_lo
    if st_hi == _FEASIBLE:
        return True, c_hi, tf_hi, b_hi
    if st_lo == _NO_REAL and st_hi == _NO_REAL:
        return False, 0.0, 0.0, 0.0

    left = c_lo
    right = c_hi
    if st_hi == _REAL_VIOLATING and st_lo == _NO_REAL:
        left, right = right, left

    found = False
    best_c = 0.0
    best_tf = 0.0
    best_b = 0.0
    guard = 0
    while abs(right - left) > dc and guard < 200:
        guard += 1
        cm = 0.5 * (left + right)
        st, tf, b = _probe_stop(cm, d, e, f,
                                pos_max, vel_max, acc_max, jerk_max)
        if st == _FEASIBLE:
            if not found or tf < best_tf:
                found = True
                best_c = cm
                best_tf = tf
                best_b = b
            right = cm
        elif st == _REAL_VIOLATING:
            left = cm
        else:
            right = cm
    return found, best_c, best_tf, best_b


def sync_stop(init, limits, dc, out):
    """Synchronised braking segments for n joints; write 6n coefficients.

    Same max-duration re-solve scheme as sync_quintic, using the
    linearised stop condition at the common duration.  Returns
    (ok, tf).
    """
    n = len(init) // 3
    tf = 0.0
    for j in range(n):
        found, _, tfj, _ = select_jerk_stop(
            init[3 * j], init[3 * j + 1], init[3 * j + 2],
            limits[4 * j], limits[4 * j + 1], limits[4 * j + 2],
            limits[4 * j + 3], dc)
        if not found:
            return False, math.nan
        if tfj > tf:
            tf = tfj

    for j in range(n):
        p0 = init[3 * j]
        v0 = init[3 * j + 1]
        a0 = init[3 * j + 2]
        d = 0.5 * a0
        e = v0
        f = p0
        if tf == 0.0:
            b = c = 0.0
        else:
            c = resolve_stop_c_at(tf, d, e)
            if abs(6.0 * c) > limits[4 * j + 3] + LIMIT_SLACK:
                return False, math.nan
            b = stop_b(c, tf, d)
            if not math.isfinite(b):
                return False, math.nan
            if stop_residual(b, c, d, e, tf) > RESIDUAL_TOL:
                return False, math.nan
            ok, _, _, _ = check_limits(
                0.0, b, c, d, e, f, tf,
                limits[4 * j], limits[4 * j + 1], limits[4 * j + 2],
                limits[4 * j + 3], fast=True)
            if not ok:
                return False, math.nan
        out[6 * j] = 0.0
        out[6 * j + 1] = b
        out[6 * j + 2] = c
        out[6 * j + 3] = d
        out[6 * j + 4] = e
        out[6 * j + 5] = f
    return True, tf
