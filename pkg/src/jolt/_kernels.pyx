# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Scalar trajectory kernels - compiled backend.

Operation-for-operation port of ``jolt._pure``; see that module for
the full contract.  Arithmetic expressions are copied verbatim (and
the extension is built without fast-math or FMA contraction) so both
backends produce bit-identical results.
"""

from libc.math cimport sqrt, acos, cos, pow, fabs, isfinite, NAN

import math

IM_TOL = 1e-10
LIMIT_SLACK = 1e-9
RESIDUAL_TOL = 1e-8
DEGEN_TOL = 1e-12
POS_GRID = 64
ROOT_DEDUPE = 1e-12

cdef double _IM_TOL = 1e-10
cdef double _LIMIT_SLACK = 1e-9
cdef double _RESIDUAL_TOL = 1e-8
cdef double _DEGEN_TOL = 1e-12
cdef int _POS_GRID = 64
cdef double _ROOT_DEDUPE = 1e-12

cdef int _NO_REAL = 0
cdef int _REAL_VIOLATING = 1
cdef int _FEASIBLE = 2


cdef inline double _cbrt(double x) noexcept nogil:
    if x >= 0.0:
        return pow(x, 1.0 / 3.0)
    return -pow(-x, 1.0 / 3.0)


cdef inline double _peval(double a, double b, double c, double d, double e,
                          double f, double t, int order) noexcept nogil:
    if order == 0:
        return ((((a * t + b) * t + c) * t + d) * t + e) * t + f
    if order == 1:
        return (((5.0 * a * t + 4.0 * b) * t + 3.0 * c) * t + 2.0 * d) * t + e
    if order == 2:
        return ((20.0 * a * t + 12.0 * b) * t + 6.0 * c) * t + 2.0 * d
    if order == 3:
        return (60.0 * a * t + 24.0 * b) * t + 6.0 * c
    return 120.0 * a * t + 24.0 * b


def poly_eval(double a, double b, double c, double d, double e, double f,
              double t, int order):
    """Evaluate the segment polynomial or one of its derivatives."""
    if order < 0 or order > 4:
        raise ValueError("order must be in 0..4")
    return _peval(a, b, c, d, e, f, t, order)


cdef inline double _newton_polish(double c3, double c2, double c1, double c0,
                                  double x) noexcept nogil:
    cdef double fx = ((c3 * x + c2) * x + c1) * x + c0
    cdef double dfx = (3.0 * c3 * x + 2.0 * c2) * x + c1
    if dfx != 0.0:
        x = x - fx / dfx
    return x


cdef int _push_root(double* roots, int count, double x) noexcept nogil:
    cdef int i
    cdef double tmp
    for i in range(count):
        if fabs(x - roots[i]) <= _ROOT_DEDUPE * max(1.0, fabs(x)):
            return count
    roots[count] = x
    count += 1
    i = count - 1
    while i > 0 and roots[i - 1] > roots[i]:
        tmp = roots[i - 1]
        roots[i - 1] = roots[i]
        roots[i] = tmp
        i -= 1
    return count


cdef int _quad_roots(double q2, double q1, double q0,
                     double* out) noexcept nogil:
    cdef double disc, sq, w, x1, x2, tmp
    if q2 == 0.0:
        if q1 == 0.0:
            return 0
        out[0] = -q0 / q1
        return 1
    disc = q1 * q1 - 4.0 * q2 * q0
    if disc < 0.0:
        return 0
    sq = sqrt(disc)
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
        tmp = x1
        x1 = x2
        x2 = tmp
    if x1 == x2:
        out[0] = x1
        return 1
    out[0] = x1
    out[1] = x2
    return 2


cdef int _cubic_roots(double c3, double c2, double c1, double c0,
                      double* out) noexcept nogil:
    cdef double p, q, r, P, Q, shift, disc, sq, u, v, y_real, im, re
    cdef double m, arg, theta, x, x_single, x_double
    cdef double tmp[2]
    cdef int n = 0
    cdef int k, nq

    if c3 == 0.0:
        nq = _quad_roots(c2, c1, c0, tmp)
        for k in range(nq):
            n = _push_root(out, n, _newton_polish(c3, c2, c1, c0, tmp[k]))
        return n

    p = c2 / c3
    q = c1 / c3
    r = c0 / c3
    P = q - p * p / 3.0
    Q = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r
    shift = -p / 3.0
    disc = 0.25 * Q * Q + P * P * P / 27.0

    if disc > 0.0:
        sq = sqrt(disc)
        u = _cbrt(-0.5 * Q + sq)
        v = _cbrt(-0.5 * Q - sq)
        y_real = u + v
        n = _push_root(out, n, _newton_polish(c3, c2, c1, c0, y_real + shift))
        im = 0.8660254037844386 * (u - v)
        re = -0.5 * y_real + shift
        if fabs(im) <= _IM_TOL * max(1.0, fabs(re)):
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
        m = 2.0 * sqrt(-P / 3.0)
        arg = 3.0 * Q / (P * m)
        if arg > 1.0:
            arg = 1.0
        elif arg < -1.0:
            arg = -1.0
        theta = acos(arg) / 3.0
        for k in range(3):
            x = m * cos(theta - 2.0943951023931953 * k) + shift
            n = _push_root(out, n, _newton_polish(c3, c2, c1, c0, x))
    return n


def quadratic_real_roots(double q2, double q1, double q0):
    """Real roots of q2*x**2 + q1*x + q0, ascending tuple."""
    cdef double out[2]
    cdef int n = _quad_roots(q2, q1, q0, out)
    if n == 0:
        return ()
    if n == 1:
        return (out[0],)
    return (out[0], out[1])


def cubic_real_roots(double c3, double c2, double c1, double c0):
    """Real roots of the cubic, ascending tuple (see pure twin)."""
    cdef double out[3]
    cdef int n = _cubic_roots(c3, c2, c1, c0, out)
    if n == 0:
        return ()
    if n == 1:
        return (out[0],)
    if n == 2:
        return (out[0], out[1])
    return (out[0], out[1], out[2])


def solve_cubic_min_positive(double c3, double c2, double c1, double c0):
    """Smallest strictly positive real root, or nan when none exists."""
    cdef double out[3]
    cdef int n = _cubic_roots(c3, c2, c1, c0, out)
    cdef int i
    for i in range(n):
        if out[i] > 0.0:
            return out[i]
    return NAN


def final_time_cubic(double c, double d, double e, double f,
                     double pf, double vf, double af):
    """Coefficients (c3, c2, c1, c0) of the final-time condition."""
    return (c, 3.0 * d - 0.5 * af, 6.0 * e + 4.0 * vf, 10.0 * (f - pf))


cdef inline void _coeffs_for_final_time(double c, double tf, double d,
                                        double e, double f, double pf,
                                        double vf, double af,
                                        double* ra, double* rb) noexcept nogil:
    cdef double tf2 = tf * tf
    cdef double tf3 = tf2 * tf
    cdef double b = (-1.5 * c * tf2 + (-1.5 * d - 0.25 * af) * tf - e + vf) / tf3
    cdef double a = (-12.0 * b * tf2 - 6.0 * c * tf - 2.0 * d + af) / (20.0 * tf3)
    ra[0] = a
    rb[0] = b


def coeffs_for_final_time(double c, double tf, double d, double e, double f,
                          double pf, double vf, double af):
    """Back-substitute the two leading coefficients (a, b) for a root tf."""
    if tf == 0.0:
        raise ZeroDivisionError("tf must be nonzero")
    cdef double a, b
    _coeffs_for_final_time(c, tf, d, e, f, pf, vf, af, &a, &b)
    return a, b


cdef inline double _resolve_c_at(double tf, double d, double e, double f,
                                 double pf, double vf, double af) noexcept nogil:
    cdef double tf2 = tf * tf
    return -((3.0 * d - 0.5 * af) * tf2 + (6.0 * e + 4.0 * vf) * tf
             + 10.0 * (f - pf)) / (tf2 * tf)


def resolve_c_at(double tf, double d, double e, double f,
                 double pf, double vf, double af):
    """Third-order coefficient solving the final-time condition at fixed tf."""
    if tf == 0.0:
        raise ZeroDivisionError("tf must be nonzero")
    return _resolve_c_at(tf, d, e, f, pf, vf, af)


cdef inline double _boundary_residual(double a, double b, double c, double d,
                                      double e, double f, double tf,
                                      double pf, double vf, double af) noexcept nogil:
    cdef double rp = fabs(_peval(a, b, c, d, e, f, tf, 0) - pf)
    cdef double rv = fabs(_peval(a, b, c, d, e, f, tf, 1) - vf)
    cdef double ra = fabs(_peval(a, b, c, d, e, f, tf, 2) - af)
    cdef double r = rp
    if rv > r:
        r = rv
    if ra > r:
        r = ra
    return r


def boundary_residual(double a, double b, double c, double d, double e,
                      double f, double tf, double pf, double vf, double af):
    """Largest absolute end-state reconstruction error (pos, vel, acc)."""
    return _boundary_residual(a, b, c, d, e, f, tf, pf, vf, af)


cdef double _bisect_root(double a, double b, double c, double d, double e,
                         double f, int order, double lo, double hi) noexcept nogil:
    cdef double flo = _peval(a, b, c, d, e, f, lo, order)
    cdef double mid, fm
    cdef int i
    for i in range(48):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = _peval(a, b, c, d, e, f, mid, order)
        if (fm > 0.0) == (flo > 0.0):
            lo = mid
            flo = fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


cdef int _check_limits(double a, double b, double c, double d, double e,
                       double f, double tf, double pos_max, double vel_max,
                       double acc_max, double jerk_max, bint fast,
                       double* w_ratio, int* v_order, double* v_time) noexcept nogil:
    cdef double worst_ratio = 0.0
    cdef double viol_ratio = -1.0
    cdef int viol_order = -1
    cdef double viol_time = 0.0
    cdef double times[80]
    cdef int ntimes
    cdef double limit, step, prev_t, prev_v, cur_t, cur_v, val, ratio, t, x
    cdef double roots[3]
    cdef int nr, i, oi, order
    cdef double br_lo[8]
    cdef double br_hi[8]
    cdef int nbr

    for oi in range(4):
        if fast:
            order = 3 - oi
        else:
            order = oi
        if order == 0:
            limit = pos_max
        elif order == 1:
            limit = vel_max
        elif order == 2:
            limit = acc_max
        else:
            limit = jerk_max

        ntimes = 0
        if order == 0:
            if tf == 0.0:
                times[0] = 0.0
                ntimes = 1
            else:
                step = tf / (_POS_GRID - 1.0)
                for i in range(_POS_GRID - 1):
                    times[i] = i * step
                times[_POS_GRID - 1] = tf
                ntimes = _POS_GRID
                nbr = 0
                prev_t = times[0]
                prev_v = _peval(a, b, c, d, e, f, prev_t, 1)
                for i in range(1, _POS_GRID):
                    cur_t = times[i]
                    cur_v = _peval(a, b, c, d, e, f, cur_t, 1)
                    if (prev_v > 0.0) != (cur_v > 0.0):
                        if nbr < 8:
                            br_lo[nbr] = prev_t
                            br_hi[nbr] = cur_t
                            nbr += 1
                    prev_t = cur_t
                    prev_v = cur_v
                for i in range(nbr):
                    times[ntimes] = _bisect_root(a, b, c, d, e, f, 1,
                                                 br_lo[i], br_hi[i])
                    ntimes += 1
        elif order == 1:
            times[0] = 0.0
            times[1] = tf
            ntimes = 2
            nr = _cubic_roots(20.0 * a, 12.0 * b, 6.0 * c, 2.0 * d, roots)
            for i in range(nr):
                x = roots[i]
                if 0.0 < x < tf:
                    times[ntimes] = x
                    ntimes += 1
        elif order == 2:
            times[0] = 0.0
            times[1] = tf
            ntimes = 2
            nr = _quad_roots(60.0 * a, 24.0 * b, 6.0 * c, roots)
            for i in range(nr):
                x = roots[i]
                if 0.0 < x < tf:
                    times[ntimes] = x
                    ntimes += 1
        else:
            times[0] = 0.0
            times[1] = tf
            ntimes = 2
            if a != 0.0:
                x = -b / (5.0 * a)
                if 0.0 < x < tf:
                    times[ntimes] = x
                    ntimes += 1

        for i in range(ntimes):
            t = times[i]
            val = fabs(_peval(a, b, c, d, e, f, t, order))
            ratio = val / limit
            if ratio > worst_ratio:
                worst_ratio = ratio
            if val > limit + _LIMIT_SLACK and ratio > viol_ratio:
                viol_ratio = ratio
                viol_order = order
                viol_time = t
        if fast and viol_order >= 0:
            w_ratio[0] = worst_ratio
            v_order[0] = viol_order
            v_time[0] = viol_time
            return 0

    w_ratio[0] = worst_ratio
    v_order[0] = viol_order
    v_time[0] = viol_time
    return 1 if viol_order < 0 else 0


def check_limits(double a, double b, double c, double d, double e, double f,
                 double tf, double pos_max, double vel_max, double acc_max,
                 double jerk_max, bint fast=False):
    """Verify |p|,|v|,|acc|,|jerk| within limits over [0, tf]."""
    cdef double w_ratio = 0.0
    cdef int v_order = -1
    cdef double v_time = 0.0
    cdef int ok = _check_limits(a, b, c, d, e, f, tf, pos_max, vel_max,
                                acc_max, jerk_max, fast,
                                &w_ratio, &v_order, &v_time)
    return (ok != 0), w_ratio, v_order, v_time


cdef int _probe_quintic(double cc, double d, double e, double f, double pf,
                        double vf, double af, double pos_max, double vel_max,
                        double acc_max, double jerk_max,
                        double* r_tf, double* r_a, double* r_b) noexcept nogil:
    cdef double c3 = cc
    cdef double c2 = 3.0 * d - 0.5 * af
    cdef double c1 = 6.0 * e + 4.0 * vf
    cdef double c0 = 10.0 * (f - pf)
    cdef double roots[3]
    cdef int nr = _cubic_roots(c3, c2, c1, c0, roots)
    cdef bint any_positive = False
    cdef double tf, a, b, w
    cdef int i, vo, ok
    cdef double vt
    for i in range(nr):
        tf = roots[i]
        if tf <= 0.0:
            continue
        any_positive = True
        _coeffs_for_final_time(cc, tf, d, e, f, pf, vf, af, &a, &b)
        if not (isfinite(a) and isfinite(b)):
            continue
        if _boundary_residual(a, b, cc, d, e, f, tf, pf, vf, af) > _RESIDUAL_TOL:
            continue
        ok = _check_limits(a, b, cc, d, e, f, tf, pos_max, vel_max,
                           acc_max, jerk_max, True, &w, &vo, &vt)
        if ok != 0:
            r_tf[0] = tf
            r_a[0] = a
            r_b[0] = b
            return _FEASIBLE
    r_tf[0] = 0.0
    r_a[0] = 0.0
    r_b[0] = 0.0
    if any_positive:
        return _REAL_VIOLATING
    return _NO_REAL


cdef inline bint _is_degenerate(double p0, double v0, double a0, double pf,
                                double vf, double af) noexcept nogil:
    return (fabs(pf - p0) <= _DEGEN_TOL and fabs(v0) <= _DEGEN_TOL
            and fabs(vf) <= _DEGEN_TOL and fabs(a0) <= _DEGEN_TOL
            and fabs(af) <= _DEGEN_TOL)


cdef int _select_jerk(double p0, double v0, double a0, double pf, double vf,
                      double af, double pos_max, double vel_max,
                      double acc_max, double jerk_max, double dc,
                      double* r_c, double* r_tf, double* r_a,
                      double* r_b) noexcept nogil:
    cdef double d = 0.5 * a0
    cdef double e = v0
    cdef double f = p0
    cdef double c_lo, c_hi, tf_lo, a_lo, b_lo, tf_hi, a_hi, b_hi
    cdef int st_lo, st_hi, st, guard
    cdef double left, right, cm, tf, a, b
    cdef bint found
    cdef double best_c, best_tf, best_a, best_b

    if _is_degenerate(p0, v0, a0, pf, vf, af):
        r_c[0] = 0.0
        r_tf[0] = 0.0
        r_a[0] = 0.0
        r_b[0] = 0.0
        return 1

    c_lo = -jerk_max / 6.0
    c_hi = jerk_max / 6.0
    st_lo = _probe_quintic(c_lo, d, e, f, pf, vf, af, pos_max, vel_max,
                           acc_max, jerk_max, &tf_lo, &a_lo, &b_lo)
    st_hi = _probe_quintic(c_hi, d, e, f, pf, vf, af, pos_max, vel_max,
                           acc_max, jerk_max, &tf_hi, &a_hi, &b_hi)

    if st_lo == _FEASIBLE and (st_hi != _FEASIBLE or tf_lo <= tf_hi):
        r_c[0] = c_lo
        r_tf[0] = tf_lo
        r_a[0] = a_lo
        r_b[0] = b_lo
        return 1
    if st_hi == _FEASIBLE:
        r_c[0] = c_hi
        r_tf[0] = tf_hi
        r_a[0] = a_hi
        r_b[0] = b_hi
        return 1
    if st_lo == _NO_REAL and st_hi == _NO_REAL:
        r_c[0] = 0.0
        r_tf[0] = 0.0
        r_a[0] = 0.0
        r_b[0] = 0.0
        return 0

    left = c_lo
    right = c_hi
    if st_hi == _REAL_VIOLATING and st_lo == _NO_REAL:
        left = c_hi
        right = c_lo

    found = False
    best_c = 0.0
    best_tf = 0.0
    best_a = 0.0
    best_b = 0.0
    guard = 0
    while fabs(right - left) > dc and guard < 200:
        guard += 1
        cm = 0.5 * (left + right)
        st = _probe_quintic(cm, d, e, f, pf, vf, af, pos_max, vel_max,
                            acc_max, jerk_max, &tf, &a, &b)
        if st == _FEASIBLE:
            if (not found) or tf < best_tf:
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
    r_c[0] = best_c
    r_tf[0] = best_tf
    r_a[0] = best_a
    r_b[0] = best_b
    return 1 if found else 0


def select_jerk(double p0, double v0, double a0, double pf, double vf,
                double af, double pos_max, double vel_max, double acc_max,
                double jerk_max, double dc):
    """Pick the third-order coefficient; see the pure twin's docstring."""
    cdef double c, tf, a, b
    cdef int found = _select_jerk(p0, v0, a0, pf, vf, af, pos_max, vel_max,
                                  acc_max, jerk_max, dc, &c, &tf, &a, &b)
    return (found != 0), c, tf, a, b


def sync_quintic(double[:] init, double[:] final, double[:] limits,
                 double dc, double[:] out):
    """Synchronise n joints onto one duration; write 6n coefficients.

    Same contract as the pure twin: returns (ok, tf).
    """
    cdef int n = init.shape[0] // 3
    cdef double tf = 0.0
    cdef int j, found
    cdef double p0, v0, a0, pf, vf, af, d, e, f, c, a, b, tfj, w, vt
    cdef double cj, aj, bj
    cdef int vo, ok

    for j in range(n):
        p0 = init[3 * j]
        v0 = init[3 * j + 1]
        a0 = init[3 * j + 2]
        pf = final[3 * j]
        vf = final[3 * j + 1]
        af = final[3 * j + 2]
        found = _select_jerk(p0, v0, a0, pf, vf, af,
                             limits[4 * j], limits[4 * j + 1],
                             limits[4 * j + 2], limits[4 * j + 3], dc,
                             &cj, &tfj, &aj, &bj)
        if found == 0:
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
            a = 0.0
            b = 0.0
            c = 0.0
        else:
            c = _resolve_c_at(tf, d, e, f, pf, vf, af)
            if fabs(6.0 * c) > limits[4 * j + 3] + _LIMIT_SLACK:
                return False, math.nan
            _coeffs_for_final_time(c, tf, d, e, f, pf, vf, af, &a, &b)
            if not (isfinite(a) and isfinite(b)):
                return False, math.nan
            if _boundary_residual(a, b, c, d, e, f, tf, pf, vf, af) > _RESIDUAL_TOL:
                return False, math.nan
            ok = _check_limits(a, b, c, d, e, f, tf,
                               limits[4 * j], limits[4 * j + 1],
                               limits[4 * j + 2], limits[4 * j + 3],
                               True, &w, &vo, &vt)
            if ok == 0:
                return False, math.nan
        out[6 * j] = a
        out[6 * j + 1] = b
        out[6 * j + 2] = c
        out[6 * j + 3] = d
        out[6 * j + 4] = e
        out[6 * j + 5] = f
    return True, tf


def stop_time_roots(double c, double d, double e):
    """Positive-capable duration roots of the braking condition."""
    cdef double out[2]
    cdef int n = _quad_roots(c, 4.0 * d / 3.0, e, out)
    if n == 0:
        return ()
    if n == 1:
        return (out[0],)
    return (out[0], out[1])


cdef inline double _stop_b(double c, double tf, double d) noexcept nogil:
    return -(6.0 * c * tf + 2.0 * d) / (12.0 * tf * tf)


def stop_b(double c, double tf, double d):
    """Quartic leading coefficient enforcing zero end acceleration."""
    if tf == 0.0:
        raise ZeroDivisionError("tf must be nonzero")
    return _stop_b(c, tf, d)


cdef inline double _resolve_stop_c_at(double tf, double d, double e) noexcept nogil:
    return -((4.0 * d / 3.0) * tf + e) / (tf * tf)


def resolve_stop_c_at(double tf, double d, double e):
    """Third-order coefficient solving the stop condition at fixed tf."""
    if tf == 0.0:
        raise ZeroDivisionError("tf must be nonzero")
    return _resolve_stop_c_at(tf, d, e)


cdef inline double _stop_residual(double b, double c, double d, double e,
                                  double tf) noexcept nogil:
    cdef double rv = fabs(_peval(0.0, b, c, d, e, 0.0, tf, 1))
    cdef double ra = fabs(_peval(0.0, b, c, d, e, 0.0, tf, 2))
    return rv if rv > ra else ra


def stop_residual(double b, double c, double d, double e, double tf):
    """Largest absolute end-rest reconstruction error (vel, acc)."""
    return _stop_residual(b, c, d, e, tf)


cdef int _probe_stop(double cc, double d, double e, double f, double pos_max,
                     double vel_max, double acc_max, double jerk_max,
                     double* r_tf, double* r_b) noexcept nogil:
    cdef double roots[2]
    cdef int nr = _quad_roots(cc, 4.0 * d / 3.0, e, roots)
    cdef bint any_positive = False
    cdef double tf, b, w, vt
    cdef int i, vo, ok
    for i in range(nr):
        tf = roots[i]
        if tf <= 0.0:
            continue
        any_positive = True
        b = _stop_b(cc, tf, d)
        if not isfinite(b):
            continue
        if _stop_residual(b, cc, d, e, tf) > _RESIDUAL_TOL:
            continue
        ok = _check_limits(0.0, b, cc, d, e, f, tf, pos_max, vel_max,
                           acc_max, jerk_max, True, &w, &vo, &vt)
        if ok != 0:
            r_tf[0] = tf
            r_b[0] = b
            return _FEASIBLE
    r_tf[0] = 0.0
    r_b[0] = 0.0
    if any_positive:
        return _REAL_VIOLATING
    return _NO_REAL


cdef int _select_jerk_stop(double p0, double v0, double a0, double pos_max,
                           double vel_max, double acc_max, double jerk_max,
                           double dc, double* r_c, double* r_tf,
                           double* r_b) noexcept nogil:
    cdef double d = 0.5 * a0
    cdef double e = v0
    cdef double f = p0
    cdef double c_lo, c_hi, tf_lo, b_lo, tf_hi, b_hi
    cdef int st_lo, st_hi, st, guard
    cdef double left, right, cm, tf, b
    cdef bint found
    cdef double best_c, best_tf, best_b

    if fabs(v0) <= _DEGEN_TOL and fabs(a0) <= _DEGEN_TOL:
        r_c[0] = 0.0
        r_tf[0] = 0.0
        r_b[0] = 0.0
        return 1

    c_lo = -jerk_max / 6.0
    c_hi = jerk_max / 6.0
    st_lo = _probe_stop(c_lo, d, e, f, pos_max, vel_max, acc_max, jerk_max,
                        &tf_lo, &b_lo)
    st_hi = _probe_stop(c_hi, d, e, f, pos_max, vel_max, acc_max, jerk_max,
                        &tf_hi, &b_hi)

    if st_lo == _FEASIBLE and (st_hi != _FEASIBLE or tf_lo <= tf_hi):
        r_c[0] = c_lo
        r_tf[0] = tf_lo
        r_b[0] = b_lo
        return 1
    if st_hi == _FEASIBLE:
        r_c[0] = c_hi
        r_tf[0] = tf_hi
        r_b[0] = b_hi
        return 1
    if st_lo == _NO_REAL and st_hi == _NO_REAL:
        r_c[0] = 0.0
        r_tf[0] = 0.0
        r_b[0] = 0.0
        return 0

    left = c_lo
    right = c_hi
    if st_hi == _REAL_VIOLATING and st_lo == _NO_REAL:
        left = c_hi
        right = c_lo

    found = False
    best_c = 0.0
    best_tf = 0.0
    best_b = 0.0
    guard = 0
    while fabs(right - left) > dc and guard < 200:
        guard += 1
        cm = 0.5 * (left + right)
        st = _probe_stop(cm, d, e, f, pos_max, vel_max, acc_max, jerk_max,
                         &tf, &b)
        if st == _FEASIBLE:
            if (not found) or tf < best_tf:
                found = True
                best_c = cm
                best_tf = tf
                best_b = b
            right = cm
        elif st == _REAL_VIOLATING:
            left = cm
        else:
            right = cm
    r_c[0] = best_c
    r_tf[0] = best_tf
    r_b[0] = best_b
    return 1 if found else 0


def select_jerk_stop(double p0, double v0, double a0, double pos_max,
                     double vel_max, double acc_max, double jerk_max,
                     double dc):
    """Jerk selection for a braking segment (free final position)."""
    cdef double c, tf, b
    cdef int found = _select_jerk_stop(p0, v0, a0, pos_max, vel_max, acc_max,
                                       jerk_max, dc, &c, &tf, &b)
    return (found != 0), c, tf, b


def sync_stop(double[:] init, double[:] limits, double dc, double[:] out):
    """Synchronised braking segments for n joints; returns (ok, tf)."""
    cdef int n = init.shape[0] // 3
    cdef double tf = 0.0
    cdef int j, found
    cdef double p0, v0, a0, d, e, f, c, b, tfj, w, vt
    cdef double cj, bj
    cdef int vo, ok

    for j in range(n):
        found = _select_jerk_stop(init[3 * j], init[3 * j + 1],
                                  init[3 * j + 2],
                                  limits[4 * j], limits[4 * j + 1],
                                  limits[4 * j + 2], limits[4 * j + 3], dc,
                                  &cj, &tfj, &bj)
        if found == 0:
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
            b = 0.0
            c = 0.0
        else:
            c = _resolve_stop_c_at(tf, d, e)
            if fabs(6.0 * c) > limits[4 * j + 3] + _LIMIT_SLACK:
                return False, math.nan
            b = _stop_b(c, tf, d)
            if not isfinite(b):
                return False, math.nan
            if _stop_residual(b, c, d, e, tf) > _RESIDUAL_TOL:
                return False, math.nan
            ok = _check_limits(0.0, b, c, d, e, f, tf,
                               limits[4 * j], limits[4 * j + 1],
                               limits[4 * j + 2], limits[4 * j + 3],
                               True, &w, &vo, &vt)
            if ok == 0:
                return False, math.nan
        out[6 * j] = 0.0
        out[6 * j + 1] = b
        out[6 * j + 2] = c
        out[6 * j + 3] = d
        out[6 * j + 4] = e
        out[6 * j + 5] = f
    return True, tf
