# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; literal translation of twistlab._kernels._ref.

Same algorithms, same operation order, so both backends agree to rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport hypot, sqrt

from twistlab._kernels._ref import KernelHermiticityError, KernelPositivityLost

cnp.import_array()

ctypedef double complex dc

cdef double POSITIVITY_FLOOR = 1e-10


cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double complex ccosh(double complex)
    double complex csinh(double complex)
    double complex cexp(double complex)
    double complex conj(double complex)
    double cabs(double complex)
    double cimag(double complex)
    double creal(double complex)


cdef inline void _expm2(dc m00, dc m01, dc m10, dc m11,
                        dc *o00, dc *o01, dc *o10, dc *o11) nogil:
    cdef dc half_tr = 0.5 * (m00 + m11)
    cdef dc a00 = m00 - half_tr
    cdef dc mu2 = a00 * a00 + m01 * m10
    cdef dc mu = csqrt(mu2)
    cdef dc ch, shc, e
    if cabs(mu) < 1e-4:
        ch = 1.0 + mu2 / 2.0 + mu2 * mu2 / 24.0
        shc = 1.0 + mu2 / 6.0 + mu2 * mu2 / 120.0
    else:
        ch = ccosh(mu)
        shc = csinh(mu) / mu
    e = cexp(half_tr)
    o00[0] = e * (ch + shc * a00)
    o01[0] = e * shc * m01
    o10[0] = e * shc * m10
    o11[0] = e * (ch - shc * a00)


cdef inline void _eigh2(dc h00, dc h01, dc h11,
                        double *w0, double *w1,
                        dc *u00, dc *u01, dc *u10, dc *u11) nogil:
    cdef double a = creal(h00)
    cdef double d = creal(h11)
    cdef double half_sum = 0.5 * (a + d)
    cdef double half_diff = 0.5 * (a - d)
    cdef double ab = cabs(h01)
    cdef double rad = hypot(half_diff, ab)
    cdef dc v1a, v1b
    cdef double n
    w0[0] = half_sum - rad
    w1[0] = half_sum + rad
    if ab <= 1e-300:
        if half_diff <= 0.0:
            u00[0] = 1.0; u01[0] = 0.0; u10[0] = 0.0; u11[0] = 1.0
        else:
            u00[0] = 0.0; u01[0] = 1.0; u10[0] = 1.0; u11[0] = 0.0
        return
    if half_diff > 0.0:
        v1a = w1[0] - d
        v1b = conj(h01)
    else:
        v1a = h01
        v1b = w1[0] - a
    n = sqrt(cabs(v1a) * cabs(v1a) + cabs(v1b) * cabs(v1b))
    v1a = v1a / n
    v1b = v1b / n
    u00[0] = -conj(v1b)
    u01[0] = v1a
    u10[0] = conj(v1a)
    u11[0] = v1b


def dilated_trajectory(He, double eta0, psi0, double t_end, double dt,
                       double herm_tol=1e-9):
    """See twistlab._kernels._ref.dilated_trajectory."""
    cdef dc h00 = He[0, 0], h01 = He[0, 1], h10 = He[1, 0], h11 = He[1, 1]
    cdef dc g00 = conj(h00), g01 = conj(h10), g10 = conj(h01), g11 = conj(h11)
    cdef double r0 = 1.0 + eta0 * eta0
    cdef Py_ssize_t n_steps = <Py_ssize_t> (t_end / dt + 0.5)
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        n_steps = <Py_ssize_t> ((t_end - 1e-12) / dt) + 1
    cdef double c = 1.0 / sqrt(2.0)
    cdef dc p0 = psi0[0], p1 = psi0[1]
    cdef dc a0 = c * (p0 - 1j * eta0 * p0), a1 = c * (p1 - 1j * eta0 * p1)
    cdef dc b0 = c * (eta0 * p0 - 1j * p0), b1 = c * (eta0 * p1 - 1j * p1)

    out_arr = np.empty((n_steps + 1, 4), dtype=complex)
    times_arr = np.empty(n_steps + 1)
    cdef dc[:, ::1] out = out_arr
    cdef double[::1] times = times_arr
    out[0, 0] = a0; out[0, 1] = b0; out[0, 2] = a1; out[0, 3] = b1
    times[0] = 0.0

    cdef Py_ssize_t i
    cdef double tm, w0, w1, s0, s1, scale, herm_dev, bad_t
    cdef dc v00, v01, v10, v11, iv00, iv01, iv10, iv11
    cdef dc r00, r01, r11, u00, u01, u10, u11
    cdef dc e00, e01, e10, e11, ed00, ed01, ed10, ed11
    cdef dc t00, t01, t10, t11, s_00, s_01, s_10, s_11
    cdef dc rd00, rd01, rd10, rd11, c00, c01, c10, c11
    cdef dc x00, x01, x10, x11, ri00, ri01, ri10, ri11
    cdef dc m00, m01, m10, m11, q00, q01, q10, q11
    cdef dc f00, f01, f10, f11, n00, n01, n10, n11
    cdef dc pp00, pp01, pp10, pp11
    cdef dc ua00, ua01, ua10, ua11, ub00, ub01, ub10, ub11
    cdef dc na0, na1, nb0, nb1
    cdef bint lost = False
    cdef bint herm_bad = False

    with nogil:
        for i in range(n_steps):
            tm = (i + 0.5) * dt
            _expm2(1j * tm * h00, 1j * tm * h01, 1j * tm * h10, 1j * tm * h11,
                   &v00, &v01, &v10, &v11)
            r00 = r0 * (conj(v00) * v00 + conj(v10) * v10)
            r01 = r0 * (conj(v00) * v01 + conj(v10) * v11)
            r11 = r0 * (conj(v01) * v01 + conj(v11) * v11)
            _eigh2(r00 - 1.0, r01, r11 - 1.0, &w0, &w1, &u00, &u01, &u10, &u11)
            if w0 <= POSITIVITY_FLOOR:
                lost = True
                bad_t = i * dt
                break
            s0 = sqrt(w0)
            s1 = sqrt(w1)
            e00 = s0 * u00 * conj(u00) + s1 * u01 * conj(u01)
            e01 = s0 * u00 * conj(u10) + s1 * u01 * conj(u11)
            e11 = s0 * u10 * conj(u10) + s1 * u11 * conj(u11)
            e10 = conj(e01)
            t00 = g00 * r00 + g01 * conj(r01)
            t01 = g00 * r01 + g01 * r11
            t10 = g10 * r00 + g11 * conj(r01)
            t11 = g10 * r01 + g11 * r11
            s_00 = r00 * h00 + r01 * h10
            s_01 = r00 * h01 + r01 * h11
            s_10 = conj(r01) * h00 + r11 * h10
            s_11 = conj(r01) * h01 + r11 * h11
            rd00 = -1j * (t00 - s_00)
            rd01 = -1j * (t01 - s_01)
            rd10 = -1j * (t10 - s_10)
            rd11 = -1j * (t11 - s_11)
            c00 = conj(u00) * (rd00 * u00 + rd01 * u10) + conj(u10) * (rd10 * u00 + rd11 * u10)
            c01 = conj(u00) * (rd00 * u01 + rd01 * u11) + conj(u10) * (rd10 * u01 + rd11 * u11)
            c10 = conj(u01) * (rd00 * u00 + rd01 * u10) + conj(u11) * (rd10 * u00 + rd11 * u10)
            c11 = conj(u01) * (rd00 * u01 + rd01 * u11) + conj(u11) * (rd10 * u01 + rd11 * u11)
            x00 = c00 / (2.0 * s0)
            x01 = c01 / (s0 + s1)
            x10 = c10 / (s0 + s1)
            x11 = c11 / (2.0 * s1)
            ed00 = u00 * (x00 * conj(u00) + x01 * conj(u01)) + u01 * (x10 * conj(u00) + x11 * conj(u01))
            ed01 = u00 * (x00 * conj(u10) + x01 * conj(u11)) + u01 * (x10 * conj(u10) + x11 * conj(u11))
            ed10 = u10 * (x00 * conj(u00) + x01 * conj(u01)) + u11 * (x10 * conj(u00) + x11 * conj(u01))
            ed11 = u10 * (x00 * conj(u10) + x01 * conj(u11)) + u11 * (x10 * conj(u10) + x11 * conj(u11))
            _expm2(-1j * tm * h00, -1j * tm * h01, -1j * tm * h10, -1j * tm * h11,
                   &iv00, &iv01, &iv10, &iv11)
            ri00 = (iv00 * conj(iv00) + iv01 * conj(iv01)) / r0
            ri01 = (iv00 * conj(iv10) + iv01 * conj(iv11)) / r0
            ri10 = conj(ri01)
            ri11 = (iv10 * conj(iv10) + iv11 * conj(iv11)) / r0
            m00 = h00 * e00 + h01 * e10 - (e00 * h00 + e01 * h10) - 1j * ed00
            m01 = h00 * e01 + h01 * e11 - (e00 * h01 + e01 * h11) - 1j * ed01
            m10 = h10 * e00 + h11 * e10 - (e10 * h00 + e11 * h10) - 1j * ed10
            m11 = h10 * e01 + h11 * e11 - (e10 * h01 + e11 * h11) - 1j * ed11
            q00 = 1j * (m00 * ri00 + m01 * ri10)
            q01 = 1j * (m00 * ri01 + m01 * ri11)
            q10 = 1j * (m10 * ri00 + m11 * ri10)
            q11 = 1j * (m10 * ri01 + m11 * ri11)
            f00 = 1j * ed00 + e00 * h00 + e01 * h10
            f01 = 1j * ed01 + e00 * h01 + e01 * h11
            f10 = 1j * ed10 + e10 * h00 + e11 * h10
            f11 = 1j * ed11 + e10 * h01 + e11 * h11
            n00 = h00 + f00 * e00 + f01 * e10
            n01 = h01 + f00 * e01 + f01 * e11
            n10 = h10 + f10 * e00 + f11 * e10
            n11 = h11 + f10 * e01 + f11 * e11
            pp00 = n00 * ri00 + n01 * ri10
            pp01 = n00 * ri01 + n01 * ri11
            pp10 = n10 * ri00 + n11 * ri10
            pp11 = n10 * ri01 + n11 * ri11
            scale = 1.0
            if cabs(q00) > scale: scale = cabs(q00)
            if cabs(q01) > scale: scale = cabs(q01)
            if cabs(q11) > scale: scale = cabs(q11)
            if cabs(pp00) > scale: scale = cabs(pp00)
            if cabs(pp01) > scale: scale = cabs(pp01)
            if cabs(pp11) > scale: scale = cabs(pp11)
            herm_dev = cabs(q01 - conj(q10))
            if abs(cimag(q00)) + abs(cimag(q11)) > herm_dev:
                herm_dev = abs(cimag(q00)) + abs(cimag(q11))
            if cabs(pp01 - conj(pp10)) > herm_dev:
                herm_dev = cabs(pp01 - conj(pp10))
            if abs(cimag(pp00)) + abs(cimag(pp11)) > herm_dev:
                herm_dev = abs(cimag(pp00)) + abs(cimag(pp11))
            if herm_dev > herm_tol * scale:
                herm_bad = True
                bad_t = tm
                break
            q00 = creal(q00)
            q11 = creal(q11)
            q01 = 0.5 * (q01 + conj(q10))
            pp00 = creal(pp00)
            pp11 = creal(pp11)
            pp01 = 0.5 * (pp01 + conj(pp10))
            _expm2(-1j * dt * (pp00 + q00), -1j * dt * (pp01 + q01),
                   -1j * dt * (conj(pp01) + conj(q01)), -1j * dt * (pp11 + q11),
                   &ua00, &ua01, &ua10, &ua11)
            _expm2(-1j * dt * (pp00 - q00), -1j * dt * (pp01 - q01),
                   -1j * dt * (conj(pp01) - conj(q01)), -1j * dt * (pp11 - q11),
                   &ub00, &ub01, &ub10, &ub11)
            na0 = ua00 * a0 + ua01 * a1
            na1 = ua10 * a0 + ua11 * a1
            nb0 = ub00 * b0 + ub01 * b1
            nb1 = ub10 * b0 + ub11 * b1
            a0 = na0; a1 = na1; b0 = nb0; b1 = nb1
            out[i + 1, 0] = a0
            out[i + 1, 1] = b0
            out[i + 1, 2] = a1
            out[i + 1, 3] = b1
            times[i + 1] = (i + 1) * dt

    if lost:
        raise KernelPositivityLost(bad_t)
    if herm_bad:
        raise KernelHermiticityError(
            f"Q/P hermiticity defect above {herm_tol:g} at t={bad_t:.6g}"
        )
    return times_arr, out_arr


# ---------------------------------------------------------------------------
# constrained MLE kernel
# ---------------------------------------------------------------------------

cdef double _SUBSPACE_FLOOR = 1e-6


cdef void _constraints(double *x, double *c) nogil:
    cdef int b
    cdef double s, r, g = 0.0
    c[0] = x[0] + x[1] + x[2] + x[3] - 1.0
    c[1] = x[4] + x[5] + x[6] + x[7] - 1.0
    c[2] = x[8] + x[9] + x[10] + x[11] - 1.0
    for b in range(3):
        s = x[4 * b] + x[4 * b + 2]
        r = (x[4 * b] - x[4 * b + 2]) / s
        g += r * r
    c[3] = g - 1.0


cdef void _jacobian(double *x, double *J) nogil:
    # J is 4x12 row-major
    cdef int b, i
    cdef double s, d, r
    for i in range(48):
        J[i] = 0.0
    for b in range(3):
        for i in range(4):
            J[b * 12 + 4 * b + i] = 1.0
    for b in range(3):
        s = x[4 * b] + x[4 * b + 2]
        d = x[4 * b] - x[4 * b + 2]
        r = d / s
        J[3 * 12 + 4 * b] = 2.0 * r * (2.0 * x[4 * b + 2] / (s * s))
        J[3 * 12 + 4 * b + 2] = 2.0 * r * (-2.0 * x[4 * b] / (s * s))


cdef bint _solve4(double *A, double *rhs, double *sol) nogil:
    # Gaussian elimination with partial pivoting on a 4x4 (row-major copy)
    cdef double M[20]
    cdef int r, col, piv, cc
    cdef double best, f, inv, acc
    for r in range(4):
        for col in range(4):
            M[r * 5 + col] = A[r * 4 + col]
        M[r * 5 + 4] = rhs[r]
    for col in range(4):
        piv = col
        best = abs(M[col * 5 + col])
        for r in range(col + 1, 4):
            if abs(M[r * 5 + col]) > best:
                best = abs(M[r * 5 + col])
                piv = r
        if best < 1e-300:
            M[piv * 5 + col] = 1e-300
        if piv != col:
            for cc in range(5):
                f = M[col * 5 + cc]
                M[col * 5 + cc] = M[piv * 5 + cc]
                M[piv * 5 + cc] = f
        inv = 1.0 / M[col * 5 + col]
        for r in range(col + 1, 4):
            f = M[r * 5 + col] * inv
            if f != 0.0:
                for cc in range(col, 5):
                    M[r * 5 + cc] -= f * M[col * 5 + cc]
    for r in range(3, -1, -1):
        acc = M[r * 5 + 4]
        for cc in range(r + 1, 4):
            acc -= M[r * 5 + cc] * sol[cc]
        sol[r] = acc / M[r * 5 + r]
    return True


cdef void _floor_subspaces(double *x) nogil:
    cdef int b
    cdef double s, bump
    cdef bint degenerate = True
    for b in range(3):
        s = x[4 * b] + x[4 * b + 2]
        if s < _SUBSPACE_FLOOR:
            bump = 0.5 * (_SUBSPACE_FLOOR - s)
            x[4 * b] += bump
            x[4 * b + 2] += bump
    for b in range(3):
        if abs(x[4 * b] - x[4 * b + 2]) >= 1e-9 * (x[4 * b] + x[4 * b + 2]):
            degenerate = False
    if degenerate:
        # r = 0 zeroes the purity Jacobian row; nudge off it
        x[0] += 1e-6 * (x[0] + x[2])
        x[2] -= 1e-6 * (x[0] + x[2])


cdef bint _restore(double *x, double tol) nogil:
    cdef double c[4]
    cdef double J[48]
    cdef double JJt[16]
    cdef double lam[4]
    cdef int it, a, b, k
    cdef double m, acc
    for it in range(60):
        _floor_subspaces(x)
        _constraints(x, c)
        m = 0.0
        for a in range(4):
            if abs(c[a]) > m:
                m = abs(c[a])
        if m <= tol:
            return True
        _jacobian(x, J)
        for a in range(4):
            for b in range(4):
                acc = 0.0
                for k in range(12):
                    acc += J[a * 12 + k] * J[b * 12 + k]
                JJt[a * 4 + b] = acc
        _solve4(JJt, c, lam)
        for k in range(12):
            acc = 0.0
            for a in range(4):
                acc += lam[a] * J[a * 12 + k]
            x[k] -= acc
    _constraints(x, c)
    m = 0.0
    for a in range(4):
        if abs(c[a]) > m:
            m = abs(c[a])
    return m <= 1e-9


cdef double _projected_gradient(double *x, double *p, double *w, double *gt) nogil:
    cdef double g[12]
    cdef double J[48]
    cdef double JJt[16]
    cdef double Jg[4]
    cdef double lam[4]
    cdef int k, a, b
    cdef double acc, gnorm
    for k in range(12):
        g[k] = 2.0 * w[k] * (x[k] - p[k])
    _jacobian(x, J)
    for a in range(4):
        for b in range(4):
            acc = 0.0
            for k in range(12):
                acc += J[a * 12 + k] * J[b * 12 + k]
            JJt[a * 4 + b] = acc
        acc = 0.0
        for k in range(12):
            acc += J[a * 12 + k] * g[k]
        Jg[a] = acc
    _solve4(JJt, Jg, lam)
    gnorm = 0.0
    for k in range(12):
        acc = 0.0
        for a in range(4):
            acc += lam[a] * J[a * 12 + k]
        gt[k] = g[k] - acc
        gnorm += gt[k] * gt[k]
    return sqrt(gnorm)


def mle_project(raw, weights=None, double grad_tol=1e-8, long max_iter=100000):
    """See twistlab._kernels._ref.mle_project."""
    cdef double p[12]
    cdef double w[12]
    cdef double x[12]
    cdef double y[12]
    cdef double d[12]
    cdef double gt[12]
    cdef double J[48]
    cdef double JWJt[16]
    cdef double c[4]
    cdef double rhs[4]
    cdef double lam[4]
    cdef int k, a, b, newton
    cdef long it = 0, ls
    cdef double f_prev, f_new, gnorm, alpha, acc, dmax, scale, cmax
    cdef bint accepted, converged = False

    for k in range(12):
        p[k] = raw[k]
        w[k] = 1.0 if weights is None else weights[k]
        x[k] = p[k]
    # stage 1: damped constrained-Newton descent
    with nogil:
        _floor_subspaces(x)
        for newton in range(200):
            it += 1
            _constraints(x, c)
            _jacobian(x, J)
            for a in range(4):
                for b in range(4):
                    acc = 0.0
                    for k in range(12):
                        acc += J[a * 12 + k] * J[b * 12 + k] / w[k]
                    JWJt[a * 4 + b] = acc
                acc = 0.0
                for k in range(12):
                    acc += J[a * 12 + k] * (x[k] - p[k])
                rhs[a] = acc - c[a]
            _solve4(JWJt, rhs, lam)
            dmax = 0.0
            for k in range(12):
                acc = 0.0
                for a in range(4):
                    acc += lam[a] * J[a * 12 + k]
                d[k] = -(x[k] - p[k]) + acc / w[k]
                if abs(d[k]) > dmax:
                    dmax = abs(d[k])
            scale = 1.0 if dmax <= 0.5 else 0.5 / dmax
            for k in range(12):
                x[k] += scale * d[k]
            _floor_subspaces(x)
            if dmax * scale <= 1e-12:
                _constraints(x, c)
                cmax = 0.0
                for a in range(4):
                    if abs(c[a]) > cmax:
                        cmax = abs(c[a])
                if cmax <= 1e-12:
                    break
        _restore(x, 1e-12)
        gnorm = _projected_gradient(x, p, w, gt)
    if gnorm <= grad_tol:
        return np.array([x[k] for k in range(12)]), it, gnorm
    # stage 2: projected-gradient polish
    f_prev = 0.0
    for k in range(12):
        f_prev += w[k] * (x[k] - p[k]) * (x[k] - p[k])
    while it < max_iter:
        it += 1
        with nogil:
            gnorm = _projected_gradient(x, p, w, gt)
        if gnorm <= grad_tol:
            return np.array([x[k] for k in range(12)]), it, gnorm
        alpha = 0.5
        accepted = False
        with nogil:
            for ls in range(50):
                for k in range(12):
                    y[k] = x[k] - alpha * gt[k]
                if _restore(y, 1e-12):
                    f_new = 0.0
                    for k in range(12):
                        f_new += w[k] * (y[k] - p[k]) * (y[k] - p[k])
                    if f_new <= f_prev - 1e-4 * alpha * gnorm * gnorm:
                        for k in range(12):
                            x[k] = y[k]
                        f_prev = f_new
                        accepted = True
                        break
                alpha *= 0.5
        if not accepted:
            if gnorm <= 1e2 * grad_tol:
                return np.array([x[k] for k in range(12)]), it, gnorm
            raise RuntimeError(f"mle stalled, projected gradient {gnorm:.3e}")
    raise RuntimeError(f"mle hit iteration cap, projected gradient {gnorm:.3e}")
