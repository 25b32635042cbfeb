"""Pure-Python reference implementation of the hot kernels.

Mirrors twistlab._kernels._fast operation for operation; the Cython module
is a literal translation of this file. Matrices are unrolled to scalar
complex arithmetic because the inner loops run ~1e6 times per sweep and
numpy's per-call overhead dominates at 2x2 size.

Kernels:
  dilated_trajectory -- midpoint-stepped two-qubit dilation of a 2x2
      non-Hermitian generator, evolved in the two nuclear sigma_z sectors
      (the dilated Hamiltonian Q x sigma_z + P x I never mixes them).
  mle_project -- feasibility-restored projected gradient descent for the
      population-space least-squares tomography estimate.
"""

import cmath
import math

import numpy as np

POSITIVITY_FLOOR = 1e-10


class KernelPositivityLost(Exception):
    def __init__(self, horizon):
        super().__init__(f"R(t)-I positivity lost after t={horizon:.6g}")
        self.horizon = horizon


class KernelHermiticityError(Exception):
    pass


def _expm2(m00, m01, m10, m11):
    """Closed-form exp of a 2x2: M = (trM/2) I + A, A^2 = mu^2 I."""
    half_tr = 0.5 * (m00 + m11)
    a00 = m00 - half_tr
    mu2 = a00 * a00 + m01 * m10
    mu = cmath.sqrt(mu2)
    if abs(mu) < 1e-4:
        ch = 1.0 + mu2 / 2.0 + mu2 * mu2 / 24.0
        shc = 1.0 + mu2 / 6.0 + mu2 * mu2 / 120.0
    else:
        ch = cmath.cosh(mu)
        shc = cmath.sinh(mu) / mu
    e = cmath.exp(half_tr)
    return (
        e * (ch + shc * a00),
        e * shc * m01,
        e * shc * m10,
        e * (ch - shc * a00),
    )


def _eigh2(h00, h01, h11):
    """Spectral decomposition of Hermitian [[h00, h01], [conj, h11]].

    Returns (w0, w1, u00, u01, u10, u11) with w0 <= w1 and U columns
    (u00, u10), (u01, u11).
    """
    a = h00.real
    d = h11.real
    half_sum = 0.5 * (a + d)
    half_diff = 0.5 * (a - d)
    ab = abs(h01)
    rad = math.hypot(half_diff, ab)
    w0 = half_sum - rad
    w1 = half_sum + rad
    if ab <= 1e-300:
        if half_diff <= 0.0:
            return w0, w1, 1.0 + 0j, 0j, 0j, 1.0 + 0j
        return w0, w1, 0j, 1.0 + 0j, 1.0 + 0j, 0j
    if half_diff > 0.0:
        v1a, v1b = w1 - d, h01.conjugate()
    else:
        v1a, v1b = h01, w1 - a
    n = math.sqrt(abs(v1a) ** 2 + abs(v1b) ** 2)
    v1a /= n
    v1b /= n
    # v0 orthogonal to v1
    return w0, w1, -v1b.conjugate(), v1a, v1a.conjugate(), v1b


def _recombine(s0, s1, u00, u01, u10, u11):
    """U diag(s0, s1) U^dagger for U columns (u00,u10), (u01,u11)."""
    r00 = s0 * u00 * u00.conjugate() + s1 * u01 * u01.conjugate()
    r01 = s0 * u00 * u10.conjugate() + s1 * u01 * u11.conjugate()
    r11 = s0 * u10 * u10.conjugate() + s1 * u11 * u11.conjugate()
    return r00, r01, r11


def dilated_trajectory(He, eta0, psi0, t_end, dt, herm_tol=1e-9):
    """Evolve |psi0>|-> + eta0|psi0>|+> under the dilated Hamiltonian.

    Midpoint-sampled piecewise-constant propagator per nuclear sector:
    sector up evolves under P+Q, sector down under P-Q, each via the
    closed-form 2x2 exponential. Returns (times (n+1,), dilated states
    (n+1, 4) complex in the basis (e1 up, e1 dn, e2 up, e2 dn)).

    Raises KernelPositivityLost when min eig(R(t)-I) <= 1e-10, reporting
    the last good time.
    """
    h00 = complex(He[0, 0])
    h01 = complex(He[0, 1])
    h10 = complex(He[1, 0])
    h11 = complex(He[1, 1])
    # adjoint entries
    g00, g01, g10, g11 = h00.conjugate(), h10.conjugate(), h01.conjugate(), h11.conjugate()
    r0 = 1.0 + eta0 * eta0

    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        n_steps = int(math.ceil(t_end / dt - 1e-12))
    c = 1.0 / math.sqrt(2.0)
    p0, p1 = complex(psi0[0]), complex(psi0[1])
    a0, a1 = c * (p0 - 1j * eta0 * p0), c * (p1 - 1j * eta0 * p1)
    b0, b1 = c * (eta0 * p0 - 1j * p0), c * (eta0 * p1 - 1j * p1)

    out = np.empty((n_steps + 1, 4), dtype=complex)
    times = np.empty(n_steps + 1)
    out[0] = (a0, b0, a1, b1)
    times[0] = 0.0

    for i in range(n_steps):
        tm = (i + 0.5) * dt
        # V = exp(+i He tm); R = r0 V^dagger V is the exact Eq.-S4 solution
        v00, v01, v10, v11 = _expm2(1j * tm * h00, 1j * tm * h01, 1j * tm * h10, 1j * tm * h11)
        r00 = r0 * (v00.conjugate() * v00 + v10.conjugate() * v10)
        r01 = r0 * (v00.conjugate() * v01 + v10.conjugate() * v11)
        r11 = r0 * (v01.conjugate() * v01 + v11.conjugate() * v11)
        # A = R - I, positive part -> eta
        w0, w1, u00, u01, u10, u11 = _eigh2(r00 - 1.0, r01, r11 - 1.0)
        if w0 <= POSITIVITY_FLOOR:
            raise KernelPositivityLost(i * dt)
        s0 = math.sqrt(w0)
        s1 = math.sqrt(w1)
        e00, e01, e11 = _recombine(s0, s1, u00, u01, u10, u11)
        e10 = e01.conjugate()
        # Rdot = -i (He^dag R - R He)
        t00 = g00 * r00 + g01 * r01.conjugate()
        t01 = g00 * r01 + g01 * r11
        t10 = g10 * r00 + g11 * r01.conjugate()
        t11 = g10 * r01 + g11 * r11
        s_00 = r00 * h00 + r01 * h10
        s_01 = r00 * h01 + r01 * h11
        s_10 = r01.conjugate() * h00 + r11 * h10
        s_11 = r01.conjugate() * h01 + r11 * h11
        rd00 = -1j * (t00 - s_00)
        rd01 = -1j * (t01 - s_01)
        rd10 = -1j * (t10 - s_10)
        rd11 = -1j * (t11 - s_11)
        # eta_dot: solve X eta + eta X = Rdot in eta's eigenbasis
        # Ct = U^dag Rdot U
        c00 = (
            u00.conjugate() * (rd00 * u00 + rd01 * u10)
            + u10.conjugate() * (rd10 * u00 + rd11 * u10)
        )
        c01 = (
            u00.conjugate() * (rd00 * u01 + rd01 * u11)
            + u10.conjugate() * (rd10 * u01 + rd11 * u11)
        )
        c10 = (
            u01.conjugate() * (rd00 * u00 + rd01 * u10)
            + u11.conjugate() * (rd10 * u00 + rd11 * u10)
        )
        c11 = (
            u01.conjugate() * (rd00 * u01 + rd01 * u11)
            + u11.conjugate() * (rd10 * u01 + rd11 * u11)
        )
        x00 = c00 / (2.0 * s0)
        x01 = c01 / (s0 + s1)
        x10 = c10 / (s0 + s1)
        x11 = c11 / (2.0 * s1)
        # ed = U X U^dag
        ed00 = (
            u00 * (x00 * u00.conjugate() + x01 * u01.conjugate())
            + u01 * (x10 * u00.conjugate() + x11 * u01.conjugate())
        )
        ed01 = (
            u00 * (x00 * u10.conjugate() + x01 * u11.conjugate())
            + u01 * (x10 * u10.conjugate() + x11 * u11.conjugate())
        )
        ed10 = (
            u10 * (x00 * u00.conjugate() + x01 * u01.conjugate())
            + u11 * (x10 * u00.conjugate() + x11 * u01.conjugate())
        )
        ed11 = (
            u10 * (x00 * u10.conjugate() + x01 * u11.conjugate())
            + u11 * (x10 * u10.conjugate() + x11 * u11.conjugate())
        )
        # R^{-1} = V^{-1} V^{-dagger} / r0 with V^{-1} = exp(-i He tm)
        iv00, iv01, iv10, iv11 = _expm2(
            -1j * tm * h00, -1j * tm * h01, -1j * tm * h10, -1j * tm * h11
        )
        ri00 = (iv00 * iv00.conjugate() + iv01 * iv01.conjugate()) / r0
        ri01 = (iv00 * iv10.conjugate() + iv01 * iv11.conjugate()) / r0
        ri10 = ri01.conjugate()
        ri11 = (iv10 * iv10.conjugate() + iv11 * iv11.conjugate()) / r0
        # M = He eta - eta He - i eta_dot ; Q = i M R^{-1}
        m00 = h00 * e00 + h01 * e10 - (e00 * h00 + e01 * h10) - 1j * ed00
        m01 = h00 * e01 + h01 * e11 - (e00 * h01 + e01 * h11) - 1j * ed01
        m10 = h10 * e00 + h11 * e10 - (e10 * h00 + e11 * h10) - 1j * ed10
        m11 = h10 * e01 + h11 * e11 - (e10 * h01 + e11 * h11) - 1j * ed11
        q00 = 1j * (m00 * ri00 + m01 * ri10)
        q01 = 1j * (m00 * ri01 + m01 * ri11)
        q10 = 1j * (m10 * ri00 + m11 * ri10)
        q11 = 1j * (m10 * ri01 + m11 * ri11)
        # N = He + (i eta_dot + eta He) eta ; P = N R^{-1}
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
        # hermiticity check on Q and P (contract: 1e-9 hybrid), then symmetrize
        scale = max(
            1.0, abs(q00), abs(q01), abs(q11), abs(pp00), abs(pp01), abs(pp11)
        )
        herm_dev = max(
            abs(q01 - q10.conjugate()),
            abs(q00.imag) + abs(q11.imag),
            abs(pp01 - pp10.conjugate()),
            abs(pp00.imag) + abs(pp11.imag),
        )
        if herm_dev > herm_tol * scale:
            raise KernelHermiticityError(
                f"Q/P hermiticity defect {herm_dev:.3e} at t={tm:.6g}"
            )
        q00 = q00.real + 0j
        q11 = q11.real + 0j
        q01 = 0.5 * (q01 + q10.conjugate())
        pp00 = pp00.real + 0j
        pp11 = pp11.real + 0j
        pp01 = 0.5 * (pp01 + pp10.conjugate())
        # sector propagators: up under P+Q, down under P-Q
        ua00, ua01, ua10, ua11 = _expm2(
            -1j * dt * (pp00 + q00),
            -1j * dt * (pp01 + q01),
            -1j * dt * (pp01.conjugate() + q01.conjugate()),
            -1j * dt * (pp11 + q11),
        )
        ub00, ub01, ub10, ub11 = _expm2(
            -1j * dt * (pp00 - q00),
            -1j * dt * (pp01 - q01),
            -1j * dt * (pp01.conjugate() - q01.conjugate()),
            -1j * dt * (pp11 - q11),
        )
        a0, a1 = ua00 * a0 + ua01 * a1, ua10 * a0 + ua11 * a1
        b0, b1 = ub00 * b0 + ub01 * b1, ub10 * b0 + ub11 * b1
        out[i + 1] = (a0, b0, a1, b1)
        times[i + 1] = (i + 1) * dt
    return times, out


# ---------------------------------------------------------------------------
# constrained MLE kernel
# ---------------------------------------------------------------------------

_SUBSPACE_FLOOR = 1e-6


def _constraints(x):
    c = [x[0] + x[1] + x[2] + x[3] - 1.0,
         x[4] + x[5] + x[6] + x[7] - 1.0,
         x[8] + x[9] + x[10] + x[11] - 1.0]
    g = 0.0
    for b in range(3):
        s = x[4 * b] + x[4 * b + 2]
        r = (x[4 * b] - x[4 * b + 2]) / s
        g += r * r
    c.append(g - 1.0)
    return c


def _jacobian(x):
    J = [[0.0] * 12 for _ in range(4)]
    for b in range(3):
        for i in range(4):
            J[b][4 * b + i] = 1.0
    for b in range(3):
        s = x[4 * b] + x[4 * b + 2]
        d = x[4 * b] - x[4 * b + 2]
        r = d / s
        J[3][4 * b] = 2.0 * r * (2.0 * x[4 * b + 2] / (s * s))
        J[3][4 * b + 2] = 2.0 * r * (-2.0 * x[4 * b] / (s * s))
    return J


def _solve4(A, rhs):
    """In-place Gaussian elimination with partial pivoting on a 4x4."""
    M = [row[:] + [r] for row, r in zip(A, rhs)]
    for col in range(4):
        piv = max(range(col, 4), key=lambda r: abs(M[r][col]))
        if abs(M[piv][col]) < 1e-300:
            M[piv][col] = 1e-300
        M[col], M[piv] = M[piv], M[col]
        inv = 1.0 / M[col][col]
        for r in range(col + 1, 4):
            f = M[r][col] * inv
            if f != 0.0:
                for c in range(col, 5):
                    M[r][c] -= f * M[col][c]
    sol = [0.0] * 4
    for r in range(3, -1, -1):
        acc = M[r][4]
        for c in range(r + 1, 4):
            acc -= M[r][c] * sol[c]
        sol[r] = acc / M[r][r]
    return sol


def _floor_subspaces(x):
    for b in range(3):
        s = x[4 * b] + x[4 * b + 2]
        if s < _SUBSPACE_FLOOR:
            bump = 0.5 * (_SUBSPACE_FLOOR - s)
            x[4 * b] += bump
            x[4 * b + 2] += bump
    # degenerate r = 0 zeroes the purity Jacobian row; nudge off it
    if all(
        abs(x[4 * b] - x[4 * b + 2]) < 1e-9 * (x[4 * b] + x[4 * b + 2])
        for b in range(3)
    ):
        x[0] += 1e-6 * (x[0] + x[2])
        x[2] -= 1e-6 * (x[0] + x[2])


def _restore(x, tol=1e-12):
    for _ in range(60):
        _floor_subspaces(x)
        c = _constraints(x)
        if max(abs(v) for v in c) <= tol:
            return True
        J = _jacobian(x)
        JJt = [[sum(J[a][k] * J[b][k] for k in range(12)) for b in range(4)] for a in range(4)]
        lam = _solve4(JJt, c)
        for k in range(12):
            x[k] -= sum(lam[a] * J[a][k] for a in range(4))
    return max(abs(v) for v in _constraints(x)) <= 1e-9


def _projected_gradient(x, p, w):
    g = [2.0 * w[k] * (x[k] - p[k]) for k in range(12)]
    J = _jacobian(x)
    JJt = [[sum(J[a][k] * J[b][k] for k in range(12)) for b in range(4)] for a in range(4)]
    Jg = [sum(J[a][k] * g[k] for k in range(12)) for a in range(4)]
    lam = _solve4(JJt, Jg)
    gt = [g[k] - sum(lam[a] * J[a][k] for a in range(4)) for k in range(12)]
    return gt, math.sqrt(sum(v * v for v in gt))


def mle_project(raw, weights=None, grad_tol=1e-8, max_iter=100000):
    """Minimize sum w_i (x_i - raw_i)^2 on the tomography constraint set.

    Constraints: per-basis normalization (3 linear) and Bloch purity
    sum_b r_b^2 = 1. Descends from the raw point by projecting onto the
    linearized constraint set (the KKT step of the quadratic objective,
    damped), then polishes with projected-gradient steps if needed.
    Returns (x (12,), iterations, projected-gradient norm); raises
    RuntimeError on the iteration cap.
    """
    p = [float(v) for v in raw]
    w = [1.0] * 12 if weights is None else [float(v) for v in weights]
    x = p[:]
    _floor_subspaces(x)
    it = 0
    # stage 1: damped constrained-Newton descent; each step solves
    #   min ||x + d - p||_w  s.t.  J d = -c
    for _ in range(200):
        it += 1
        c = _constraints(x)
        J = _jacobian(x)
        JWJt = [
            [sum(J[a][k] * J[b][k] / w[k] for k in range(12)) for b in range(4)]
            for a in range(4)
        ]
        y = [x[k] - p[k] for k in range(12)]
        rhs = [sum(J[a][k] * y[k] for k in range(12)) - c[a] for a in range(4)]
        lam = _solve4(JWJt, rhs)
        d = [-y[k] + sum(lam[a] * J[a][k] for a in range(4)) / w[k] for k in range(12)]
        dmax = max(abs(v) for v in d)
        scale = 1.0 if dmax <= 0.5 else 0.5 / dmax
        for k in range(12):
            x[k] += scale * d[k]
        _floor_subspaces(x)
        if dmax * scale <= 1e-12 and max(abs(v) for v in _constraints(x)) <= 1e-12:
            break
    _restore(x)
    gt, gnorm = _projected_gradient(x, p, w)
    if gnorm <= grad_tol:
        return np.array(x), it, gnorm
    # stage 2: projected-gradient polish with Armijo backtracking
    f_prev = sum(w[k] * (x[k] - p[k]) ** 2 for k in range(12))
    while it < max_iter:
        it += 1
        gt, gnorm = _projected_gradient(x, p, w)
        if gnorm <= grad_tol:
            return np.array(x), it, gnorm
        alpha = 0.5
        accepted = False
        for _ in range(50):
            y = [x[k] - alpha * gt[k] for k in range(12)]
            if _restore(y):
                f_new = sum(w[k] * (y[k] - p[k]) ** 2 for k in range(12))
                if f_new <= f_prev - 1e-4 * alpha * gnorm * gnorm:
                    x = y
                    f_prev = f_new
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            if gnorm <= 1e2 * grad_tol:
                return np.array(x), it, gnorm
            raise RuntimeError(f"mle stalled, projected gradient {gnorm:.3e}")
    raise RuntimeError(f"mle hit iteration cap, projected gradient {gnorm:.3e}")
