"""Small dense complex linear algebra with deterministic closed forms.

All 2x2 operations are closed-form (trace/determinant based); the only
iterative routine is the cyclic Jacobi Hermitian eigensolver used for
N x N problems (diffusion-map spectra). numpy supplies the array type,
never the eigensolvers, so identical inputs give identical outputs on
any BLAS.

Tolerances are absolute-relative hybrids tol*max(1, scale): matrix
magnitudes in the pipeline range from ~0.1 to ~1e6 (the dilation metric
R(t) reaches (1+eta0^2) * growth^2).
"""

from __future__ import annotations

import numpy as np

from .errors import DefectiveMatrix, IllConditioned, NotPositive

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

# default tolerances from the build contract
EIG_RESIDUAL_TOL = 1e-10
SQRT_TOL = 1e-12
SYLVESTER_TOL = 1e-12
JACOBI_OFFDIAG_TOL = 1e-13


def hybrid_tol(tol: float, scale: float) -> float:
    """Absolute-relative hybrid: tol * max(1, scale)."""
    return tol * max(1.0, scale)


def mat_norm(M) -> float:
    """Max absolute entry; the scale used by every hybrid tolerance."""
    return float(np.max(np.abs(M)))


def dagger(M):
    return M.conj().T


def is_hermitian(M, tol: float = 1e-12) -> bool:
    return mat_norm(M - dagger(M)) <= hybrid_tol(tol, mat_norm(M))


def eig2(M):
    """Closed-form eigensystem of a finite 2x2 complex matrix.

    Returns (eigenvalues (2,), right eigenvectors as columns (2,2)),
    eigenvectors normalized to unit Euclidean norm. No ordering is
    imposed beyond the quadratic-formula branch (+sqrt first).

    Raises DefectiveMatrix when the two eigenvectors are parallel beyond
    tolerance, i.e. the eigenvalues coalesce but the matrix is not scalar.
    """
    M = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(M.view(float))):
        raise ValueError("eig2 requires finite entries")
    half_tr = 0.5 * (M[0, 0] + M[1, 1])
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    disc = half_tr * half_tr - det
    root = np.sqrt(disc)
    w = np.array([half_tr + root, half_tr - root])

    scale = mat_norm(M)
    if mat_norm(M - half_tr * I2) <= hybrid_tol(1e-13, scale):
        # scalar matrix: repeated eigenvalue but a full eigenbasis
        return np.array([half_tr, half_tr]), I2.copy()

    V = np.empty((2, 2), dtype=complex)
    for j in range(2):
        # rows of (M - w I) are proportional; the null vector comes from
        # whichever row has the larger norm
        r0 = np.array([M[0, 0] - w[j], M[0, 1]])
        r1 = np.array([M[1, 0], M[1, 1] - w[j]])
        row = r0 if np.linalg.norm(r0) >= np.linalg.norm(r1) else r1
        v = np.array([-row[1], row[0]])
        nrm = np.linalg.norm(v)
        if nrm <= 1e-300:
            raise DefectiveMatrix("null eigenvector in eig2")
        V[:, j] = v / nrm
    # parallel eigenvectors = defective: |det V| ~ sqrt(|disc|)/scale near an EP
    if abs(V[0, 0] * V[1, 1] - V[0, 1] * V[1, 0]) <= 1e-6:
        raise DefectiveMatrix(
            f"2x2 matrix is defective (eigenvalue gap {abs(w[0] - w[1]):.3e})"
        )
    return w, V


def expm2(M):
    """Closed-form exponential of a 2x2 complex matrix.

    Splits M = (tr M / 2) I + A with A traceless; then A^2 = mu^2 I with
    mu^2 = -det A, and e^M = e^{tr/2} (cosh(mu) I + sinh(mu)/mu A).
    sinh(mu)/mu switches to its series for |mu| < 1e-4.
    """
    M = np.asarray(M, dtype=complex)
    half_tr = 0.5 * (M[0, 0] + M[1, 1])
    A = M - half_tr * I2
    mu2 = -(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
    mu = np.sqrt(mu2)
    if abs(mu) < 1e-4:
        # cosh, sinh(mu)/mu by even series: exact to < 1e-16 at this cutoff
        ch = 1.0 + mu2 / 2.0 + mu2 * mu2 / 24.0
        shc = 1.0 + mu2 / 6.0 + mu2 * mu2 / 120.0
    else:
        ch = np.cosh(mu)
        shc = np.sinh(mu) / mu
    return np.exp(half_tr) * (ch * I2 + shc * A)


def eigh2(A):
    """Closed-form spectral decomposition of a Hermitian 2x2.

    Returns (w ascending real (2,), U unitary columns). Uses the stable
    rotation parametrization rather than the quadratic formula for the
    eigenvectors.
    """
    A = np.asarray(A, dtype=complex)
    a = A[0, 0].real
    d = A[1, 1].real
    b = A[0, 1]
    half_sum = 0.5 * (a + d)
    half_diff = 0.5 * (a - d)
    rad = np.hypot(half_diff, abs(b))
    w = np.array([half_sum - rad, half_sum + rad])
    if rad <= 1e-300 or abs(b) == 0.0:
        if half_diff <= 0:
            U = I2.copy()
        else:
            U = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        return w, U
    # eigenvector for w[1] (the larger); pick the form whose large component
    # is computed without cancellation
    if half_diff > 0:
        v1 = np.array([w[1] - d, np.conj(b)])
    else:
        v1 = np.array([b, w[1] - a])
    v1 = v1 / np.linalg.norm(v1)
    v0 = np.array([-np.conj(v1[1]), np.conj(v1[0])])
    U = np.column_stack([v0, v1])
    return w, U


def herm_sqrt_psd(A):
    """Positive Hermitian square root of a Hermitian PSD 2x2.

    Raises NotPositive if the minimum eigenvalue is below the hybrid
    -1e-10 floor; small negative rounding noise is clipped to zero.
    """
    A = np.asarray(A, dtype=complex)
    w, U = eigh2(A)
    floor = -hybrid_tol(1e-10, mat_norm(A))
    if w[0] < floor:
        raise NotPositive(f"min eigenvalue {w[0]:.3e} below PSD floor")
    w = np.clip(w, 0.0, None)
    return (U * np.sqrt(w)) @ dagger(U)


def sylvester_sym(B, C):
    """Solve X B + B X = C for Hermitian X, with B Hermitian PD.

    Entrywise in B's eigenbasis: X~_ij = C~_ij / (b_i + b_j). Raises
    IllConditioned when min(b_i + b_j) < 1e-12 * max(b).
    """
    B = np.asarray(B, dtype=complex)
    C = np.asarray(C, dtype=complex)
    w, U = eigh2(B)
    denom_min = 2.0 * w[0]
    if denom_min < 1e-12 * max(w[1], 1.0):
        raise IllConditioned(
            f"Sylvester denominator {denom_min:.3e} vs spectrum max {w[1]:.3e}"
        )
    Ct = dagger(U) @ C @ U
    Xt = Ct / (w[:, None] + w[None, :])
    return U @ Xt @ dagger(U)


def inv2(M):
    """Closed-form 2x2 inverse."""
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if abs(det) <= 1e-300:
        raise IllConditioned("singular 2x2 matrix")
    return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]], dtype=complex) / det


def jacobi_eigh(A, offdiag_tol: float = JACOBI_OFFDIAG_TOL, max_sweeps: int = 60):
    """Cyclic Jacobi eigensolver for Hermitian N x N matrices.

    Deterministic (fixed cyclic pivot order), converges when the
    off-diagonal Frobenius norm drops below offdiag_tol * max(1, ||A||).
    Returns (w ascending, V columns). Works for real symmetric input too.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if mat_norm(A - dagger(A)) > hybrid_tol(1e-10, mat_norm(A)):
        raise ValueError("jacobi_eigh requires a Hermitian matrix")
    H = A.copy()
    V = np.eye(n, dtype=complex)
    tol = hybrid_tol(offdiag_tol, mat_norm(A))
    offdiag_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        # direct sum over off-diagonal entries: the subtractive form
        # ||H||^2 - ||diag||^2 floors at sqrt(eps)*||H|| by cancellation
        off = np.sqrt(float(np.sum(np.abs(H[offdiag_mask]) ** 2)))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = H[p, q]
                if abs(apq) <= tol / max(n, 1):
                    continue
                # complex rotation: phase removes arg(apq), then the real
                # symmetric 2x2 angle formula applies
                phase = apq / abs(apq)
                app = H[p, p].real
                aqq = H[q, q].real
                tau = (aqq - app) / (2.0 * abs(apq))
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c * phase
                # apply rotation on the left and right: rows/cols p, q
                hp = H[:, p].copy()
                hq = H[:, q].copy()
                H[:, p] = c * hp - np.conj(s) * hq
                H[:, q] = s * hp + c * hq
                hp = H[p, :].copy()
                hq = H[q, :].copy()
                H[p, :] = c * hp - s * hq
                H[q, :] = np.conj(s) * hp + c * hq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - np.conj(s) * vq
                V[:, q] = s * vp + c * vq
    else:
        raise RuntimeError("jacobi_eigh failed to converge")
    w = np.diag(H).real
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]
