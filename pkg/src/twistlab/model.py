"""Twister Bloch Hamiltonian, analytic phase diagram, biorthogonal eigensystems.

The model is the two-band 1-D Bloch Hamiltonian

    H(k) = i m1 sigma_z + m2 T1 + T2,   T_n = [[0, e^{ink}], [1, 0]],

traceless with discriminant d.d = -m1^2 + (m2+1)(m2 e^{ik} + e^{2ik});
eigenvalues are +-sqrt(d.d) and coalesce at exceptional points where the
discriminant vanishes. On the experimental slice m2 = 0.6 the EPs sit at
(m1, k) = (0.8, pi) and (1.6, 2pi).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ExceptionalPoint, OnBoundary
from .numerics import I2, PAULIS, dagger, eig2, hybrid_tol, inv2, mat_norm

# m1 sweep rule from the experiment: m1(l) = 0.4106 + l * 4/pi^4, l = 1..37
M1_OFFSET = 0.4106
M1_STEP = 4.0 / math.pi**4
EP_DISC_TOL = 1e-12
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class TwisterParams:
    """Dimensionless mass m1 and hopping m2."""

    m1: float
    m2: float

    def __post_init__(self):
        if not (math.isfinite(self.m1) and math.isfinite(self.m2)):
            raise ValueError("TwisterParams must be finite")


def sweep_params(n_samples: int = 37, m2: float = 0.6) -> list[TwisterParams]:
    """The experimental m1 sweep: fixed m2, strictly increasing m1."""
    out = [TwisterParams(M1_OFFSET + l * M1_STEP, m2) for l in range(1, n_samples + 1)]
    for a, b in zip(out, out[1:]):
        assert a.m1 < b.m1
    return out


def brillouin_grid(n_k: int = 16) -> np.ndarray:
    """Equally spaced momenta k = n * 2pi/N for n = 1..N, canonical (0, 2pi]."""
    return 2.0 * np.pi * np.arange(1, n_k + 1) / n_k


def canonical_momentum(k: float) -> float:
    """Map k into the canonical range (0, 2pi]."""
    r = math.fmod(k, 2.0 * math.pi)
    if r <= 0.0:
        r += 2.0 * math.pi
    return r


def hamiltonian(p: TwisterParams, k: float) -> np.ndarray:
    return np.array(
        [
            [1j * p.m1, p.m2 * np.exp(1j * k) + np.exp(2j * k)],
            [p.m2 + 1.0, -1j * p.m1],
        ]
    )


def d_vector(p: TwisterParams, k: float) -> np.ndarray:
    """Coefficients of H = d . sigma, as a length-3 complex vector."""
    upper = p.m2 * np.exp(1j * k) + np.exp(2j * k)
    lower = p.m2 + 1.0
    return np.array(
        [(upper + lower) / 2.0, 1j * (upper - lower) / 2.0, 1j * p.m1]
    )


def discriminant(p: TwisterParams, k: float) -> complex:
    """d.d = -m1^2 + (m2+1)(m2 e^{ik} + e^{2ik}); eigenvalues are +-sqrt(d.d)."""
    return complex(
        -p.m1 * p.m1 + (p.m2 + 1.0) * (p.m2 * np.exp(1j * k) + np.exp(2j * k))
    )


@dataclass
class BiorthEigensystem:
    """Eigenvalues plus right/left eigenvectors with <L_m|R_n> = delta_mn.

    Band 1 is the dynamically attracting state: Im(E1) > Im(E2), with the
    Re(E) tie-break for real spectra (|Im gap| <= 1e-12).
    """

    E1: complex
    E2: complex
    R1: np.ndarray
    R2: np.ndarray
    L1: np.ndarray
    L2: np.ndarray

    def right_matrix(self) -> np.ndarray:
        return np.column_stack([self.R1, self.R2])

    def left_matrix(self) -> np.ndarray:
        return np.column_stack([self.L1, self.L2])

    def energies(self) -> np.ndarray:
        return np.array([self.E1, self.E2])

    def reconstruct(self) -> np.ndarray:
        """Spectral form sum_n E_n |R_n><L_n|."""
        return self.E1 * np.outer(self.R1, self.L1.conj()) + self.E2 * np.outer(
            self.R2, self.L2.conj()
        )


def left_from_right(R: np.ndarray) -> np.ndarray:
    """Left eigenvectors from the right ones by 2x2 inversion.

    Rows of [R1 R2]^{-1} are <L_n|, so <L_m|R_n> = delta_mn holds exactly
    by construction; works for measured (noisy) states too.
    """
    return dagger(inv2(R))


def biorth_eigensystem(H: np.ndarray) -> BiorthEigensystem:
    """Ordered biorthogonal eigensystem of a non-defective 2x2.

    Raises ExceptionalPoint when |(tr/2)^2 - det| <= 1e-12 (the traceless
    discriminant d.d for the twister Hamiltonian).
    """
    H = np.asarray(H, dtype=complex)
    half_tr = 0.5 * (H[0, 0] + H[1, 1])
    disc = half_tr * half_tr - (H[0, 0] * H[1, 1] - H[0, 1] * H[1, 0])
    if abs(disc) <= hybrid_tol(EP_DISC_TOL, mat_norm(H) ** 2):
        raise ExceptionalPoint(f"discriminant {abs(disc):.3e} at tolerance")
    w, V = eig2(H)
    if abs(w[0].imag - w[1].imag) <= 1e-12:
        order = [0, 1] if w[0].real > w[1].real else [1, 0]
    else:
        order = [0, 1] if w[0].imag > w[1].imag else [1, 0]
    w = w[order]
    V = V[:, order]
    L = left_from_right(V)
    return BiorthEigensystem(
        E1=complex(w[0]), E2=complex(w[1]),
        R1=V[:, 0], R2=V[:, 1], L1=L[:, 0], L2=L[:, 1],
    )


def eigensystem(p: TwisterParams, k: float) -> BiorthEigensystem:
    return biorth_eigensystem(hamiltonian(p, k))


class KnotLabel(enum.Enum):
    HOPF_LINK = "HopfLink"
    UNKNOT = "Unknot"
    UNLINK = "Unlink"


def boundary_distance(p: TwisterParams) -> float:
    """Distance to the closest phase-boundary curve.

    Boundaries: the unit circle m1^2 + m2^2 = 1 and the lines m2 = +-m1 - 1.
    """
    d_circle = abs(math.hypot(p.m1, p.m2) - 1.0)
    d_line1 = abs(p.m1 - p.m2 - 1.0) / math.sqrt(2.0)
    d_line2 = abs(p.m1 + p.m2 + 1.0) / math.sqrt(2.0)
    return min(d_circle, d_line1, d_line2)


def _roots_in_unit_disk(p: TwisterParams) -> int:
    """Zeros of (m2+1) z^2 + (m2+1) m2 z - m1^2 with |z| < 1.

    This is d.d as a polynomial in z = e^{ik}; by the argument principle
    the count equals the winding of d.d(k) around the origin. For m2 > -1
    it reduces to [m1^2+m2^2 < 1] + [m1^2 < (m2+1)^2].
    """
    a = p.m2 + 1.0
    b = a * p.m2
    c = -p.m1 * p.m1
    if a == 0.0:
        # linear (or constant) degeneration: d.d = -m1^2 constant
        if b == 0.0:
            return 0
        z = -c / b
        return 1 if abs(z) < 1.0 else 0
    disc = complex(b * b - 4.0 * a * c)
    root = np.sqrt(disc)
    z1 = (-b + root) / (2.0 * a)
    z2 = (-b - root) / (2.0 * a)
    return int(abs(z1) < 1.0) + int(abs(z2) < 1.0)


def phase_label_analytic(p: TwisterParams) -> KnotLabel:
    """Closed-form knot label from the two boundary inequalities.

    Raises OnBoundary within 1e-9 of either boundary curve.
    """
    if boundary_distance(p) <= BOUNDARY_TOL:
        raise OnBoundary(f"({p.m1}, {p.m2}) lies on a phase boundary")
    inside = _roots_in_unit_disk(p)
    return {2: KnotLabel.HOPF_LINK, 1: KnotLabel.UNKNOT, 0: KnotLabel.UNLINK}[inside]
