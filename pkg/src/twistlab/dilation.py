"""Two-qubit Hermitian dilation of a 2x2 non-Hermitian generator.

Given a target He, the dilated Hamiltonian is

    H_en(t) = Q(t) x sigma_z + P(t) x I,
    Q = i [He eta - eta He - i eta_dot] R^{-1},
    P = {He + [i eta_dot + eta He] eta} R^{-1},
    R = eta^dag eta + I,   i dR/dt = He^dag R - R He.

With the scalar initial condition R(0) = (1 + eta0^2) I the R equation has
the closed-form solution R(t) = e^{-i He^dag t} R(0) e^{+i He t}; this is
the orientation that conserves <psi|R|psi> along the non-unitary flow
(equivalently, the dilated two-qubit norm). eta(t) is the unique positive
Hermitian square root of R - I, valid while R - I stays positive definite
(the positivity horizon); eta_dot follows from the Sylvester equation
eta_dot eta + eta eta_dot = Rdot.

The electron (target) qubit is the left tensor factor throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PositivityLost, UnsupportedStructure
from .model import TwisterParams, hamiltonian
from .numerics import (
    I2,
    PAULIS,
    dagger,
    eigh2,
    expm2,
    herm_sqrt_psd,
    hybrid_tol,
    mat_norm,
    sylvester_sym,
)

HERM_TOL = 1e-9
POSITIVITY_FLOOR = 1e-10


def r_of_t(He: np.ndarray, eta0: float, t: float) -> np.ndarray:
    """Closed-form metric R(t) = (1+eta0^2) e^{-i He^dag t} e^{+i He t}."""
    V = expm2(1j * t * np.asarray(He, dtype=complex))
    R = (1.0 + eta0 * eta0) * (dagger(V) @ V)
    return 0.5 * (R + dagger(R))


def r_dot(He: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Rdot = -i (He^dag R - R He)."""
    He = np.asarray(He, dtype=complex)
    return -1j * (dagger(He) @ R - R @ He)


def positivity_margin(He, eta0: float, t: float) -> float:
    """Smallest eigenvalue of R(t) - I."""
    w, _ = eigh2(r_of_t(He, eta0, t) - I2)
    return float(w[0])


def eta_of_t(He, eta0: float, t: float):
    """(eta, eta_dot) at time t.

    eta is the positive Hermitian root of R - I; eta_dot solves the
    symmetric Sylvester equation against Rdot. Raises PositivityLost
    (with the expiry time) once min eig(R - I) <= 1e-10.
    """
    R = r_of_t(He, eta0, t)
    A = R - I2
    w, _ = eigh2(A)
    if w[0] <= POSITIVITY_FLOOR:
        raise PositivityLost(
            f"dilation expired at t={t:.6g} (min eig {w[0]:.3e})", horizon=t
        )
    eta = herm_sqrt_psd(A)
    eta_dot = sylvester_sym(eta, r_dot(He, R))
    return eta, eta_dot


def dilated_hamiltonian(He, eta0: float, t: float):
    """(Q, P, Hen) at time t; Q and P are checked Hermitian to 1e-9.

    Hen = Q x sigma_z + P x I on the 4-dim basis (e1 up, e1 dn, e2 up, e2 dn).
    """
    He = np.asarray(He, dtype=complex)
    R = r_of_t(He, eta0, t)
    eta, eta_dot = eta_of_t(He, eta0, t)
    Rinv = (expm2(-1j * t * He) @ dagger(expm2(-1j * t * He))) / (1.0 + eta0 * eta0)
    Q = 1j * (He @ eta - eta @ He - 1j * eta_dot) @ Rinv
    P = (He + (1j * eta_dot + eta @ He) @ eta) @ Rinv
    for name, M in (("Q", Q), ("P", P)):
        dev = mat_norm(M - dagger(M))
        if dev > hybrid_tol(HERM_TOL, mat_norm(M)):
            raise UnsupportedStructure(f"{name}(t) hermiticity defect {dev:.3e}")
    Q = 0.5 * (Q + dagger(Q))
    P = 0.5 * (P + dagger(P))
    sz = PAULIS[2]
    Hen = np.kron(Q, sz) + np.kron(P, I2)
    return Q, P, Hen


@dataclass
class DilationState:
    """Dilation data at one instant (metadata for exports and tests)."""

    t: float
    R: np.ndarray
    eta: np.ndarray
    eta_dot: np.ndarray


def dilation_state(He, eta0: float, t: float) -> DilationState:
    R = r_of_t(He, eta0, t)
    eta, eta_dot = eta_of_t(He, eta0, t)
    return DilationState(t=t, R=R, eta=eta, eta_dot=eta_dot)


def pauli_coefficients(Hen: np.ndarray):
    """Expand Hen over {I, sx, sy, sz} x {I, sz}.

    X_i = Re tr[Hen (sigma_i x I)]/4, Y_i = Re tr[Hen (sigma_i x sz)]/4,
    sigma_0 = I. Raises UnsupportedStructure if the reconstruction misses
    Hen by more than 1e-8 (weight on e.g. I x sigma_x).
    """
    Hen = np.asarray(Hen, dtype=complex)
    ops = (I2,) + PAULIS
    sz = PAULIS[2]
    X = np.array([np.trace(Hen @ np.kron(s, I2)).real / 4.0 for s in ops])
    Y = np.array([np.trace(Hen @ np.kron(s, sz)).real / 4.0 for s in ops])
    recon = sum(X[i] * np.kron(ops[i], I2) + Y[i] * np.kron(ops[i], sz) for i in range(4))
    resid = mat_norm(Hen - recon)
    if resid > hybrid_tol(1e-8, mat_norm(Hen)):
        raise UnsupportedStructure(
            f"operator has weight {resid:.3e} outside the I/sz ancilla span"
        )
    return X, Y


def pulse_parameters(X, Y):
    """Microwave controls from the Pauli coefficients.

    Omega_i >= 0 in units of 1/pi, delta_i are detunings from resonance,
    phi_i in (-pi, pi] with zero-amplitude channels pinned to phi = 0.
    """
    c1 = (X[1] + Y[1]) + 1j * (X[2] + Y[2])
    c2 = (X[1] - Y[1]) + 1j * (X[2] - Y[2])
    omega1 = abs(c1) / math.pi
    omega2 = abs(c2) / math.pi
    delta1 = 2.0 * (X[3] + Y[3])
    delta2 = 2.0 * (X[3] - Y[3])
    phi1 = -math.atan2(c1.imag, c1.real) if omega1 > 0.0 else 0.0
    phi2 = -math.atan2(c2.imag, c2.real) if omega2 > 0.0 else 0.0
    if phi1 <= -math.pi:
        phi1 += 2.0 * math.pi
    if phi2 <= -math.pi:
        phi2 += 2.0 * math.pi
    return omega1, omega2, delta1, delta2, phi1, phi2


@dataclass
class PulseSample:
    t: float
    X: np.ndarray
    Y: np.ndarray
    Omega1: float
    Omega2: float
    delta1: float
    delta2: float
    phi1: float
    phi2: float


@dataclass
class PulseSchedule:
    """Uniform-grid microwave schedule plus the generating parameters."""

    params: TwisterParams
    k: float
    gamma: float
    eta0: float
    dt: float
    samples: list[PulseSample] = field(default_factory=list)

    def __len__(self):
        return len(self.samples)


def positivity_margins(He, eta0: float, times) -> np.ndarray:
    """min eig(R(t) - I) for an array of times, fully vectorized.

    Uses min eig(R - I) = (1+eta0^2) sigma_min(V)^2 - 1 with V = e^{i He t};
    sigma_min of a 2x2 has the stable closed form 2|det V|^2 / (|V|_F^2 + rad).
    """
    He = np.asarray(He, dtype=complex)
    t = np.asarray(times, dtype=float)
    half_tr = 0.5 * (He[0, 0] + He[1, 1])
    A = He - half_tr * I2
    mu = np.sqrt(A[0, 0] ** 2 + A[0, 1] * A[1, 0])  # A^2 = mu^2 I
    z = 1j * t
    ch = np.cosh(z * mu)
    shc = np.where(np.abs(z * mu) < 1e-8, z, np.sinh(z * mu) / np.where(mu == 0, 1, mu))
    v00 = ch + shc * A[0, 0]
    v01 = shc * A[0, 1]
    v10 = shc * A[1, 0]
    v11 = ch - shc * A[0, 0]
    phase = np.exp(z * half_tr)
    fro = (np.abs(phase) ** 2) * (
        np.abs(v00) ** 2 + np.abs(v01) ** 2 + np.abs(v10) ** 2 + np.abs(v11) ** 2
    )
    det = (phase**2) * (v00 * v11 - v01 * v10)
    det2 = np.abs(det) ** 2
    rad = np.sqrt(np.maximum(fro * fro - 4.0 * det2, 0.0))
    smin2 = 2.0 * det2 / (fro + rad)
    return (1.0 + eta0 * eta0) * smin2 - 1.0


def positivity_horizon(He, eta0: float, t_max: float, dt: float,
                       floor: float = POSITIVITY_FLOOR) -> float:
    """Largest grid time t <= t_max with min eig(R(tau) - I) > floor on [0, t].

    Checks every integrator sample (step midpoints and endpoints).
    Returns 0.0 if even the first step is outside.
    """
    n = int(round(t_max / dt))
    if n <= 0:
        return 0.0
    times = 0.5 * dt * np.arange(1, 2 * n + 1)
    bad = positivity_margins(He, eta0, times) <= floor
    if not bad.any():
        return n * dt
    first = int(np.argmax(bad))  # half-step index of first violation
    return (first // 2) * dt


def pulse_schedule(p: TwisterParams, k: float, gamma: float = 3.5,
                   eta0: float = 30.0, t_end: float = 1.2,
                   dt: float = 0.002) -> PulseSchedule:
    """Microwave schedule realizing He = gamma * H(p, k) on [0, t_end].

    One sample per grid point (t_end/dt + 1 rows). Raises PositivityLost
    with the computed horizon if t_end is outside it.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    He = gamma * hamiltonian(p, k)
    n = int(round(t_end / dt))
    sched = PulseSchedule(params=p, k=k, gamma=gamma, eta0=eta0, dt=dt)
    for i in range(n + 1):
        t = i * dt
        try:
            _, _, Hen = dilated_hamiltonian(He, eta0, t)
        except PositivityLost:
            horizon = positivity_horizon(He, eta0, t_end, dt)
            raise PositivityLost(
                f"t_end={t_end:.6g} beyond positivity horizon {horizon:.6g}",
                horizon=horizon,
            ) from None
        X, Y = pauli_coefficients(Hen)
        om1, om2, d1, d2, ph1, ph2 = pulse_parameters(X, Y)
        sched.samples.append(
            PulseSample(t=t, X=X, Y=Y, Omega1=om1, Omega2=om2,
                        delta1=d1, delta2=d2, phi1=ph1, phi2=ph2)
        )
    return sched


SCHEDULE_HEADER = (
    "t,X0,X1,X2,X3,Y0,Y1,Y2,Y3,Omega1,Omega2,delta1,delta2,phi1,phi2"
)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_schedule_csv(sched: PulseSchedule, path) -> None:
    lines = [SCHEDULE_HEADER]
    for s in sched.samples:
        row = [s.t, *s.X, *s.Y, s.Omega1, s.Omega2, s.delta1, s.delta2, s.phi1, s.phi2]
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
