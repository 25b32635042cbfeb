import numpy as np
import pytest

from twistlab import dilation, numerics as nm
from twistlab.errors import PositivityLost, UnsupportedStructure
from twistlab.model import TwisterParams, hamiltonian

ETA0 = 30.0
R0 = 1.0 + ETA0**2


def random_he(rng, scale=1.0):
    return scale * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))


class TestRofT:
    def test_hermitian_constant(self):
        rng = np.random.default_rng(1)
        M = random_he(rng)
        He = 0.5 * (M + M.conj().T)
        for t in (0.0, 0.3, 1.7):
            np.testing.assert_allclose(
                dilation.r_of_t(He, ETA0, t), R0 * nm.I2, atol=1e-9 * R0
            )

    def test_t0(self):
        rng = np.random.default_rng(2)
        np.testing.assert_allclose(
            dilation.r_of_t(random_he(rng), ETA0, 0.0), R0 * nm.I2, atol=1e-10 * R0
        )

    def test_closed_form_sigma_z(self):
        # He = i m1 sigma_z: R(t) = (1+eta0^2) diag(e^{-2 m1 t}, e^{2 m1 t})
        m1 = 0.7
        He = 1j * m1 * nm.SIGMA_Z
        for t in (0.1, 0.5, 1.0):
            expect = R0 * np.diag([np.exp(-2 * m1 * t), np.exp(2 * m1 * t)])
            R = dilation.r_of_t(He, ETA0, t)
            np.testing.assert_allclose(R, expect, rtol=1e-12)

    def test_solves_dynamical_equation(self):
        # central finite difference residual of i dR/dt = He^dag R - R He
        rng = np.random.default_rng(3)
        h = 1e-4
        for _ in range(20):
            He = random_he(rng)
            t = rng.uniform(0.05, 0.6)
            Rp = dilation.r_of_t(He, ETA0, t + h)
            Rm = dilation.r_of_t(He, ETA0, t - h)
            R = dilation.r_of_t(He, ETA0, t)
            lhs = 1j * (Rp - Rm) / (2 * h)
            rhs = He.conj().T @ R - R @ He
            assert nm.mat_norm(lhs - rhs) <= 1e-6 * max(1.0, nm.mat_norm(rhs))


class TestEtaOfT:
    def test_t0_scalar(self):
        rng = np.random.default_rng(4)
        eta, _ = dilation.eta_of_t(random_he(rng), ETA0, 0.0)
        np.testing.assert_allclose(eta, ETA0 * nm.I2, atol=1e-7)

    def test_eta_dot_closed_form_sigma_z(self):
        # d/dt sqrt(R0 e^{-+2 m1 t} - 1) at t=0 -> -+(1+eta0^2) m1 / eta0
        m1 = 0.9
        He = 1j * m1 * nm.SIGMA_Z
        _, eta_dot = dilation.eta_of_t(He, ETA0, 0.0)
        expect = -(R0 / ETA0) * m1 * nm.SIGMA_Z
        np.testing.assert_allclose(eta_dot, expect, rtol=1e-9)

    def test_hermitian_eta_dot_zero(self):
        rng = np.random.default_rng(5)
        M = random_he(rng)
        He = 0.5 * (M + M.conj().T)
        _, eta_dot = dilation.eta_of_t(He, ETA0, 0.4)
        assert nm.mat_norm(eta_dot) <= 1e-7

    def test_sylvester_residual(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            He = random_he(rng)
            t = rng.uniform(0.0, 0.5)
            R = dilation.r_of_t(He, ETA0, t)
            eta, eta_dot = dilation.eta_of_t(He, ETA0, t)
            rd = dilation.r_dot(He, R)
            res = nm.mat_norm(eta_dot @ eta + eta @ eta_dot - rd)
            assert res <= nm.hybrid_tol(1e-10, nm.mat_norm(rd))

    def test_positivity_lost(self):
        He = 1j * 1.0 * nm.SIGMA_Z
        t_star = np.log(R0) / 2.0
        with pytest.raises(PositivityLost):
            dilation.eta_of_t(He, ETA0, t_star + 0.1)


class TestDilatedHamiltonian:
    def test_hermitian_target(self):
        rng = np.random.default_rng(7)
        M = random_he(rng)
        He = 0.5 * (M + M.conj().T)
        Q, P, Hen = dilation.dilated_hamiltonian(He, ETA0, 0.3)
        assert nm.mat_norm(Q) <= 1e-7
        np.testing.assert_allclose(P, He, atol=1e-7)
        np.testing.assert_allclose(Hen, np.kron(He, nm.I2), atol=1e-6)

    def test_hermiticity_sweep_point(self):
        He = 3.5 * hamiltonian(TwisterParams(0.9855, 0.6), 0.125 * np.pi)
        for t in np.linspace(0.0, 1.2, 25):
            Q, P, _ = dilation.dilated_hamiltonian(He, ETA0, t)
            assert nm.mat_norm(Q - Q.conj().T) <= 1e-9 * max(1, nm.mat_norm(Q))
            assert nm.mat_norm(P - P.conj().T) <= 1e-9 * max(1, nm.mat_norm(P))


class TestPauliCoefficients:
    def test_sigma_z_tensor_i(self):
        X, Y = dilation.pauli_coefficients(np.kron(nm.SIGMA_Z, nm.I2))
        np.testing.assert_allclose(X, [0, 0, 0, 1], atol=1e-14)
        np.testing.assert_allclose(Y, np.zeros(4), atol=1e-14)

    def test_sigma_x_tensor_sigma_z(self):
        X, Y = dilation.pauli_coefficients(np.kron(nm.SIGMA_X, nm.SIGMA_Z))
        np.testing.assert_allclose(Y, [0, 1, 0, 0], atol=1e-14)
        np.testing.assert_allclose(X, np.zeros(4), atol=1e-14)

    def test_round_trip_random_qp(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            q = random_he(rng)
            p = random_he(rng)
            Q = 0.5 * (q + q.conj().T)
            P = 0.5 * (p + p.conj().T)
            Hen = np.kron(Q, nm.SIGMA_Z) + np.kron(P, nm.I2)
            X, Y = dilation.pauli_coefficients(Hen)
            recon = sum(
                X[i] * np.kron(op, nm.I2) + Y[i] * np.kron(op, nm.SIGMA_Z)
                for i, op in enumerate((nm.I2,) + nm.PAULIS)
            )
            np.testing.assert_allclose(recon, Hen, atol=1e-12 * max(1, nm.mat_norm(Hen)))

    def test_unsupported_structure(self):
        with pytest.raises(UnsupportedStructure):
            dilation.pauli_coefficients(np.kron(nm.I2, nm.SIGMA_X))


class TestPulseParameters:
    def test_pure_sigma_y(self):
        a = 0.8
        om1, om2, d1, d2, ph1, ph2 = dilation.pulse_parameters(
            np.array([0, 0, a, 0.0]), np.zeros(4)
        )
        assert om1 == pytest.approx(a / np.pi)
        assert om2 == pytest.approx(a / np.pi)
        assert d1 == d2 == 0.0
        # -arg(i a) = -pi/2
        assert ph1 == pytest.approx(-np.pi / 2)

    def test_pure_sigma_x(self):
        a = 0.5
        om1, om2, d1, d2, ph1, ph2 = dilation.pulse_parameters(
            np.array([0, a, 0, 0.0]), np.zeros(4)
        )
        assert om1 == om2 == pytest.approx(a / np.pi)
        assert ph1 == ph2 == 0.0

    def test_detunings(self):
        c, d = 0.3, -0.2
        _, _, d1, d2, *_ = dilation.pulse_parameters(
            np.array([0, 0, 0, c]), np.array([0, 0, 0, d])
        )
        assert d1 == pytest.approx(2 * (c + d))
        assert d2 == pytest.approx(2 * (c - d))
        om1, om2, *_ , ph1, ph2 = dilation.pulse_parameters(
            np.array([0, 0, 0, c]), np.array([0, 0, 0, d])
        )
        assert om1 == om2 == 0.0
        assert ph1 == ph2 == 0.0


class TestPulseSchedule:
    def test_fig_parameters_601_samples(self):
        sched = dilation.pulse_schedule(
            TwisterParams(0.9855, 0.6), 0.125 * np.pi,
            gamma=3.5, eta0=30.0, t_end=1.2, dt=0.002,
        )
        assert len(sched) == 601
        assert sched.samples[0].t == 0.0
        assert sched.samples[-1].t == pytest.approx(1.2)
        # curves smooth and bounded: adjacent sample deltas small
        om1 = np.array([s.Omega1 for s in sched.samples])
        assert np.all(np.isfinite(om1)) and om1.max() < 50
        assert np.max(np.abs(np.diff(om1))) < 0.5

    def test_horizon_closed_form(self):
        m1, gamma = 0.9, 3.5
        He = 1j * gamma * m1 * nm.SIGMA_Z
        t_star = np.log(R0) / (2 * gamma * m1)
        hz = dilation.positivity_horizon(He, ETA0, 2.0, 1e-3)
        assert hz == pytest.approx(t_star, abs=2e-3)

    def test_beyond_horizon_raises(self):
        with pytest.raises(PositivityLost) as ei:
            dilation.pulse_schedule(
                TwisterParams(1.93, 0.6), np.pi, gamma=3.5, eta0=30.0,
                t_end=1.2, dt=0.002,
            )
        assert ei.value.horizon is not None
        assert 0.0 < ei.value.horizon < 1.2

    def test_csv_export(self, tmp_path):
        sched = dilation.pulse_schedule(
            TwisterParams(0.9855, 0.6), 0.125 * np.pi, t_end=0.05, dt=0.01
        )
        path = tmp_path / "sched.csv"
        dilation.write_schedule_csv(sched, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == dilation.SCHEDULE_HEADER
        assert len(lines) == 1 + 6
