import numpy as np
import pytest

from twistlab import model
from twistlab import numerics as nm
from twistlab.errors import ExceptionalPoint, OnBoundary
from twistlab.model import KnotLabel, TwisterParams


def bloch(v):
    return np.array([np.real(np.vdot(v, s @ v)) for s in nm.PAULIS])


class TestHamiltonian:
    def test_t2_at_k0(self):
        np.testing.assert_allclose(
            model.hamiltonian(TwisterParams(0.0, 0.0), 0.0), nm.SIGMA_X, atol=1e-15
        )

    def test_with_mass(self):
        np.testing.assert_allclose(
            model.hamiltonian(TwisterParams(1.0, 0.0), 0.0),
            1j * nm.SIGMA_Z + nm.SIGMA_X,
            atol=1e-15,
        )

    def test_table_row_bloch(self):
        # published theory row: m1=0.5338, m2=0.6, k=0.125pi
        es = model.eigensystem(TwisterParams(0.5338, 0.6), 0.125 * np.pi)
        np.testing.assert_allclose(
            bloch(es.R1), [0.796, -0.596, 0.102], atol=5e-4
        )

    def test_periodicity(self):
        p = TwisterParams(0.7, 0.6)
        rng = np.random.default_rng(2)
        for k in rng.uniform(0, 2 * np.pi, 20):
            np.testing.assert_allclose(
                model.hamiltonian(p, k),
                model.hamiltonian(p, k + 2 * np.pi),
                atol=1e-13,
            )

    def test_traceless(self):
        p = TwisterParams(1.3, 0.6)
        H = model.hamiltonian(p, 1.0)
        assert abs(np.trace(H)) < 1e-15


class TestDVector:
    def test_trivial_points(self):
        np.testing.assert_allclose(
            model.d_vector(TwisterParams(0.0, 0.0), 0.0), [1, 0, 0], atol=1e-15
        )
        np.testing.assert_allclose(
            model.d_vector(TwisterParams(1.0, 0.0), 0.0), [1, 0, 1j], atol=1e-15
        )

    def test_reconstruction_identity(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            p = TwisterParams(rng.uniform(-2, 2), rng.uniform(-2, 2))
            k = rng.uniform(0, 2 * np.pi)
            d = model.d_vector(p, k)
            H = sum(d[i] * nm.PAULIS[i] for i in range(3))
            np.testing.assert_allclose(H, model.hamiltonian(p, k), atol=1e-14)


class TestDiscriminant:
    @pytest.mark.parametrize("m1,k", [(0.8, np.pi), (1.6, 2 * np.pi)])
    def test_exceptional_points(self, m1, k):
        assert abs(model.discriminant(TwisterParams(m1, 0.6), k)) <= 1e-12

    def test_massless(self):
        rng = np.random.default_rng(6)
        for k in rng.uniform(0, 2 * np.pi, 10):
            np.testing.assert_allclose(
                model.discriminant(TwisterParams(0.0, 0.0), k),
                np.exp(2j * k),
                atol=1e-14,
            )

    def test_equals_squared_eigenvalue(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            p = TwisterParams(rng.uniform(0.2, 2), 0.6)
            k = rng.uniform(0.05, 2 * np.pi)
            if abs(model.discriminant(p, k)) < 1e-6:
                continue
            es = model.eigensystem(p, k)
            np.testing.assert_allclose(
                es.E1**2, model.discriminant(p, k), atol=1e-10
            )


class TestBiorthEigensystem:
    def test_sigma_x(self):
        es = model.biorth_eigensystem(nm.SIGMA_X)
        assert es.E1 == pytest.approx(1.0)
        assert es.E2 == pytest.approx(-1.0)
        np.testing.assert_allclose(np.abs(es.R1), [1, 1] / np.sqrt(2), atol=1e-12)
        # Hermitian case: left equals right up to normalization phase
        np.testing.assert_allclose(es.L1, es.R1 / np.vdot(es.R1, es.R1), atol=1e-12)

    def test_i_sigma_z(self):
        es = model.biorth_eigensystem(1j * nm.SIGMA_Z)
        assert es.E1 == pytest.approx(1j)
        np.testing.assert_allclose(np.abs(es.R1), [1, 0], atol=1e-13)
        np.testing.assert_allclose(es.L1, es.R1, atol=1e-13)

    def test_biorthonormality_and_reconstruction(self):
        p = TwisterParams(0.5338, 0.6)
        for k in model.brillouin_grid(16):
            H = model.hamiltonian(p, k)
            es = model.biorth_eigensystem(H)
            L = es.left_matrix()
            R = es.right_matrix()
            np.testing.assert_allclose(L.conj().T @ R, np.eye(2), atol=1e-10)
            np.testing.assert_allclose(es.reconstruct(), H, atol=1e-10)
            # completeness
            np.testing.assert_allclose(
                np.outer(es.R1, es.L1.conj()) + np.outer(es.R2, es.L2.conj()),
                np.eye(2),
                atol=1e-10,
            )

    def test_band_order_real_spectrum(self):
        # k = 2pi: real eigenvalues; band 1 must take the larger Re(E)
        es = model.eigensystem(TwisterParams(0.5338, 0.6), 2 * np.pi)
        assert abs(es.E1.imag) < 1e-12
        assert es.E1.real > 0
        np.testing.assert_allclose(bloch(es.R1), [0.943, -0.334, 0.0], atol=5e-4)

    def test_energy_antisymmetry(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            p = TwisterParams(rng.uniform(0.2, 2), 0.6)
            es = model.eigensystem(p, rng.uniform(0.1, 2 * np.pi))
            assert abs(es.E1 + es.E2) < 1e-12

    def test_exceptional_point_raises(self):
        with pytest.raises(ExceptionalPoint):
            model.eigensystem(TwisterParams(0.8, 0.6), np.pi)


class TestSweepAndGrid:
    def test_sweep_values(self):
        params = model.sweep_params()
        assert len(params) == 37
        assert params[0].m1 == pytest.approx(0.4517, abs=5e-5)
        assert params[28].m1 == pytest.approx(1.6015, abs=5e-5)
        assert params[36].m1 == pytest.approx(1.9300, abs=5e-5)
        assert all(p.m2 == 0.6 for p in params)

    def test_grid(self):
        k = model.brillouin_grid(16)
        assert len(k) == 16
        np.testing.assert_allclose(np.diff(k), np.pi / 8)
        assert k[-1] == pytest.approx(2 * np.pi)

    def test_canonical_momentum(self):
        assert model.canonical_momentum(0.0) == pytest.approx(2 * np.pi)
        assert model.canonical_momentum(-np.pi / 2) == pytest.approx(1.5 * np.pi)
        assert model.canonical_momentum(5 * np.pi) == pytest.approx(np.pi)


class TestPhaseLabel:
    @pytest.mark.parametrize(
        "m1,label",
        [
            (0.5338, KnotLabel.HOPF_LINK),
            (1.2730, KnotLabel.UNKNOT),
            (1.8889, KnotLabel.UNLINK),
        ],
    )
    def test_experimental_slice(self, m1, label):
        assert model.phase_label_analytic(TwisterParams(m1, 0.6)) == label

    def test_all_sweep_samples_classify(self):
        labels = [model.phase_label_analytic(p) for p in model.sweep_params()]
        # 9 Hopf, 19 unknot (10..28), then unlink from sample 29 (m1=1.6015 > 1.6)
        assert labels[:9] == [KnotLabel.HOPF_LINK] * 9
        assert labels[9:28] == [KnotLabel.UNKNOT] * 19
        assert labels[28:] == [KnotLabel.UNLINK] * 9

    def test_on_boundary(self):
        with pytest.raises(OnBoundary):
            model.phase_label_analytic(TwisterParams(0.8, 0.6))
        with pytest.raises(OnBoundary):
            model.phase_label_analytic(TwisterParams(1.6, 0.6))
