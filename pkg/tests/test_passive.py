import numpy as np
import pytest

from qdfs import matrixkit as mk
from qdfs.errors import DimensionMismatchError, NotHermitianError, NotRealizableError
from qdfs.passive_model import (
    HamiltonianCoupling,
    PassiveSystem,
    check_passivity,
    check_realizability,
    realize,
    recover_hamiltonian,
)

from conftest import crand, random_hermitian, random_realized


def single_cavity(kappa1, kappa2=None, m_freq=0.0):
    couplings = [("w", np.array([[np.sqrt(kappa1)]], dtype=complex))]
    if kappa2 is not None:
        couplings.append(("u", np.array([[np.sqrt(kappa2)]], dtype=complex)))
    return HamiltonianCoupling(np.array([[m_freq]], dtype=complex), tuple(couplings))


class TestRealize:
    def test_one_cavity(self):
        sys = realize(single_cavity(1.0))
        assert np.allclose(sys.a_matrix, [[-0.5]])
        assert np.allclose(sys.b("w"), [[-1.0]])
        assert np.allclose(sys.c("w"), [[1.0]])

    def test_closed_system(self, rng):
        m = random_hermitian(rng, 3)
        sys = realize(HamiltonianCoupling(m))
        assert np.allclose(sys.a_matrix, -1j * m)
        assert sys.b_aggregate().shape == (3, 0)
        assert sys.c_aggregate().shape == (0, 3)

    def test_two_cavity_cascade(self):
        # double-pass cascade: w couples as (g1+g2) a1 + g3 a2, feedback mirror g4 a1
        g1, g2, g3, g4 = -1.0, 1.0, 1.0, 3.0
        from qdfs.presets import example2_coupling

        sys = realize(example2_coupling(g1, g2, g3, g4))
        expected_a = np.array([
            [-(g1 ** 2 + g2 ** 2) / 2 - g1 * g2 - g4 ** 2 / 2, -g2 * g3],
            [-g1 * g3, -g3 ** 2 / 2],
        ], dtype=complex)
        assert np.allclose(sys.a_matrix, expected_a)
        assert np.allclose(sys.b("w"), [[-(g1 + g2)], [-g3]])
        assert np.allclose(sys.b("u"), [[-g4], [0.0]])
        assert np.allclose(sys.c("w"), [[g1 + g2, g3]])

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            HamiltonianCoupling(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_bad_dims(self):
        with pytest.raises(DimensionMismatchError):
            HamiltonianCoupling(np.zeros((2, 2)), (("w", np.zeros((1, 3))),))


class TestRealizability:
    def test_realized_is_realizable(self, rng):
        for _ in range(10):
            rep = check_realizability(random_realized(rng))
            assert rep.ok and rep.residual <= 1e-12

    def test_mismatched_coupling(self):
        sys = PassiveSystem(
            np.array([[-1.0]], dtype=complex),
            (("w", np.array([[-2.0]], dtype=complex)),),
            (("w", np.array([[2.0]], dtype=complex)),),
        )
        rep = check_realizability(sys)
        assert not rep.ok
        assert rep.residual == pytest.approx(2.0)

    def test_matched_controller(self):
        # controller cavity with equal mirrors and no helper coupling
        kappa = 1.0
        a_c = np.array([[-kappa]], dtype=complex)
        g = np.array([[-np.sqrt(kappa)]], dtype=complex)
        sys = PassiveSystem(
            a_c,
            (("y'", g), ("z'", g)),
            (("y'", -g.conj().T), ("z'", -g.conj().T)),
        )
        assert check_realizability(sys).ok


class TestRecoverHamiltonian:
    def test_round_trip_random(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 5))
            hc = HamiltonianCoupling(
                random_hermitian(rng, n),
                (("w", crand(rng, 2, n)), ("u", crand(rng, 1, n))),
            )
            back = recover_hamiltonian(realize(hc))
            assert np.linalg.norm(back.m_matrix - hc.m_matrix) <= 1e-10 * mk.norm_scale(hc.m_matrix)
            for (la, aa), (lb, ab) in zip(back.couplings, hc.couplings):
                assert la == lb
                assert np.linalg.norm(aa - ab) <= 1e-10 * mk.norm_scale(ab)

    def test_closed_system_exact(self, rng):
        m = random_hermitian(rng, 4)
        back = recover_hamiltonian(realize(HamiltonianCoupling(m)))
        assert np.allclose(back.m_matrix, m)

    def test_one_cavity_scalar(self):
        hc = single_cavity(1.0, m_freq=0.7)
        back = recover_hamiltonian(realize(hc))
        assert back.m_matrix[0, 0] == pytest.approx(0.7)

    def test_rejects_non_realizable(self):
        sys = PassiveSystem(
            np.array([[-1.0]], dtype=complex),
            (("w", np.array([[-2.0]], dtype=complex)),),
        )
        with pytest.raises(NotRealizableError):
            recover_hamiltonian(sys)


class TestPassivity:
    def test_identity_storage_on_realized(self, rng):
        for _ in range(20):
            sys = random_realized(rng)
            cert = check_passivity(sys, np.eye(sys.n), -sys.c_aggregate(),
                                   np.zeros((sys.c_aggregate().shape[0],
                                             sys.b_aggregate().shape[1])))
            assert cert.verdict

    def test_stable_drift_no_inputs(self):
        sys = PassiveSystem(-np.eye(2))
        cert = check_passivity(sys, np.eye(2), np.zeros((0, 2)), np.zeros((0, 0)))
        assert cert.verdict

    def test_antistable_scalar_fails(self):
        sys = PassiveSystem(np.array([[1.0]], dtype=complex))
        cert = check_passivity(sys, np.eye(1), np.zeros((0, 1)), np.zeros((0, 0)))
        assert not cert.verdict
        assert cert.witness_eigenvalue == pytest.approx(2.0)

    def test_rejects_non_hermitian_storage(self, rng):
        sys = random_realized(rng, n=2)
        with pytest.raises(NotHermitianError):
            check_passivity(sys, np.array([[1.0, 1.0], [0.0, 1.0]]),
                            -sys.c_aggregate(),
                            np.zeros((sys.c_aggregate().shape[0],
                                      sys.b_aggregate().shape[1])))

    def test_realized_systems_have_no_rhp_poles(self, rng):
        for _ in range(25):
            sys = random_realized(rng)
            ev = mk.eigenvalues(sys.a_matrix)
            assert np.max(ev.values.real) <= 1e-9 * mk.norm_scale(sys.a_matrix)
