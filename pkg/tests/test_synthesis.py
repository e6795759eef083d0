import numpy as np
import pytest

from qdfs import matrixkit as mk
from qdfs.errors import (
    DimensionMismatchError,
    NotHermitianError,
    NotPSDError,
    NotRealizableError,
    SearchExhaustedError,
    StructurallyImpossibleError,
    TargetCountMismatchError,
    UncontrollableError,
)
from qdfs.passive_model import HamiltonianCoupling, realize
from qdfs.presets import example1_network, example2_coupling, example2_paper_gains
from qdfs.synthesis import (
    ControllerGains,
    ScatteringPair,
    assemble_closed_loop,
    complete_g3,
    controller_ac,
    corollary1_synthesize,
    corollary2_synthesize,
    hat_check,
    lemma1_spectral_split,
    lmi_R,
    lmi_feasible,
    observer_topology,
    pole_place_injection,
    synthesize_dfs,
    yamamoto_topology,
)

from conftest import crand, haar_unitary, random_realized, random_scattering


def cavity_plant(kappa1, kappa2, m_freq=0.0):
    return example1_network(kappa1, kappa2, m_freq).plant_system()


def cavity_gains(kappa3, kappa4):
    g1 = np.array([[-np.sqrt(kappa3)]], dtype=complex)
    g2 = np.array([[-np.sqrt(kappa4)]], dtype=complex)
    return g1, g2


class TestTopologies:
    def test_observer_routing(self):
        sw = observer_topology(2, 1)
        assert sw.s_matrix.shape == (3, 3)
        assert np.allclose(sw.s_matrix, np.eye(3))
        assert np.allclose(sw.w11, 0.0)
        assert np.allclose(sw.w12, np.eye(1))
        assert np.allclose(sw.w21, np.eye(2))

    def test_direct_routing(self):
        sw = yamamoto_topology(2)
        assert sw.m2 == 0 and sw.n_z == 0
        assert np.allclose(sw.s_matrix, np.eye(2))
        assert np.allclose(sw.w_matrix, np.eye(2))

    def test_rejects_non_unitary(self):
        with pytest.raises(DimensionMismatchError):
            ScatteringPair(np.array([[1.0, 1.0], [0.0, 1.0]]), np.eye(2),
                           m1=1, n_w=1, n_u=1)


class TestControllerDrift:
    def test_matched_cavities(self):
        m_freq = 0.5
        plant = cavity_plant(1.0, 1.0, m_freq)
        sw = observer_topology(1, 1)
        g1, g2 = cavity_gains(1.0, 1.0)
        a_c = controller_ac(plant, sw, g1, g2)
        assert np.allclose(a_c, [[-1j * m_freq - 1.0]])

    def test_gain_free_direct_feedback(self, rng):
        plant = random_realized(rng, n=3, channels=("w", "u"), widths=[2, 2])
        sw = yamamoto_topology(2)
        g1 = np.zeros((3, 2), dtype=complex)
        g2 = np.zeros((3, 0), dtype=complex)
        a_c = controller_ac(plant, sw, g1, g2)
        b1, b2 = plant.b("w"), plant.b("u")
        assert np.allclose(a_c, plant.a_matrix - b2 @ b1.conj().T)

    def test_drift_realizable_once_completed(self, rng):
        plant = random_realized(rng, n=2, channels=("w", "u"), widths=[1, 1])
        sw = random_scattering(rng, 1, 1, 1)
        g1 = 0.05 * crand(rng, 2, 1)
        g2 = 0.05 * crand(rng, 2, 1)
        r = lmi_R(plant, sw, g1, g2)
        g3 = complete_g3(r, g1, g2)
        a_c = controller_ac(plant, sw, g1, g2)
        gains = ControllerGains(g1, g2, g3, a_c)
        assert gains.realizability_residual() <= 1e-9


class TestHatCheck:
    def test_observer_reduction(self, rng):
        plant = random_realized(rng, n=3, channels=("w", "u"), widths=[2, 1])
        sw = observer_topology(2, 1)
        g1, g2 = crand(rng, 3, 2), crand(rng, 3, 1)
        a_hat, a_check = hat_check(plant, sw, g1, g2)
        b1, b2 = plant.b("w"), plant.b("u")
        assert np.allclose(a_hat, plant.a_matrix - b2 @ g2.conj().T)
        assert np.allclose(a_check, plant.a_matrix + g1 @ b1.conj().T)

    def test_direct_feedback_reduction(self, rng):
        plant = random_realized(rng, n=2, channels=("w", "u"), widths=[1, 1])
        sw = yamamoto_topology(1)
        g1 = crand(rng, 2, 1)
        g2 = np.zeros((2, 0), dtype=complex)
        a_hat, a_check = hat_check(plant, sw, g1, g2)
        b1, b2 = plant.b("w"), plant.b("u")
        base = plant.a_matrix - b2 @ b1.conj().T
        assert np.allclose(a_hat, base - b2 @ g1.conj().T)
        assert np.allclose(a_check, base + g1 @ b1.conj().T)

    def test_cavity_scalars(self):
        k1, k2, k3, k4, m_freq = 1.0, 2.0, 2.25, 0.5, 0.3
        plant = cavity_plant(k1, k2, m_freq)
        sw = observer_topology(1, 1)
        a_hat, a_check = hat_check(plant, sw, *cavity_gains(k3, k4))
        assert a_hat[0, 0] == pytest.approx(-1j * m_freq - (k1 + k2) / 2 - np.sqrt(k2 * k4))
        assert a_check[0, 0] == pytest.approx(-1j * m_freq - (k1 + k2) / 2 + np.sqrt(k1 * k3))


class TestClosedLoop:
    def test_matched_cavity_spectrum(self):
        plant = cavity_plant(1.0, 1.0)
        sw = observer_topology(1, 1)
        g1, g2 = cavity_gains(1.0, 1.0)
        a_c = controller_ac(plant, sw, g1, g2)
        gains = ControllerGains(g1, g2, np.zeros((1, 1)), a_c)
        closed = assemble_closed_loop(plant, gains, sw)
        ok, _ = mk.spectra_match(np.linalg.eigvals(closed.a_cl), [0.0, -2.0], 1e-10)
        assert ok

    def test_zero_gain_controller_decouples(self, rng):
        plant = random_realized(rng, n=2, channels=("w", "u"), widths=[1, 1])
        sw = yamamoto_topology(1)
        g1 = np.zeros((2, 1), dtype=complex)
        g2 = np.zeros((2, 0), dtype=complex)
        a_c = controller_ac(plant, sw, g1, g2)
        gains = ControllerGains(g1, g2, np.zeros((2, 0)), a_c)
        closed = assemble_closed_loop(plant, gains, sw, verify=False)
        assert np.allclose(closed.a_cl[:2, 2:], 0.0)

    def test_random_closure_realizability(self, rng):
        from conftest import random_controller

        for _ in range(50):
            n = int(rng.integers(1, 4))
            n_w = int(rng.integers(1, 3))
            n_u = int(rng.integers(1, 3))
            n_z = int(rng.integers(1, 3))
            plant = random_realized(rng, n=n, channels=("w", "u"), widths=[n_w, n_u])
            ctrl = random_controller(rng, n, n_w, n_z, nv=n)
            sw = ScatteringPair(haar_unitary(rng, n_w + n_z), haar_unitary(rng, n_w + n_z),
                                m1=n_w, n_w=n_w, n_u=n_u) if n_w + n_z >= n_u else None
            if sw is None:
                continue
            gains = ControllerGains(ctrl.b("y'"), ctrl.b("z'"), ctrl.b("v"), ctrl.a_matrix)
            closed = assemble_closed_loop(plant, gains, sw)
            assert closed.realizability_residual <= 1e-9

    def test_rejects_non_realizable_controller(self, rng):
        plant = random_realized(rng, n=1, channels=("w", "u"), widths=[1, 1])
        sw = observer_topology(1, 1)
        gains = ControllerGains(np.array([[1.0]]), np.array([[1.0]]),
                                np.zeros((1, 1)), np.array([[0.0]]))
        with pytest.raises(NotRealizableError):
            assemble_closed_loop(plant, gains, sw)


class TestSpectralSplit:
    def test_matched_cavities(self):
        plant = cavity_plant(1.0, 1.0)
        sw = observer_topology(1, 1)
        g1, g2 = cavity_gains(1.0, 1.0)
        a_c = controller_ac(plant, sw, g1, g2)
        gains = ControllerGains(g1, g2, np.zeros((1, 1)), a_c)
        closed = assemble_closed_loop(plant, gains, sw)
        a_hat, a_check = hat_check(plant, sw, g1, g2)
        assert lemma1_spectral_split(closed, a_hat, a_check)

    def test_random_topologies(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 4))
            n_w, n_u, n_z = (int(rng.integers(1, 3)) for _ in range(3))
            plant = random_realized(rng, n=n, channels=("w", "u"), widths=[n_w, n_u])
            if n_w + n_z < n_u:
                continue
            sw = random_scattering(rng, n_w, n_z, n_u)
            g1, g2 = crand(rng, n, sw.m1), crand(rng, n, sw.m2)
            a_c = controller_ac(plant, sw, g1, g2)
            gains = ControllerGains(g1, g2, np.zeros((n, 0)), a_c)
            closed = assemble_closed_loop(plant, gains, sw, verify=False)
            a_hat, a_check = hat_check(plant, sw, g1, g2)
            assert lemma1_spectral_split(closed, a_hat, a_check)

    def test_broken_drift_fails(self):
        plant = cavity_plant(1.0, 1.0)
        sw = observer_topology(1, 1)
        g1, g2 = cavity_gains(1.0, 1.0)
        a_c = controller_ac(plant, sw, g1, g2) + 1.0
        gains = ControllerGains(g1, g2, np.zeros((1, 1)), a_c)
        closed = assemble_closed_loop(plant, gains, sw, verify=False)
        a_hat, a_check = hat_check(plant, sw, g1, g2)
        assert not lemma1_spectral_split(closed, a_hat, a_check)


class TestLmi:
    def test_observer_r_formula(self, rng):
        plant = random_realized(rng, n=2, channels=("w", "u"), widths=[1, 1])
        sw = observer_topology(1, 1)
        g1, g2 = crand(rng, 2, 1), crand(rng, 2, 1)
        b1, b2 = plant.b("w"), plant.b("u")
        expected = (-b1 @ b1.conj().T - b2 @ b2.conj().T
                    + g1 @ b1.conj().T + b1 @ g1.conj().T
                    - b2 @ g2.conj().T - g2 @ b2.conj().T)
        assert np.allclose(lmi_R(plant, sw, g1, g2), expected, atol=1e-12)

    def test_cavity_r_scalar(self):
        k1, k2, k3, k4 = 1.0, 2.0, 0.7, 0.4
        plant = cavity_plant(k1, k2)
        r = lmi_R(plant, observer_topology(1, 1), *cavity_gains(k3, k4))
        assert r[0, 0] == pytest.approx(-k1 - k2 + 2 * np.sqrt(k1 * k3) - 2 * np.sqrt(k2 * k4))

    def test_cascade_r_matrix(self):
        g2v, g3v, g4v = 1.0, 1.0, np.sqrt(8.0)
        plant = realize(example2_coupling(-g2v, g2v, g3v, g4v))
        g1, g2 = example2_paper_gains(g2v, g3v, g4v)
        r = lmi_R(plant, observer_topology(1, 1), g1, g2)
        expected = np.array([[-g4v ** 2, 2 * g2v * g3v], [2 * g2v * g3v, -g3v ** 2]])
        assert np.allclose(r, expected)

    def test_boundary_feasible(self):
        plant = cavity_plant(1.0, 1.0)
        g1, g2 = cavity_gains(1.0, 1.0)
        r = lmi_R(plant, observer_topology(1, 1), g1, g2)
        verdict = lmi_feasible(r, g1, g2)
        assert verdict.feasible
        assert abs(verdict.witness) <= 1e-12

    def test_cascade_ratio_eight_feasible(self):
        g4v = np.sqrt(8.0)
        plant = realize(example2_coupling(-1.0, 1.0, 1.0, g4v))
        g1, g2 = example2_paper_gains(1.0, 1.0, g4v)
        r = lmi_R(plant, observer_topology(1, 1), g1, g2)
        assert lmi_feasible(r, g1, g2).feasible

    def test_cascade_ratio_four_infeasible(self):
        g4v = 2.0
        plant = realize(example2_coupling(-1.0, 1.0, 1.0, g4v))
        g1, g2 = example2_paper_gains(1.0, 1.0, g4v)
        r = lmi_R(plant, observer_topology(1, 1), g1, g2)
        assert not lmi_feasible(r, g1, g2).feasible

    def test_rejects_non_hermitian_r(self):
        with pytest.raises(NotHermitianError):
            lmi_feasible(np.array([[0.0, 1.0], [0.0, 0.0]]),
                         np.zeros((2, 1)), np.zeros((2, 1)))


class TestCompleteG3:
    def test_boundary_gives_zero(self):
        plant = cavity_plant(1.0, 1.0)
        g1, g2 = cavity_gains(1.0, 1.0)
        r = lmi_R(plant, observer_topology(1, 1), g1, g2)
        assert np.allclose(complete_g3(r, g1, g2), 0.0, atol=1e-9)

    def test_strictly_feasible_root(self):
        g = np.zeros((2, 1), dtype=complex)
        assert np.allclose(complete_g3(-4.0 * np.eye(2), g, g), 2.0 * np.eye(2))

    def test_infeasible_raises(self):
        g = np.ones((1, 1), dtype=complex)
        with pytest.raises(NotPSDError):
            complete_g3(np.zeros((1, 1)), g, g)

    def test_random_feasible_controller_realizable(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 4))
            plant = random_realized(rng, n=n, channels=("w", "u"), widths=[1, 1])
            sw = random_scattering(rng, 1, 1, 1)
            g1 = 0.05 * crand(rng, n, 1)
            g2 = 0.05 * crand(rng, n, 1)
            r = lmi_R(plant, sw, g1, g2)
            if not lmi_feasible(r, g1, g2).feasible:
                continue
            g3 = complete_g3(r, g1, g2)
            gains = ControllerGains(g1, g2, g3, controller_ac(plant, sw, g1, g2))
            assert gains.realizability_residual() <= 1e-9


class TestPolePlacement:
    def test_scalar_to_origin(self):
        g = pole_place_injection([[-1.0]], [[-1.0]], [0.0])
        assert g[0, 0] == pytest.approx(-1.0)

    def test_already_placed(self, rng):
        a = crand(rng, 3, 3)
        targets = np.linalg.eigvals(a)
        g = pole_place_injection(a, crand(rng, 1, 3), targets)
        assert np.allclose(g, 0.0)

    def test_random_single_output(self, rng):
        for _ in range(20):
            a = crand(rng, 3, 3)
            cd = crand(rng, 1, 3)
            targets = crand(rng, 3)
            g = pole_place_injection(a, cd, targets)
            ok, worst = mk.spectra_match(np.linalg.eigvals(a + g @ cd), targets,
                                         1e-6 * mk.norm_scale(a))
            assert ok, worst

    def test_random_multi_output(self, rng):
        for _ in range(20):
            a = crand(rng, 4, 4)
            cd = crand(rng, 2, 4)
            targets = crand(rng, 4)
            g = pole_place_injection(a, cd, targets)
            ok, worst = mk.spectra_match(np.linalg.eigvals(a + g @ cd), targets,
                                         1e-6 * mk.norm_scale(a))
            assert ok, worst

    def test_uncontrollable_rejected(self):
        with pytest.raises(UncontrollableError):
            pole_place_injection(np.diag([1.0, 2.0]), np.zeros((1, 2)), [0.0, -1.0])

    def test_target_count(self):
        with pytest.raises(TargetCountMismatchError):
            pole_place_injection(np.eye(2), np.ones((1, 2)), [0.0])


class TestSynthesizeDfs:
    def test_matched_cavities(self):
        plant = cavity_plant(1.0, 1.0)
        result = synthesize_dfs(plant, observer_topology(1, 1), 1, seed=3)
        assert result.feasible
        assert abs(result.lmi_witness) <= 1e-9
        assert result.df_report.df_dimension == 1
        assert result.df_report.consistency
        assert abs(result.gains.g1[0, 0]) ** 2 == pytest.approx(1.0)
        assert abs(result.gains.g2[0, 0]) ** 2 == pytest.approx(1.0)

    def test_mismatched_cavities_exhausts(self):
        plant = cavity_plant(1.0, 4.0)
        with pytest.raises(SearchExhaustedError) as err:
            synthesize_dfs(plant, observer_topology(1, 1), 1)
        best = err.value.best
        assert abs(best.gains.g1[0, 0]) ** 2 == pytest.approx(25.0 / 4.0)
        assert best.lmi_witness == pytest.approx((1.0 - 4.0) ** 2 / 4.0)
        assert best.df_report.df_dimension == 1

    def test_deterministic_for_seed(self):
        plant = cavity_plant(2.0, 2.0)
        r1 = synthesize_dfs(plant, observer_topology(1, 1), 1, seed=11)
        r2 = synthesize_dfs(plant, observer_topology(1, 1), 1, seed=11)
        assert np.array_equal(r1.gains.g1, r2.gains.g1)
        assert np.array_equal(r1.gains.g2, r2.gains.g2)
        assert np.array_equal(r1.gains.g3, r2.gains.g3)
        assert r1.lmi_witness == r2.lmi_witness

    def test_structurally_impossible(self):
        hc = HamiltonianCoupling(
            np.zeros((2, 2)),
            (("w", np.array([[1.0, 0.0]])), ("u", np.array([[0.0, 0.0]]))),
        )
        with pytest.raises(StructurallyImpossibleError):
            synthesize_dfs(realize(hc), observer_topology(1, 1), 1)

    def test_general_search_on_mixing_topology(self, rng):
        # routing that couples both factors to both gain blocks
        plant = cavity_plant(1.0, 1.0)
        theta = np.pi / 4
        s = np.array([[np.cos(theta), np.sin(theta)],
                      [-np.sin(theta), np.cos(theta)]], dtype=complex)
        w = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        sw = ScatteringPair(s, w, m1=1, n_w=1, n_u=1)
        result = synthesize_dfs(plant, sw, 1, seed=5, max_iters=12)
        assert result.feasible
        assert result.df_report.df_dimension >= 1


class TestCorollaryPaths:
    def test_observer_matches_general(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 4))
            n_w, n_u = int(rng.integers(1, 3)), int(rng.integers(1, 3))
            plant = random_realized(rng, n=n, channels=("w", "u"), widths=[n_w, n_u])
            g1, g2 = crand(rng, n, n_w), crand(rng, n, n_u)
            sw = observer_topology(n_w, n_u)
            spec_result = corollary1_synthesize(plant, g1, g2)
            assert np.allclose(spec_result.a_hat, hat_check(plant, sw, g1, g2)[0], atol=1e-10)
            assert np.allclose(spec_result.a_check, hat_check(plant, sw, g1, g2)[1], atol=1e-10)
            assert np.allclose(spec_result.r_matrix, lmi_R(plant, sw, g1, g2), atol=1e-10)
            assert np.allclose(spec_result.gains.a_c, controller_ac(plant, sw, g1, g2),
                               atol=1e-10)

    def test_direct_matches_general(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 4))
            n_w = int(rng.integers(1, 3))
            plant = random_realized(rng, n=n, channels=("w", "u"), widths=[n_w, n_w])
            g1 = crand(rng, n, n_w)
            g2 = np.zeros((n, 0), dtype=complex)
            sw = yamamoto_topology(n_w)
            spec_result = corollary2_synthesize(plant, g1)
            assert np.allclose(spec_result.a_hat, hat_check(plant, sw, g1, g2)[0], atol=1e-10)
            assert np.allclose(spec_result.a_check, hat_check(plant, sw, g1, g2)[1], atol=1e-10)
            assert np.allclose(spec_result.r_matrix, lmi_R(plant, sw, g1, g2), atol=1e-10)
            assert np.allclose(spec_result.gains.a_c, controller_ac(plant, sw, g1, g2),
                               atol=1e-10)

    def test_direct_balance_with_equal_couplings(self, rng):
        # with B1 = B2 the exact balance reduces to G1 G1^H = (B1+B2)(B1+B2)^H
        plant_n = 1
        hc = HamiltonianCoupling(
            np.zeros((plant_n, plant_n)),
            (("w", np.array([[1.0]])), ("u", np.array([[1.0]]))),
        )
        plant = realize(hc)
        b1 = plant.b("w")
        result = corollary2_synthesize(plant, 2.0 * b1)
        assert result.constraint_residual <= 1e-12
        assert result.gains.realizability_residual() <= 1e-12

    def test_direct_balance_violated_is_reported(self, rng):
        plant = random_realized(rng, n=2, channels=("w", "u"), widths=[1, 1])
        result = corollary2_synthesize(plant, crand(rng, 2, 1))
        assert result.constraint_residual > 1e-6
        assert not result.accepted
