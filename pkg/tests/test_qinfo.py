import numpy as np
import pytest

from qsinf import qcore
from qsinf.measure import Pprom, from_observable, spin_pprom, validate_povm
from qsinf.qcore import SIGMA_X, SIGMA_Y, SIGMA_Z, DensityMatrix
from qsinf.qinfo import (
    ParametricModel,
    SingularInformation,
    adaptive_mc,
    adaptive_two_stage,
    bc_audit,
    classical_fisher,
    equatorial_model,
    gill_massar_value,
    helstrom_bound,
    observable_qinfo,
    optimal_measurement,
    product_model,
    quantum_fisher,
    random_full_rank_model,
    random_povm,
    sld,
)

from conftest import random_hermitian


def isotropic_z_model():
    """rho(t) = (1 + t sigma_z)/2 with analytic derivative."""
    return ParametricModel(
        1,
        lambda t: DensityMatrix(0.5 * (np.eye(2) + t[0] * SIGMA_Z)),
        lambda t: [0.5 * SIGMA_Z],
    )


def symmetric_exp_model(t_op, rho0):
    from qsinf.qmodels import ExpModelSpec, to_parametric_model

    return to_parametric_model(ExpModelSpec("symmetric", rho0, [t_op]))


class TestSld:
    def test_pure_model_is_twice_derivative(self):
        model = equatorial_model()
        theta = 0.4
        l = sld(model, theta)[0]
        drho = model.derivatives(theta)[0]
        assert np.linalg.norm(l - 2 * drho) < 1e-9

    def test_full_rank_isotropic_linear_solve_oracle(self):
        # oracle: solve (rho L + L rho)/2 = drho as a 4x4 real linear system
        model = isotropic_z_model()
        l = sld(model, 0.0)[0]
        assert np.linalg.norm(l - SIGMA_Z) < 1e-9
        rho = model.state(0.3).matrix
        drho = model.derivatives(0.3)[0]
        d = 2
        a_mat = np.kron(np.eye(d), rho) + np.kron(rho.T, np.eye(d))
        vec = np.linalg.solve(a_mat, 2 * drho.reshape(-1))
        l_oracle = vec.reshape(d, d)
        assert np.linalg.norm(sld(model, 0.3)[0] - l_oracle) < 1e-8

    def test_symmetric_exp_model_score_is_centered_generator(self, rs):
        # finite-difference oracle at theta = 0 with tr(rho0 T) = 0
        t_op = random_hermitian(rs, 3)
        rho0 = np.eye(3, dtype=complex) / 3
        t_op = t_op - np.trace(rho0 @ t_op).real * np.eye(3)
        model = symmetric_exp_model(t_op, rho0)
        l = sld(model, 0.0)[0]
        assert np.linalg.norm(l - t_op) < 1e-5

    def test_zero_mean_property(self, rs):
        for k in range(20):
            model = random_full_rank_model(rs.randint(2, 5), seed=300 + k)
            theta = rs.uniform(-1, 1)
            rho = model.state(theta).matrix
            l = sld(model, theta)[0]
            assert abs(np.trace(rho @ l).real) < 1e-8


class TestQuantumFisher:
    def test_equatorial_colatitude_formula(self):
        # information of the fixed-colatitude family is sin^2(eta)
        for eta in (np.pi / 2, 1.0, 0.4):
            model = equatorial_model(eta)
            for theta in (0.0, 0.7, 2.0):
                assert quantum_fisher(model, theta)[0, 0] == pytest.approx(
                    np.sin(eta) ** 2, abs=1e-9
                )

    def test_additivity_on_product_models(self):
        model = equatorial_model()
        for copies in (2, 3):
            big = product_model(model, copies)
            assert quantum_fisher(big, 0.3)[0, 0] == pytest.approx(copies * 1.0, abs=1e-7)

    def test_constant_model_zero(self):
        model = ParametricModel(1, lambda t: qcore.maximally_mixed(2), lambda t: [np.zeros((2, 2))])
        assert quantum_fisher(model, 0.0)[0, 0] == pytest.approx(0.0, abs=1e-12)


class TestObservableInfo:
    def test_equatorial_identity(self):
        for eta in (np.pi / 2, 1.0):
            model = equatorial_model(eta)
            j, err = observable_qinfo(model, 0.3)
            assert err < 1e-5
            rho = model.state(0.3).matrix
            assert np.trace(rho @ j).real == pytest.approx(np.sin(eta) ** 2, abs=1e-5)

    def test_constant_model(self):
        model = ParametricModel(1, lambda t: qcore.maximally_mixed(2), lambda t: [np.zeros((2, 2))])
        j, err = observable_qinfo(model, 0.0)
        assert np.linalg.norm(j) < 1e-8 and err < 1e-8

    def test_isotropic_self_consistency(self):
        j, err = observable_qinfo(isotropic_z_model(), 0.0)
        assert err < 1e-5


class TestClassicalFisher:
    def test_equatorial_in_plane_measurement_attains(self):
        model = equatorial_model()
        for theta in (0.1, 1.2):
            for ang in (0.0, 0.8):
                m = spin_pprom([np.cos(ang), np.sin(ang), 0.0])
                assert classical_fisher(model, theta, m)[0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_trivial_measurement_zero(self):
        trivial = validate_povm([np.eye(2, dtype=complex)])
        assert classical_fisher(equatorial_model(), 0.3, trivial)[0, 0] == pytest.approx(0.0)

    def test_binomial_oracle_z_measurement(self):
        # p_pm = (1 pm t)/2, dp = pm 1/2: i = sum dp^2/p = 1 at t = 0
        model = isotropic_z_model()
        m = from_observable(SIGMA_Z)
        assert classical_fisher(model, 0.0, m)[0, 0] == pytest.approx(1.0, abs=1e-10)
        t = 0.4
        want = 0.25 / ((1 + t) / 2) + 0.25 / ((1 - t) / 2)
        assert classical_fisher(model, t, m)[0, 0] == pytest.approx(want, abs=1e-10)


class TestOptimalMeasurement:
    def test_equatorial_attains(self):
        model = equatorial_model()
        m = optimal_measurement(model, 0.6)
        assert isinstance(m, Pprom)
        assert classical_fisher(model, 0.6, m)[0, 0] == pytest.approx(1.0, abs=1e-7)

    def test_isotropic_gives_z_basis(self):
        m = optimal_measurement(isotropic_z_model(), 0.0)
        assert np.allclose(sorted(np.abs(np.diag(m.elements[0]))), [0, 1])

    def test_attainment_fails_off_point_when_tilted(self):
        # at colatitude != pi/2 the score plane turns with theta, so the
        # measurement optimal at one point loses information elsewhere
        model = equatorial_model(eta=1.0)
        m = optimal_measurement(model, 0.0)
        i_there = classical_fisher(model, 0.0, m)[0, 0]
        i_elsewhere = classical_fisher(model, 1.2, m)[0, 0]
        assert i_there == pytest.approx(np.sin(1.0) ** 2, abs=1e-7)
        assert i_elsewhere < i_there - 1e-3


class TestBcAudit:
    def test_optimal_measurement_attained(self):
        model = equatorial_model()
        report = bc_audit(model, 0.3, optimal_measurement(model, 0.3))
        assert report.attained
        assert report.residual < 1e-7
        assert report.gap_min_eig > -1e-8

    def test_off_plane_measurement_gap(self):
        model = equatorial_model()
        m = spin_pprom([0, np.sin(0.4), np.cos(0.4)])
        report = bc_audit(model, 0.0, m)
        assert not report.attained
        assert report.classical_info[0, 0] < report.quantum_info[0, 0] - 1e-3

    def test_trivial_measurement(self):
        model = equatorial_model()
        report = bc_audit(model, 0.2, validate_povm([np.eye(2, dtype=complex)]))
        assert report.classical_info[0, 0] == pytest.approx(0.0)
        assert report.gap_min_eig == pytest.approx(1.0, abs=1e-9)

    def test_information_inequality_500_random(self):
        # dims 2-4, random rotation models against random measurements
        rs = np.random.RandomState(5)
        for k in range(500):
            dim = int(rs.randint(2, 5))
            model = random_full_rank_model(dim, seed=1000 + k)
            m = random_povm(dim, int(rs.randint(2, 2 * dim + 2)), seed=5000 + k)
            theta = float(rs.uniform(-1, 1))
            report = bc_audit(model, theta, m)
            assert report.gap_min_eig >= -1e-8
            opt = optimal_measurement(model, theta)
            opt_report = bc_audit(model, theta, opt)
            assert opt_report.residual < 1e-7


class TestHelstrom:
    def test_equatorial_unit_bound(self):
        assert helstrom_bound(equatorial_model(), 0.3) == pytest.approx(1.0, abs=1e-9)

    def test_iid_copies_scale(self):
        model = equatorial_model()
        for n in (2, 3):
            big = product_model(model, n)
            assert helstrom_bound(big, 0.3) == pytest.approx(1.0 / n, abs=1e-7)

    def test_singular_information_raises(self):
        model = ParametricModel(1, lambda t: qcore.maximally_mixed(2), lambda t: [np.zeros((2, 2))])
        with pytest.raises(SingularInformation):
            helstrom_bound(model, 0.0)

    def test_unbiased_estimator_variance_respects_bound(self):
        # the single-outcome spin-z value is an unbiased estimator of t in
        # the model (1 + t sigma_z)/2 and saturates the variance floor;
        # its empirical variance must not undercut the bound by > 3 s.e.
        from qsinf import rng

        model = isotropic_z_model()
        theta = 0.3
        bound = helstrom_bound(model, theta)
        assert bound == pytest.approx(1 - theta**2, abs=1e-9)
        n = 200000
        u = rng.uniforms(rng.derive_seed(777, 0), 0, n)
        outcomes = np.where(u < 0.5 * (1 + theta), 1.0, -1.0)
        assert outcomes.mean() == pytest.approx(theta, abs=4 / np.sqrt(n))
        emp_var = outcomes.var(ddof=1)
        se_var = emp_var * np.sqrt(2.0 / (n - 1))
        assert emp_var >= bound - 3 * se_var


def bloch_pure_model():
    """Two-parameter pure qubit family (colatitude, longitude)."""

    def state_fn(t):
        return qcore.density_from_bloch(qcore.bloch_from_polar(t[0], t[1]))

    def deriv_fn(t):
        a, b = t
        du_da = np.array([np.cos(a) * np.cos(b), np.cos(a) * np.sin(b), -np.sin(a)])
        du_db = np.array([-np.sin(a) * np.sin(b), np.sin(a) * np.cos(b), 0.0])
        paulis = (SIGMA_X, SIGMA_Y, SIGMA_Z)
        return [
            0.5 * sum(c * s for c, s in zip(du_da, paulis)),
            0.5 * sum(c * s for c, s in zip(du_db, paulis)),
        ]

    return ParametricModel(2, state_fn, deriv_fn)


class TestGillMassar:
    def test_two_parameter_pure_qubit_info_matrix(self):
        model = bloch_pure_model()
        theta = np.array([1.1, 0.7])
        qi = quantum_fisher(model, theta)
        assert np.allclose(qi, np.diag([1.0, np.sin(1.1) ** 2]), atol=1e-9)

    def test_bound_single_qubit_random_povms(self):
        model = bloch_pure_model()
        theta = np.array([1.1, 0.7])
        for k in range(50):
            m = random_povm(2, int(np.random.RandomState(k).randint(2, 7)), seed=900 + k)
            val = gill_massar_value(model, theta, m)
            assert val <= 1.0 + 1e-7

    def test_optimal_one_param_value_is_one(self):
        model = equatorial_model()
        m = optimal_measurement(model, 0.3)
        assert gill_massar_value(model, 0.3, m) == pytest.approx(1.0, abs=1e-7)

    def test_diagonal_target_constructor_attains(self):
        # randomized score measurements realize any diagonal information
        # allocation in the score frame: i = diag(p1 I11, p2 I22)
        from qsinf.qinfo import gm_attaining_measurement

        model = bloch_pure_model()
        theta = np.array([1.1, 0.7])
        qi = quantum_fisher(model, theta)
        for weights in ([0.5, 0.5], [0.3, 0.4], [1.0, 0.0]):
            m = gm_attaining_measurement(model, theta, weights)
            ci = classical_fisher(model, theta, m, cross_check=False)
            want = np.diag(np.asarray(weights) * np.diag(qi))
            assert np.max(np.abs(ci - want)) < 1e-7
            assert gill_massar_value(model, theta, m) == pytest.approx(sum(weights), abs=1e-7)

    def test_product_measurement_on_two_copies(self):
        # tensor additivity oracle: product measurements on two copies stay
        # within the one-copy bound after the 1/n scaling
        from qsinf.measure import product_measurement

        model = bloch_pure_model()
        theta = np.array([1.1, 0.7])
        m1 = spin_pprom([1, 0, 0])
        m2 = spin_pprom([0, 0, 1])
        joint = product_measurement(m1, m2)
        val = gill_massar_value(model, theta, joint, copies=2)
        assert val <= 1.0 + 1e-7
        # oracle: i_joint = i(m1) + i(m2) for product measurements
        i1 = classical_fisher(model, theta, m1, cross_check=False)
        i2 = classical_fisher(model, theta, m2, cross_check=False)
        qi = quantum_fisher(model, theta)
        want = float(np.trace(np.linalg.solve(qi, i1 + i2)) / 2)
        assert val == pytest.approx(want, abs=1e-6)


class TestAdaptiveTwoStage:
    def test_deterministic_given_seed(self):
        a = adaptive_two_stage(0.8, np.pi / 2, 1000, seed=4)
        b = adaptive_two_stage(0.8, np.pi / 2, 1000, seed=4)
        assert a == b

    def test_wrapped_recovery(self):
        est, _ = adaptive_two_stage(6.0, np.pi / 2, 20000, seed=11)
        assert abs((est - 6.0 + np.pi) % (2 * np.pi) - np.pi) < 0.1

    def test_scaled_mse_near_bound(self):
        mean_mse, _ = adaptive_mc(0.8, np.pi / 2, 10000, reps=120, seed=21)
        assert abs(mean_mse - 1.0) < 0.25

    def test_small_n_above_bound(self):
        mean_mse, _ = adaptive_mc(0.8, np.pi / 2, 100, reps=200, seed=31)
        assert mean_mse > 1.0


class TestSldCommutationProperty:
    def test_symmetric_exp_family_scores_commute_across_grid(self, rs):
        t_op = random_hermitian(rs, 3)
        rho0 = np.eye(3, dtype=complex) / 3 + 0.05 * random_hermitian(rs, 3)
        rho0 = rho0 / np.trace(rho0).real
        w = np.linalg.eigvalsh(rho0)
        if w.min() <= 1e-3:
            rho0 = np.eye(3, dtype=complex) / 3
        model = symmetric_exp_model(t_op, rho0)
        grid = np.linspace(-0.5, 0.5, 5)
        scores = [sld(model, t)[0] for t in grid]
        for a in scores:
            for b in scores:
                assert np.linalg.norm(a @ b - b @ a) < 1e-6


class TestUniformAttainability:
    def test_symmetric_model_measuring_generator_attains_everywhere(self, rs):
        for k in range(3):
            t_op = random_hermitian(rs, 3)
            rho0_m = np.eye(3, dtype=complex) / 3 + 0.04 * random_hermitian(rs, 3)
            rho0_m = rho0_m / np.trace(rho0_m).real
            model = symmetric_exp_model(t_op, rho0_m)
            m = from_observable(t_op)
            for theta in np.linspace(-0.6, 0.6, 7):
                qi = quantum_fisher(model, theta)[0, 0]
                ci = classical_fisher(model, theta, m)[0, 0]
                assert abs(qi - ci) < 1e-6 * max(1.0, qi)


class TestInfoReportJson:
    def test_fields(self):
        from qsinf import serialize

        model = equatorial_model()
        report = bc_audit(model, 0.3, optimal_measurement(model, 0.3))
        obj = serialize.info_report_to_json(report)
        assert set(obj) == {"theta", "I", "i", "gap_min_eig", "attained"}
        assert obj["attained"] is True
