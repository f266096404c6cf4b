"""Acceptance criteria, one test per criterion.

Each test prints a single ``ACCEPTANCE n: PASS/FAIL`` line (run pytest with
-s to see them live) and enforces both the numerical tolerance and the
runtime budget of the criterion.
"""

import time

import numpy as np
import pytest
from scipy import stats

from qsinf import qcore, tomo
from qsinf.epr import bell_demo, lhv_implication_holds, lhv_max_over_strategies, teleport_branches
from qsinf.instrument import apply as apply_instrument
from qsinf.instrument import choi_cp_check, coarsen_instrument, simple_instrument, transpose_map
from qsinf.measure import distribution, naimark_dilate, spin_pprom, triad_povm
from qsinf.qcore import DensityMatrix
from qsinf.qinfo import (
    adaptive_mc,
    bc_audit,
    classical_fisher,
    gill_massar_value,
    optimal_measurement,
    quantum_fisher,
    random_full_rank_model,
    random_povm,
)
from qsinf.qmodels import great_circle_model
from qsinf.trajectory import ensemble_mean, first_jump_times, two_level_decay


class _Timer:
    def __init__(self, number, budget, label):
        self.number = number
        self.budget = budget
        self.label = label

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        verdict = "PASS" if exc_type is None else "FAIL"
        print(f"ACCEPTANCE {self.number}: {verdict} ({elapsed:.2f}s < {self.budget:.0f}s) - {self.label}")
        if exc_type is None:
            assert elapsed < self.budget, f"runtime {elapsed:.2f}s exceeds {self.budget}s budget"
        return False


def _random_pure_qubit_2param():
    from qsinf.qcore import SIGMA_X, SIGMA_Y, SIGMA_Z

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

    from qsinf.qinfo import ParametricModel

    return ParametricModel(2, state_fn, deriv_fn)


def test_criterion_1_great_circle_information():
    with _Timer(1, 1.0, "great-circle information I = i = 1 on a 100-point grid"):
        model = great_circle_model()
        m = spin_pprom([np.cos(0.4), np.sin(0.4), 0.0])
        for theta in np.linspace(0.0, 2 * np.pi, 100, endpoint=False):
            assert abs(quantum_fisher(model, theta)[0, 0] - 1.0) < 1e-7
            assert abs(classical_fisher(model, theta, m)[0, 0] - 1.0) < 1e-7


def test_criterion_2_information_bound_suite():
    with _Timer(2, 30.0, "I - i PSD over 500 random models/measurements; score measurement attains"):
        rs = np.random.RandomState(17)
        for k in range(500):
            dim = int(rs.randint(2, 5))
            model = random_full_rank_model(dim, seed=20000 + k)
            m = random_povm(dim, int(rs.randint(2, 2 * dim + 2)), seed=40000 + k)
            theta = float(rs.uniform(-1.0, 1.0))
            report = bc_audit(model, theta, m)
            assert report.gap_min_eig >= -1e-8
            opt_report = bc_audit(model, theta, optimal_measurement(model, theta))
            assert opt_report.residual < 1e-7
            assert opt_report.attained


def test_criterion_3_gill_massar_bound():
    with _Timer(3, 30.0, "tr(I^-1 i) <= 1 for 200 random measurements on pure qubit pairs"):
        model = _random_pure_qubit_2param()
        rs = np.random.RandomState(29)
        for k in range(200):
            theta = np.array([rs.uniform(0.4, np.pi - 0.4), rs.uniform(0, 2 * np.pi)])
            m = random_povm(2, int(rs.randint(2, 7)), seed=60000 + k)
            assert gill_massar_value(model, theta, m) <= 1.0 + 1e-7


def test_criterion_4_adaptive_two_stage():
    with _Timer(4, 120.0, "two-stage adaptive estimation attains the variance bound"):
        mean_mse, _ = adaptive_mc(theta_true=0.8, eta=np.pi / 2, n=10000, reps=500, seed=101)
        assert abs(mean_mse - 1.0) <= 0.15


def test_criterion_5_unraveling_equivalence():
    with _Timer(5, 60.0, "jump unraveling reproduces the decay law; jump times exponential"):
        gen = two_level_decay(1.0)
        excited = qcore.basis_state(2, 1)
        dt, t_max = 1e-3, 3.0
        res = ensemble_mean(gen, excited, t_max, dt, n_traj=2000, seed=7, record_stride=30)
        target = np.exp(-res.times)
        got = res.rho_mean[:, 1, 1].real
        se = res.se_entries[:, 1, 1]
        assert np.all(np.abs(got - target) <= 4.0 * se + 1e-12)
        times = first_jump_times(gen, excited, dt, 25.0, n_traj=10000, seed=13)
        assert np.isnan(times).sum() == 0
        assert stats.kstest(times, "expon").pvalue > 0.01


def test_criterion_6_tomography():
    with _Timer(6, 180.0, "homodyne MLE fidelities and kernel unbiasedness gate"):
        # unbiasedness gate first: every target m, m' <= 3 reproduced by
        # quadrature to 1e-3 (state padded into the n_max = 8 space)
        rs = np.random.RandomState(3)
        a = rs.randn(4, 4) + 1j * rs.randn(4, 4)
        small = a @ a.conj().T
        small /= np.trace(small).real
        rho8 = np.zeros((9, 9), dtype=complex)
        rho8[:4, :4] = small
        for m in range(4):
            for mp in range(4):
                got = tomo.kernel_expectation_oracle(rho8, m, mp, r_max=8.0)
                assert abs(got - rho8[m, mp]) < 1e-3

        vac = np.zeros((5, 5), dtype=complex)
        vac[0, 0] = 1.0
        samples = tomo.sample_homodyne(vac, 10000, seed=41)
        fit = tomo.mle_estimate(samples, 4)
        assert tomo.fidelity_pure(fit.rho, [1, 0, 0, 0, 0]) >= 0.98
        assert np.all(np.diff(fit.loglik) >= 0)

        v = np.zeros(5, dtype=complex)
        v[0] = v[1] = 1 / np.sqrt(2)
        samples2 = tomo.sample_homodyne(np.outer(v, v.conj()), 20000, seed=43)
        fit2 = tomo.mle_estimate(samples2, 4)
        assert tomo.fidelity_pure(fit2.rho, v) >= 0.95


def test_criterion_7_bell_inequality():
    with _Timer(7, 1.0, "singlet table (1, 1/4, 1/4, 1/4) beats every local strategy"):
        report = bell_demo()
        assert np.allclose(report.p_equal, [1.0, 0.25, 0.25, 0.25], atol=1e-12)
        assert report.p_equal[0] > sum(report.p_equal[1:])  # 1 > 3/4
        assert report.violated
        assert lhv_max_over_strategies() <= 0.0
        assert lhv_implication_holds()


def test_criterion_8_teleportation():
    with _Timer(8, 1.0, "teleportation: equiprobable outcomes, unit fidelity"):
        rs = np.random.RandomState(8)
        for _ in range(100):
            v = rs.randn(2) + 1j * rs.randn(2)
            v /= np.linalg.norm(v)
            for _, prob, _, fid in teleport_branches(v[0], v[1]):
                assert abs(prob - 0.25) < 1e-10
                assert fid >= 1 - 1e-10


def test_criterion_9_dilation():
    with _Timer(9, 5.0, "dilated simple measurements reproduce POVM statistics"):
        rs = np.random.RandomState(9)
        povms = [triad_povm()] + [random_povm(2, int(rs.randint(2, 7)), seed=80000 + k) for k in range(10)]
        for m in povms:
            dil = naimark_dilate(m)
            for _ in range(20):
                a = rs.randn(2, 2) + 1j * rs.randn(2, 2)
                rho = DensityMatrix((a @ a.conj().T) / np.trace(a @ a.conj().T).real)
                direct = distribution(rho, m).probs
                lifted = distribution(dil.embed(rho), dil.pprom).probs
                assert np.max(np.abs(direct - lifted)) < 1e-8


def test_criterion_10_instrument_calculus():
    with _Timer(10, 10.0, "coarsening posterior mixtures; CP verdicts via the Choi matrix"):
        rs = np.random.RandomState(10)
        ok, mn = choi_cp_check(transpose_map, dim=2)
        assert not ok and mn < 0
        assert mn / 2 == pytest.approx(-0.5, abs=1e-12)
        for k in range(100):
            dim = int(rs.randint(2, 5))
            h = rs.randn(dim, dim) + 1j * rs.randn(dim, dim)
            instr = simple_instrument(0.5 * (h + h.conj().T))
            cp_ok, cp_min = choi_cp_check(instr)
            assert cp_ok and cp_min >= -1e-9
            a = rs.randn(dim, dim) + 1j * rs.randn(dim, dim)
            rho = DensityMatrix((a @ a.conj().T) / np.trace(a @ a.conj().T).real)
            fine = apply_instrument(instr, rho)
            merge = {x: ("a" if i % 2 == 0 else "b") for i, x in enumerate(instr.outcomes)}
            coarse = apply_instrument(coarsen_instrument(instr, merge), rho)
            for y in coarse.outcomes:
                pi_y = 0.0
                mix = np.zeros((dim, dim), dtype=complex)
                for x, p, post in fine:
                    if merge[x] == y and p > 1e-14:
                        pi_y += p
                        mix += p * post.matrix
                if pi_y < 1e-12:
                    continue
                assert np.linalg.norm(coarse.posterior_of(y).matrix - mix / pi_y) < 1e-9
