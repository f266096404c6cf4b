"""Quantum score and Fisher information machinery.

The symmetric logarithmic derivative L_j solves d_j rho = (rho L_j + L_j
rho)/2; the quantum information matrix is I_jk = Re tr(rho L_j L_k) and
upper-bounds the classical Fisher information of every measurement.  This
module computes both sides, audits the bound and its equality condition,
evaluates the Helstrom and Gill-Massar bounds, and runs the two-stage
adaptive scheme that attains the bound asymptotically for one-parameter
equatorial qubit families.
"""

from __future__ import annotations

import numpy as np

from . import measure, qcore, rng
from .measure import Povm, Pprom, from_observable
from .qcore import DensityMatrix, QsinfError, jordan_product

TOL_NULL = 1e-12
TOL_P = 1e-12
FD_STEP = 1e-5
FD_STEP_J = 1e-3


class SldResidual(QsinfError):
    pass


class SingularInformation(QsinfError):
    pass


class ParametricModel:
    """Differentiable family theta -> rho(theta).

    ``state_fn`` maps a length-k parameter array to a DensityMatrix;
    ``deriv_fn``, when given, returns the list of k partial derivatives as
    matrices, otherwise central finite differences with step ``h`` are
    used.  ``check_derivatives`` verifies the two routes agree.
    """

    def __init__(self, dim_param: int, state_fn, deriv_fn=None, h: float = FD_STEP):
        self.dim_param = int(dim_param)
        self._state_fn = state_fn
        self._deriv_fn = deriv_fn
        self.h = float(h)

    def _theta(self, theta) -> np.ndarray:
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        if t.shape != (self.dim_param,):
            raise QsinfError(f"expected {self.dim_param} parameter(s), got shape {t.shape}")
        return t

    def state(self, theta) -> DensityMatrix:
        return self._state_fn(self._theta(theta))

    def derivatives(self, theta) -> list[np.ndarray]:
        t = self._theta(theta)
        if self._deriv_fn is not None:
            return [np.asarray(d, dtype=complex) for d in self._deriv_fn(t)]
        return self.fd_derivatives(t)

    def fd_derivatives(self, theta) -> list[np.ndarray]:
        t = self._theta(theta)
        out = []
        for j in range(self.dim_param):
            tp, tm = t.copy(), t.copy()
            tp[j] += self.h
            tm[j] -= self.h
            out.append((self.state(tp).matrix - self.state(tm).matrix) / (2 * self.h))
        return out

    def check_derivatives(self, theta, tol: float = 1e-6) -> float:
        """Max deviation between analytic and finite-difference derivatives."""
        if self._deriv_fn is None:
            return 0.0
        ana = self.derivatives(theta)
        fd = self.fd_derivatives(theta)
        err = max(np.max(np.abs(a - f)) for a, f in zip(ana, fd))
        if err > tol:
            raise QsinfError(f"analytic and finite-difference derivatives differ by {err}")
        return float(err)


def product_model(model: ParametricModel, copies: int) -> ParametricModel:
    """Model of `copies` independent systems in the same state."""

    def state_fn(t):
        m = model.state(t).matrix
        return DensityMatrix(qcore.tensor_many(*([m] * copies)))

    def deriv_fn(t):
        m = model.state(t).matrix
        ds = model.derivatives(t)
        out = []
        for d in ds:
            total = np.zeros((m.shape[0] ** copies,) * 2, dtype=complex)
            for pos in range(copies):
                factors = [m] * copies
                factors[pos] = d
                total += qcore.tensor_many(*factors)
            out.append(total)
        return out

    return ParametricModel(model.dim_param, state_fn, deriv_fn)


def sld(model: ParametricModel, theta, tol_residual: float = 1e-8) -> list[np.ndarray]:
    """Symmetric logarithmic derivatives at theta, one matrix per parameter.

    Solved in the eigenbasis of rho: entry (a, b) is 2 drho_ab / (p_a +
    p_b); entries with p_a + p_b <= 1e-12 are set to zero (minimal-norm
    representative).  Raises SldResidual if the defining equation is not
    met to 1e-8, which signals a derivative leaving the support.
    """
    rho = model.state(theta).matrix
    derivs = model.derivatives(theta)
    w, v = np.linalg.eigh(rho)
    out = []
    for d in derivs:
        d = 0.5 * (d + d.conj().T)
        dt = v.conj().T @ d @ v
        denom = w[:, None] + w[None, :]
        big = denom > TOL_NULL
        lt = np.where(big, 2.0 * dt / np.where(big, denom, 1.0), 0.0)
        l = v @ lt @ v.conj().T
        l = 0.5 * (l + l.conj().T)
        if np.linalg.norm(jordan_product(rho, l) - d) > tol_residual:
            raise SldResidual("score equation residual exceeds tolerance")
        if abs(np.trace(rho @ l).real) > 1e-8:
            raise SldResidual("score mean tr(rho L) deviates from zero")
        out.append(l)
    return out


def quantum_fisher(model: ParametricModel, theta) -> np.ndarray:
    """k x k quantum information matrix I_jk = Re tr(L_j rho L_k)."""
    rho = model.state(theta).matrix
    ls = sld(model, theta)
    k = len(ls)
    info = np.zeros((k, k))
    for a in range(k):
        for b in range(a, k):
            val = 0.5 * np.trace(ls[a] @ rho @ ls[b] + ls[b] @ rho @ ls[a]).real
            info[a, b] = info[b, a] = val
    return info


def observable_qinfo(model: ParametricModel, theta, h: float = FD_STEP_J):
    """Observable information J = -dL/dtheta for one-parameter models.

    Returns ``(J, err)`` where err = |I - tr(rho J)|, the deviation from
    the identity relating expected and observable information.
    """
    if model.dim_param != 1:
        raise QsinfError("observable information is implemented for k = 1")
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    lp = sld(model, t + h)[0]
    lm = sld(model, t - h)[0]
    j = -(lp - lm) / (2 * h)
    rho = model.state(t).matrix
    i_val = quantum_fisher(model, t)[0, 0]
    err = abs(i_val - np.trace(rho @ j).real)
    return j, float(err)


def classical_fisher(model: ParametricModel, theta, m: Povm, cross_check: bool = True) -> np.ndarray:
    """Fisher information matrix of the outcome law of measurement ``m``.

    i_rs = sum_x d_r p(x) d_s p(x) / p(x), with outcomes of probability
    below 1e-12 excluded.  For k = 1 the result is cross-checked against
    the score form sum_x p^{-1} (Re tr(rho L m(x)))^2 to 1e-7.
    """
    rho = model.state(theta).matrix
    derivs = model.derivatives(theta)
    k = len(derivs)
    probs = np.array([np.trace(rho @ e).real for e in m.elements])
    dprob = np.array([[np.trace(d @ e).real for e in m.elements] for d in derivs])
    info = np.zeros((k, k))
    for x in range(len(m.elements)):
        if probs[x] <= TOL_P:
            continue
        info += np.outer(dprob[:, x], dprob[:, x]) / probs[x]
    if cross_check and k == 1:
        ls = sld(model, theta)
        alt = 0.0
        for x, e in enumerate(m.elements):
            if probs[x] <= TOL_P:
                continue
            alt += np.trace(rho @ ls[0] @ e).real ** 2 / probs[x]
        if abs(alt - info[0, 0]) > 1e-7:
            raise QsinfError(
                f"log-derivative and score forms of the Fisher information disagree: "
                f"{info[0, 0]} vs {alt}"
            )
    return info


def optimal_measurement(model: ParametricModel, theta) -> Pprom:
    """Simple measurement of the quantum score; attains i = I at theta."""
    if model.dim_param != 1:
        raise QsinfError("score measurement is implemented for k = 1")
    return from_observable(sld(model, theta)[0])


class InfoReport:
    """Comparison of quantum and measurement information at one point."""

    def __init__(self, theta, quantum_info, classical_info, gap_min_eig, attained, residual):
        self.theta = np.atleast_1d(np.asarray(theta, dtype=float))
        self.quantum_info = quantum_info
        self.classical_info = classical_info
        self.gap_min_eig = gap_min_eig
        self.attained = attained
        self.residual = residual


def bc_audit(model: ParametricModel, theta, m: Povm) -> InfoReport:
    """Audit i(theta; M) <= I(theta).

    Reports both matrices and the smallest eigenvalue of the gap I - i.
    For one-parameter models the equality condition is checked per outcome
    as the least-squares residual of m^(1/2) L rho^(1/2) = r m^(1/2)
    rho^(1/2) over real r; the bound is attained iff the largest residual
    is below 1e-7.
    """
    qi = quantum_fisher(model, theta)
    ci = classical_fisher(model, theta, m)
    gap_min = float(np.linalg.eigvalsh(qi - ci).min())
    attained = False
    residual = float("nan")
    if model.dim_param == 1:
        rho = model.state(theta).matrix
        l = sld(model, theta)[0]
        w, v = np.linalg.eigh(rho)
        root_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
        worst = 0.0
        for e in m.elements:
            we, ve = np.linalg.eigh(e)
            root_m = (ve * np.sqrt(np.clip(we, 0.0, None))) @ ve.conj().T
            a = root_m @ l @ root_rho
            b = root_m @ root_rho
            denom = np.vdot(b, b).real
            if denom <= TOL_P:
                worst = max(worst, float(np.linalg.norm(a)))
                continue
            r = np.vdot(b, a).real / denom
            worst = max(worst, float(np.linalg.norm(a - r * b)))
        residual = worst
        attained = worst < 1e-7
    return InfoReport(theta, qi, ci, gap_min, attained, residual)


def helstrom_bound(model: ParametricModel, theta):
    """Inverse quantum information: the variance floor for unbiased
    estimators.  Scalar for one-parameter models, matrix otherwise."""
    qi = quantum_fisher(model, theta)
    if model.dim_param == 1:
        if qi[0, 0] <= TOL_NULL:
            raise SingularInformation("quantum information vanishes")
        return float(1.0 / qi[0, 0])
    if np.linalg.cond(qi) > 1e12:
        raise SingularInformation("quantum information matrix is singular")
    return np.linalg.inv(qi)


def gill_massar_value(model: ParametricModel, theta, m: Povm, copies: int = 1) -> float:
    """tr(I^{-1} i_n / n) for a measurement on `copies` independent systems.

    Bounded by dim(H) - 1 for pure models, one-parameter qubit models, and
    separable measurements.
    """
    qi = quantum_fisher(model, theta)
    if np.linalg.cond(qi) > 1e12:
        raise SingularInformation("quantum information matrix is singular")
    big = product_model(model, copies) if copies > 1 else model
    ci = classical_fisher(big, theta, m, cross_check=False)
    return float(np.trace(np.linalg.solve(qi, ci)).real / copies)


def gm_attaining_measurement(model: ParametricModel, theta, weights) -> Povm:
    """Randomized score measurement hitting a diagonal information target.

    For a spin-half model with orthogonal score directions, measuring the
    eigenbasis of L_j extracts the full information for parameter j and
    none for the others; mixing those simple measurements with weights
    p_j (sum <= 1, the slack going to a trivial outcome) yields i(theta; M)
    = diag(p_1 I_11, ..., p_k I_kk), so tr(I^-1 i) = sum p_j.  Only this
    diagonal-in-the-score-frame case is constructed.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.min() < 0 or weights.sum() > 1 + 1e-12:
        raise QsinfError("weights must be nonnegative with sum at most 1")
    ls = sld(model, theta)
    if len(ls) != weights.size:
        raise QsinfError("one weight per parameter required")
    dim = model.state(theta).dim
    outcomes, elements = [], []
    for j, (p, l) in enumerate(zip(weights, ls)):
        if p <= 0:
            continue
        sub = from_observable(l)
        for x, e in zip(sub.outcomes, sub.elements):
            outcomes.append((j, x))
            elements.append(p * e)
    slack = 1.0 - weights.sum()
    if slack > 1e-12:
        outcomes.append(("idle", 0))
        elements.append(slack * np.eye(dim, dtype=complex))
    return measure.validate_povm(elements, outcomes=outcomes)


def equatorial_model(eta: float = np.pi / 2) -> ParametricModel:
    """Pure qubit family at fixed colatitude eta, longitude as parameter."""
    se, ce = np.sin(eta), np.cos(eta)

    def state_fn(t):
        th = t[0]
        u = qcore.BlochVector(se * np.cos(th), se * np.sin(th), ce)
        return qcore.density_from_bloch(u)

    def deriv_fn(t):
        th = t[0]
        d = 0.5 * (-se * np.sin(th) * qcore.SIGMA_X + se * np.cos(th) * qcore.SIGMA_Y)
        return [d]

    return ParametricModel(1, state_fn, deriv_fn)


def _wrap(angle: float) -> float:
    return float(np.mod(angle + np.pi, 2 * np.pi) - np.pi)


def adaptive_two_stage(theta_true: float, eta: float, n: int, seed: int):
    """Two-stage adaptive estimation of the longitude of a qubit family.

    Stage 1 spends ceil(n^0.7) copies, split between spin-x and spin-y
    simple measurements, on a preliminary estimate.  Stage 2 measures the
    remaining copies with the score measurement at that estimate and
    maximizes the stage-2 likelihood by damped Newton steps on the wrapped
    parameter.  Returns ``(theta_hat, n * (theta_hat - theta_true)^2)``
    with the error taken modulo 2 pi.
    """
    if n < 100:
        raise QsinfError("need at least 100 copies")
    se = np.sin(eta)
    n1 = int(np.ceil(n**0.7))
    n1x = n1 // 2
    n1y = n1 - n1x
    n2 = n - n1

    stream = rng.derive_seed(seed, 0)
    u = rng.uniforms(stream, 0, n1x + n1y + n2)

    # stage 1: spin-x then spin-y outcomes, +1 with prob (1 + <sigma>)/2
    px = 0.5 * (1.0 + se * np.cos(theta_true))
    py = 0.5 * (1.0 + se * np.sin(theta_true))
    sx = 2.0 * np.mean(u[:n1x] < px) - 1.0
    sy = 2.0 * np.mean(u[n1x : n1x + n1y] < py) - 1.0
    theta_tilde = float(np.arctan2(sy, sx))

    # stage 2: score measurement at theta_tilde; P(+1) = (1 + s sin(theta -
    # theta_tilde))/2 with s = sin(eta)
    p2 = 0.5 * (1.0 + se * np.sin(theta_true - theta_tilde))
    k = int(np.sum(u[n1x + n1y :] < p2))

    def loglik_derivs(th):
        delta = th - theta_tilde
        p = 0.5 * (1.0 + se * np.sin(delta))
        p = min(max(p, 1e-12), 1.0 - 1e-12)
        dp = 0.5 * se * np.cos(delta)
        d2p = -0.5 * se * np.sin(delta)
        lp = (k / p - (n2 - k) / (1.0 - p)) * dp
        lpp = (k / p - (n2 - k) / (1.0 - p)) * d2p - (k / p**2 + (n2 - k) / (1.0 - p) ** 2) * dp**2
        return lp, lpp

    th = theta_tilde
    for _ in range(50):
        lp, lpp = loglik_derivs(th)
        if abs(lpp) < 1e-300:
            break
        step = lp / lpp
        step = float(np.clip(step, -0.5, 0.5))
        th_new = th - step
        if abs(th_new - th) < 1e-10:
            th = th_new
            break
        th = th_new
    theta_hat = _wrap(th)
    err = _wrap(theta_hat - theta_true)
    return theta_hat, float(n * err**2)


def adaptive_mc(theta_true: float, eta: float, n: int, reps: int, seed: int):
    """Replicated two-stage runs; returns (mean scaled MSE, per-rep array)."""
    vals = np.empty(reps)
    for r in range(reps):
        _, vals[r] = adaptive_two_stage(theta_true, eta, n, int(rng.derive_seed(seed, r + 1)))
    return float(vals.mean()), vals


def random_full_rank_model(dim: int, seed: int) -> ParametricModel:
    """Random one-parameter rotation family rho(t) = U_t rho0 U_t* with
    full-rank rho0; analytic derivative -i[G, rho]."""
    st = np.random.RandomState(seed)
    a = st.randn(dim, dim) + 1j * st.randn(dim, dim)
    rho0 = a @ a.conj().T
    rho0 = rho0 / np.trace(rho0).real
    rho0 = rho0 + 0.05 * np.eye(dim)
    rho0 = rho0 / np.trace(rho0).real
    b = st.randn(dim, dim) + 1j * st.randn(dim, dim)
    g = 0.5 * (b + b.conj().T)

    wg, vg = np.linalg.eigh(g)

    def propagate(t):
        u = (vg * np.exp(-1j * wg * t[0])) @ vg.conj().T
        return u @ rho0 @ u.conj().T

    def state_fn(t):
        return DensityMatrix(propagate(t))

    def deriv_fn(t):
        m = propagate(t)
        return [-1j * (g @ m - m @ g)]

    return ParametricModel(1, state_fn, deriv_fn)


def random_povm(dim: int, n_outcomes: int, seed: int) -> Povm:
    """Random measurement: normalize random PSD pieces by S^{-1/2} . S^{-1/2}."""
    st = np.random.RandomState(seed)
    pieces = []
    for _ in range(n_outcomes):
        a = st.randn(dim, dim) + 1j * st.randn(dim, dim)
        pieces.append(a @ a.conj().T)
    s = sum(pieces)
    w, v = np.linalg.eigh(s)
    inv_root = (v * (1.0 / np.sqrt(w))) @ v.conj().T
    return measure.validate_povm([inv_root @ p @ inv_root for p in pieces])
