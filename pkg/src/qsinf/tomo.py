"""Truncated harmonic oscillator and homodyne tomography.

Quadrature measurements X_phi = cos(phi) Q + sin(phi) P at uniformly random
phases identify the state; this module simulates such data and estimates
the state back, either by likelihood maximization over a Cholesky-like
factorization rho = T T* / tr(T T*) or by the sample-mean kernel estimator
of individual matrix elements.

Truncation convention: a state given with levels 0..n_max is padded with 4
guard levels for every spectral computation, and the working x grid spans
the classically allowed region of the padded space (2048 points on
+- sqrt(2 n_levels + 6), n_levels = n_max + 4).
"""

from __future__ import annotations

import numpy as np
from scipy.special import eval_genlaguerre

from . import rng
from .qcore import DensityMatrix, DimMismatch, QsinfError, as_complex_matrix

GUARD_LEVELS = 4
GRID_POINTS = 2048


class NegativeDensity(QsinfError):
    pass


class FockSpace:
    """Ladder, number and quadrature operators truncated at level n_max."""

    def __init__(self, n_max: int):
        self.n_max = int(n_max)
        d = self.n_max + 1
        self.dim = d
        n = np.arange(d)
        self.a_minus = np.diag(np.sqrt(n[1:]), k=1).astype(complex)
        self.a_plus = self.a_minus.conj().T
        self.number_op = np.diag(n).astype(complex)
        self.q_op = (self.a_minus + self.a_plus) / np.sqrt(2)
        self.p_op = (self.a_minus - self.a_plus) / (1j * np.sqrt(2))

    def x_phi(self, phi: float) -> np.ndarray:
        return np.cos(phi) * self.q_op + np.sin(phi) * self.p_op


def default_grid(n_max: int) -> np.ndarray:
    """Working x grid for states supported on levels <= n_max.

    Spans the classically allowed region of the guard-padded space plus a
    one-unit margin, which keeps the tail mass of every stored level below
    1e-8 (so grid sums integrate densities and Gram matrices to better
    than 1e-6).
    """
    x_max = np.sqrt(2.0 * (n_max + GUARD_LEVELS) + 6.0) + 1.0
    return np.linspace(-x_max, x_max, GRID_POINTS)


def hermite_u(n: int, x):
    """n-th oscillator eigenfunction by upward recursion from
    u0 = pi^(-1/4) exp(-x^2/2)."""
    x = np.asarray(x, dtype=float)
    u_prev = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if n == 0:
        return u_prev
    u_cur = np.sqrt(2.0) * x * u_prev
    for k in range(1, n):
        u_next = (np.sqrt(2.0) * x * u_cur - np.sqrt(k) * u_prev) / np.sqrt(k + 1.0)
        u_prev, u_cur = u_cur, u_next
    return u_cur


def hermite_table(n_max: int, x) -> np.ndarray:
    """Rows 0..n_max of the eigenfunction table on the given grid."""
    x = np.asarray(x, dtype=float)
    table = np.zeros((n_max + 1, x.size))
    table[0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if n_max >= 1:
        table[1] = np.sqrt(2.0) * x * table[0]
    for k in range(1, n_max):
        table[k + 1] = (np.sqrt(2.0) * x * table[k] - np.sqrt(k) * table[k - 1]) / np.sqrt(k + 1.0)
    return table


class HermiteBasis:
    """Eigenfunction table on a grid wide enough that the Riemann-sum Gram
    matrix of the stored levels is the identity to 1e-6."""

    def __init__(self, n_max: int, grid=None):
        self.n_max = int(n_max)
        self.grid = default_grid(self.n_max) if grid is None else np.asarray(grid, dtype=float)
        self.table = hermite_table(self.n_max, self.grid)

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def gram(self) -> np.ndarray:
        return self.table @ self.table.T * self.dx


def quadrature_density(rho, phi: float, grid=None) -> np.ndarray:
    """Density of a quadrature measurement at phase phi on the grid.

    p(x) = sum_{m,m'} rho_mm' e^{i(m-m')phi} u_m(x) u_m'(x); values are
    clipped at zero, and anything below -1e-9 raises NegativeDensity
    (the truncation is too small for the state).
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_complex_matrix(rho)
    d = m.shape[0]
    if grid is None:
        grid = default_grid(d - 1)
    table = hermite_table(d - 1, grid)
    # X_phi = e^{i phi N} Q e^{-i phi N}, so measure Q on the back-rotated
    # state: entry (a, b) picks up e^{-i phi (a - b)}
    phase = np.exp(1j * phi * np.arange(d))
    twisted = (phase.conj()[:, None] * m) * phase[None, :]
    dens = np.einsum("mg,mn,ng->g", table, twisted, table).real
    if dens.min() < -1e-9:
        raise NegativeDensity(f"density reaches {dens.min()}; increase the truncation")
    return np.clip(dens, 0.0, None)


class QuadratureSamples:
    """Homodyne records (phi_i, x_i) with the generating seed."""

    def __init__(self, phis, xs, seed, truth: DensityMatrix | None = None):
        self.phis = np.asarray(phis, dtype=float)
        self.xs = np.asarray(xs, dtype=float)
        self.seed = seed
        self.truth = truth

    def __len__(self):
        return self.phis.size


def sample_homodyne(
    rho, n_samples: int, seed: int, noise_std: float = 0.0, chunk: int = 2048
) -> QuadratureSamples:
    """Draw (phi, x) pairs: phi uniform on [0, 2 pi), x by inverting the
    cumulative grid density at that phase.

    Sample i consumes counters (2i, 2i+1) of the stream derived from
    ``seed``, so output is reproducible and batch-size independent.
    Optional Gaussian detector noise of standard deviation ``noise_std``
    is added to x (off by default; estimators do not deconvolve it).
    """
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    d = rho.dim
    grid = default_grid(d - 1)
    dx = grid[1] - grid[0]
    table = hermite_table(d - 1, grid)

    w, v = np.linalg.eigh(rho.matrix)
    keep = w > 1e-14
    w, v = w[keep], v[:, keep]

    stream = rng.derive_seed(seed, 0)
    idx = np.arange(n_samples, dtype=np.uint64)
    phis = 2.0 * np.pi * rng.uniform_at(stream, 2 * idx)
    us = rng.uniform_at(stream, 2 * idx + np.uint64(1))

    ms = np.arange(d)
    xs = np.empty(n_samples)
    for lo in range(0, n_samples, chunk):
        hi = min(lo + chunk, n_samples)
        ph = phis[lo:hi]
        dens = np.zeros((hi - lo, grid.size))
        for k in range(w.size):
            coef = v[:, k].conj()[None, :] * np.exp(1j * np.outer(ph, ms))
            amp = coef @ table
            dens += w[k] * (amp.real**2 + amp.imag**2)
        cdf = np.cumsum(dens, axis=1)
        target = us[lo:hi] * cdf[:, -1]
        pos = (cdf < target[:, None]).sum(axis=1)
        left = np.where(pos > 0, cdf[np.arange(hi - lo), np.maximum(pos - 1, 0)], 0.0)
        frac = (target - left) / np.maximum(dens[np.arange(hi - lo), pos], 1e-300)
        xs[lo:hi] = grid[pos] - 0.5 * dx + frac * dx
    if noise_std > 0.0:
        noise_stream = rng.derive_seed(seed, 1)
        xs = xs + noise_std * rng.normal_at(noise_stream, idx)
    return QuadratureSamples(phis, xs, seed, truth=rho)


class MleResult:
    def __init__(self, rho, loglik, iters, converged):
        self.rho = rho
        self.loglik = loglik
        self.iters = iters
        self.converged = converged


def mle_estimate(
    samples: QuadratureSamples,
    n_max: int,
    max_iter: int = 5000,
    tol: float = 1e-8,
    step0: float = 1e-2,
) -> MleResult:
    """Maximum-likelihood state estimate from homodyne records.

    The state is parameterized as rho = T T* / tr(T T*) with T upper
    triangular, leaving trace one as the only constraint; projected
    gradient ascent with backtracking keeps the recorded log-likelihood
    nondecreasing.  When max_iter is hit the best iterate is returned with
    ``converged = False``.
    """
    n = len(samples)
    d = n_max + 1
    if n < 10 * d * d:
        raise QsinfError(f"need at least {10 * d * d} samples for n_max={n_max}")
    table = hermite_table(n_max, samples.xs)  # (d, n)
    w = table.T * np.exp(1j * np.outer(samples.phis, np.arange(d)))  # rows w_i
    v = w.conj()

    t = np.triu(np.eye(d, dtype=complex)) / np.sqrt(d)

    def loglik(tm):
        b = v @ tm
        p = np.einsum("ij,ij->i", b, b.conj()).real
        return float(np.sum(np.log(np.maximum(p, 1e-300)))), b, p

    ll, b, p = loglik(t)
    trace_ll = [ll]
    step = step0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = v.conj().T @ (b / p[:, None]) / n - t
        grad = np.triu(grad)
        improved = False
        for _ in range(40):
            cand = t + step * grad
            cand = cand / np.linalg.norm(cand)
            ll_new, b_new, p_new = loglik(cand)
            if ll_new >= ll:
                improved = True
                break
            step *= 0.5
        if not improved:
            converged = True
            break
        gain = ll_new - ll
        t, ll, b, p = cand, ll_new, b_new, p_new
        trace_ll.append(ll)
        step = min(step * 1.25, 1.0)
        if gain < tol:
            converged = True
            break
    rho = t @ t.conj().T
    rho = rho / np.trace(rho).real
    rho = 0.5 * (rho + rho.conj().T)
    return MleResult(DensityMatrix(rho), np.asarray(trace_ll), it, converged)


def fidelity_pure(rho: DensityMatrix, psi) -> float:
    """<psi| rho |psi> against a pure target (zero-padded to rho's dim)."""
    v = np.zeros(rho.dim, dtype=complex)
    amp = np.asarray(psi.amplitudes if hasattr(psi, "amplitudes") else psi, dtype=complex)
    if amp.size > rho.dim:
        raise DimMismatch("target state larger than estimate space")
    v[: amp.size] = amp
    return float((v.conj() @ rho.matrix @ v).real)


def weyl_operator(z: complex, fock: FockSpace) -> np.ndarray:
    """exp(i r X_phi) for z = r e^{i phi}, on the truncated space.

    Exactly unitary on the truncation; it approximates the untruncated
    operator only on low levels and for moderate |z|.
    """
    r, phi = abs(z), np.angle(z)
    w, v = np.linalg.eigh(fock.x_phi(phi))
    return (v * np.exp(1j * r * w)) @ v.conj().T


def displacement_element(m: int, n: int, r) -> np.ndarray:
    """<m| exp(i r Q) |n> of the untruncated oscillator.

    Closed form via associated Laguerre polynomials with argument r^2/2;
    used by the kernel estimator so no spectral truncation error enters.
    """
    r = np.asarray(r, dtype=float)
    lo, hi = (m, n) if m <= n else (n, m)
    k = hi - lo
    # sqrt(lo! / hi!) = 1 / sqrt((lo+1) (lo+2) ... hi)
    fact = 1.0
    for j in range(lo + 1, hi + 1):
        fact *= j
    amp = (1j * r / np.sqrt(2.0)) ** k / np.sqrt(fact)
    return amp * np.exp(-0.25 * r**2) * eval_genlaguerre(lo, k, 0.5 * r**2)


def _radial_weights(m: int, m_prime: int, r_max: float, n_r: int):
    nodes, weights = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * r_max * (nodes + 1.0)
    wq = 0.5 * r_max * weights
    c = displacement_element(m, m_prime, r)
    return r, wq * r * c


def kernel_values(samples: QuadratureSamples, m: int, m_prime: int, r_max: float = 8.0, n_r: int = 400):
    """Per-sample values g(x_i, phi_i) whose mean estimates <m|rho|m'>.

    g(x, phi) = e^{i phi (m - m')} * integral_0^rmax r e^{-i r x}
    <m|e^{irQ}|m'> dr, evaluated by fixed Gauss-Legendre quadrature.
    """
    r, coef = _radial_weights(m, m_prime, r_max, n_r)
    radial = np.exp(-1j * np.outer(samples.xs, r)) @ coef
    return np.exp(1j * (m - m_prime) * samples.phis) * radial


def kernel_estimate(samples: QuadratureSamples, m: int, m_prime: int, r_max: float = 8.0, n_r: int = 400):
    """Sample-mean estimate of the matrix element <m|rho|m'>.

    Returns ``(estimate, stderr)`` with stderr the Monte Carlo standard
    error of the complex mean (real and imaginary parts in quadrature).
    """
    vals = kernel_values(samples, m, m_prime, r_max, n_r)
    est = complex(vals.mean())
    n = vals.size
    var = vals.real.var(ddof=1) + vals.imag.var(ddof=1)
    return est, float(np.sqrt(var / n))


def kernel_expectation_oracle(
    rho,
    m: int,
    m_prime: int,
    r_max: float = 8.0,
    n_r: int = 400,
    n_phi: int = 64,
    grid=None,
) -> complex:
    """Exact expectation of the kernel values under the state's density,
    by two-dimensional quadrature.  Must reproduce <m|rho|m'> before the
    Monte Carlo estimator is trusted."""
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    if grid is None:
        grid = default_grid(rho.dim - 1)
    dx = grid[1] - grid[0]
    r, coef = _radial_weights(m, m_prime, r_max, n_r)
    radial = np.exp(-1j * np.outer(grid, r)) @ coef  # g(x)/phase
    total = 0.0 + 0.0j
    for j in range(n_phi):
        phi = 2.0 * np.pi * j / n_phi
        dens = quadrature_density(rho, phi, grid)
        total += np.exp(1j * (m - m_prime) * phi) * np.sum(radial * dens) * dx
    return total / n_phi


def kernel_reconstruct(samples: QuadratureSamples, n_max: int, r_max: float = 8.0, n_r: int = 400):
    """Estimate every matrix element up to n_max and symmetrize; the
    result is Hermitian with unit trace but need not be positive."""
    d = n_max + 1
    out = np.zeros((d, d), dtype=complex)
    for m in range(d):
        for mp in range(m, d):
            est, _ = kernel_estimate(samples, m, mp, r_max, n_r)
            out[m, mp] = est
            out[mp, m] = np.conj(est)
    return out
