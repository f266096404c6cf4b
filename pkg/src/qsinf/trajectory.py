"""Markovian master-equation integration and stochastic unravelings.

The generator L rho = -i[H, rho] + sum_k (A_k rho A_k* - {A_k* A_k, rho}/2)
is integrated by classical RK4; the jump and diffusion unravelings evolve
pure states whose ensemble mean solves the same equation.  Trajectories
are independent with per-trajectory counter-seeded randomness, so results
do not depend on scheduling or batch order.
"""

from __future__ import annotations

import numpy as np

from . import _kernels, qcore, rng
from .qcore import DensityMatrix, DimMismatch, QsinfError, StateVector, as_complex_matrix, require_hermitian

TOL_TRACE_DRIFT = 1e-8
TOL_PSD_PATH = 1e-7


class StepTooLarge(QsinfError):
    pass


class LindbladGenerator:
    """Hamiltonian plus jump operators of a trace-preserving generator."""

    def __init__(self, h, jump_ops):
        self.h = require_hermitian(h)
        if self.h.shape[0] > qcore.MAX_DIM:
            raise DimMismatch(f"dimension {self.h.shape[0]} exceeds supported maximum {qcore.MAX_DIM}")
        self.jump_ops = [as_complex_matrix(a) for a in jump_ops]
        for a in self.jump_ops:
            if a.shape != self.h.shape:
                raise DimMismatch("jump operator dimension mismatch")

    @property
    def dim(self) -> int:
        return self.h.shape[0]


def lindblad_rhs(gen: LindbladGenerator, rho) -> np.ndarray:
    """Generator applied to a state; traceless and Hermiticity-preserving."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_complex_matrix(rho)
    out = -1j * (gen.h @ m - m @ gen.h)
    for a in gen.jump_ops:
        ada = a.conj().T @ a
        out = out + a @ m @ a.conj().T - 0.5 * (ada @ m + m @ ada)
    return out


class MasterSolution:
    def __init__(self, times, rhos):
        self.times = times
        self.rhos = rhos

    def state(self, idx: int) -> DensityMatrix:
        return DensityMatrix(self.rhos[idx])

    def to_csv(self) -> str:
        d = self.rhos.shape[1]
        head = ["t"]
        for i in range(d):
            for j in range(d):
                head += [f"re_rho_{i}{j}", f"im_rho_{i}{j}"]
        lines = [",".join(head)]
        for t, m in zip(self.times, self.rhos):
            row = [f"{t:.15g}"]
            for i in range(d):
                for j in range(d):
                    row += [f"{m[i, j].real:.15g}", f"{m[i, j].imag:.15g}"]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def integrate_master(gen: LindbladGenerator, rho0: DensityMatrix, t_max: float, dt: float) -> MasterSolution:
    """RK4 integration of the master equation on a uniform grid.

    Raises StepTooLarge when the trace drifts by more than 1e-8 over the
    horizon; recorded states must stay positive semidefinite to -1e-7.
    """
    n_steps = int(round(t_max / dt))
    times = np.arange(n_steps + 1) * dt
    d = gen.dim
    rhos = np.zeros((n_steps + 1, d, d), dtype=complex)
    m = rho0.matrix.astype(complex)
    rhos[0] = m
    for k in range(n_steps):
        k1 = lindblad_rhs(gen, m)
        k2 = lindblad_rhs(gen, m + 0.5 * dt * k1)
        k3 = lindblad_rhs(gen, m + 0.5 * dt * k2)
        k4 = lindblad_rhs(gen, m + dt * k3)
        m = m + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rhos[k + 1] = m
        if abs(np.trace(m).real - 1.0) > TOL_TRACE_DRIFT:
            raise StepTooLarge(f"trace drifted to {np.trace(m).real} at t={times[k + 1]}")
    for snap in (rhos[0], rhos[n_steps // 2], rhos[-1]):
        if np.linalg.eigvalsh(0.5 * (snap + snap.conj().T)).min() < -TOL_PSD_PATH:
            raise StepTooLarge("integrated state lost positivity")
    return MasterSolution(times, rhos)


class Trajectory:
    """One unraveled pure-state path on a recorded time grid.

    ``states`` are the normalized working states; ``log_weights`` track the
    accumulated norm factors, so exp(log_weight) * state reconstructs the
    unnormalized path.  ``jump_times``/``jump_channels`` are empty for the
    diffusion unraveling.
    """

    def __init__(self, times, states, log_weights, jump_times, jump_channels, seed):
        self.times = times
        self.states = states
        self.log_weights = log_weights
        self.jump_times = jump_times
        self.jump_channels = jump_channels
        self.seed = seed

    def density(self, idx: int) -> DensityMatrix:
        v = self.states[idx]
        return DensityMatrix(np.outer(v, v.conj()))

    def to_csv(self) -> str:
        d = self.states.shape[1]
        head = ["t", "jump_flag"] + [f"re_psi_{a}" for a in range(d)] + [f"im_psi_{a}" for a in range(d)]
        lines = [",".join(head)]
        jump_times = np.sort(np.asarray(self.jump_times, dtype=float))
        for k, (t, v) in enumerate(zip(self.times, self.states)):
            # flag a row when a collapse happened since the previous row
            prev = self.times[k - 1] if k > 0 else -np.inf
            flag = 1 if np.any((jump_times > prev + 1e-12) & (jump_times <= t + 1e-12)) else 0
            row = [f"{t:.15g}", str(flag)]
            row += [f"{c.real:.15g}" for c in v] + [f"{c.imag:.15g}" for c in v]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _prep(gen: LindbladGenerator, psi0, t_max: float, dt: float, record_stride: int):
    psi = psi0.amplitudes if isinstance(psi0, StateVector) else np.asarray(psi0, dtype=complex)
    if psi.shape[0] != gen.dim:
        raise DimMismatch("initial state dimension mismatch")
    n_steps = int(round(t_max / dt))
    times = np.arange(n_steps // record_stride + 1) * (dt * record_stride)
    return psi, n_steps, times


def jump_trajectory(
    gen: LindbladGenerator, psi0, t_max: float, dt: float, seed: int, record_stride: int = 1
) -> Trajectory:
    """Single jump-unraveled trajectory with a fixed seed.

    Between collapses the state follows the non-Hermitian drift -iH -
    (1/2) sum A*A (first-order step, renormalized); at each step a collapse
    psi -> A_k psi fires with probability |A_k psi|^2 dt.
    """
    psi, n_steps, times = _prep(gen, psi0, t_max, dt, record_stride)
    traj_seed = rng.derive_seed(seed, 0)
    states, log_w, jump_steps, channels = _kernels.jump_single(
        gen.h, gen.jump_ops, psi, dt, n_steps, traj_seed, record_stride
    )
    return Trajectory(times, states, log_w, jump_steps * dt, channels, seed)


def diffusion_trajectory(
    gen: LindbladGenerator, psi0, t_max: float, dt: float, seed: int, record_stride: int = 1
) -> Trajectory:
    """Single diffusion-unraveled trajectory (single jump operator).

    Euler-Maruyama step of the homodyne-type stochastic state equation
    d psi = [-iH - A*A/2 + m A - m^2/2] psi dt + (A - m) psi dW with m =
    Re<psi|A|psi> on the normalized state, renormalizing after each step.
    """
    if len(gen.jump_ops) != 1:
        raise QsinfError("diffusion unraveling is implemented for a single jump operator")
    psi, n_steps, times = _prep(gen, psi0, t_max, dt, record_stride)
    traj_seed = rng.derive_seed(seed, 0)
    states = _kernels.diffusion_single(gen.h, gen.jump_ops[0], psi, dt, n_steps, traj_seed, record_stride)
    return Trajectory(times, states, np.zeros(len(times)), np.array([]), np.array([], dtype=np.int64), seed)


class EnsembleResult:
    """Trajectory-averaged state path with entrywise standard errors.

    ``se_total[t]`` aggregates the entrywise standard errors in quadrature,
    so || rho_mean(t) - rho_exact(t) ||_F is expected to stay within a few
    multiples of it.
    """

    def __init__(self, times, rho_mean, se_entries, n_traj, first_jump_times, kind):
        self.times = times
        self.rho_mean = rho_mean
        self.se_entries = se_entries
        self.se_total = np.sqrt(np.sum(se_entries**2, axis=(1, 2)))
        self.n_traj = n_traj
        self.first_jump_times = first_jump_times
        self.kind = kind

    def deviation_from(self, master: MasterSolution) -> np.ndarray:
        if len(master.times) != len(self.times) or abs(master.times[-1] - self.times[-1]) > 1e-12:
            raise QsinfError("time grids do not match")
        return np.linalg.norm(self.rho_mean - master.rhos, axis=(1, 2))


def _ensemble(kind, gen, psi0, t_max, dt, n_traj, seed, record_stride):
    psi, n_steps, times = _prep(gen, psi0, t_max, dt, record_stride)
    if kind == "jump":
        sum_rho, sum_sq, first_jump, _ = _kernels.jump_ensemble(
            gen.h, gen.jump_ops, psi, dt, n_steps, n_traj, np.uint64(seed), record_stride
        )
    else:
        if len(gen.jump_ops) != 1:
            raise QsinfError("diffusion unraveling is implemented for a single jump operator")
        sum_rho, sum_sq = _kernels.diffusion_ensemble(
            gen.h, gen.jump_ops[0], psi, dt, n_steps, n_traj, np.uint64(seed), record_stride
        )
        first_jump = np.array([])
    mean = sum_rho / n_traj
    var = np.clip(sum_sq / n_traj - (mean.real**2 + mean.imag**2), 0.0, None)
    se = np.sqrt(var / n_traj)
    return EnsembleResult(times, mean, se, n_traj, first_jump, kind)


def ensemble_mean(
    gen: LindbladGenerator,
    psi0,
    t_max: float,
    dt: float,
    n_traj: int,
    seed: int,
    record_stride: int | None = None,
    kind: str = "jump",
) -> EnsembleResult:
    """Trajectory average of an unraveling ('jump' or 'diffusion').

    The mean path solves the master equation up to O(dt) bias and Monte
    Carlo noise; compare against integrate_master with matching stride.
    """
    if n_traj < 1:
        raise QsinfError("need at least one trajectory")
    if record_stride is None:
        n_steps = int(round(t_max / dt))
        record_stride = max(1, n_steps // 100)
    return _ensemble(kind, gen, psi0, t_max, dt, n_traj, seed, record_stride)


def first_jump_times(
    gen: LindbladGenerator, psi0, dt: float, t_max: float, n_traj: int, seed: int
) -> np.ndarray:
    """First collapse time of each trajectory (nan when none fires)."""
    psi, n_steps, _ = _prep(gen, psi0, t_max, dt, 1)
    return _kernels.first_jump_times(gen.h, gen.jump_ops, psi, dt, n_steps, n_traj, np.uint64(seed))


def two_level_decay(rate_sq: float = 1.0) -> LindbladGenerator:
    """Spontaneous decay of a two-level system: A = alpha |g><e| with
    alpha^2 = rate_sq, basis (ground, excited), H = 0."""
    a = np.zeros((2, 2), dtype=complex)
    a[0, 1] = np.sqrt(rate_sq)
    return LindbladGenerator(np.zeros((2, 2)), [a])
