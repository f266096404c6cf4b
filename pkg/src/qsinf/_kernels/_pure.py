"""Pure-numpy trajectory kernels (fallback backend).

Vectorized across trajectories but arithmetically step-for-step identical
to the compiled backend: each trajectory i draws from the counter stream
``derive_seed(master, i)``, consuming exactly two uniforms per time step
(jump decision + channel pick, or the two Box-Muller inputs of one
normal), and matrix-vector products accumulate over columns in index
order so both backends produce the same floating-point results.
"""

from __future__ import annotations

import numpy as np

from ..rng import derive_seed, uniform_at

BACKEND = "pure"


def _matvec(m, psi):
    """Batched y[s, a] = sum_b m[a, b] psi[s, b], accumulated in b order."""
    out = np.zeros_like(psi)
    d = m.shape[0]
    for a in range(d):
        acc = m[a, 0] * psi[:, 0]
        for b in range(1, d):
            acc = acc + m[a, b] * psi[:, b]
        out[:, a] = acc
    return out


def _norm_sq(psi):
    d = psi.shape[1]
    acc = psi[:, 0].real ** 2 + psi[:, 0].imag ** 2
    for b in range(1, d):
        acc = acc + psi[:, b].real ** 2 + psi[:, b].imag ** 2
    return acc


def _step_uniforms(seeds, step):
    u1 = uniform_at(seeds, np.uint64(2 * step))
    u2 = uniform_at(seeds, np.uint64(2 * step + 1))
    return u1, u2


def _drift_matrix(h, a_ops, dt):
    d = h.shape[0]
    m = -1j * dt * h.astype(complex)
    for a in a_ops:
        m = m - 0.5 * dt * (a.conj().T @ a)
    return np.eye(d, dtype=complex) + m


def jump_ensemble(h, a_ops, psi0, dt, n_steps, n_traj, seed, record_stride):
    """First-order jump unraveling of an ensemble.

    Returns ``(sum_rho, sum_sq, first_jump, n_jumps)`` where sum_rho[t]
    accumulates the normalized pure-state projectors over trajectories at
    recorded step t (stride ``record_stride``, step 0 included), sum_sq
    the entrywise |.|^2 of the same, first_jump the first jump time per
    trajectory (nan if none) and n_jumps the per-trajectory jump count.
    """
    h = np.asarray(h, dtype=complex)
    a_ops = [np.asarray(a, dtype=complex) for a in a_ops]
    d = h.shape[0]
    n_rec = n_steps // record_stride + 1
    seeds = derive_seed(seed, np.arange(n_traj, dtype=np.uint64))

    psi = np.tile(np.asarray(psi0, dtype=complex), (n_traj, 1))
    prop = _drift_matrix(h, a_ops, dt)

    sum_rho = np.zeros((n_rec, d, d), dtype=complex)
    sum_sq = np.zeros((n_rec, d, d))
    first_jump = np.full(n_traj, np.nan)
    n_jumps = np.zeros(n_traj, dtype=np.int64)

    def record(idx):
        rho = psi[:, :, None] * psi[:, None, :].conj()
        sum_rho[idx] += rho.sum(axis=0)
        sum_sq[idx] += (rho.real**2 + rho.imag**2).sum(axis=0)

    record(0)
    for step in range(n_steps):
        u1, u2 = _step_uniforms(seeds, step)
        a_psi = [_matvec(a, psi) for a in a_ops]
        inten = [_norm_sq(ap) for ap in a_psi]
        total = inten[0].copy()
        for extra in inten[1:]:
            total = total + extra
        do_jump = u1 < total * dt

        smooth = _matvec(prop, psi)
        nrm = np.sqrt(_norm_sq(smooth))
        smooth /= nrm[:, None]

        if np.any(do_jump):
            target = u2 * total
            cum = np.zeros_like(total)
            chosen = np.zeros(n_traj, dtype=np.int64)
            remaining = do_jump.copy()
            for c, ic in enumerate(inten):
                cum = cum + ic
                hit = remaining & (target < cum)
                chosen[hit] = c
                remaining &= ~hit
            chosen[remaining] = len(a_ops) - 1
            jumped = np.zeros_like(psi)
            for c, ap in enumerate(a_psi):
                mask = do_jump & (chosen == c)
                if np.any(mask):
                    jn = np.sqrt(_norm_sq(ap[mask]))
                    jumped[mask] = ap[mask] / jn[:, None]
            psi = np.where(do_jump[:, None], jumped, smooth)
            newly = do_jump & np.isnan(first_jump)
            first_jump[newly] = (step + 1) * dt
            n_jumps[do_jump] += 1
        else:
            psi = smooth

        if (step + 1) % record_stride == 0:
            record((step + 1) // record_stride)
    return sum_rho, sum_sq, first_jump, n_jumps


def jump_single(h, a_ops, psi0, dt, n_steps, traj_seed, record_stride):
    """One trajectory with per-step state recording.

    Returns ``(states, log_weights, jump_steps, jump_channels)``; states
    are normalized, log_weights accumulate the smooth-part norm decay.
    """
    h = np.asarray(h, dtype=complex)
    a_ops = [np.asarray(a, dtype=complex) for a in a_ops]
    d = h.shape[0]
    n_rec = n_steps // record_stride + 1
    psi = np.asarray(psi0, dtype=complex).reshape(1, d).copy()
    prop = _drift_matrix(h, a_ops, dt)

    states = np.zeros((n_rec, d), dtype=complex)
    log_w = np.zeros(n_rec)
    states[0] = psi[0]
    jump_steps, jump_channels = [], []
    logw = 0.0
    for step in range(n_steps):
        u1 = float(uniform_at(traj_seed, np.uint64(2 * step)))
        u2 = float(uniform_at(traj_seed, np.uint64(2 * step + 1)))
        a_psi = [_matvec(a, psi) for a in a_ops]
        inten = [float(_norm_sq(ap)[0]) for ap in a_psi]
        total = 0.0
        for ic in inten:
            total += ic
        if u1 < total * dt:
            target = u2 * total
            cum = 0.0
            chosen = len(a_ops) - 1
            for c, ic in enumerate(inten):
                cum += ic
                if target < cum:
                    chosen = c
                    break
            psi = a_psi[chosen] / np.sqrt(inten[chosen])
            logw += 0.5 * np.log(inten[chosen])
            jump_steps.append(step + 1)
            jump_channels.append(chosen)
        else:
            smooth = _matvec(prop, psi)
            nrm = float(np.sqrt(_norm_sq(smooth)[0]))
            psi = smooth / nrm
            logw += np.log(nrm)
        if (step + 1) % record_stride == 0:
            idx = (step + 1) // record_stride
            states[idx] = psi[0]
            log_w[idx] = logw
    return states, log_w, np.asarray(jump_steps, dtype=np.int64), np.asarray(
        jump_channels, dtype=np.int64
    )


def first_jump_times(h, a_ops, psi0, dt, max_steps, n_traj, seed):
    """First jump time per trajectory (nan when none occurs), with
    finished trajectories dropped from the working set as they jump."""
    h = np.asarray(h, dtype=complex)
    a_ops = [np.asarray(a, dtype=complex) for a in a_ops]
    seeds = derive_seed(seed, np.arange(n_traj, dtype=np.uint64))
    psi = np.tile(np.asarray(psi0, dtype=complex), (n_traj, 1))
    prop = _drift_matrix(h, a_ops, dt)
    times = np.full(n_traj, np.nan)
    alive = np.arange(n_traj)

    for step in range(max_steps):
        if alive.size == 0:
            break
        u1 = uniform_at(seeds[alive], np.uint64(2 * step))
        a_psi = [_matvec(a, psi) for a in a_ops]
        total = _norm_sq(a_psi[0])
        for ap in a_psi[1:]:
            total = total + _norm_sq(ap)
        do_jump = u1 < total * dt
        times[alive[do_jump]] = (step + 1) * dt
        keep = ~do_jump
        alive = alive[keep]
        psi = _matvec(prop, psi[keep])
        psi /= np.sqrt(_norm_sq(psi))[:, None]
    return times


def diffusion_ensemble(h, a_op, psi0, dt, n_steps, n_traj, seed, record_stride):
    """Euler-Maruyama homodyne diffusion unraveling of an ensemble.

    Step: psi += dt (-iH - A*A/2 + m A - m^2/2) psi + dW (A - m) psi with
    m = Re <psi|A psi> on the normalized state, then renormalize; dW =
    sqrt(dt) * Box-Muller normal from the trajectory's counter stream.
    Returns ``(sum_rho, sum_sq)`` as in jump_ensemble.
    """
    h = np.asarray(h, dtype=complex)
    a = np.asarray(a_op, dtype=complex)
    d = h.shape[0]
    n_rec = n_steps // record_stride + 1
    seeds = derive_seed(seed, np.arange(n_traj, dtype=np.uint64))
    psi = np.tile(np.asarray(psi0, dtype=complex), (n_traj, 1))

    drift = -1j * dt * h - 0.5 * dt * (a.conj().T @ a)
    sqdt = np.sqrt(dt)

    sum_rho = np.zeros((n_rec, d, d), dtype=complex)
    sum_sq = np.zeros((n_rec, d, d))

    def record(idx):
        rho = psi[:, :, None] * psi[:, None, :].conj()
        sum_rho[idx] += rho.sum(axis=0)
        sum_sq[idx] += (rho.real**2 + rho.imag**2).sum(axis=0)

    record(0)
    for step in range(n_steps):
        u1, u2 = _step_uniforms(seeds, step)
        z = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
        a_psi = _matvec(a, psi)
        # m = Re sum_b conj(psi_b) (A psi)_b, accumulated in index order
        m = (psi[:, 0].conj() * a_psi[:, 0]).real
        for b in range(1, d):
            m = m + (psi[:, b].conj() * a_psi[:, b]).real
        dw = sqdt * z
        coef = dt * m + dw
        scal = dt * (-0.5) * m * m - dw * m
        psi = psi + _matvec(drift, psi) + coef[:, None] * a_psi + scal[:, None] * psi
        psi /= np.sqrt(_norm_sq(psi))[:, None]
        if (step + 1) % record_stride == 0:
            record((step + 1) // record_stride)
    return sum_rho, sum_sq


def diffusion_single(h, a_op, psi0, dt, n_steps, traj_seed, record_stride):
    """One diffusion trajectory; returns the recorded normalized states."""
    h = np.asarray(h, dtype=complex)
    a = np.asarray(a_op, dtype=complex)
    d = h.shape[0]
    n_rec = n_steps // record_stride + 1
    psi = np.asarray(psi0, dtype=complex).reshape(1, d).copy()
    drift = -1j * dt * h - 0.5 * dt * (a.conj().T @ a)
    sqdt = np.sqrt(dt)
    states = np.zeros((n_rec, d), dtype=complex)
    states[0] = psi[0]
    for step in range(n_steps):
        u1 = float(uniform_at(traj_seed, np.uint64(2 * step)))
        u2 = float(uniform_at(traj_seed, np.uint64(2 * step + 1)))
        z = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
        a_psi = _matvec(a, psi)
        m = (psi[:, 0].conj() * a_psi[:, 0]).real
        for b in range(1, d):
            m = m + (psi[:, b].conj() * a_psi[:, b]).real
        dw = sqdt * z
        coef = dt * m + dw
        scal = dt * (-0.5) * m * m - dw * m
        psi = psi + _matvec(drift, psi) + coef[:, None] * a_psi + scal[:, None] * psi
        psi /= np.sqrt(_norm_sq(psi))[:, None]
        if (step + 1) % record_stride == 0:
            states[(step + 1) // record_stride] = psi[0]
    return states
