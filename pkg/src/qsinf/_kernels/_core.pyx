# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled trajectory kernels.

Per-trajectory sequential loops mirroring qsinf._kernels._pure: identical
counter-based RNG (splitmix64, two uniforms per step) and identical
floating-point operation order, so the two backends agree to rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, log, log1p, sqrt

cnp.import_array()

ctypedef unsigned long long u64

cdef double TWO_PI = 6.283185307179586476925286766559
cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 M1 = 0xBF58476D1CE4E5B9ULL
cdef u64 M2 = 0x94D049BB133111EBULL
cdef double INV53 = 1.0 / 9007199254740992.0

BACKEND = "compiled"


cdef inline u64 _mix(u64 x) noexcept nogil:
    cdef u64 z = x + GOLDEN
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline double _uniform(u64 seed, u64 counter) noexcept nogil:
    return <double> (_mix(seed + counter * GOLDEN) >> 11) * INV53


cdef inline u64 _derive(u64 master, u64 index) noexcept nogil:
    return _mix(master + index * GOLDEN)


cdef inline void _matvec(const double complex* m, const double complex* x,
                         double complex* y, int d) noexcept nogil:
    cdef int a, b
    cdef double complex acc
    for a in range(d):
        acc = m[a * d] * x[0]
        for b in range(1, d):
            acc = acc + m[a * d + b] * x[b]
        y[a] = acc


cdef inline double _norm_sq(double complex* x, int d) noexcept nogil:
    cdef double acc = x[0].real * x[0].real + x[0].imag * x[0].imag
    cdef int b
    for b in range(1, d):
        acc = acc + x[b].real * x[b].real + x[b].imag * x[b].imag
    return acc


def _drift_matrix(h, a_ops, double dt):
    d = h.shape[0]
    m = -1j * dt * np.asarray(h, dtype=complex)
    for a in a_ops:
        a = np.asarray(a, dtype=complex)
        m = m - 0.5 * dt * (a.conj().T @ a)
    return np.ascontiguousarray(np.eye(d, dtype=complex) + m)


def jump_ensemble(h, a_ops, psi0, double dt, int n_steps, int n_traj,
                  seed, int record_stride):
    """Compiled twin of _pure.jump_ensemble (same contract)."""
    cdef int d = h.shape[0]
    cdef int n_ch = len(a_ops)
    cdef int n_rec = n_steps // record_stride + 1
    cdef u64 master = <u64> int(seed)

    a_stack = np.ascontiguousarray(
        np.stack([np.asarray(op, dtype=complex) for op in a_ops]))
    cdef double complex[:, :, ::1] a_view = a_stack
    prop = _drift_matrix(np.asarray(h, dtype=complex), a_ops, dt)
    cdef double complex[:, ::1] prop_view = prop
    cdef const double complex* a_ptr = &a_view[0, 0, 0]
    cdef const double complex* prop_ptr = &prop_view[0, 0]

    psi0_arr = np.array(psi0, dtype=complex, copy=True)
    cdef double complex[::1] psi0_view = psi0_arr

    sum_rho = np.zeros((n_rec, d, d), dtype=complex)
    sum_sq = np.zeros((n_rec, d, d))
    first_jump = np.full(n_traj, np.nan)
    n_jumps = np.zeros(n_traj, dtype=np.int64)
    cdef double complex[:, :, ::1] sr = sum_rho
    cdef double[:, :, ::1] ss = sum_sq
    cdef double[::1] fj = first_jump
    cdef long long[::1] nj = n_jumps

    cdef double complex psi[64]
    cdef double complex tmp[64]
    cdef double complex ap[64]
    cdef double complex best[64]
    cdef double inten[64]
    cdef u64 tseed
    cdef int traj, step, a, b, c, chosen, idx
    cdef double u1, u2, total, nrm, target, cum
    cdef double complex z
    cdef bint jumped_before

    with nogil:
        for traj in range(n_traj):
            tseed = _derive(master, <u64> traj)
            for a in range(d):
                psi[a] = psi0_view[a]
            jumped_before = False

            # record step 0
            for a in range(d):
                for b in range(d):
                    z = psi[a] * psi[b].conjugate()
                    sr[0, a, b] = sr[0, a, b] + z
                    ss[0, a, b] = ss[0, a, b] + z.real * z.real + z.imag * z.imag

            for step in range(n_steps):
                u1 = _uniform(tseed, <u64> (2 * step))
                u2 = _uniform(tseed, <u64> (2 * step + 1))
                total = 0.0
                for c in range(n_ch):
                    _matvec(a_ptr + c * d * d, psi, ap, d)
                    inten[c] = _norm_sq(ap, d)
                    total = total + inten[c]
                    if c == 0:
                        for a in range(d):
                            best[a] = ap[a]
                if u1 < total * dt:
                    target = u2 * total
                    cum = 0.0
                    chosen = n_ch - 1
                    for c in range(n_ch):
                        cum = cum + inten[c]
                        if target < cum:
                            chosen = c
                            break
                    if chosen == 0:
                        for a in range(d):
                            tmp[a] = best[a]
                    else:
                        _matvec(a_ptr + chosen * d * d, psi, tmp, d)
                    nrm = sqrt(inten[chosen])
                    for a in range(d):
                        psi[a] = tmp[a] / nrm
                    if not jumped_before:
                        fj[traj] = (step + 1) * dt
                        jumped_before = True
                    nj[traj] = nj[traj] + 1
                else:
                    _matvec(prop_ptr, psi, tmp, d)
                    nrm = sqrt(_norm_sq(tmp, d))
                    for a in range(d):
                        psi[a] = tmp[a] / nrm
                if (step + 1) % record_stride == 0:
                    idx = (step + 1) // record_stride
                    for a in range(d):
                        for b in range(d):
                            z = psi[a] * psi[b].conjugate()
                            sr[idx, a, b] = sr[idx, a, b] + z
                            ss[idx, a, b] = ss[idx, a, b] + z.real * z.real + z.imag * z.imag
    return sum_rho, sum_sq, first_jump, n_jumps


def jump_single(h, a_ops, psi0, double dt, int n_steps, traj_seed,
                int record_stride):
    """Compiled twin of _pure.jump_single (same contract)."""
    cdef int d = h.shape[0]
    cdef int n_ch = len(a_ops)
    cdef int n_rec = n_steps // record_stride + 1
    cdef u64 tseed = <u64> int(traj_seed)

    a_stack = np.ascontiguousarray(
        np.stack([np.asarray(op, dtype=complex) for op in a_ops]))
    cdef double complex[:, :, ::1] a_view = a_stack
    prop = _drift_matrix(np.asarray(h, dtype=complex), a_ops, dt)
    cdef double complex[:, ::1] prop_view = prop
    cdef const double complex* a_ptr = &a_view[0, 0, 0]
    cdef const double complex* prop_ptr = &prop_view[0, 0]

    states = np.zeros((n_rec, d), dtype=complex)
    log_w = np.zeros(n_rec)
    cdef double complex[:, ::1] st = states
    cdef double[::1] lw = log_w

    psi0_arr = np.array(psi0, dtype=complex, copy=True)
    cdef double complex[::1] psi0_view = psi0_arr

    jump_steps = []
    jump_channels = []

    cdef double complex psi[64]
    cdef double complex tmp[64]
    cdef double complex ap[64]
    cdef double complex best[64]
    cdef double inten[64]
    cdef int step, a, c, chosen, idx
    cdef double u1, u2, total, nrm, target, cum, logw

    for a in range(d):
        psi[a] = psi0_view[a]
        st[0, a] = psi[a]
    logw = 0.0

    for step in range(n_steps):
        u1 = _uniform(tseed, <u64> (2 * step))
        u2 = _uniform(tseed, <u64> (2 * step + 1))
        total = 0.0
        for c in range(n_ch):
            _matvec(a_ptr + c * d * d, psi, ap, d)
            inten[c] = _norm_sq(ap, d)
            total = total + inten[c]
            if c == 0:
                for a in range(d):
                    best[a] = ap[a]
        if u1 < total * dt:
            target = u2 * total
            cum = 0.0
            chosen = n_ch - 1
            for c in range(n_ch):
                cum = cum + inten[c]
                if target < cum:
                    chosen = c
                    break
            if chosen == 0:
                for a in range(d):
                    tmp[a] = best[a]
            else:
                _matvec(a_ptr + chosen * d * d, psi, tmp, d)
            nrm = sqrt(inten[chosen])
            for a in range(d):
                psi[a] = tmp[a] / nrm
            logw += 0.5 * log(inten[chosen])
            jump_steps.append(step + 1)
            jump_channels.append(chosen)
        else:
            _matvec(prop_ptr, psi, tmp, d)
            nrm = sqrt(_norm_sq(tmp, d))
            for a in range(d):
                psi[a] = tmp[a] / nrm
            logw += log(nrm)
        if (step + 1) % record_stride == 0:
            idx = (step + 1) // record_stride
            for a in range(d):
                st[idx, a] = psi[a]
            lw[idx] = logw
    return states, log_w, np.asarray(jump_steps, dtype=np.int64), np.asarray(
        jump_channels, dtype=np.int64)


def first_jump_times(h, a_ops, psi0, double dt, int max_steps, int n_traj, seed):
    """Compiled twin of _pure.first_jump_times (early exit per trajectory)."""
    cdef int d = h.shape[0]
    cdef int n_ch = len(a_ops)
    cdef u64 master = <u64> int(seed)

    a_stack = np.ascontiguousarray(
        np.stack([np.asarray(op, dtype=complex) for op in a_ops]))
    cdef double complex[:, :, ::1] a_view = a_stack
    prop = _drift_matrix(np.asarray(h, dtype=complex), a_ops, dt)
    cdef double complex[:, ::1] prop_view = prop
    cdef const double complex* a_ptr = &a_view[0, 0, 0]
    cdef const double complex* prop_ptr = &prop_view[0, 0]
    psi0_arr = np.array(psi0, dtype=complex, copy=True)
    cdef double complex[::1] psi0_view = psi0_arr

    times = np.full(n_traj, np.nan)
    cdef double[::1] tv = times

    cdef double complex psi[64]
    cdef double complex tmp[64]
    cdef double complex ap[64]
    cdef u64 tseed
    cdef int traj, step, a, c
    cdef double u1, total, nrm

    with nogil:
        for traj in range(n_traj):
            tseed = _derive(master, <u64> traj)
            for a in range(d):
                psi[a] = psi0_view[a]
            for step in range(max_steps):
                u1 = _uniform(tseed, <u64> (2 * step))
                total = 0.0
                for c in range(n_ch):
                    _matvec(a_ptr + c * d * d, psi, ap, d)
                    total = total + _norm_sq(ap, d)
                if u1 < total * dt:
                    tv[traj] = (step + 1) * dt
                    break
                _matvec(prop_ptr, psi, tmp, d)
                nrm = sqrt(_norm_sq(tmp, d))
                for a in range(d):
                    psi[a] = tmp[a] / nrm
    return times


def diffusion_ensemble(h, a_op, psi0, double dt, int n_steps, int n_traj,
                       seed, int record_stride):
    """Compiled twin of _pure.diffusion_ensemble (same contract)."""
    cdef int d = h.shape[0]
    cdef int n_rec = n_steps // record_stride + 1
    cdef u64 master = <u64> int(seed)

    a_arr = np.ascontiguousarray(np.asarray(a_op, dtype=complex))
    cdef double complex[:, ::1] a_view = a_arr
    drift = np.ascontiguousarray(
        -1j * dt * np.asarray(h, dtype=complex)
        - 0.5 * dt * (a_arr.conj().T @ a_arr))
    cdef double complex[:, ::1] dr_view = drift
    cdef const double complex* a_ptr = &a_view[0, 0]
    cdef const double complex* dr_ptr = &dr_view[0, 0]
    psi0_arr = np.array(psi0, dtype=complex, copy=True)
    cdef double complex[::1] psi0_view = psi0_arr

    sum_rho = np.zeros((n_rec, d, d), dtype=complex)
    sum_sq = np.zeros((n_rec, d, d))
    cdef double complex[:, :, ::1] sr = sum_rho
    cdef double[:, :, ::1] ss = sum_sq

    cdef double sqdt = sqrt(dt)
    cdef double complex psi[64]
    cdef double complex dpsi[64]
    cdef double complex ap[64]
    cdef u64 tseed
    cdef int traj, step, a, b, idx
    cdef double u1, u2, zn, m, dw, nrm, coef, scal
    cdef double complex z

    with nogil:
        for traj in range(n_traj):
            tseed = _derive(master, <u64> traj)
            for a in range(d):
                psi[a] = psi0_view[a]
            for a in range(d):
                for b in range(d):
                    z = psi[a] * psi[b].conjugate()
                    sr[0, a, b] = sr[0, a, b] + z
                    ss[0, a, b] = ss[0, a, b] + z.real * z.real + z.imag * z.imag
            for step in range(n_steps):
                u1 = _uniform(tseed, <u64> (2 * step))
                u2 = _uniform(tseed, <u64> (2 * step + 1))
                zn = sqrt(-2.0 * log1p(-u1)) * cos(TWO_PI * u2)
                _matvec(a_ptr, psi, ap, d)
                m = (psi[0].conjugate() * ap[0]).real
                for b in range(1, d):
                    m = m + (psi[b].conjugate() * ap[b]).real
                dw = sqdt * zn
                coef = dt * m + dw
                scal = dt * (-0.5) * m * m - dw * m
                _matvec(dr_ptr, psi, dpsi, d)
                for a in range(d):
                    psi[a] = psi[a] + dpsi[a] + coef * ap[a] + scal * psi[a]
                nrm = sqrt(_norm_sq(psi, d))
                for a in range(d):
                    psi[a] = psi[a] / nrm
                if (step + 1) % record_stride == 0:
                    idx = (step + 1) // record_stride
                    for a in range(d):
                        for b in range(d):
                            z = psi[a] * psi[b].conjugate()
                            sr[idx, a, b] = sr[idx, a, b] + z
                            ss[idx, a, b] = ss[idx, a, b] + z.real * z.real + z.imag * z.imag
    return sum_rho, sum_sq


def diffusion_single(h, a_op, psi0, double dt, int n_steps, traj_seed,
                     int record_stride):
    """Compiled twin of _pure.diffusion_single (same contract)."""
    cdef int d = h.shape[0]
    cdef int n_rec = n_steps // record_stride + 1
    cdef u64 tseed = <u64> int(traj_seed)

    a_arr = np.ascontiguousarray(np.asarray(a_op, dtype=complex))
    cdef double complex[:, ::1] a_view = a_arr
    drift = np.ascontiguousarray(
        -1j * dt * np.asarray(h, dtype=complex)
        - 0.5 * dt * (a_arr.conj().T @ a_arr))
    cdef double complex[:, ::1] dr_view = drift
    cdef const double complex* a_ptr = &a_view[0, 0]
    cdef const double complex* dr_ptr = &dr_view[0, 0]
    psi0_arr = np.array(psi0, dtype=complex, copy=True)
    cdef double complex[::1] psi0_view = psi0_arr

    states = np.zeros((n_rec, d), dtype=complex)
    cdef double complex[:, ::1] st = states

    cdef double sqdt = sqrt(dt)
    cdef double complex psi[64]
    cdef double complex dpsi[64]
    cdef double complex ap[64]
    cdef int step, a, b
    cdef double u1, u2, zn, m, dw, nrm, coef, scal

    for a in range(d):
        psi[a] = psi0_view[a]
        st[0, a] = psi[a]
    for step in range(n_steps):
        u1 = _uniform(tseed, <u64> (2 * step))
        u2 = _uniform(tseed, <u64> (2 * step + 1))
        zn = sqrt(-2.0 * log1p(-u1)) * cos(TWO_PI * u2)
        _matvec(a_ptr, psi, ap, d)
        m = (psi[0].conjugate() * ap[0]).real
        for b in range(1, d):
            m = m + (psi[b].conjugate() * ap[b]).real
        dw = sqdt * zn
        coef = dt * m + dw
        scal = dt * (-0.5) * m * m - dw * m
        _matvec(dr_ptr, psi, dpsi, d)
        for a in range(d):
            psi[a] = psi[a] + dpsi[a] + coef * ap[a] + scal * psi[a]
        nrm = sqrt(_norm_sq(psi, d))
        for a in range(d):
            psi[a] = psi[a] / nrm
        if (step + 1) % record_stride == 0:
            for a in range(d):
                st[(step + 1) // record_stride, a] = psi[a]
    return states
