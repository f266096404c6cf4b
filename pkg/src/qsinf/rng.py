"""Counter-based pseudo-random streams.

Every stochastic routine in the package draws from pure functions of
``(master_seed, stream_index, counter)`` built on the splitmix64 mixer.
This gives scheduling-independent reproducibility: trajectory ``i`` gets
stream ``derive_seed(master, i)`` and its k-th variate is ``uniform_at(seed,
k)`` no matter how the work is batched or ordered.  The compiled kernels
implement the same mixer in C; outputs must agree with this module exactly.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
# 2**-53; (bits >> 11) * 2**-53 is the standard uint64 -> [0, 1) map
_INV53 = 1.0 / 9007199254740992.0


def splitmix64(x):
    """Mix a 64-bit integer (scalar or uint64 array) through splitmix64."""
    with np.errstate(over="ignore"):
        z = (np.uint64(x) + GOLDEN) & _MASK
        z = ((z ^ (z >> np.uint64(30))) * _M1) & _MASK
        z = ((z ^ (z >> np.uint64(27))) * _M2) & _MASK
        return z ^ (z >> np.uint64(31))


def derive_seed(master: int, index) -> np.uint64:
    """Per-stream seed: ``splitmix64(master + index * GOLDEN)``."""
    idx = np.uint64(index) if np.isscalar(index) else np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return splitmix64((np.uint64(master) + idx * GOLDEN) & _MASK)


def uniform_at(seed, counter):
    """Uniform [0, 1) variate(s) at explicit counter position(s)."""
    ctr = np.uint64(counter) if np.isscalar(counter) else np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        bits = splitmix64((np.uint64(seed) + ctr * GOLDEN) & _MASK)
    shifted = bits >> np.uint64(11)
    if np.isscalar(counter) and np.isscalar(seed):
        return float(shifted) * _INV53
    return np.asarray(shifted, dtype=np.float64) * _INV53


def uniforms(seed, start: int, n: int) -> np.ndarray:
    """n consecutive uniforms starting at counter ``start``."""
    return uniform_at(seed, np.arange(start, start + n, dtype=np.uint64))


def normal_at(seed, counter):
    """Standard normal via Box-Muller from counters (2k, 2k+1).

    ``counter`` indexes normals, not uniforms; each normal consumes two
    uniform counters so streams stay aligned across backends.
    """
    ctr = np.uint64(counter) if np.isscalar(counter) else np.asarray(counter, dtype=np.uint64)
    two = np.uint64(2)
    u1 = uniform_at(seed, ctr * two)
    u2 = uniform_at(seed, ctr * two + np.uint64(1))
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
