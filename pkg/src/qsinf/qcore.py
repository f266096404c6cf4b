"""Complex Hermitian linear algebra and basic quantum state types.

Operators are plain complex numpy arrays; validation helpers enforce the
Hermiticity / positivity invariants where an operation requires them.  The
stateful objects (density matrices, state vectors, Bloch vectors) are thin
immutable wrappers so they can be shared freely across workers.

Conventions: hbar = 1, eigenvalues sorted descending, eigenvector phases
fixed by making the first nonzero component real positive, dense algebra
only, dimensions capped at 64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Central tolerance knobs (single place to retune CI stability).
TOL_HERM = 1e-10
TOL_PSD = 1e-10
TOL_RECON = 1e-9
TOL_NULL = 1e-12
TOL_IMAG = 1e-8
MAX_DIM = 64


class QsinfError(Exception):
    """Base class for all package errors."""


class NonHermitian(QsinfError):
    pass


class DimMismatch(QsinfError):
    pass


class ImaginaryResidue(QsinfError):
    pass


class BlochNormExceeded(QsinfError):
    pass


class NumericalFailure(QsinfError):
    pass


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def as_complex_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimMismatch(f"expected a matrix, got ndim={m.ndim}")
    return m


def require_hermitian(a, tol: float = TOL_HERM) -> np.ndarray:
    """Return ``a`` as an ndarray after checking M = M* entrywise."""
    m = as_complex_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise NonHermitian(f"not square: {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > tol:
        raise NonHermitian("matrix is not self-adjoint within tolerance")
    return m


def is_hermitian(a, tol: float = TOL_HERM) -> bool:
    m = as_complex_matrix(a)
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T)) <= tol


def dagger(a) -> np.ndarray:
    return np.asarray(a).conj().T


class StateVector:
    """Unit vector |psi> of a pure state."""

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes):
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > TOL_HERM:
            raise QsinfError(f"state vector norm {nrm} != 1")
        v = v.copy()
        v.flags.writeable = False
        self.amplitudes = v

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise QsinfError("cannot normalize the zero vector")
        return cls(v / nrm)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def to_density(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(np.outer(v, v.conj()))

    def __repr__(self):
        return f"StateVector({self.amplitudes!r})"


class DensityMatrix:
    """Trace-one positive semidefinite Hermitian matrix."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, check: bool = True):
        m = as_complex_matrix(matrix)
        if check:
            m = require_hermitian(m)
            if m.shape[0] > MAX_DIM:
                raise DimMismatch(f"dimension {m.shape[0]} exceeds supported maximum {MAX_DIM}")
            if abs(np.trace(m).real - 1.0) > TOL_HERM:
                raise QsinfError(f"trace {np.trace(m)} != 1")
            w = np.linalg.eigvalsh(m)
            if w.min() < -TOL_PSD:
                raise QsinfError(f"negative eigenvalue {w.min()}")
        m = m.copy()
        m.flags.writeable = False
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)[::-1]

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(np.trace(self.matrix @ self.matrix).real - 1.0) <= tol

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


@dataclass(frozen=True)
class BlochVector:
    """Point in the unit ball parameterizing a qubit state."""

    ux: float
    uy: float
    uz: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.ux**2 + self.uy**2 + self.uz**2)

    def is_pure(self, tol: float = TOL_HERM) -> bool:
        return abs(self.norm - 1.0) <= tol


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def eig_hermitian(a, tol: float = TOL_HERM):
    """Spectral decomposition with deterministic ordering and phases.

    Returns ``(w, v)`` with eigenvalues ``w`` descending and unitary ``v``
    whose columns are eigenvectors, each rotated so its first component of
    magnitude > 1e-12 is real positive.  Raises NonHermitian if the input
    fails the symmetry check.
    """
    m = require_hermitian(a, tol)
    w, v = np.linalg.eigh(m)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    for j in range(v.shape[1]):
        col = v[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            v[:, j] = col / ph
    return w, v


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product; subsystem index (i, j) maps to flat i*dim_b + j."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def tensor_many(*factors) -> np.ndarray:
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return out


def partial_trace(rho, dims, keep: int) -> DensityMatrix:
    """Trace out all tensor factors except ``dims[keep]``."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_complex_matrix(rho)
    dims = list(dims)
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise DimMismatch(f"product of dims {dims} does not match matrix dim {m.shape[0]}")
    n = len(dims)
    t = m.reshape(dims + dims)
    # contract every factor except `keep`, back to front so axes stay valid
    for ax in reversed(range(n)):
        if ax == keep:
            continue
        t = np.trace(t, axis1=ax, axis2=ax + (t.ndim // 2))
    return DensityMatrix(t)


def expect(rho, x) -> float:
    """Trace rule tr(rho X) for a self-adjoint X; the imaginary residue
    must be below 1e-8."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_complex_matrix(rho)
    xm = as_complex_matrix(x)
    if m.shape != xm.shape:
        raise DimMismatch(f"{m.shape} vs {xm.shape}")
    val = np.trace(m @ xm)
    if abs(val.imag) > TOL_IMAG:
        raise ImaginaryResidue(f"imaginary part {val.imag} of expectation exceeds tolerance")
    return float(val.real)


def density_from_bloch(u: BlochVector) -> DensityMatrix:
    """rho = (1 + u . sigma)/2 on the Bloch ball."""
    if u.norm > 1.0 + TOL_HERM:
        raise BlochNormExceeded(f"|u| = {u.norm} > 1")
    m = 0.5 * (np.eye(2, dtype=complex) + u.ux * SIGMA_X + u.uy * SIGMA_Y + u.uz * SIGMA_Z)
    return DensityMatrix(m)


def bloch_from_density(rho: DensityMatrix) -> BlochVector:
    m = rho.matrix if isinstance(rho, DensityMatrix) else require_hermitian(rho)
    if m.shape != (2, 2):
        raise DimMismatch("Bloch coordinates are defined for qubits only")
    return BlochVector(
        float(np.trace(m @ SIGMA_X).real),
        float(np.trace(m @ SIGMA_Y).real),
        float(np.trace(m @ SIGMA_Z).real),
    )


def bloch_from_polar(colatitude: float, longitude: float) -> BlochVector:
    s = math.sin(colatitude)
    return BlochVector(s * math.cos(longitude), s * math.sin(longitude), math.cos(colatitude))


def spin_j_coherent(psi: StateVector, n: int) -> StateVector:
    """Coefficients of the n-fold product of a qubit pure state in the
    symmetric-subspace basis.

    With psi = alpha |0> + beta |1>, the component with k copies of |1> is
    sqrt(C(n, k)) alpha^(n-k) beta^k; index k runs 0..n, so entry 0 is the
    stretched state (m = +j in spin language, j = n/2).  Each basis vector
    is unit-normalized, which makes the output a unit vector.
    """
    if n < 1:
        raise QsinfError("need n >= 1 copies")
    if psi.dim != 2:
        raise DimMismatch("spin coherent states are built from qubit states")
    alpha, beta = psi.amplitudes
    coeff = np.array(
        [math.sqrt(math.comb(n, k)) * alpha ** (n - k) * beta**k for k in range(n + 1)],
        dtype=complex,
    )
    return StateVector.normalized(coeff)


def symmetric_subspace_basis(n: int) -> np.ndarray:
    """Orthonormal basis of the symmetric subspace of n qubits, as columns
    of a 2^n x (n+1) matrix; column k holds the normalized sum of all
    product vectors with k copies of |1>."""
    dim = 2**n
    basis = np.zeros((dim, n + 1), dtype=complex)
    for idx in range(dim):
        k = bin(idx).count("1")
        basis[idx, k] = 1.0
    basis /= np.linalg.norm(basis, axis=0, keepdims=True)
    return basis


def evolve(rho: DensityMatrix, h, t: float) -> DensityMatrix:
    """Conjugation by exp(-i H t) (hbar = 1)."""
    hm = require_hermitian(h)
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_complex_matrix(rho)
    if m.shape != hm.shape:
        raise DimMismatch(f"{m.shape} vs {hm.shape}")
    w, v = np.linalg.eigh(hm)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    return DensityMatrix(u @ m @ u.conj().T)


def expm_hermitian(a) -> np.ndarray:
    """exp(A) for self-adjoint A via its spectral decomposition."""
    w, v = np.linalg.eigh(require_hermitian(a))
    return (v * np.exp(w)) @ v.conj().T


def jordan_product(a, b) -> np.ndarray:
    """(AB + BA)/2; Hermitian whenever A and B are."""
    am, bm = as_complex_matrix(a), as_complex_matrix(b)
    if am.shape != bm.shape:
        raise DimMismatch(f"{am.shape} vs {bm.shape}")
    return 0.5 * (am @ bm + bm @ am)


def commutator(a, b) -> np.ndarray:
    am, bm = as_complex_matrix(a), as_complex_matrix(b)
    if am.shape != bm.shape:
        raise DimMismatch(f"{am.shape} vs {bm.shape}")
    return am @ bm - bm @ am


def basis_state(dim: int, k: int) -> StateVector:
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return StateVector(v)
