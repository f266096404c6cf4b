"""Exponential and transformation families of states.

Three exponential forms are supported (theta summed over generators T_r):

  mechanical  rho = exp(T0 + theta.T) / norm        (all generators commute)
  symmetric   rho = e^{theta.T/2} rho0 e^{theta.T/2} / norm
  unitary     rho = e^{-i theta.T/2} rho0 e^{i theta.T/2}

Transformation families carry a group acting consistently on parameters
and outcomes; the great-circle qubit family is the standard example that
is simultaneously of unitary and (reparameterized) symmetric type.
"""

from __future__ import annotations

import numpy as np

from . import qcore
from .measure import Povm, validate_povm
from .qcore import DensityMatrix, QsinfError, expm_hermitian, require_hermitian
from .qinfo import ParametricModel

VALID_KINDS = ("mechanical", "symmetric", "unitary")


class ExpModelSpec:
    """Specification of an exponential family of states.

    ``base`` is T0 for the mechanical kind and rho0 (nonnegative, not
    necessarily normalized) otherwise; ``generators`` is the list of
    self-adjoint T_r.  The log norming constant kappa is computed on the
    fly, never stored.
    """

    def __init__(self, kind: str, base, generators):
        if kind not in VALID_KINDS:
            raise QsinfError(f"unknown kind {kind!r}")
        self.kind = kind
        self.base = require_hermitian(base)
        self.generators = [require_hermitian(t) for t in generators]
        if kind == "mechanical":
            ops = [self.base] + self.generators
            for a in range(len(ops)):
                for b in range(a + 1, len(ops)):
                    if np.max(np.abs(qcore.commutator(ops[a], ops[b]))) > 1e-9:
                        raise QsinfError("mechanical kind requires commuting generators")
        if kind != "mechanical":
            w = np.linalg.eigvalsh(self.base)
            if w.min() < -qcore.TOL_PSD:
                raise QsinfError("rho0 must be nonnegative")

    @property
    def dim_param(self) -> int:
        return len(self.generators)

    def _exponent(self, theta) -> np.ndarray:
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        return sum(tj * g for tj, g in zip(t, self.generators))


def kappa(spec: ExpModelSpec, theta) -> float:
    """Log norming constant of the family at theta (zero for unitary kind)."""
    if spec.kind == "unitary":
        return 0.0
    if spec.kind == "mechanical":
        return float(np.log(np.trace(expm_hermitian(spec.base + spec._exponent(theta))).real))
    half = expm_hermitian(0.5 * spec._exponent(theta))
    return float(np.log(np.trace(half @ spec.base @ half).real))


def exp_model_state(spec: ExpModelSpec, theta) -> DensityMatrix:
    """Normalized state of the family at theta."""
    if spec.kind == "mechanical":
        m = expm_hermitian(spec.base + spec._exponent(theta))
        return DensityMatrix(m / np.trace(m).real)
    if spec.kind == "symmetric":
        half = expm_hermitian(0.5 * spec._exponent(theta))
        m = half @ spec.base @ half
        return DensityMatrix(m / np.trace(m).real)
    ex = spec._exponent(theta)
    w, v = np.linalg.eigh(ex)
    u = (v * np.exp(-0.5j * w)) @ v.conj().T
    base = spec.base / np.trace(spec.base).real
    return DensityMatrix(u @ base @ u.conj().T)


def to_parametric_model(spec: ExpModelSpec, h: float = 1e-5) -> ParametricModel:
    return ParametricModel(spec.dim_param, lambda t: exp_model_state(spec, t), h=h)


def great_circle_model(u=None) -> ParametricModel:
    """Pure qubit family U (1 + cos(t) sx + sin(t) sy)/2 U*.

    A great circle on the Bloch sphere with unit quantum information at
    every point; any simple measurement in the circle's plane attains the
    information bound uniformly.
    """
    um = np.eye(2, dtype=complex) if u is None else np.asarray(u, dtype=complex)
    if np.max(np.abs(um @ um.conj().T - np.eye(2))) > 1e-10:
        raise QsinfError("U must be unitary")

    def state_fn(t):
        th = t[0]
        m = 0.5 * (np.eye(2) + np.cos(th) * qcore.SIGMA_X + np.sin(th) * qcore.SIGMA_Y)
        return DensityMatrix(um @ m @ um.conj().T)

    def deriv_fn(t):
        th = t[0]
        d = 0.5 * (-np.sin(th) * qcore.SIGMA_X + np.cos(th) * qcore.SIGMA_Y)
        return [um @ d @ um.conj().T]

    return ParametricModel(1, state_fn, deriv_fn)


def great_circle_symmetric_spec() -> ExpModelSpec:
    """Symmetric-type representation of the equatorial circle: generators
    along sigma_y through the base point (1 + sigma_x)/2, with the circle
    parameter entering through a tangent reparameterization."""
    rho0 = 0.5 * (np.eye(2, dtype=complex) + qcore.SIGMA_X)
    return ExpModelSpec("symmetric", rho0, [qcore.SIGMA_Y])


def great_circle_unitary_spec() -> ExpModelSpec:
    """Unitary-type representation of the equatorial circle: conjugation by
    exp(-i theta sigma_z / 2) rotates the base point (1 + sigma_x)/2 along
    the equator, with theta the circle parameter itself."""
    rho0 = 0.5 * (np.eye(2, dtype=complex) + qcore.SIGMA_X)
    return ExpModelSpec("unitary", rho0, [qcore.SIGMA_Z])


class GroupAction:
    """Finite (or gridded) group acting on parameters and outcome labels
    through a projective unitary representation."""

    def __init__(self, elements, unitary_fn, param_action, outcome_action):
        self.elements = list(elements)
        self.unitary = unitary_fn
        self.act_param = param_action
        self.act_outcome = outcome_action

    def projective_defect(self) -> float:
        """Max deviation of U_g U_h from a phase times U_{gh} over the
        element grid (composition taken within the grid)."""
        worst = 0.0
        els = self.elements
        for g in els[: min(len(els), 8)]:
            for h in els[: min(len(els), 8)]:
                gh = self.compose(g, h)
                if gh is None:
                    continue
                lhs = self.unitary(gh)
                rhs = self.unitary(g) @ self.unitary(h)
                # strip the phase via the largest-magnitude entry
                idx = np.unravel_index(np.argmax(np.abs(rhs)), rhs.shape)
                if abs(rhs[idx]) < 1e-12:
                    continue
                w = lhs[idx] / rhs[idx]
                worst = max(worst, abs(abs(w) - 1.0), float(np.max(np.abs(lhs - w * rhs))))
        return worst

    def compose(self, g, h):
        return None


class CircleAction(GroupAction):
    """Rotations about z acting on the equatorial qubit family and on a
    uniform grid of outcome angles."""

    def __init__(self, n_grid: int):
        self.n_grid = int(n_grid)
        angles = [2 * np.pi * k / n_grid for k in range(n_grid)]

        def unitary_fn(g):
            return np.diag([np.exp(0.5j * g), np.exp(-0.5j * g)])

        def param_action(g, theta):
            return np.atleast_1d(theta) + g

        def outcome_action(g, label):
            # labels are grid angles; g^{-1} shifts them down the grid
            return float(np.mod(label - g, 2 * np.pi))

        super().__init__(angles, unitary_fn, param_action, outcome_action)

    def compose(self, g, h):
        return float(np.mod(g + h, 2 * np.pi))


def transformation_check(
    model: ParametricModel,
    m: Povm,
    action: GroupAction,
    theta_grid,
    tol: float = 1e-8,
) -> bool:
    """Verify tr(rho(theta) m(x)) = tr(rho(g theta) m(g^{-1} x)) over the
    supplied grids.  Outcome labels must be closed under the action."""
    index = {_label_key(x): i for i, x in enumerate(m.outcomes)}
    for theta in theta_grid:
        base = np.array(
            [np.trace(model.state(theta).matrix @ e).real for e in m.elements]
        )
        for g in action.elements:
            moved = model.state(action.act_param(g, theta)).matrix
            for i, x in enumerate(m.outcomes):
                j = index.get(_label_key(action.act_outcome(g, x)))
                if j is None:
                    return False
                if abs(base[i] - np.trace(moved @ m.elements[j]).real) > tol:
                    return False
    return True


def _label_key(x) -> int:
    return int(round(float(x) * 1e9))


def equivariant_qubit_family(a: complex, n_grid: int = 360) -> Povm:
    """Rotation-equivariant qubit measurement on a uniform angle grid.

    Density at angle phi is [[1, a e^{i phi}], [conj(a) e^{-i phi}, 1]]
    with respect to the uniform distribution; grid weights 1/n_grid make
    the elements sum to the identity.
    """
    if abs(a) > 1.0:
        raise QsinfError("|a| must not exceed 1")
    outcomes, elements = [], []
    for k in range(n_grid):
        phi = 2 * np.pi * k / n_grid
        m = np.array([[1.0, a * np.exp(1j * phi)], [np.conj(a) * np.exp(-1j * phi), 1.0]])
        outcomes.append(phi)
        elements.append(m / n_grid)
    return validate_povm(elements, outcomes=outcomes)


def equivariant_density(a: complex, phi: float) -> np.ndarray:
    """Un-weighted density matrix-valued kernel of the family above."""
    return np.array([[1.0, a * np.exp(1j * phi)], [np.conj(a) * np.exp(-1j * phi), 1.0]])


def equivariant_spinj_family(r0, j: float, n_grid: int = 360) -> Povm:
    """Rotation-equivariant family for a spin-j system: m(phi) =
    e^{-i phi J} R0 e^{i phi J} on a uniform grid, J = diag(j .. -j).
    The caller supplies R0; the grid-normalization is verified."""
    dim = int(round(2 * j)) + 1
    r0 = require_hermitian(r0)
    if r0.shape != (dim, dim):
        raise QsinfError(f"R0 must be {dim} x {dim}")
    mvals = np.array([j - k for k in range(dim)])
    outcomes, elements = [], []
    for k in range(n_grid):
        phi = 2 * np.pi * k / n_grid
        u = np.diag(np.exp(-1j * phi * mvals))
        outcomes.append(phi)
        elements.append(u @ r0 @ u.conj().T / n_grid)
    return validate_povm(elements, outcomes=outcomes)
