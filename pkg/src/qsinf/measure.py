"""Generalized measurements.

A measurement with finitely many outcomes is stored as the list of its
positive operator weights m(x) with sum(m) = 1; projector-valued
measurements (simple measurements of an observable) are the special case
with mutually orthogonal idempotent elements.  Dilation realizes any such
measurement as a simple one on a system-plus-ancilla space.
"""

from __future__ import annotations

import numpy as np

from . import qcore
from .qcore import (
    DensityMatrix,
    DimMismatch,
    QsinfError,
    StateVector,
    as_complex_matrix,
    eig_hermitian,
    require_hermitian,
    tensor_product,
)

TOL_ELEMENT_PSD = 1e-10
TOL_RESOLUTION = 1e-9
DEGENERACY_GAP = 1e-8


class NotPsd(QsinfError):
    pass


class NotResolution(QsinfError):
    pass


class DilationFailure(QsinfError):
    pass


class Povm:
    """Finite-outcome positive operator-valued measurement.

    ``separable_by_construction`` is True only for explicit tensor
    products of single-factor measurements; no separability decision
    procedure is attempted for anything else.
    """

    def __init__(self, outcomes, elements, check: bool = True):
        elements = [as_complex_matrix(e).copy() for e in elements]
        if len(outcomes) != len(elements):
            raise DimMismatch("one element per outcome required")
        if check:
            _check_povm(elements)
        for e in elements:
            e.flags.writeable = False
        self.outcomes = list(outcomes)
        self.elements = elements
        self.separable_by_construction = False

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)

    def is_projective(self, tol: float = TOL_RESOLUTION) -> bool:
        for e in self.elements:
            if np.max(np.abs(e @ e - e)) > tol:
                return False
        for i in range(len(self.elements)):
            for j in range(i + 1, len(self.elements)):
                if np.max(np.abs(self.elements[i] @ self.elements[j])) > tol:
                    return False
        return True

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, outcomes={self.outcomes!r})"


class Pprom(Povm):
    """Projector-valued measurement: orthogonal idempotent elements."""

    def __init__(self, outcomes, elements, check: bool = True):
        super().__init__(outcomes, elements, check=check)
        if check and not self.is_projective():
            raise NotPsd("elements are not mutually orthogonal projectors")


class OutcomeDistribution:
    """Probabilities over measurement outcomes."""

    def __init__(self, outcomes, probs):
        p = np.asarray(probs, dtype=float)
        if np.any(p < -1e-12):
            raise QsinfError(f"negative probability {p.min()}")
        if abs(p.sum() - 1.0) > 1e-10:
            raise QsinfError(f"probabilities sum to {p.sum()}")
        self.outcomes = list(outcomes)
        self.probs = np.clip(p, 0.0, None)

    def prob_of(self, outcome) -> float:
        return float(self.probs[self.outcomes.index(outcome)])

    def __iter__(self):
        return iter(zip(self.outcomes, self.probs))


def _check_povm(elements):
    dim = elements[0].shape[0]
    total = np.zeros((dim, dim), dtype=complex)
    for e in elements:
        if e.shape != (dim, dim):
            raise DimMismatch("POVM elements must share one dimension")
        require_hermitian(e)
        w = np.linalg.eigvalsh(e)
        if w.min() < -TOL_ELEMENT_PSD:
            raise NotPsd(f"element eigenvalue {w.min()} < 0")
        total += e
    if np.max(np.abs(total - np.eye(dim))) > TOL_RESOLUTION:
        raise NotResolution("elements do not sum to the identity")


def validate_povm(elements, outcomes=None) -> Povm:
    """Validate positivity and completeness; returns a Pprom when the
    elements happen to be orthogonal projectors."""
    elements = [as_complex_matrix(e) for e in elements]
    if outcomes is None:
        outcomes = list(range(len(elements)))
    povm = Povm(outcomes, elements)
    if povm.is_projective():
        return Pprom(outcomes, elements, check=False)
    return povm


def distribution(rho: DensityMatrix, m: Povm) -> OutcomeDistribution:
    """Outcome law x -> tr(rho m(x))."""
    rm = rho.matrix if isinstance(rho, DensityMatrix) else as_complex_matrix(rho)
    if rm.shape[0] != m.dim:
        raise DimMismatch(f"state dim {rm.shape[0]} vs measurement dim {m.dim}")
    probs = [float(np.trace(rm @ e).real) for e in m.elements]
    return OutcomeDistribution(m.outcomes, probs)


def from_observable(x) -> Pprom:
    """Spectral measurement of a self-adjoint operator.

    Eigenvalues closer than 1e-8 are merged into one eigenspace; outcome
    labels are the (rounded-cluster) eigenvalues, in descending order.
    """
    w, v = eig_hermitian(x)
    clusters = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or abs(w[i] - w[start]) > DEGENERACY_GAP:
            clusters.append((start, i))
            start = i
    outcomes, elements = [], []
    for a, b in clusters:
        vec = v[:, a:b]
        elements.append(vec @ vec.conj().T)
        outcomes.append(float(np.mean(w[a:b])))
    return Pprom(outcomes, elements)


def observable_from_pprom(m: Pprom) -> np.ndarray:
    """Reassemble sum_x x P_x from a projective measurement with numeric labels."""
    return sum(float(x) * e for x, e in zip(m.outcomes, m.elements))


def coarsen(m: Povm, label_map) -> Povm:
    """Merge outcomes through a total map on labels; element weights add."""
    f = label_map if callable(label_map) else (lambda x: label_map[x])
    merged: dict = {}
    order = []
    for x, e in zip(m.outcomes, m.elements):
        y = f(x)
        if y not in merged:
            merged[y] = np.zeros_like(e)
            order.append(y)
        merged[y] = merged[y] + e
    return validate_povm([merged[y] for y in order], outcomes=order)


def refine_rank1(m: Povm):
    """Split every element into rank-one pieces via its eigendecomposition.

    Returns ``(refined, source)`` where outcome (x, i) of the refined
    measurement carries the i-th rank-one piece of element x, and
    ``source`` maps refined labels back to original ones (so coarsening by
    it reproduces the input).
    """
    outcomes, elements = [], []
    source = {}
    for x, e in zip(m.outcomes, m.elements):
        w, v = eig_hermitian(e)
        sub = 0
        for lam, col in zip(w, v.T):
            if lam <= TOL_ELEMENT_PSD:
                continue
            outcomes.append((x, sub))
            elements.append(lam * np.outer(col, col.conj()))
            source[(x, sub)] = x
            sub += 1
    refined = validate_povm(elements, outcomes=outcomes)
    return refined, source


def product_measurement(m1: Povm, m2: Povm) -> Povm:
    """Apply two measurements simultaneously to the factors of a product
    system; elements are tensor products, outcomes are pairs."""
    outcomes = [(x, y) for x in m1.outcomes for y in m2.outcomes]
    elements = [tensor_product(e1, e2) for e1 in m1.elements for e2 in m2.elements]
    joint = validate_povm(elements, outcomes=outcomes)
    joint.separable_by_construction = True
    return joint


class NaimarkDilation:
    """Realization of a measurement as a simple one on system (x) ancilla.

    The joint space is ordered ancilla-first (K tensor H), so the embedded
    state is kron(ancilla, rho) and the defining identity is
    tr(rho m(x)) = tr(kron(ancilla, rho) P(x)) for every state rho.
    """

    def __init__(self, ancilla_dim, ancilla_state, pprom, unitary):
        self.ancilla_dim = ancilla_dim
        self.ancilla_state = ancilla_state
        self.pprom = pprom
        self.unitary = unitary

    def embed(self, rho: DensityMatrix) -> DensityMatrix:
        anc = self.ancilla_state.to_density().matrix
        return DensityMatrix(tensor_product(anc, rho.matrix))

    def project_element(self, x) -> np.ndarray:
        """Compress the joint projector of outcome x back to the system:
        P |e0 (x) psi> paired with <e0 (x) phi| recovers the original
        element m(x)."""
        idx = self.pprom.outcomes.index(x)
        d = self.pprom.dim // self.ancilla_dim
        return self.pprom.elements[idx][:d, :d]

    def projected_povm(self) -> Povm:
        return validate_povm(
            [self.project_element(x) for x in self.pprom.outcomes],
            outcomes=list(self.pprom.outcomes),
        )


def naimark_dilate(m: Povm, tol: float = 1e-8) -> NaimarkDilation:
    """Dilate a measurement to a projector-valued one with an ancilla.

    Constructive route: refine to rank-one pieces |g_k><g_k|, stack the
    <g_k| rows into an isometry, complete it to a unitary W on the joint
    space, and measure the computational basis grouped by source outcome.
    A projective input passes through with a trivial (dim-1) ancilla.
    """
    if m.is_projective():
        anc = StateVector([1.0])
        joint = Pprom(m.outcomes, [e.copy() for e in m.elements], check=False)
        return NaimarkDilation(1, anc, joint, np.eye(m.dim, dtype=complex))

    refined, source = refine_rank1(m)
    d = m.dim
    k = refined.n_outcomes
    anc_dim = int(np.ceil(k / d))
    total = anc_dim * d

    # isometry rows <g| from the rank-one pieces lam |xi><xi|
    iso = np.zeros((total, d), dtype=complex)
    for row, e in enumerate(refined.elements):
        w, v = eig_hermitian(e)
        iso[row] = np.sqrt(w[0]) * v[:, 0].conj()

    # complete columns to a unitary by Gram-Schmidt against identity columns
    cols = [iso[:, j] for j in range(d)]
    for cand in range(total):
        if len(cols) == total:
            break
        vec = np.zeros(total, dtype=complex)
        vec[cand] = 1.0
        for c in cols:
            vec = vec - c * (c.conj() @ vec)
        nrm = np.linalg.norm(vec)
        if nrm > 1e-7:
            cols.append(vec / nrm)
    if len(cols) != total:
        raise DilationFailure("could not complete the isometry to a unitary")
    unitary = np.column_stack(cols)

    # basis projectors grouped by source outcome; padding rows carry zero
    # probability on embedded states and are assigned to the first outcome
    groups = {x: [] for x in m.outcomes}
    for row, lab in enumerate(refined.outcomes):
        groups[source[lab]].append(row)
    for row in range(k, total):
        groups[m.outcomes[0]].append(row)
    elements = []
    for x in m.outcomes:
        p = np.zeros((total, total), dtype=complex)
        for row in groups[x]:
            p[row, row] = 1.0
        elements.append(unitary.conj().T @ p @ unitary)
    joint = Pprom(m.outcomes, elements)

    dilation = NaimarkDilation(anc_dim, qcore.basis_state(anc_dim, 0), joint, unitary)

    # verify the statistical identity on a deterministic set of states
    probe = [qcore.maximally_mixed(d)] + [
        qcore.basis_state(d, j).to_density() for j in range(d)
    ]
    for rho in probe:
        direct = distribution(rho, m).probs
        lifted = distribution(dilation.embed(rho), joint).probs
        if np.max(np.abs(direct - lifted)) > tol:
            raise DilationFailure("dilated statistics deviate beyond tolerance")
    return dilation


def spin_pprom(direction) -> Pprom:
    """Two-outcome simple measurement of spin along a unit vector."""
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    s = u[0] * qcore.SIGMA_X + u[1] * qcore.SIGMA_Y + u[2] * qcore.SIGMA_Z
    plus = 0.5 * (np.eye(2, dtype=complex) + s)
    minus = 0.5 * (np.eye(2, dtype=complex) - s)
    return Pprom([+1, -1], [plus, minus])


def triad_povm() -> Povm:
    """Three-outcome measurement from coplanar unit vectors 120 degrees
    apart, elements (1 + v . sigma)/3."""
    elements = []
    for i in range(3):
        ang = 2.0 * np.pi * i / 3.0
        v = np.array([np.cos(ang), np.sin(ang), 0.0])
        s = v[0] * qcore.SIGMA_X + v[1] * qcore.SIGMA_Y + v[2] * qcore.SIGMA_Z
        elements.append((np.eye(2, dtype=complex) + s) / 3.0)
    return Povm([1, 2, 3], elements)
