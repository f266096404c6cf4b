"""Completely positive instruments in Kraus form.

An instrument stores, per outcome x, a family of operators W_i(x) with
sum_{x,i} W_i(x) W_i(x)* = 1.  Applying it to a state rho yields outcome
probabilities pi(x) = sum_i tr(rho W_i(x) W_i(x)*) and posterior states
sigma(x) = sum_i W_i(x)* rho W_i(x) / pi(x); the operator-valued weight of
outcome x is therefore sum_i W_i(x) W_i(x)*.
"""

from __future__ import annotations

import numpy as np

from .measure import Povm, Pprom, from_observable, validate_povm
from .qcore import (
    DensityMatrix,
    DimMismatch,
    QsinfError,
    StateVector,
    as_complex_matrix,
    dagger,
)

TOL_COMPLETE = 1e-9
TOL_ZERO_PROB = 1e-12
TOL_CP = 1e-9


class NotNormalized(QsinfError):
    pass


class KrausInstrument:
    """Outcome-indexed Kraus families {W_i(x)}."""

    def __init__(self, outcomes, kraus, check: bool = True):
        if len(outcomes) != len(kraus):
            raise DimMismatch("one Kraus family per outcome required")
        kraus = [[as_complex_matrix(w).copy() for w in fam] for fam in kraus]
        dim = kraus[0][0].shape[0]
        if check:
            total = np.zeros((dim, dim), dtype=complex)
            for fam in kraus:
                for w in fam:
                    if w.shape != (dim, dim):
                        raise DimMismatch("Kraus operators must share one dimension")
                    total += w @ dagger(w)
            if np.max(np.abs(total - np.eye(dim))) > TOL_COMPLETE:
                raise NotNormalized("sum of W W* deviates from the identity")
        for fam in kraus:
            for w in fam:
                w.flags.writeable = False
        self.outcomes = list(outcomes)
        self.kraus = kraus

    @property
    def dim(self) -> int:
        return self.kraus[0][0].shape[0]

    def __repr__(self):
        return f"KrausInstrument(dim={self.dim}, outcomes={self.outcomes!r})"


class PosteriorFamily:
    """Outcome law plus posterior states; posteriors at outcomes of
    probability below 1e-12 are undefined and stored as None."""

    def __init__(self, outcomes, probs, posteriors):
        self.outcomes = list(outcomes)
        self.probs = np.asarray(probs, dtype=float)
        self.posteriors = list(posteriors)

    def posterior_of(self, outcome) -> DensityMatrix | None:
        return self.posteriors[self.outcomes.index(outcome)]

    def __iter__(self):
        return iter(zip(self.outcomes, self.probs, self.posteriors))


def apply(instr: KrausInstrument, rho: DensityMatrix) -> PosteriorFamily:
    """Outcome law and renormalized posterior states of one application."""
    rm = rho.matrix if isinstance(rho, DensityMatrix) else as_complex_matrix(rho)
    if rm.shape[0] != instr.dim:
        raise DimMismatch(f"state dim {rm.shape[0]} vs instrument dim {instr.dim}")
    probs, posts = [], []
    for fam in instr.kraus:
        weight = sum(w @ dagger(w) for w in fam)
        p = float(np.trace(rm @ weight).real)
        probs.append(p)
        if p < TOL_ZERO_PROB:
            posts.append(None)
        else:
            raw = sum(dagger(w) @ rm @ w for w in fam)
            posts.append(DensityMatrix(raw / np.trace(raw).real))
    probs = np.asarray(probs)
    if abs(probs.sum() - 1.0) > 1e-10:
        raise QsinfError(f"outcome probabilities sum to {probs.sum()}")
    return PosteriorFamily(instr.outcomes, np.clip(probs, 0.0, None), posts)


def evaluate(instr: KrausInstrument, outcome_subset, y) -> np.ndarray:
    """Derived Heisenberg-picture evaluation of the instrument.

    Returns the observable whose expectation in the prior state equals the
    mean of (indicator that the outcome lands in ``outcome_subset``) times
    a subsequent measurement of ``y`` on the posterior:
    sum_{x in A, i} W_i(x) Y W_i(x)*.  With Y = 1 and A the full outcome
    set this reduces to the identity.
    """
    ym = as_complex_matrix(y)
    subset = set(outcome_subset)
    out = np.zeros((instr.dim, instr.dim), dtype=complex)
    for x, fam in zip(instr.outcomes, instr.kraus):
        if x in subset:
            for w in fam:
                out += w @ ym @ dagger(w)
    return out


def induced_povm(instr: KrausInstrument) -> Povm:
    """Measurement obtained by forgetting the posterior states: element of
    outcome x is sum_i W_i(x) W_i(x)*, matching the outcome law of apply()."""
    elements = [sum(w @ dagger(w) for w in fam) for fam in instr.kraus]
    return validate_povm(elements, outcomes=list(instr.outcomes))


def compose(first: KrausInstrument, second: KrausInstrument) -> KrausInstrument:
    """Apply ``first`` then ``second``, recording both outcomes.

    The stored family of joint outcome (x, y) is {W1_i(x) W2_j(y)}: the
    posterior map conjugates by adjoints on the left, so operators chain in
    application order and the law factors as pi1(x) * pi2(y | posterior).
    """
    if first.dim != second.dim:
        raise DimMismatch("instruments act on different dimensions")
    outcomes, kraus = [], []
    for x, fam1 in zip(first.outcomes, first.kraus):
        for y, fam2 in zip(second.outcomes, second.kraus):
            outcomes.append((x, y))
            kraus.append([w1 @ w2 for w1 in fam1 for w2 in fam2])
    return KrausInstrument(outcomes, kraus)


def coarsen_instrument(instr: KrausInstrument, label_map) -> KrausInstrument:
    """Merge outcomes through a total label map; Kraus families concatenate,
    so the coarse posterior is the probability-weighted mixture of the fine
    ones."""
    f = label_map if callable(label_map) else (lambda x: label_map[x])
    merged: dict = {}
    order = []
    for x, fam in zip(instr.outcomes, instr.kraus):
        y = f(x)
        if y not in merged:
            merged[y] = []
            order.append(y)
        merged[y].extend(fam)
    return KrausInstrument(order, [merged[y] for y in order])


def simple_instrument(x) -> KrausInstrument:
    """Projection-postulate instrument of an observable: one Kraus element
    per eigenvalue, W(x) = eigenprojector."""
    pprom = from_observable(x)
    return KrausInstrument(pprom.outcomes, [[e] for e in pprom.elements])


def instrument_from_povm(m: Povm) -> KrausInstrument:
    """Embed a measurement via square-root Kraus operators W(x) = m(x)^(1/2)."""
    kraus = []
    for e in m.elements:
        w, v = np.linalg.eigh(e)
        root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
        kraus.append([root])
    return KrausInstrument(list(m.outcomes), kraus)


def choi_matrix(state_map, dim: int) -> np.ndarray:
    """Unnormalized Choi matrix sum_ij E_ij (x) map(E_ij) of a linear map
    given entrywise on the matrix-unit basis."""
    out_dim = np.asarray(state_map(np.zeros((dim, dim), dtype=complex))).shape[0]
    choi = np.zeros((dim * out_dim, dim * out_dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            block = np.asarray(state_map(e))
            choi[i * out_dim : (i + 1) * out_dim, j * out_dim : (j + 1) * out_dim] = block
    return choi


def choi_cp_check(target, dim: int | None = None):
    """Complete-positivity test via the Choi matrix.

    ``target`` is either a KrausInstrument (its total state map is tested)
    or a callable acting entrywise on dim x dim matrices.  Returns
    ``(is_cp, min_eig)`` where min_eig is the smallest eigenvalue of the
    unnormalized Choi matrix and CP means min_eig >= -1e-9.
    """
    if isinstance(target, KrausInstrument):
        ops = [w for fam in target.kraus for w in fam]

        def state_map(e):
            return sum(dagger(w) @ e @ w for w in ops)

        dim = target.dim
    else:
        if dim is None:
            raise DimMismatch("dim required for a bare map")
        state_map = target
    choi = choi_matrix(state_map, dim)
    if np.max(np.abs(choi - dagger(choi))) > 1e-9:
        return False, float(np.linalg.eigvals(choi).real.min())
    min_eig = float(np.linalg.eigvalsh(choi).min())
    return min_eig >= -TOL_CP, min_eig


def transpose_map(e):
    """The classic positive-but-not-completely-positive map."""
    return np.asarray(e).T


def is_exhaustive(instr: KrausInstrument, model, grid, tol: float = 1e-8) -> bool:
    """True when the posterior states carry no parameter dependence over
    the supplied grid.  Outcomes whose probability drops below 1e-10 at
    some grid point are skipped."""
    posts = []
    for theta in grid:
        posts.append(apply(instr, model.state(theta)))
    for k in range(len(instr.outcomes)):
        states = []
        for fam in posts:
            if fam.probs[k] < 1e-10 or fam.posteriors[k] is None:
                continue
            states.append(fam.posteriors[k].matrix)
        for a in range(1, len(states)):
            if np.linalg.norm(states[a] - states[0]) > tol:
                return False
    return True


def exhaustive_constructor(psi_states, phi_families) -> KrausInstrument:
    """Measure-and-reprepare instrument with W_i(x) = |psi_x><phi_{i,x}|.

    The posterior of outcome x is sum_i |phi><phi| / sum_i <phi|phi>,
    independent of the input state.  Requires sum_{x,i} |phi><phi| = 1 and
    the instrument completeness sum W W* = 1 (which constrains the psi_x
    as well); either failure raises NotNormalized.
    """
    dim = psi_states[0].dim if isinstance(psi_states[0], StateVector) else len(psi_states[0])
    total = np.zeros((dim, dim), dtype=complex)
    for fam in phi_families:
        for phi in fam:
            phi = np.asarray(phi, dtype=complex)
            total += np.outer(phi, phi.conj())
    if np.max(np.abs(total - np.eye(dim))) > TOL_COMPLETE:
        raise NotNormalized("sum over |phi><phi| deviates from the identity")
    kraus = []
    for psi, fam in zip(psi_states, phi_families):
        pv = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
        kraus.append([np.outer(pv, np.asarray(phi, dtype=complex).conj()) for phi in fam])
    try:
        return KrausInstrument(list(range(len(psi_states))), kraus)
    except NotNormalized:
        raise NotNormalized(
            "repreparation targets psi_x do not resolve the identity with the phi weights"
        )


def quantum_cut_check(
    pprom: Pprom,
    f_funcs,
    m_funcs,
    psi_grid,
    phi_grid,
    tol: float = 1e-9,
) -> bool:
    """Check that the simple instrument of ``pprom`` splits the family
    rho(psi, phi) = sum_x f_x(phi) M_x(psi) into posterior-only and
    outcome-only components: posterior(x) = M_x(psi), law(x) = f_x(phi).

    Requires each M_x(psi) to be a unit-trace block inside the x-th
    eigenspace (P_x M_x P_x = M_x); returns False on any grid violation.
    """
    instr = KrausInstrument(pprom.outcomes, [[e] for e in pprom.elements])
    for psi in psi_grid:
        blocks = [np.asarray(mf(psi), dtype=complex) for mf in m_funcs]
        for p, blk in zip(pprom.elements, blocks):
            if np.linalg.norm(p @ blk @ p - blk) > tol:
                return False
        for phi in phi_grid:
            weights = np.array([ff(phi) for ff in f_funcs], dtype=float)
            if abs(weights.sum() - 1.0) > tol:
                return False
            rho = DensityMatrix(sum(w * blk for w, blk in zip(weights, blocks)))
            fam = apply(instr, rho)
            for k in range(len(pprom.outcomes)):
                if abs(fam.probs[k] - weights[k]) > tol:
                    return False
                if weights[k] > 1e-10 and fam.posteriors[k] is not None:
                    if np.linalg.norm(fam.posteriors[k].matrix - blocks[k]) > 1e-8:
                        return False
    return True
