"""Entanglement demonstrations on two and three qubits.

Singlet correlations versus every deterministic local strategy, state
transfer through a shared singlet plus two classical bits, and the
phase-averaging mechanism that removes macroscopic superpositions.
"""

from __future__ import annotations

import numpy as np

from . import qcore, rng
from .instrument import KrausInstrument, apply
from .measure import OutcomeDistribution, distribution, product_measurement, spin_pprom
from .qcore import DensityMatrix, QsinfError, StateVector, tensor_product


def singlet_state() -> StateVector:
    """(|10> - |01>)/sqrt(2): antisymmetric two-qubit state with maximally
    mixed marginals."""
    v = np.zeros(4, dtype=complex)
    v[2] = 1.0 / np.sqrt(2.0)  # |10>
    v[1] = -1.0 / np.sqrt(2.0)  # |01>
    return StateVector(v)


def singlet_correlations(u, v) -> OutcomeDistribution:
    """Joint law of spin measurements along u (first qubit) and v (second)
    on the singlet: marginals are fair coins and P(equal outcomes) =
    (1 - u . v)/2."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    for w in (u, v):
        if abs(np.linalg.norm(w) - 1.0) > 1e-10:
            raise QsinfError("directions must be unit vectors")
    joint = product_measurement(spin_pprom(u), spin_pprom(v))
    return distribution(singlet_state().to_density(), joint)


def prob_equal(u, v) -> float:
    dist = singlet_correlations(u, v)
    return float(sum(p for (a, b), p in zip(dist.outcomes, dist.probs) if a == b))


class LhvStrategy:
    """Local deterministic answers (X1, X2, Y1, Y2), each +-1: what the two
    parties would output for either of their two settings."""

    __slots__ = ("x1", "x2", "y1", "y2")

    def __init__(self, x1, x2, y1, y2):
        for v in (x1, x2, y1, y2):
            if v not in (+1, -1):
                raise QsinfError("strategy values must be +-1")
        self.x1, self.x2, self.y1, self.y2 = x1, x2, y1, y2

    def excess(self) -> int:
        """1{X1=Y1} - 1{X1=Y2} - 1{Y2=X2} - 1{X2=Y1}."""
        return (
            (self.x1 == self.y1)
            - (self.x1 == self.y2)
            - (self.y2 == self.x2)
            - (self.x2 == self.y1)
        )


DETERMINISTIC_STRATEGIES = tuple(
    LhvStrategy(x1, x2, y1, y2)
    for x1 in (+1, -1)
    for x2 in (+1, -1)
    for y1 in (+1, -1)
    for y2 in (+1, -1)
)


def lhv_max_over_strategies() -> float:
    """max of LhvStrategy.excess over the 16 deterministic strategies;
    nonpositive, so no mixture of strategies can give P(X1=Y1) exceeding
    the other three equality probabilities combined."""
    return float(max(s.excess() for s in DETERMINISTIC_STRATEGIES))


def lhv_implication_holds() -> bool:
    """For every deterministic strategy: X1 != Y2 and Y2 != X2 and
    X2 != Y1 together force X1 != Y1."""
    for s in DETERMINISTIC_STRATEGIES:
        if s.x1 != s.y2 and s.y2 != s.x2 and s.x2 != s.y1 and s.x1 == s.y1:
            return False
    return True


class BellReport:
    def __init__(self, settings, p_equal, lhv_max, violated):
        self.settings = settings
        self.p_equal = p_equal
        self.lhv_max = lhv_max
        self.violated = violated

    def to_csv(self) -> str:
        lines = ["setting,p_equal_quantum,lhv_bound_satisfiable"]
        for (a, b), p in zip(self.settings, self.p_equal):
            lines.append(f"{a:g}-{b:g},{p:.15g},{str(not self.violated).lower()}")
        return "\n".join(lines) + "\n"


def bell_demo() -> BellReport:
    """Singlet equality probabilities at the four standard setting pairs.

    Directions 0 and 120 degrees on one side, 180 and 60 on the other, all
    in one plane, give P(equal) = (1, 1/4, 1/4, 1/4); deterministic local
    strategies require the first to be at most the sum of the rest, and
    1 > 3/4 shows none can reproduce the table.
    """
    angles_u = (0.0, 2.0 * np.pi / 3.0)
    angles_v = (np.pi, np.pi / 3.0)
    settings = []
    p_eq = []
    for ia, a in enumerate(angles_u):
        for ib, b in enumerate(angles_v):
            u = np.array([np.cos(a), np.sin(a), 0.0])
            v = np.array([np.cos(b), np.sin(b), 0.0])
            settings.append((np.degrees(a), np.degrees(b)))
            p_eq.append(prob_equal(u, v))
    # order: (u1,v1), (u1,v2), (u2,v1), (u2,v2)
    violated = p_eq[0] > p_eq[1] + p_eq[3] + p_eq[2]
    return BellReport(settings, p_eq, lhv_max_over_strategies(), bool(violated))


def bell_basis() -> list[np.ndarray]:
    """Orthonormal two-qubit vectors (|10>-|01>, |10>+|01>, |11>+|00>,
    |11>-|00>)/sqrt(2), in that order."""
    s = 1.0 / np.sqrt(2.0)
    e = np.eye(4)
    return [
        s * (e[2] - e[1]).astype(complex),
        s * (e[2] + e[1]).astype(complex),
        s * (e[3] + e[0]).astype(complex),
        s * (e[3] - e[0]).astype(complex),
    ]


BELL_LABELS = ("phi1", "phi2", "psi1", "psi2")

# correction on the receiving qubit per outcome, derived from the
# conditional states of the joint expansion (see teleport_branches)
_CORRECTIONS = {
    "phi1": np.eye(2, dtype=complex),
    "phi2": qcore.SIGMA_Z,
    "psi1": qcore.SIGMA_Y,
    "psi2": qcore.SIGMA_X,
}


def teleport_branches(alpha: complex, beta: complex):
    """All four outcome branches of the teleportation protocol.

    The input qubit alpha |0> + beta |1> joins a singlet shared between
    source and destination; the source measures the simple instrument of
    the four 2-dimensional subspaces (Bell vector) x C^2.  Returns a list
    of ``(label, probability, corrected_state, fidelity)``; every branch
    has probability 1/4 and fidelity 1 after its correction unitary.
    """
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-10:
        raise QsinfError("input amplitudes must be normalized")
    psi_in = np.array([alpha, beta], dtype=complex)
    joint = StateVector(tensor_product(psi_in.reshape(2, 1), singlet_state().amplitudes.reshape(4, 1)).reshape(-1))

    projectors = []
    for b in bell_basis():
        p2 = np.outer(b, b.conj())
        projectors.append(tensor_product(p2, np.eye(2, dtype=complex)))
    instr = KrausInstrument(list(BELL_LABELS), [[p] for p in projectors])
    fam = apply(instr, joint.to_density())

    branches = []
    for label, prob, post in zip(fam.outcomes, fam.probs, fam.posteriors):
        dest = qcore.partial_trace(post, [4, 2], keep=1)
        u = _CORRECTIONS[label]
        corrected = DensityMatrix(u @ dest.matrix @ u.conj().T)
        fid = float((psi_in.conj() @ corrected.matrix @ psi_in).real)
        branches.append((label, float(prob), corrected, fid))
    return branches


def teleport(alpha: complex, beta: complex, seed: int):
    """One run of the protocol: sample the source outcome, apply the
    matching correction.  Returns ``(label, corrected_state, fidelity)``."""
    branches = teleport_branches(alpha, beta)
    u = float(rng.uniform_at(rng.derive_seed(seed, 0), 0))
    cum = 0.0
    for label, prob, state, fid in branches:
        cum += prob
        if u < cum:
            return label, state, fid
    return branches[-1][0], branches[-1][2], branches[-1][3]


def decoherence_average(alpha: complex, beta: complex, h_det, tau: float, n_phase: int):
    """Phase-averaged system-detector state after a conditional interaction.

    The joint pure state alpha |0> (x) E|psi> + beta |1> (x) |psi> (E =
    exp(-i H tau), detector starts in its first basis state) is averaged
    over a uniform grid of phase perturbations e^{-i eps} on the coupling;
    the off-diagonal blocks shrink as O(1/n_phase) toward the classical
    mixture diag(|alpha|^2 evolved, |beta|^2 unevolved).
    """
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-10:
        raise QsinfError("amplitudes must be normalized")
    h = qcore.require_hermitian(h_det)
    d = h.shape[0]
    w, v = np.linalg.eigh(h)
    evo = (v * np.exp(-1j * w * tau)) @ v.conj().T
    psi = np.zeros(d, dtype=complex)
    psi[0] = 1.0
    top = evo @ psi

    rho00 = abs(alpha) ** 2 * np.outer(top, top.conj())
    rho11 = abs(beta) ** 2 * np.outer(psi, psi.conj())
    cross = alpha * np.conj(beta) * np.outer(top, psi.conj())

    # inclusive endpoint grid: the phase average is exactly 1/n_phase
    eps = np.linspace(0.0, 2.0 * np.pi, n_phase)
    mean_phase = np.exp(-1j * eps).mean()

    out = np.zeros((2 * d, 2 * d), dtype=complex)
    out[:d, :d] = rho00
    out[d:, d:] = rho11
    out[:d, d:] = mean_phase * cross
    out[d:, :d] = np.conj(mean_phase) * cross.conj().T
    return DensityMatrix(out)


def off_diagonal_block_norm(joint: DensityMatrix) -> float:
    """Frobenius norm of the upper-right detector block."""
    d = joint.dim // 2
    return float(np.linalg.norm(joint.matrix[:d, d:]))
