"""JSON / CSV wire formats.

All floating-point output is written with 15 significant digits so a
decimal round trip (dump -> parse -> dump) is byte-stable, and repeated
runs with the same inputs produce byte-identical artifacts.
"""

from __future__ import annotations

import json

import numpy as np

from .qcore import DensityMatrix, DimMismatch


def fmt(x: float) -> float:
    """Round a float to 15 significant decimal digits."""
    return float(f"{float(x):.15g}")


def _grid(a: np.ndarray):
    return [[fmt(v) for v in row] for row in np.asarray(a, dtype=float)]


def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=complex)
    return {"dim": int(a.shape[0]), "re": _grid(a.real), "im": _grid(a.imag)}


def matrix_from_json(obj) -> np.ndarray:
    d = int(obj["dim"])
    a = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    if a.ndim != 2 or a.shape[0] != d:
        raise DimMismatch("matrix JSON dims inconsistent")
    return a


def density_to_json(rho: DensityMatrix) -> dict:
    return matrix_to_json(rho.matrix)


def density_from_json(obj) -> DensityMatrix:
    return DensityMatrix(matrix_from_json(obj))


def _label(o):
    return o if isinstance(o, (str, int, float, bool)) else str(o)


def povm_to_json(povm) -> dict:
    return {
        "dim": int(povm.dim),
        "outcomes": [_label(o) for o in povm.outcomes],
        "elements": [matrix_to_json(e) for e in povm.elements],
    }


def povm_from_json(obj):
    from .measure import validate_povm

    elements = [matrix_from_json(e) for e in obj["elements"]]
    return validate_povm(elements, outcomes=list(obj["outcomes"]))


def instrument_to_json(instr) -> dict:
    return {
        "dim": int(instr.dim),
        "outcomes": [_label(o) for o in instr.outcomes],
        "kraus": [[matrix_to_json(w) for w in fam] for fam in instr.kraus],
    }


def instrument_from_json(obj):
    from .instrument import KrausInstrument

    kraus = [[matrix_from_json(w) for w in fam] for fam in obj["kraus"]]
    return KrausInstrument(list(obj["outcomes"]), kraus)


def info_report_to_json(report) -> dict:
    return {
        "theta": [fmt(t) for t in np.atleast_1d(report.theta)],
        "I": _grid(report.quantum_info),
        "i": _grid(report.classical_info),
        "gap_min_eig": fmt(report.gap_min_eig),
        "attained": bool(report.attained),
    }


def model_spec_to_json(spec) -> dict:
    out = {"kind": spec.kind, "T": [matrix_to_json(t) for t in spec.generators]}
    if spec.kind == "mechanical":
        out["T0"] = matrix_to_json(spec.base)
    else:
        out["rho0"] = matrix_to_json(spec.base)
    return out


def model_spec_from_json(obj):
    from .qmodels import ExpModelSpec

    base = matrix_from_json(obj["T0"] if obj["kind"] == "mechanical" else obj["rho0"])
    return ExpModelSpec(obj["kind"], base, [matrix_from_json(t) for t in obj["T"]])


def samples_to_csv(samples) -> str:
    lines = ["phi,x"]
    for phi, x in zip(samples.phis, samples.xs):
        lines.append(f"{phi:.15g},{x:.15g}")
    return "\n".join(lines) + "\n"


def samples_from_csv(text: str):
    from .tomo import QuadratureSamples

    rows = [ln for ln in text.strip().splitlines() if ln]
    if rows[0].strip() != "phi,x":
        raise ValueError("expected 'phi,x' header")
    phis, xs = [], []
    for ln in rows[1:]:
        a, b = ln.split(",")
        phis.append(float(a))
        xs.append(float(b))
    return QuadratureSamples(np.asarray(phis), np.asarray(xs), seed=None)


def dumps(obj) -> str:
    """Deterministic JSON encoding (sorted keys, newline-terminated)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"
