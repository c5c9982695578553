"""JSON and CSV persistence.

Matrices are stored as ``{"rows": r, "cols": c, "data": [[re, im], ...]}`` in
row-major order. Python's ``repr`` of a float is the shortest string that
round-trips, so save-then-load is bit-exact.
"""

import csv
import io
import json

import numpy as np

from .bell import BellProblem
from .dilation import DilationResult, TorusShift
from .linalg import Isometry
from .measurement import CorrelationMatrix, MeasurementSystem, PovmFamily, ProjectivePovm

__all__ = [
    "FormatError",
    "bell_problem_from_json",
    "bell_problem_to_json",
    "correlation_from_json",
    "correlation_to_json",
    "dilation_from_json",
    "dilation_to_json",
    "dump",
    "load",
    "matrix_from_json",
    "matrix_to_json",
    "povm_from_json",
    "povm_to_json",
    "sweep_to_csv",
    "system_from_json",
    "system_to_json",
]


class FormatError(Exception):
    """Input could not be parsed into the expected structure."""


def matrix_to_json(M):
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise ValueError(f"expected 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("cannot serialize non-finite entries")
    return {
        "rows": M.shape[0],
        "cols": M.shape[1],
        "data": [[float(z.real), float(z.imag)] for z in M.ravel()],
    }


def matrix_from_json(obj):
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        data = np.array(obj["data"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad matrix object: {exc}") from None
    if rows < 1 or cols < 1 or data.shape != (rows * cols, 2):
        raise FormatError(f"matrix data of shape {data.shape} does not fit {rows}x{cols}")
    if not np.all(np.isfinite(data)):
        raise FormatError("matrix has non-finite entries")
    return (data[:, 0] + 1j * data[:, 1]).reshape(rows, cols)


def povm_to_json(f):
    return {
        "dim": f.dim,
        "outcomes": f.outcomes,
        "operators": [matrix_to_json(A) for A in f],
    }


def povm_from_json(obj, projective=False):
    try:
        ops = [matrix_from_json(o) for o in obj["operators"]]
        cls = ProjectivePovm if projective or obj.get("projective") else PovmFamily
        f = cls(ops)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad POVM object: {exc}") from None
    if "dim" in obj and obj["dim"] != f.dim or "outcomes" in obj and obj["outcomes"] != f.outcomes:
        raise FormatError("declared dim/outcomes disagree with the operators")
    return f


def system_to_json(sys):
    return {
        "dim": sys.dim,
        "d": sys.d,
        "m": sys.m,
        "alice": [povm_to_json(f) for f in sys.alice],
        "bob": [povm_to_json(f) for f in sys.bob],
    }


def system_from_json(obj):
    try:
        sys = MeasurementSystem(
            [povm_from_json(f) for f in obj["alice"]],
            [povm_from_json(f) for f in obj["bob"]],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad measurement system: {exc}") from None
    return sys


def correlation_to_json(X):
    grid = X.as_array()
    md = grid.shape[0]
    return {
        "d": X.d,
        "m": X.m,
        "n": X.n,
        "blocks": [matrix_to_json(grid[r, c]) for r in range(md) for c in range(md)],
    }


def correlation_from_json(obj):
    try:
        d, m, n = int(obj["d"]), int(obj["m"]), int(obj["n"])
        blocks = np.array([matrix_from_json(b) for b in obj["blocks"]])
        blocks = blocks.reshape(d, m, d, m, n, n)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad correlation matrix: {exc}") from None
    return CorrelationMatrix(blocks)


def _operator_to_json(op):
    if isinstance(op, TorusShift):
        return {
            "type": "torus_shift",
            "torus_size": op.torus_size,
            "inner_dim": op.inner_dim,
            "shift": list(op.shift),
        }
    return matrix_to_json(op)


def _operator_from_json(obj):
    if obj.get("type") == "torus_shift":
        return TorusShift(int(obj["torus_size"]), int(obj["inner_dim"]), tuple(obj["shift"]))
    return matrix_from_json(obj)


def dilation_to_json(r):
    return {
        "kind": r.kind,
        "ambient_dim": r.ambient_dim,
        "isometry": matrix_to_json(r.isometry.matrix),
        "alice": [_operator_to_json(op) for op in r.dilated_alice],
        "bob": [_operator_to_json(op) for op in r.dilated_bob],
        "defects": {"alice": list(r.defect_alice), "bob": list(r.defect_bob)},
        "dilated_commutator": r.dilated_commutator,
        "extras": dict(r.extras),
    }


def dilation_from_json(obj):
    try:
        return DilationResult(
            kind=obj.get("kind", "unknown"),
            ambient_dim=int(obj["ambient_dim"]),
            isometry=Isometry(matrix_from_json(obj["isometry"])),
            dilated_alice=[_operator_from_json(o) for o in obj["alice"]],
            dilated_bob=[_operator_from_json(o) for o in obj["bob"]],
            defect_alice=[float(v) for v in obj["defects"]["alice"]],
            defect_bob=[float(v) for v in obj["defects"]["bob"]],
            dilated_commutator=float(obj["dilated_commutator"]),
            extras=dict(obj.get("extras", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad dilation result: {exc}") from None


def bell_problem_to_json(prob):
    return {
        "d": prob.d,
        "n": prob.n,
        "alpha": [[matrix_to_json(prob.alpha[i, j]) for j in range(prob.d)] for i in range(prob.d)],
    }


def bell_problem_from_json(obj):
    try:
        alpha = np.array([[matrix_from_json(b) for b in row] for row in obj["alpha"]])
        prob = BellProblem(alpha)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad Bell problem: {exc}") from None
    if "d" in obj and obj["d"] != prob.d or "n" in obj and obj["n"] != prob.n:
        raise FormatError("declared d/n disagree with alpha")
    return prob


SWEEP_COLUMNS = ("epsilon", "value", "measured_eps", "restart_best", "flag")


def sweep_to_csv(sweep):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for eps, value, measured, best, flag in sweep.rows():
        w.writerow([
            repr(eps),
            "" if value is None else repr(value),
            "" if measured is None else repr(measured),
            "" if best is None else best,
            flag,
        ])
    return buf.getvalue()


def load(path):
    """Read a JSON file, raising :class:`FormatError` on any parse problem."""
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from None


def dump(obj, path=None):
    text = json.dumps(obj, indent=1, allow_nan=False)
    if path is None:
        return text
    with open(path, "w") as fh:
        fh.write(text + "\n")
    return text
