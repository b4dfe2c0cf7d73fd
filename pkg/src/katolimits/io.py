"""JSON encoding of matrices, maps and reports.

Matrix format::

    {"n": rows, "m": cols, "re": [[...]], "im": [[...]]}

with ``"m"`` omitted for square matrices and ``"im"`` optional on input.
Map format::

    {"kind": "kraus", "operators": [matrix, ...]}
    {"kind": "congruence", "K": matrix}
    {"kind": "block_average", "n": int}
    {"kind": "trace_state", "rho": matrix}

Infinite reals are written as the strings ``"+inf"`` / ``"-inf"``.  Floats go
through ``repr`` so every value re-parses bit-identically.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .errors import InputError
from .maps import KINDS, PositiveMapSpec

INF_TAGS = {"+inf": math.inf, "-inf": -math.inf}


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=complex)
    rows, cols = M.shape
    out = {"n": rows, "re": M.real.tolist(), "im": M.imag.tolist()}
    if rows != cols:
        out["m"] = cols
    return out


def _grid(value, rows: int, cols: int, where: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{where}: entries must be numbers") from None
    if arr.shape == (0,) and rows * cols == 0:
        arr = arr.reshape(rows, cols)
    if arr.shape != (rows, cols):
        raise InputError(f"{where}: expected shape {rows}x{cols}, got {arr.shape}")
    return arr


def matrix_from_json(obj, where: str = "matrix") -> np.ndarray:
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object with keys n, re[, m, im]")
    for key in ("n", "re"):
        if key not in obj:
            raise InputError(f"{where}: missing field {key!r}")
    rows = obj["n"]
    cols = obj.get("m", rows)
    for key, val in (("n", rows), ("m", cols)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 0:
            raise InputError(f"{where}.{key}: must be a non-negative integer")
    re = _grid(obj["re"], rows, cols, f"{where}.re")
    im = _grid(obj["im"], rows, cols, f"{where}.im") if "im" in obj else np.zeros((rows, cols))
    M = re + 1j * im
    if not np.all(np.isfinite(M)):
        raise InputError(f"{where}: entries must be finite")
    return M


# ---------------------------------------------------------------------------
# maps
# ---------------------------------------------------------------------------

def map_to_json(spec: PositiveMapSpec) -> dict:
    if spec.kind == "kraus":
        return {"kind": "kraus", "operators": [matrix_to_json(K) for K in spec.operators]}
    if spec.kind == "congruence":
        return {"kind": "congruence", "K": matrix_to_json(spec.operators[0])}
    if spec.kind == "block_average":
        return {"kind": "block_average", "n": spec.out_dim}
    return {"kind": "trace_state", "rho": matrix_to_json(spec.rho)}


def map_from_json(obj, where: str = "map") -> PositiveMapSpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InputError(f"{where}: expected an object with a 'kind' field")
    kind = obj["kind"]
    if kind not in KINDS:
        raise InputError(f"{where}.kind: unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    try:
        if kind == "kraus":
            ops = obj.get("operators")
            if not isinstance(ops, list) or not ops:
                raise InputError(f"{where}.operators: expected a non-empty list of matrices")
            return PositiveMapSpec.kraus(
                [matrix_from_json(K, f"{where}.operators[{i}]") for i, K in enumerate(ops)]
            )
        if kind == "congruence":
            return PositiveMapSpec.congruence(matrix_from_json(obj.get("K"), f"{where}.K"))
        if kind == "block_average":
            n = obj.get("n")
            if not isinstance(n, int) or isinstance(n, bool):
                raise InputError(f"{where}.n: must be an integer")
            return PositiveMapSpec.block_average(n)
        return PositiveMapSpec.trace_state(matrix_from_json(obj.get("rho"), f"{where}.rho"))
    except InputError as exc:
        if str(exc).startswith(where):
            raise
        raise type(exc)(f"{where}: {exc}") from None


# ---------------------------------------------------------------------------
# generic values
# ---------------------------------------------------------------------------

def encode(value):
    """Convert results (dataclasses, arrays, tuples, floats) into JSON-ready data."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: encode(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, PositiveMapSpec):
        return map_to_json(value)
    if isinstance(value, np.ndarray):
        if value.ndim == 2:
            return matrix_to_json(value)
        return [encode(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            raise ValueError("NaN cannot be serialized")
        if math.isinf(v):
            return "+inf" if v > 0 else "-inf"
        return v
    if isinstance(value, complex):
        return {"re": encode(value.real), "im": encode(value.imag)}
    return value


def decode_real(value) -> float:
    """Inverse of :func:`encode` for a real scalar."""
    if isinstance(value, str):
        if value not in INF_TAGS:
            raise InputError(f"unrecognized real value {value!r}")
        return INF_TAGS[value]
    return float(value)


def dumps(value) -> str:
    return json.dumps(encode(value), sort_keys=True, indent=2, allow_nan=False)


def load_json(path, what: str):
    """Parse a JSON file; failures name the file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"{what} file {str(p)!r}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} file {str(p)!r}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_matrix(path, what: str) -> np.ndarray:
    return matrix_from_json(load_json(path, what), f"{what} ({path})")


def load_map(path, what: str = "map") -> PositiveMapSpec:
    return map_from_json(load_json(path, what), f"{what} ({path})")
