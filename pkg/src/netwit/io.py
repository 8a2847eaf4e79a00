"""JSON reading and writing with full float precision."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .qlinalg import DensityMatrix, DomainError, density_matrix
from .states import JointDistribution


class InputError(ValueError):
    """Malformed input file."""


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"cannot serialize {x} as JSON")
    s = "%.17g" % x
    # keep floats recognizable as floats
    return s if any(ch in s for ch in ".en") else s + ".0"


def dumps(obj: Any, indent: int | None = 2) -> str:
    """``json.dumps`` that writes every float with 17 significant digits."""

    def enc(o, level):
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        if isinstance(o, (bool, np.bool_)) or o is None:
            return json.dumps(bool(o) if o is not None else None)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _fmt_float(float(o))
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, np.ndarray):
            return enc(o.tolist(), level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [pad + json.dumps(str(k)) + ": " + enc(v, level + 1) for k, v in o.items()]
            return "{" + ",".join(items) + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in o):
                return "[" + ", ".join(enc(v, level) for v in o) + "]"
            return "[" + ",".join(pad + enc(v, level + 1) for v in o) + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0)


def complex_to_pairs(a: np.ndarray) -> list[list[float]]:
    a = np.asarray(a, dtype=complex).ravel()
    return [[float(v.real), float(v.imag)] for v in a]


def pairs_to_complex(pairs, shape=None) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError("expected a list of [re, im] pairs")
    out = arr[:, 0] + 1j * arr[:, 1]
    return out if shape is None else out.reshape(shape)


def state_to_dict(rho: DensityMatrix) -> dict:
    return {"dims": list(rho.dims), "entries": complex_to_pairs(rho.entries)}


def state_from_dict(data: dict) -> DensityMatrix:
    try:
        dims = [int(d) for d in data["dims"]]
        n = int(np.prod(dims))
        raw = data["entries"]
        if len(raw) != n * n:
            raise InputError(f"{len(raw)} entries do not fill a {n}x{n} matrix")
        return density_matrix(pairs_to_complex(raw, (n, n)), dims)
    except (KeyError, TypeError) as exc:
        raise InputError(f"state JSON needs 'dims' and 'entries': {exc}") from exc
    except DomainError as exc:
        raise InputError(f"not a valid density matrix: {exc}") from exc


def load_json(path: str | Path) -> Any:
    """Parse a JSON file; syntax errors are reported with line and column."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_state(path: str | Path) -> DensityMatrix:
    return state_from_dict(load_json(path))


def save_state(rho: DensityMatrix, path: str | Path) -> None:
    Path(path).write_text(dumps(state_to_dict(rho)) + "\n")


def load_vector(path: str | Path) -> np.ndarray:
    """Target vector file: ``{"amplitudes": [[re, im], ...]}`` or a bare list of pairs."""
    data = load_json(path)
    pairs = data.get("amplitudes") if isinstance(data, dict) else data
    if pairs is None:
        raise InputError("vector JSON needs an 'amplitudes' list")
    v = pairs_to_complex(pairs)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1) > 1e-9:
        raise InputError(f"target vector has norm {nrm}")
    return v


def distribution_to_dict(p: JointDistribution) -> dict:
    return {"cardinalities": list(p.cardinalities), "probabilities": p.probabilities.tolist()}


def distribution_from_dict(data: dict) -> JointDistribution:
    try:
        return JointDistribution(tuple(data["cardinalities"]), np.asarray(data["probabilities"], dtype=float))
    except (KeyError, TypeError) as exc:
        raise InputError(f"distribution JSON needs 'cardinalities' and 'probabilities': {exc}") from exc
