"""JSON encodings for matrices, combs, designs, records and optimizer configs.

Floats are written with Python's shortest round-trip repr, so every file
reads back bitwise identical.
"""

import hashlib
import json
import math
import pathlib

import numpy as np

from .comb import CombDims, QuantumComb
from .errors import BadShape, InputError
from .stiefel import OptimizerConfig
from .tomography import Experiment, ExperimentRecord

__version__ = "0.1.0"


def encode_matrix(m):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise BadShape("only 2-D matrices can be encoded")
    flat = m.ravel()
    return {"rows": m.shape[0], "cols": m.shape[1], "data": [[float(z.real), float(z.imag)] for z in flat]}


def decode_matrix(d):
    try:
        rows, cols, data = int(d["rows"]), int(d["cols"]), d["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed matrix object: {exc}") from exc
    if len(data) != rows * cols:
        raise BadShape(f"{len(data)} entries for a {rows}x{cols} matrix")
    arr = np.array([complex(re, im) for re, im in data], dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise InputError("matrix entries must be finite")
    return arr.reshape(rows, cols)


def comb_to_dict(comb, seed=None, metadata=None):
    d = {"dims": comb.dims.to_dict(), "isometries": [encode_matrix(v) for v in comb.isometries]}
    if seed is not None:
        d["seed"] = seed
    if metadata is not None:
        d["metadata"] = metadata
    return d


def comb_from_dict(d):
    try:
        dims = CombDims.from_dict(d["dims"])
        isos = [decode_matrix(m) for m in d["isometries"]]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed comb file: {exc}") from exc
    return QuantumComb(dims, tuple(isos))


def dumps(obj):
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n"


def write_json(path, obj):
    pathlib.Path(path).write_text(dumps(obj))


def read_json(path):
    try:
        return json.loads(pathlib.Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def save_comb(path, comb, seed=None, metadata=None):
    write_json(path, comb_to_dict(comb, seed, metadata))


def load_comb(path):
    return comb_from_dict(read_json(path))


def comb_hash(comb):
    """sha256 of the canonical JSON encoding of dims and isometries."""
    text = json.dumps(comb_to_dict(comb), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _unwrap(obj, key):
    # Files may be a bare list or {"metadata": ..., key: [...]}.
    if isinstance(obj, list):
        return obj, {}
    if isinstance(obj, dict) and isinstance(obj.get(key), list):
        return obj[key], obj.get("metadata", {})
    raise InputError(f"expected a list or an object with a '{key}' list")


def design_to_list(design):
    return [e.to_dict() for e in design]


def design_from_obj(obj):
    items, _ = _unwrap(obj, "design")
    try:
        return [Experiment(d["alpha"], d["beta"], d.get("x", ())) for d in items]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed design entry: {exc}") from exc


def records_to_obj(records, metadata=None):
    items = [r.to_dict() for r in records]
    return items if metadata is None else {"metadata": metadata, "records": items}


def records_from_obj(obj):
    items, meta = _unwrap(obj, "records")
    try:
        return [ExperimentRecord.from_dict(d) for d in items], meta
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed record: {exc}") from exc


def load_optimizer_config(path):
    try:
        return OptimizerConfig.from_dict(read_json(path))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad optimizer config: {exc}") from exc


def fmt(x):
    """12 significant digits, the precision used for every CSV and printed scalar."""
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return f"{x:.12g}"
