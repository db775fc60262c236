"""File formats: targets, density matrices, sample CSVs and reports.

All JSON documents carry a ``format`` field and are checked against the
schemas below. Complex numbers are stored as ``[re, im]`` pairs.
"""

import json
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ValidationError
from .sampler import SampleBatch
from .states import CoreState, FockDensityMatrix, PassiveUnitary, TargetSpec

TARGET_FORMAT = "hetverify-target-v1"
STATE_FORMAT = "hetverify-state-v1"
SAMPLES_FORMAT = "hetverify-samples-v1"
REPORT_FORMAT = "hetverify-report-v1"
PLAN_FORMAT = "hetverify-plan-v1"
ORACLE_FORMAT = "hetverify-oracle-v1"

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_COMPLEX_LIST = {"type": "array", "items": _COMPLEX}
_NUM_OR_NULL = {"type": ["number", "null"]}

TARGET_SCHEMA = {
    "type": "object",
    "required": ["format", "modes", "core_states", "unitary", "beta", "xi"],
    "properties": {
        "format": {"const": TARGET_FORMAT},
        "modes": {"type": "integer", "minimum": 1},
        "core_states": {"type": "array", "items": {**_COMPLEX_LIST, "minItems": 1}, "minItems": 1},
        "unitary": _COMPLEX_LIST,
        "beta": _COMPLEX_LIST,
        "xi": _COMPLEX_LIST,
    },
}

STATE_SCHEMA = {
    "type": "object",
    "required": ["format", "dims", "entries"],
    "properties": {
        "format": {"const": STATE_FORMAT},
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "entries": _COMPLEX_LIST,
    },
}

SAMPLES_SCHEMA = {
    "type": "object",
    "required": ["format", "seed", "prover_tag", "modes", "shots"],
    "properties": {
        "format": {"const": SAMPLES_FORMAT},
        "seed": {"type": "integer"},
        "prover_tag": {"type": "string"},
        "modes": {"type": "integer", "minimum": 1},
        "shots": {"type": "integer", "minimum": 0},
    },
}

_PLAN = {
    "type": "object",
    "required": ["shots_required", "formula_tag", "failure_probability"],
    "properties": {
        "shots_required": {"type": "integer", "minimum": 1},
        "formula_tag": {"type": "string"},
        "failure_probability": {"type": "number"},
        "shots_real": _NUM_OR_NULL,
        "constants": {"type": "array"},
        "params": {"type": "object"},
    },
}

PLAN_SCHEMA = {**_PLAN, "required": _PLAN["required"] + ["format"], "properties": {**_PLAN["properties"], "format": {"const": PLAN_FORMAT}}}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["format", "decision", "witness", "threshold", "per_mode_fidelity", "tvd_bound", "failure_probabilities", "plan"],
    "properties": {
        "format": {"const": REPORT_FORMAT},
        "decision": {"enum": ["accept", "abort", None]},
        "witness": _NUM_OR_NULL,
        "threshold": _NUM_OR_NULL,
        "per_mode_fidelity": {"type": "array", "items": {"type": "number"}},
        "per_mode_stderr": {"type": "array", "items": {"type": "number"}},
        "tvd_bound": _NUM_OR_NULL,
        "failure_probabilities": {"type": "object", "additionalProperties": {"type": "number"}},
        "plan": {"anyOf": [{"type": "null"}, _PLAN]},
        "formula_tag": {"type": "string"},
        "shots": {"type": "integer", "minimum": 0},
        "flags": {"type": "object"},
    },
}

ORACLE_SCHEMA = {
    "type": "object",
    "required": ["format", "quantity", "value"],
    "properties": {
        "format": {"const": ORACLE_FORMAT},
        "quantity": {"enum": ["fidelity", "witness", "expectation"]},
        "value": {"anyOf": [{"type": "number"}, _COMPLEX]},
        "per_mode_fidelity": {"type": "array", "items": {"type": "number"}},
        "flags": {"type": "object"},
    },
}

_SCHEMAS = {
    TARGET_FORMAT: TARGET_SCHEMA,
    STATE_FORMAT: STATE_SCHEMA,
    SAMPLES_FORMAT: SAMPLES_SCHEMA,
    REPORT_FORMAT: REPORT_SCHEMA,
    PLAN_FORMAT: PLAN_SCHEMA,
    ORACLE_FORMAT: ORACLE_SCHEMA,
}


def validate(doc, fmt=None):
    """Check ``doc`` against the schema named by ``fmt`` (default: its ``format`` field)."""
    fmt = fmt or (doc.get("format") if isinstance(doc, dict) else None)
    if fmt not in _SCHEMAS:
        raise ValidationError(f"unknown document format {fmt!r}")
    try:
        jsonschema.validate(doc, _SCHEMAS[fmt])
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"{fmt}: {exc.message}") from exc
    return doc


def _pairs(values):
    arr = np.asarray(values, dtype=complex).reshape(-1)
    return [[float(v.real), float(v.imag)] for v in arr]


def _complex(pairs):
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    return arr[:, 0] + 1j * arr[:, 1]


def dumps(doc):
    # overflowed probabilities are written as Infinity, which Python's json reads back
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(doc, path):
    validate(doc)
    Path(path).write_text(dumps(doc), encoding="utf-8", newline="\n")


def read_json(path, fmt=None):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return validate(doc, fmt)


# -- targets and states --------------------------------------------------------------


def target_to_dict(target):
    return {
        "format": TARGET_FORMAT,
        "modes": target.modes,
        "core_states": [_pairs(c.coefficients) for c in target.core_states],
        "unitary": _pairs(target.unitary.matrix),
        "beta": _pairs(target.beta),
        "xi": _pairs(target.xi),
    }


def target_from_dict(doc):
    validate(doc, TARGET_FORMAT)
    m = doc["modes"]
    if len(doc["core_states"]) != m or len(doc["beta"]) != m or len(doc["xi"]) != m:
        raise ValidationError("target lists must have one entry per mode")
    if len(doc["unitary"]) != m * m:
        raise ValidationError(f"unitary must have {m * m} entries")
    cores = [CoreState(_complex(c)) for c in doc["core_states"]]
    unitary = PassiveUnitary(_complex(doc["unitary"]).reshape(m, m))
    return TargetSpec(cores, unitary, beta=_complex(doc["beta"]), xi=_complex(doc["xi"]))


def state_to_dict(rho):
    return {"format": STATE_FORMAT, "dims": list(rho.dims), "entries": _pairs(rho.entries)}


def state_from_dict(doc):
    validate(doc, STATE_FORMAT)
    dims = tuple(doc["dims"])
    d = int(np.prod(dims))
    entries = _complex(doc["entries"])
    if entries.size != d * d:
        raise ValidationError(f"state with dims {dims} needs {d * d} entries, got {entries.size}")
    return FockDensityMatrix(entries.reshape(d, d), dims)


def save_target(target, path):
    write_json(target_to_dict(target), path)


def load_target(path):
    return target_from_dict(read_json(path, TARGET_FORMAT))


def save_state(rho, path):
    write_json(state_to_dict(rho), path)


def load_state(path):
    return state_from_dict(read_json(path, STATE_FORMAT))


# -- samples -------------------------------------------------------------------------

CSV_HEADER = "shot,mode,re,im\n"


def sidecar_path(path):
    return Path(str(path) + ".json")


def _rows(data, offset):
    # repr gives the shortest string that round-trips a double exactly
    n, m = data.shape
    re = data.real.tolist()
    im = data.imag.tolist()
    return "".join(
        f"{offset + k},{i},{re[k][i]!r},{im[k][i]!r}\n" for k in range(n) for i in range(m)
    )


class SampleWriter:
    """Streaming writer of the sample CSV and its metadata sidecar."""

    def __init__(self, path, modes, seed, prover_tag, extra=None):
        self.path = Path(path)
        self.modes = int(modes)
        self.seed = int(seed)
        self.prover_tag = str(prover_tag)
        self.extra = dict(extra or {})
        self.shots = 0
        self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        self._fh.write(CSV_HEADER)

    def write(self, block):
        data = np.asarray(block.data if isinstance(block, SampleBatch) else block, dtype=complex)
        if data.ndim == 1:
            data = data[:, None]
        if data.shape[1] != self.modes:
            raise ValidationError(f"block has {data.shape[1]} modes, writer expects {self.modes}")
        self._fh.write(_rows(data, self.shots))
        self.shots += data.shape[0]

    def close(self):
        if self._fh.closed:
            return
        self._fh.close()
        meta = {
            "format": SAMPLES_FORMAT,
            "seed": self.seed,
            "prover_tag": self.prover_tag,
            "modes": self.modes,
            "shots": self.shots,
            **self.extra,
        }
        write_json(meta, sidecar_path(self.path))

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_samples(batch, path):
    with SampleWriter(path, batch.modes, batch.seed, batch.prover_tag) as w:
        w.write(batch)


def read_metadata(path):
    return read_json(sidecar_path(path), SAMPLES_FORMAT)


def iter_samples(path, block=1 << 16):
    """Yield ``(start, data)`` blocks of a sample CSV without loading it whole."""
    path = Path(path)
    meta = read_metadata(path)
    n, m = meta["shots"], meta["modes"]
    with open(path, encoding="utf-8") as fh:
        if fh.readline() != CSV_HEADER:
            raise ValidationError(f"{path}: expected header {CSV_HEADER.strip()!r}")
        start = 0
        while start < n:
            take = min(block, n - start)
            raw = np.loadtxt(fh, delimiter=",", dtype=float, ndmin=2, max_rows=take * m)
            if raw.shape[0] != take * m:
                raise ValidationError(f"{path}: sidecar announces {n * m} rows, file is shorter")
            shot = raw[:, 0].astype(np.int64)
            mode = raw[:, 1].astype(np.int64)
            if np.any(shot != np.repeat(np.arange(start, start + take), m)) or np.any(mode != np.tile(np.arange(m), take)):
                raise ValidationError(f"{path}: rows must be ordered by shot then mode")
            yield start, (raw[:, 2] + 1j * raw[:, 3]).reshape(take, m)
            start += take
        if fh.readline().strip():
            raise ValidationError(f"{path}: file has more rows than the sidecar announces")


def read_samples(path):
    """Read a sample CSV and its sidecar into a :class:`SampleBatch`."""
    meta = read_metadata(path)
    data = np.empty((meta["shots"], meta["modes"]), dtype=complex)
    for start, chunk in iter_samples(path):
        data[start : start + chunk.shape[0]] = chunk
    return SampleBatch(data, seed=meta["seed"], prover_tag=meta["prover_tag"])


# -- reports and plans ---------------------------------------------------------------


def report_to_dict(report):
    doc = report.to_dict()
    validate(doc, REPORT_FORMAT)
    return doc


def plan_to_dict(plan):
    doc = {"format": PLAN_FORMAT, **plan.to_dict()}
    validate(doc, PLAN_FORMAT)
    return doc


__all__ = [
    "TARGET_FORMAT",
    "STATE_FORMAT",
    "SAMPLES_FORMAT",
    "REPORT_FORMAT",
    "PLAN_FORMAT",
    "ORACLE_FORMAT",
    "validate",
    "dumps",
    "read_json",
    "write_json",
    "target_to_dict",
    "target_from_dict",
    "state_to_dict",
    "state_from_dict",
    "save_target",
    "load_target",
    "save_state",
    "load_state",
    "SampleWriter",
    "write_samples",
    "read_samples",
    "read_metadata",
    "iter_samples",
    "sidecar_path",
    "report_to_dict",
    "plan_to_dict",
]
