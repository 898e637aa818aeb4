"""
Tap and signal file formats.

Tap JSON (``format: "cdcfir-taps"``, ``version: 1``)::

    {"format": "cdcfir-taps", "version": 1,
     "method": "overlap-save" | "time-domain" | "identity",
     "N": int | null, "M": int | null, "L": int, "omega": float, "K": float | null,
     "center": int, "taps": [{"re": float, "im": float}, ...]}

``L`` is the nominal length ``N - M + 1`` (or the tap count when no block
geometry is attached). Floats are written with ``repr`` precision, so a
round trip is exact.

Tap text: a ``#``-prefixed header followed by one ``index re im`` record per
line.

Raw signal: 16-byte header (8-byte magic ``b"CDCSIG01"``, uint64 little-endian
sample count) followed by interleaved float64 little-endian re/im pairs.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from .design import TapVector

TAP_FORMAT = "cdcfir-taps"
TAP_VERSION = 1
SIGNAL_MAGIC = b"CDCSIG01"

TAP_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "method", "N", "M", "L", "omega", "K", "center", "taps"],
    "properties": {
        "format": {"const": TAP_FORMAT},
        "version": {"const": TAP_VERSION},
        "method": {"type": "string"},
        "N": {"type": ["integer", "null"], "minimum": 1},
        "M": {"type": ["integer", "null"], "minimum": 1},
        "L": {"type": "integer", "minimum": 1},
        "omega": {"type": "number", "exclusiveMinimum": 0, "maximum": math.pi},
        "K": {"type": ["number", "null"], "minimum": 0},
        "center": {"type": "integer", "minimum": 0},
        "taps": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["re", "im"],
                "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
            },
        },
    },
}


def taps_to_dict(tv: TapVector) -> dict:
    return {
        "format": TAP_FORMAT,
        "version": TAP_VERSION,
        "method": tv.method or "custom",
        "N": tv.fft_size,
        "M": tv.block_size,
        "L": tv.nominal_length,
        "omega": float(tv.omega),
        "K": None if tv.k is None else float(tv.k),
        "center": int(tv.center),
        "taps": [{"re": float(t.real), "im": float(t.imag)} for t in tv.taps],
    }


def taps_from_dict(doc: dict) -> TapVector:
    jsonschema.validate(doc, TAP_SCHEMA)
    taps = np.array([complex(t["re"], t["im"]) for t in doc["taps"]])
    return TapVector(
        taps,
        doc["center"],
        method=doc["method"],
        k=doc["K"],
        omega=doc["omega"],
        fft_size=doc["N"],
        block_size=doc["M"],
    )


def write_taps_json(tv: TapVector, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(taps_to_dict(tv), indent=1) + "\n")
    return path


def read_taps_json(path) -> TapVector:
    return taps_from_dict(json.loads(Path(path).read_text()))


def write_taps_text(tv: TapVector, path) -> Path:
    path = Path(path)
    d = taps_to_dict(tv)
    lines = [f"# {key} {d[key]}" for key in ("method", "N", "M", "L", "omega", "K", "center")]
    lines.append("# index re im")
    lines += [f"{i} {t.real!r} {t.imag!r}" for i, t in enumerate(tv.taps.tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_taps_text(path) -> TapVector:
    meta, rows = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            parts = line[1:].split(None, 1)
            if len(parts) == 2:
                meta[parts[0]] = parts[1]
        elif line.strip():
            idx, re, im = line.split()
            rows.append((int(idx), float(re), float(im)))
    rows.sort()
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: tap indices must be 0..n-1 without gaps")

    def opt(key, cast):
        val = meta.get(key, "None")
        return None if val == "None" else cast(val)

    return TapVector(
        np.array([complex(re, im) for _, re, im in rows]),
        opt("center", int) or 0,
        method=meta.get("method"),
        k=opt("K", float),
        omega=opt("omega", float) or math.pi,
        fft_size=opt("N", int),
        block_size=opt("M", int),
    )


def write_signal(x, path) -> Path:
    x = np.ascontiguousarray(x, dtype="<c16")
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(SIGNAL_MAGIC)
        fh.write(np.uint64(x.size).astype("<u8").tobytes())
        fh.write(x.view("<f8").tobytes())
    return path


def read_signal(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:8] != SIGNAL_MAGIC:
        raise ValueError(f"{path}: not a cdcfir signal file")
    count = int(np.frombuffer(raw[8:16], dtype="<u8")[0])
    body = np.frombuffer(raw[16:], dtype="<f8")
    if body.size != 2 * count:
        raise ValueError(f"{path}: header declares {count} samples, body holds {body.size / 2:g}")
    return body.view("<c16").astype(complex)
