"""GRF1 field files and JSON report helpers.

A GRF1 file is one UTF-8 JSON header line with sorted keys
``{"dims", "format", "geometry", "kind", "spacing"}`` followed by a newline and
the payload as little-endian float64 in row-major site order. Links are stored
site-major, then direction, then ``(w, x, y, z)``; frames site-major then
``(w, x, y, z)``.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import FormatError, ShapeError
from .lattice import Lattice, ScalarField
from .su2 import FrameField, GaugeField

FORMAT = "GRF1"
KINDS = {"scalar": (), "links": (4, 4), "frame": (4,)}
SCHEMA_VERSION = "1"


def _kind_of(field):
    if isinstance(field, ScalarField):
        return "scalar", field.values
    if isinstance(field, GaugeField):
        return "links", field.links
    if isinstance(field, FrameField):
        return "frame", field.values
    raise TypeError(f"cannot serialize {type(field).__name__}")


def encode(field):
    kind, values = _kind_of(field)
    lat = field.lattice
    header = {
        "dims": list(lat.dims),
        "format": FORMAT,
        "geometry": lat.geometry,
        "kind": kind,
        "spacing": lat.spacing,
    }
    line = json.dumps(header, sort_keys=True, separators=(",", ":"))
    body = np.ascontiguousarray(values, dtype="<f8").tobytes()
    return line.encode("utf-8") + b"\n" + body


def decode(blob):
    nl = blob.find(b"\n")
    if nl < 0:
        raise FormatError("missing GRF1 header line")
    try:
        header = json.loads(blob[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"malformed GRF1 header: {exc}") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT:
        raise FormatError("not a GRF1 file")
    kind = header.get("kind")
    if kind not in KINDS:
        raise FormatError(f"unknown field kind {kind!r}")
    try:
        lat = Lattice(tuple(header["dims"]), float(header["spacing"]), header["geometry"])
    except KeyError as exc:
        raise FormatError(f"GRF1 header lacks {exc}") from None
    shape = lat.dims + KINDS[kind]
    payload = blob[nl + 1:]
    if len(payload) != 8 * int(np.prod(shape)):
        raise ShapeError(
            f"payload holds {len(payload) // 8} values, header expects {int(np.prod(shape))}"
        )
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)
    if kind == "scalar":
        return ScalarField(lat, values)
    if kind == "links":
        return GaugeField(lat, values)
    return FrameField(lat, values)


def write_field(path, field):
    with open(path, "wb") as fh:
        fh.write(encode(field))


def read_field(path, kind=None):
    with open(path, "rb") as fh:
        field = decode(fh.read())
    if kind is not None and _kind_of(field)[0] != kind:
        raise FormatError(f"expected a {kind} file, found {_kind_of(field)[0]}")
    return field


def jsonable(obj):
    """Convert report objects to plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(report):
    # repr-based float output is the shortest round-trip decimal
    return json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"


def from_json_float(v):
    if isinstance(v, str):
        return float(v)
    return v
