"""JSON and CSV formats for signals, frames, measurements and reports.

Complex vectors are JSON arrays of ``[re, im]`` pairs. Frame descriptors and
reports carry a ``schema_version`` field.
"""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .core import as_signal
from .framegen import (
    Lattice,
    MeasurementVector,
    MultiWindowGaborFrame,
    Window,
    assemble_frame,
    random_window,
)
from .settools import IndexSet, beta, difference_set, random_subset

SCHEMA_VERSION = 1
MEASUREMENT_COLUMNS = ["window_tag", "k", "l", "value"]
EDGE_COLUMNS = ["k", "l", "k2", "l2", "re", "im", "pruned"]


class SchemaError(ValueError):
    """Input file does not follow its schema."""


def signal_to_json(x) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(x, dtype=np.complex128)]


def signal_from_json(obj) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError("signal must be a list of [re, im] pairs") from None
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise SchemaError("signal must be a nonempty list of [re, im] pairs")
    return as_signal(arr[:, 0] + 1j * arr[:, 1])


def _index_set(M, spec, name, T_or_F=None, C=None):
    """Resolve a set spec: list, "full", "difference-set", {"bernoulli": ...} or {"beta": ...}.

    Returns ``(IndexSet, info)`` where ``info`` records how it was obtained.
    """
    if spec == "full":
        return IndexSet.full(M), {"kind": "full"}
    if spec == "difference-set":
        if T_or_F is None:
            raise SchemaError(f"{name}: difference-set needs a lattice factor")
        return difference_set(T_or_F), {"kind": "difference-set"}
    if isinstance(spec, list):
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in spec):
            raise SchemaError(f"{name}: explicit sets are lists of integers")
        return IndexSet.from_iterable(M, spec), {"kind": "explicit"}
    if isinstance(spec, dict) and "bernoulli" in spec:
        if "seed" not in spec:
            raise SchemaError(f"{name}: bernoulli sets need a seed")
        rate = spec["bernoulli"]
        if rate == "log":
            rate = min(1.0, float(spec.get("alpha", 1.0)) * math.log(M) / M)
        S = random_subset(M, float(rate), spec["seed"])
        if len(S) == 0:
            raise SchemaError(f"{name}: bernoulli draw is empty; change the seed or rate")
        return S, {"kind": "bernoulli", "rate": float(rate), "seed": spec["seed"]}
    if isinstance(spec, dict) and "beta" in spec:
        res = beta(M, float(spec["beta"]), mode=spec.get("mode", "exhaustive"),
                   trials=int(spec.get("trials", 4096)), seed=spec.get("seed", 0))
        if res.witness is None:
            raise SchemaError(f"{name}: beta search found no witness")
        return res.witness, {"kind": "beta", **res.to_json()}
    raise SchemaError(f"{name}: unrecognized set spec {spec!r}")


def _require(obj, key):
    if key not in obj:
        raise SchemaError(f"missing field {key!r}")
    return obj[key]


def resolve_sets(desc: dict):
    """Lattice, Q, P and provenance info from a descriptor or config."""
    M = _require(desc, "M")
    if not isinstance(M, int) or M < 1:
        raise SchemaError("M must be a positive integer")
    lat = desc.get("lattice", desc)
    T, _ = _index_set(M, lat.get("T", "full"), "T")
    F, _ = _index_set(M, lat.get("F", "full"), "F")
    try:
        lattice = Lattice(T, F)
    except ValueError as err:
        raise SchemaError(str(err)) from None
    Q, qinfo = _index_set(M, _require(desc, "Q"), "Q", T)
    P, pinfo = _index_set(M, _require(desc, "P"), "P", F)
    return lattice, Q, P, {"Q": qinfo, "P": pinfo}


def frame_from_descriptor(desc: dict) -> MultiWindowGaborFrame:
    """Build a frame from ``{M, T, F, Q, P}`` plus ``seed`` or explicit ``g``."""
    if not isinstance(desc, dict):
        raise SchemaError("frame descriptor must be a JSON object")
    version = desc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version}")
    lattice, Q, P, _ = resolve_sets(desc)
    if "g" in desc:
        g = Window(signal_from_json(desc["g"]))
    elif "seed" in desc:
        g = random_window(lattice.M, desc["seed"])
    else:
        raise SchemaError("frame descriptor needs a window seed or explicit g")
    if g.M != lattice.M:
        raise SchemaError(f"window has length {g.M}, expected {lattice.M}")
    try:
        return assemble_frame(g, lattice, Q, P)
    except ValueError as err:
        raise SchemaError(str(err)) from None


def frame_to_json(frame: MultiWindowGaborFrame) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "M": frame.M,
        "T": list(frame.lattice.T.members),
        "F": list(frame.lattice.F.members),
        "Q": list(frame.Q.members),
        "P": list(frame.P.members),
        "g": signal_to_json(frame.g.values),
        "cardinality": len(frame),
    }


def write_measurements(b: MeasurementVector, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(MEASUREMENT_COLUMNS)
    for (tag, k, l), v in zip(b.index, b.values):
        w.writerow([tag, k, l, repr(float(v))])


def read_measurements(fh) -> MeasurementVector:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header != MEASUREMENT_COLUMNS:
        raise SchemaError(f"measurement header must be {','.join(MEASUREMENT_COLUMNS)}")
    index, values = [], []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 4:
            raise SchemaError(f"line {lineno}: expected 4 columns")
        try:
            index.append((row[0], int(row[1]), int(row[2])))
            values.append(float(row[3]))
        except ValueError:
            raise SchemaError(f"line {lineno}: malformed row {row}") from None
    try:
        return MeasurementVector(np.array(values), tuple(index))
    except ValueError as err:
        raise SchemaError(str(err)) from None


def measurements_to_csv(b: MeasurementVector) -> str:
    buf = io.StringIO()
    write_measurements(b, buf)
    return buf.getvalue()


def write_edges(graph, fh):
    """Edge list with endpoints, weight and pruned flag."""
    verts = graph.vertices
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(EDGE_COLUMNS)
    for e, (a, b) in enumerate(graph.edges):
        z = graph.weights[e] if graph.weights is not None else complex("nan")
        w.writerow([*verts[a], *verts[b], repr(float(z.real)), repr(float(z.imag)),
                    int(graph.pruned[e])])


def dump_json(obj, fh):
    json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
    fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
