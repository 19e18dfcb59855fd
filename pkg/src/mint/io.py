"""JSON documents for measurements, bases, protocols, completions and results.

Complex numbers are ``[re, im]`` pairs and matrices are row-major nested
arrays of them.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .interpolation import InterpolationResult
from .measurement import CoarseGrainMap, Measurement, ProductBasis
from .protocol import Completion, Leaf, Node, ProtocolTree


class DocumentError(ValueError):
    pass


def encode_complex(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def encode_vector(v) -> list[list[float]]:
    return [encode_complex(z) for z in np.asarray(v).reshape(-1)]


def encode_matrix(m) -> list[list[list[float]]]:
    return [encode_vector(row) for row in np.asarray(m)]


def _decode_entry(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    raise DocumentError(f"bad complex entry {x!r}")


def decode_vector(doc) -> np.ndarray:
    return np.array([_decode_entry(x) for x in doc], dtype=complex)


def decode_matrix(doc) -> np.ndarray:
    rows = [decode_vector(row) for row in doc]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise DocumentError("matrix rows are empty or ragged")
    return np.array(rows)


def measurement_to_doc(m: Measurement) -> dict:
    doc = {"dim": m.dim}
    if m.is_bipartite:
        doc.update(d_A=m.d_A, d_B=m.d_B)
    doc["elements"] = [{"label": lbl, "matrix": encode_matrix(e)} for lbl, e in m]
    return doc


def measurement_from_doc(doc: dict) -> Measurement:
    try:
        elements = [decode_matrix(el["matrix"]) for el in doc["elements"]]
        labels = [el.get("label", str(i)) for i, el in enumerate(doc["elements"])]
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"malformed measurement document: {exc}") from exc
    m = Measurement(elements, labels, doc.get("d_A"), doc.get("d_B"))
    if "dim" in doc and doc["dim"] != m.dim:
        raise DocumentError(f"declared dim {doc['dim']} but elements are {m.dim}-dimensional")
    return m


def basis_to_doc(b: ProductBasis) -> dict:
    return {
        "d_A": b.d_A,
        "d_B": b.d_B,
        "vectors": [{"label": lbl, "alice": encode_vector(a), "bob": encode_vector(v)}
                    for lbl, a, v in zip(b.labels, b.alice, b.bob)],
    }


def basis_from_doc(doc: dict, check: bool = True) -> ProductBasis:
    try:
        vectors = doc["vectors"]
        return ProductBasis(doc["d_A"], doc["d_B"], [decode_vector(v["alice"]) for v in vectors],
                            [decode_vector(v["bob"]) for v in vectors],
                            [v.get("label", f"psi{k}") for k, v in enumerate(vectors)], check=check)
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"malformed basis document: {exc}") from exc


def _node_to_doc(node) -> dict:
    if isinstance(node, Leaf):
        return {"label": node.label}
    doc = {"party": node.party, "kraus": [encode_matrix(k) for k in node.kraus],
           "children": [_node_to_doc(c) for c in node.children]}
    if node.label:
        doc["label"] = node.label
    return doc


def _node_from_doc(doc):
    if "kraus" not in doc:
        if "label" not in doc:
            raise DocumentError("a leaf needs a label")
        return Leaf(str(doc["label"]))
    return Node(doc["party"], tuple(decode_matrix(k) for k in doc["kraus"]),
                tuple(_node_from_doc(c) for c in doc.get("children", [])), doc.get("label"))


def protocol_to_doc(t: ProtocolTree) -> dict:
    return {"d_A": t.d_A, "d_B": t.d_B, "root": _node_to_doc(t.root)}


def protocol_from_doc(doc: dict) -> ProtocolTree:
    try:
        return ProtocolTree(doc["d_A"], doc["d_B"], _node_from_doc(doc["root"]))
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"malformed protocol document: {exc}") from exc


def completion_to_doc(c: Completion) -> dict:
    return {"stages": {leaf: measurement_to_doc(m) for leaf, m in c.stages.items()},
            "assign": dict(c.assign), "order": list(c.order)}


def completion_from_doc(doc: dict) -> Completion:
    try:
        stages = {leaf: measurement_from_doc(m) for leaf, m in doc["stages"].items()}
        return Completion(stages, dict(doc["assign"]), tuple(doc["order"]))
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"malformed completion document: {exc}") from exc


def encode_real(x: float):
    """Finite floats pass through; infinities and NaN become strings."""
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def decode_real(x) -> float:
    return float(x)


def result_to_doc(r: InterpolationResult) -> dict:
    return {
        "m1": measurement_to_doc(r.m1),
        "m2_list": [measurement_to_doc(m) for m in r.m2_list],
        "coarse_map": {"partition": [list(p) for p in r.coarse_map.partition], "labels": list(r.coarse_map.labels)},
        "epsilon": r.epsilon,
        "epsilon_achieved": r.epsilon_achieved,
        "c_constants": [encode_real(c) for c in r.c_constants],
    }


def result_from_doc(doc: dict) -> InterpolationResult:
    try:
        cmap = CoarseGrainMap(tuple(tuple(p) for p in doc["coarse_map"]["partition"]),
                              tuple(doc["coarse_map"]["labels"]))
        return InterpolationResult(measurement_from_doc(doc["m1"]),
                                   tuple(measurement_from_doc(m) for m in doc["m2_list"]), cmap,
                                   float(doc["epsilon"]), float(doc["epsilon_achieved"]),
                                   tuple(decode_real(c) for c in doc["c_constants"]))
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"malformed interpolation document: {exc}") from exc


def document_kind(doc: dict) -> str:
    if not isinstance(doc, dict):
        raise DocumentError("top-level JSON must be an object")
    if "root" in doc:
        return "protocol"
    if "vectors" in doc:
        return "basis"
    if "stages" in doc:
        return "completion"
    if "m1" in doc:
        return "interpolation"
    if "elements" in doc:
        return "measurement"
    if "command" in doc and "status" in doc:
        return "report"
    raise DocumentError("unrecognized document")


_DECODERS = {
    "protocol": protocol_from_doc,
    "basis": basis_from_doc,
    "completion": completion_from_doc,
    "interpolation": result_from_doc,
    "measurement": measurement_from_doc,
}

_ENCODERS = [
    (ProtocolTree, protocol_to_doc),
    (ProductBasis, basis_to_doc),
    (Completion, completion_to_doc),
    (InterpolationResult, result_to_doc),
    (Measurement, measurement_to_doc),
]


def to_doc(obj) -> dict:
    for cls, enc in _ENCODERS:
        if isinstance(obj, cls):
            return enc(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def from_doc(doc: dict):
    return _DECODERS[document_kind(doc)](doc)


def dumps(obj) -> str:
    return json.dumps(obj if isinstance(obj, dict) else to_doc(obj), sort_keys=True, allow_nan=False)


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def load(path, kind: str | None = None):
    doc = read_json(path)
    found = document_kind(doc)
    if kind is not None and found != kind:
        raise DocumentError(f"{path}: expected a {kind} document, found {found}")
    return _DECODERS[found](doc)
