"""Versioned model persistence.

Models are stored as a single JSON document: format tag, version, layer
list (variant, shape, orientation, parameter vector, bias, activation
name + smooth point), plus a free-form extra block (e.g. a compression
report).  Floats are written in shortest round-tripping decimal form, so
a load of a save reproduces every parameter bit for bit.
"""

import json
from pathlib import Path

import numpy as np

from ..activations import get_activation
from ..errors import ModelFormatError
from ..network import Layer, NetworkSpec
from ..structmat import DenseMatrix, HankelMatrix, ToeplitzMatrix, TriangularMatrix

__all__ = ["save_model", "load_model", "FORMAT_NAME", "FORMAT_VERSION"]

FORMAT_NAME = "structnet-model"
FORMAT_VERSION = 1


def _variant_of(weight):
    if isinstance(weight, ToeplitzMatrix):
        return "toeplitz", None
    if isinstance(weight, HankelMatrix):
        return "hankel", None
    if isinstance(weight, TriangularMatrix):
        return "triangular", weight.orientation
    if isinstance(weight, DenseMatrix):
        return "dense", None
    raise ModelFormatError(f"unserializable weight type {type(weight).__name__}")


def save_model(net, path, extra=None):
    """Write the network (and optional extra block) as JSON; returns path."""
    layers = []
    for layer in net.layers:
        variant, orientation = _variant_of(layer.weight)
        entry = {
            "variant": variant,
            "rows": layer.weight.rows,
            "cols": layer.weight.cols,
            "orientation": orientation,
            "params": [float(v) for v in layer.weight.params],
            "bias": [float(v) for v in layer.bias],
            "activation": None,
        }
        if layer.activation is not None:
            entry["activation"] = {
                "name": layer.activation.name,
                "smooth_point": layer.activation.smooth_point,
            }
        layers.append(entry)
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "widths": list(net.widths),
        "layers": layers,
    }
    if extra is not None:
        doc["extra"] = extra
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1), encoding="utf-8")
    return path


def _rebuild_weight(entry):
    variant = entry["variant"]
    rows, cols = int(entry["rows"]), int(entry["cols"])
    params = np.array(entry["params"], dtype=float)
    if variant == "toeplitz":
        return ToeplitzMatrix(rows, cols, params)
    if variant == "hankel":
        return HankelMatrix(rows, cols, params)
    if variant == "triangular":
        return TriangularMatrix(rows, cols, entry["orientation"], params)
    if variant == "dense":
        return DenseMatrix(rows, cols, params)
    raise ModelFormatError(f"unknown weight variant {variant!r}")


def load_model(path):
    """Read a model file; returns (NetworkSpec, extra dict or None)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFormatError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"{path} is not a {FORMAT_NAME} file")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format version {doc.get('version')!r} "
            f"(this build reads version {FORMAT_VERSION})"
        )
    layers = []
    try:
        for entry in doc["layers"]:
            weight = _rebuild_weight(entry)
            activation = None
            if entry.get("activation"):
                activation = get_activation(entry["activation"]["name"])
                stored = float(entry["activation"]["smooth_point"])
                if stored != activation.smooth_point:
                    raise ModelFormatError(
                        f"{path}: activation {activation.name!r} stored with "
                        f"smooth point {stored}, build pins "
                        f"{activation.smooth_point}"
                    )
            layers.append(Layer(weight, np.array(entry["bias"], dtype=float), activation))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: corrupt layer block: {exc}") from exc
    net = NetworkSpec(layers)
    return net, doc.get("extra")
