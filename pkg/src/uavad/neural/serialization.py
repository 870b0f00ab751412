"""Model file format: JSON with shape-annotated flat weight arrays.

Floats are written as shortest round-trip decimals (Python repr), so a
save/load cycle reproduces forward outputs bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import BadJson, ShapeMismatch, VersionMismatch
from ..features import NormParams
from .network import TrainedModel
from .specs import (
    LossKind,
    LstmLayerSpec,
    ModelKind,
    ModelSpec,
    RegKind,
    Regularization,
    weight_names,
)

FORMAT_VERSION = 1


def _spec_to_dict(spec: ModelSpec) -> dict:
    def layers(ls):
        return [
            {"input_size": l.input_size, "hidden_size": l.hidden_size,
             "return_sequences": l.return_sequences}
            for l in ls
        ]

    return {
        "kind": spec.kind.value,
        "timesteps": spec.timesteps,
        "features": spec.features,
        "encoder": layers(spec.encoder),
        "decoder": layers(spec.decoder),
        "bridge": spec.bridge,
        "loss": spec.loss.value,
        "reg": {"kind": spec.reg.kind.value, "factor": spec.reg.factor},
        "learning_rate": spec.learning_rate,
        "batch_size": spec.batch_size,
        "normalize": spec.normalize,
    }


def _spec_from_dict(doc: dict) -> ModelSpec:
    def layers(ls):
        return tuple(
            LstmLayerSpec(l["input_size"], l["hidden_size"], l["return_sequences"])
            for l in ls
        )

    return ModelSpec(
        kind=ModelKind(doc["kind"]),
        timesteps=doc["timesteps"],
        features=doc["features"],
        encoder=layers(doc["encoder"]),
        decoder=layers(doc["decoder"]),
        loss=LossKind(doc["loss"]),
        reg=Regularization(RegKind(doc["reg"]["kind"]), doc["reg"]["factor"]),
        learning_rate=doc["learning_rate"],
        batch_size=doc["batch_size"],
        normalize=doc["normalize"],
        bridge=doc.get("bridge", "RepeatEncoding"),
    )


def save_model(model: TrainedModel) -> str:
    doc = {
        "version": FORMAT_VERSION,
        "spec": _spec_to_dict(model.spec),
        "norm": None
        if model.norm is None
        else {"min": model.norm.minimum.tolist(), "max": model.norm.maximum.tolist()},
        "threshold": model.threshold,
        "weights": {
            name: {"shape": list(w.shape), "data": w.ravel().tolist()}
            for name, w in model.weights.items()
        },
        "history": [[t, v] for t, v in model.training_history],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def load_model(text: str) -> TrainedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadJson(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise BadJson("model file must be a JSON object with a version field")
    if doc["version"] != FORMAT_VERSION:
        raise VersionMismatch(
            f"model file version {doc['version']!r}, expected {FORMAT_VERSION}"
        )
    try:
        spec = _spec_from_dict(doc["spec"])
        raw_weights = doc["weights"]
        norm_doc = doc["norm"]
        threshold = doc["threshold"]
        history = [(t, v) for t, v in doc.get("history", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise BadJson(f"model file missing or malformed fields: {exc}") from exc

    expected = weight_names(spec)
    if set(raw_weights) != set(expected):
        raise ShapeMismatch("model file parameter names do not match its spec")
    weights = {}
    for name in expected:
        entry = raw_weights[name]
        arr = np.asarray(entry["data"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if arr.size != int(np.prod(shape)):
            raise ShapeMismatch(f"{name}: flat data does not fill shape {shape}")
        weights[name] = arr.reshape(shape)
    _validate_shapes(spec, weights)

    norm = None
    if norm_doc is not None:
        norm = NormParams(np.asarray(norm_doc["min"]), np.asarray(norm_doc["max"]))
    return TrainedModel(spec, weights, norm, threshold, history)


def _validate_shapes(spec: ModelSpec, weights: dict[str, np.ndarray]):
    def check(name, shape):
        if weights[name].shape != shape:
            raise ShapeMismatch(
                f"{name}: stored shape {weights[name].shape}, spec wants {shape}"
            )

    for prefix, layers in (("enc", spec.encoder), ("dec", spec.decoder)):
        for i, layer in enumerate(layers):
            h = layer.hidden_size
            check(f"{prefix}{i}_Wx", (layer.input_size, 4 * h))
            check(f"{prefix}{i}_Wh", (h, 4 * h))
            check(f"{prefix}{i}_b", (4 * h,))
    check("head_W", (spec.head_input, spec.features))
    check("head_b", (spec.features,))
