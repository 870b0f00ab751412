"""Model topology descriptions, the three detector presets, and weight init.

Architecture shared by all presets: a stack of LSTM encoder layers whose
final layer emits its last hidden state, a bridge that repeats that
encoding once per timestep, a stack of LSTM decoder layers running over
the repeated sequence, and a linear per-timestep output head mapping the
last decoder width back to the feature count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class ModelKind(Enum):
    VIBRATION = "Vibration"
    ATTITUDE = "Attitude"
    COMPASS = "Compass"


class LossKind(Enum):
    MAE = "MAE"
    MSE = "MSE"


class RegKind(Enum):
    NONE = "None"
    L1 = "L1"
    L2 = "L2"


@dataclass(frozen=True)
class Regularization:
    kind: RegKind
    factor: float = 0.0

    def __post_init__(self):
        if self.kind is not RegKind.NONE and self.factor <= 0:
            raise ValueError("regularization factor must be > 0")


@dataclass(frozen=True)
class LstmLayerSpec:
    input_size: int
    hidden_size: int
    return_sequences: bool

    def __post_init__(self):
        if self.input_size < 1 or self.hidden_size < 1:
            raise ValueError("layer sizes must be >= 1")


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    timesteps: int
    features: int
    encoder: tuple[LstmLayerSpec, ...]
    decoder: tuple[LstmLayerSpec, ...]
    loss: LossKind
    reg: Regularization
    learning_rate: float
    batch_size: int
    normalize: bool
    bridge: str = field(default="RepeatEncoding")

    def __post_init__(self):
        if self.bridge != "RepeatEncoding":
            raise ValueError("only the RepeatEncoding bridge is supported")
        if not self.encoder or not self.decoder:
            raise ValueError("encoder and decoder must each have at least one layer")
        expect = self.features
        for layer in self.encoder:
            if layer.input_size != expect:
                raise ValueError("encoder layer sizes do not chain")
            expect = layer.hidden_size
        for i, layer in enumerate(self.encoder):
            want_seq = i < len(self.encoder) - 1
            if layer.return_sequences != want_seq:
                raise ValueError("only the last encoder layer may emit its last state")
        expect = self.encoder[-1].hidden_size
        for layer in self.decoder:
            if layer.input_size != expect or not layer.return_sequences:
                raise ValueError("decoder layer sizes do not chain")
            expect = layer.hidden_size

    @property
    def head_input(self) -> int:
        return self.decoder[-1].hidden_size


def preset(kind: ModelKind) -> ModelSpec:
    """The three detector configurations."""
    if kind is ModelKind.VIBRATION:
        return ModelSpec(
            kind=kind,
            timesteps=200,
            features=3,
            encoder=(
                LstmLayerSpec(3, 100, True),
                LstmLayerSpec(100, 16, False),
            ),
            decoder=(
                LstmLayerSpec(16, 16, True),
                LstmLayerSpec(16, 100, True),
            ),
            loss=LossKind.MAE,
            reg=Regularization(RegKind.L2, 0.001),
            learning_rate=0.001,
            batch_size=200,
            normalize=True,
        )
    if kind is ModelKind.ATTITUDE:
        return ModelSpec(
            kind=kind,
            timesteps=200,
            features=3,
            encoder=(LstmLayerSpec(3, 64, False),),
            decoder=(LstmLayerSpec(64, 64, True),),
            loss=LossKind.MAE,
            reg=Regularization(RegKind.L1, 0.00015),
            learning_rate=0.001,
            batch_size=200,
            normalize=False,
        )
    if kind is ModelKind.COMPASS:
        return ModelSpec(
            kind=kind,
            timesteps=50,
            features=3,
            encoder=(LstmLayerSpec(3, 8, False),),
            decoder=(LstmLayerSpec(8, 16, True),),
            loss=LossKind.MSE,
            reg=Regularization(RegKind.NONE),
            learning_rate=0.001,
            batch_size=100,
            normalize=True,
        )
    raise ValueError(f"unknown model kind {kind!r}")


def reduced_spec(spec: ModelSpec, timesteps: int = 8, shrink: int = 2) -> ModelSpec:
    """Same topology at reduced size, for gradient checking."""

    def shrink_layers(layers, first_input):
        out = []
        prev = first_input
        for layer in layers:
            hidden = max(2, layer.hidden_size // shrink)
            out.append(LstmLayerSpec(prev, hidden, layer.return_sequences))
            prev = hidden
        return tuple(out)

    encoder = shrink_layers(spec.encoder, spec.features)
    decoder = shrink_layers(spec.decoder, encoder[-1].hidden_size)
    return ModelSpec(
        kind=spec.kind,
        timesteps=timesteps,
        features=spec.features,
        encoder=encoder,
        decoder=decoder,
        loss=spec.loss,
        reg=spec.reg,
        learning_rate=spec.learning_rate,
        batch_size=2,
        normalize=spec.normalize,
    )


def weight_names(spec: ModelSpec) -> list[str]:
    """Deterministic parameter order: encoder, decoder, head."""
    names = []
    for i in range(len(spec.encoder)):
        names += [f"enc{i}_Wx", f"enc{i}_Wh", f"enc{i}_b"]
    for i in range(len(spec.decoder)):
        names += [f"dec{i}_Wx", f"dec{i}_Wh", f"dec{i}_b"]
    names += ["head_W", "head_b"]
    return names


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


def init_weights(spec: ModelSpec, rng: np.random.Generator, scale: float = 1.0) -> dict[str, np.ndarray]:
    """Xavier-uniform matrices, forget-gate biases 1.0, other biases 0.

    Gate layout inside the 4H axis is [input, forget, candidate, output].
    Draw order matches weight_names so a given seed fixes every weight.
    """
    weights: dict[str, np.ndarray] = {}

    def lstm_params(prefix: str, layer: LstmLayerSpec):
        h = layer.hidden_size
        weights[f"{prefix}_Wx"] = scale * _xavier(rng, layer.input_size, 4 * h)
        weights[f"{prefix}_Wh"] = scale * _xavier(rng, h, 4 * h)
        b = np.zeros(4 * h)
        b[h : 2 * h] = 1.0
        weights[f"{prefix}_b"] = b

    for i, layer in enumerate(spec.encoder):
        lstm_params(f"enc{i}", layer)
    for i, layer in enumerate(spec.decoder):
        lstm_params(f"dec{i}", layer)
    weights["head_W"] = scale * _xavier(rng, spec.head_input, spec.features)
    weights["head_b"] = np.zeros(spec.features)
    return weights


def is_weight_matrix(name: str) -> bool:
    """Regularization covers weight matrices, never biases."""
    return name.endswith(("_Wx", "_Wh")) or name == "head_W"
