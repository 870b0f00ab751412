"""Seeded training loop and finite-difference gradient verification."""

from __future__ import annotations

import logging

import numpy as np

from ..errors import EmptyDataset, NonFiniteLoss, ShapeMismatch
from ..features import WindowedDataset
from .network import TrainedModel, loss_and_gradients, loss_only, regularization_loss
from .optimizer import AdamState, adam_step
from .specs import (
    LossKind,
    ModelSpec,
    RegKind,
    init_weights,
    is_weight_matrix,
    reduced_spec,
    weight_names,
)

logger = logging.getLogger(__name__)


def evaluate_loss(spec: ModelSpec, weights, data: np.ndarray) -> float:
    """Training objective over a dataset, batched, without updates."""
    total = 0.0
    for lo in range(0, data.shape[0], spec.batch_size):
        chunk = np.ascontiguousarray(data[lo : lo + spec.batch_size])
        total += loss_only(spec, weights, chunk) * chunk.shape[0]
    return total / data.shape[0]


def train(
    spec: ModelSpec,
    train_ds: WindowedDataset,
    val_ds: WindowedDataset | None,
    epochs: int,
    seed: int,
) -> TrainedModel:
    """Train an autoencoder on normal windows.

    One seed drives weight init and every epoch's shuffle, so repeated runs
    are bit-identical.  Mini-batches follow the spec's batch size with the
    last partial batch kept.  Per-epoch train/val losses (including the
    regularization term) are recorded in the returned model's history.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if train_ds.samples == 0:
        raise EmptyDataset("training dataset has no windows")
    expected = (spec.timesteps, spec.features)
    if train_ds.data.shape[1:] != expected:
        raise ShapeMismatch(
            f"training windows {train_ds.data.shape[1:]} do not match spec {expected}"
        )
    if val_ds is not None and val_ds.samples and val_ds.data.shape[1:] != expected:
        raise ShapeMismatch("validation windows do not match spec")

    rng = np.random.default_rng(seed)
    weights = init_weights(spec, rng)
    state = AdamState.zeros_like(weights)
    history: list[tuple[float, float | None]] = []
    data = train_ds.data
    n = train_ds.samples

    for epoch in range(epochs):
        order = rng.permutation(n)
        running = 0.0
        for lo in range(0, n, spec.batch_size):
            idx = order[lo : lo + spec.batch_size]
            batch = np.ascontiguousarray(data[idx])
            try:
                loss, grads = loss_and_gradients(spec, weights, batch)
            except NonFiniteLoss as exc:
                raise NonFiniteLoss(
                    f"training diverged at epoch {epoch}: {exc}", epoch=epoch
                ) from exc
            weights, state = adam_step(weights, grads, state, spec.learning_rate)
            running += loss * len(idx)
        train_loss = running / n
        val_loss = (
            evaluate_loss(spec, weights, val_ds.data)
            if val_ds is not None and val_ds.samples
            else None
        )
        history.append((train_loss, val_loss))
        logger.info(
            "epoch %d/%d: train %.6f val %s", epoch + 1, epochs, train_loss,
            "n/a" if val_loss is None else f"{val_loss:.6f}",
        )

    return TrainedModel(
        spec=spec,
        weights=weights,
        norm=train_ds.norm,
        threshold=None,
        training_history=history,
    )


_PROBE_GRAD_FLOOR = 3e-7
_PROBE_KINK_MARGIN = 0.05


def _draw_probe(small: ModelSpec, rng: np.random.Generator):
    """Random weights and batch conditioned for finite differencing.

    A central difference at h=1e-5 in double precision carries a rounding
    floor of roughly ulp(loss)/2h ~ 1e-11, so a relative comparison is
    only meaningful at parameters whose gradient clears that floor.  Three
    constraints shape the draw:

    * matrix entries have |w| in [0.5, 1] of the Xavier limit, so the
      regularized presets put a deterministic floor under every matrix
      gradient;
    * the output head is drawn small, which keeps the data term of every
      upstream matrix gradient below that floor (no cancellation) and the
      reconstruction well under the probe targets U(0.25, 0.45), so the
      MAE kink at |r - x| = 0 is unreachable within +-h;
    * draws are rejected until the smallest analytic gradient (in
      practice a bias, which has no regularization floor) clears
      _PROBE_GRAD_FLOOR and the kink margin holds.
    """
    from .network import forward

    for _attempt in range(500):
        weights = {}
        for name in weight_names(small):
            shape = _param_shape(small, name)
            if name.endswith("_b"):
                b = np.zeros(shape)
                if name != "head_b":
                    hid = shape[0] // 4
                    b[hid : 2 * hid] = 1.0
                weights[name] = b
            else:
                scale = 0.25 if name == "head_W" else 1.0
                limit = scale * np.sqrt(6.0 / sum(shape))
                mag = rng.uniform(0.5, 1.0, shape) * limit
                sign = rng.integers(0, 2, shape) * 2.0 - 1.0
                weights[name] = mag * sign
        batch = rng.uniform(0.25, 0.45, (small.batch_size, small.timesteps, small.features))
        _loss, grads = loss_and_gradients(small, weights, batch)
        g_min = min(np.abs(g).min() for g in grads.values())
        if g_min < _PROBE_GRAD_FLOOR:
            continue
        recon, cache = forward(small, weights, batch)
        if np.abs(recon - batch).min() < _PROBE_KINK_MARGIN:
            continue
        return weights, batch, grads, cache
    raise RuntimeError("could not draw a well-conditioned gradient probe")


def _param_shape(spec: ModelSpec, name: str) -> tuple[int, ...]:
    if name == "head_W":
        return (spec.head_input, spec.features)
    if name == "head_b":
        return (spec.features,)
    prefix, kind = name.split("_")
    layers = spec.encoder if prefix.startswith("enc") else spec.decoder
    layer = layers[int(prefix[3:])]
    h = layer.hidden_size
    if kind == "Wx":
        return (layer.input_size, 4 * h)
    if kind == "Wh":
        return (h, 4 * h)
    return (4 * h,)


def _param_stage(spec: ModelSpec, name: str) -> int:
    """Stage index of a parameter: encoder layers, decoder layers, head."""
    if name.startswith("head"):
        return len(spec.encoder) + len(spec.decoder)
    layer = int(name.split("_")[0][3:])
    return layer if name.startswith("enc") else len(spec.encoder) + layer


def gradient_check(spec: ModelSpec, seed: int, h: float = 1e-5) -> float:
    """Compare analytic gradients with central finite differences.

    Builds the spec at reduced size (timesteps 8, hidden sizes halved) with
    a conditioned random probe (see _draw_probe), perturbs every parameter
    by +-h, and returns max |analytic - numeric| / max(|analytic|,
    |numeric|, 1e-12) over all parameters.

    Layers upstream of a perturbed parameter see unchanged inputs, so their
    cached activations are reused; the regularization term is re-evaluated
    incrementally for the one perturbed entry.  Both are exact re-orderings
    of the same loss, and keep the full sweep within the runtime budget.
    """
    if h <= 0:
        raise ValueError("h must be > 0")
    from .network import forward
    from ._backend import kernels

    small = reduced_spec(spec)
    rng = np.random.default_rng(seed)
    weights, batch, grads, cache = _draw_probe(small, rng)
    n_enc = len(small.encoder)
    n_dec = len(small.decoder)
    bsz, t_len = batch.shape[0], small.timesteps

    # cached stage inputs at the base point
    stage_inputs = [cache.enc[i][0] for i in range(n_enc)]
    stage_inputs.append(cache.bridged)
    stage_inputs += [cache.dec[i][0] for i in range(1, n_dec)]
    stage_inputs.append(cache.dec[-1][4])

    reg_base = regularization_loss(small, weights)
    head_w = weights["head_W"]
    head_b = weights["head_b"]

    def data_loss_from(stage: int) -> float:
        x = stage_inputs[stage]
        for i in range(min(stage, n_enc), n_enc):
            x = kernels.lstm_forward(
                x, weights[f"enc{i}_Wx"], weights[f"enc{i}_Wh"], weights[f"enc{i}_b"]
            )[0]
        if stage < n_enc:
            enc_h = x.shape[2]
            x = np.ascontiguousarray(
                np.broadcast_to(x[:, -1][:, None, :], (bsz, t_len, enc_h))
            )
        for i in range(max(stage - n_enc, 0), n_dec):
            x = kernels.lstm_forward(
                x, weights[f"dec{i}_Wx"], weights[f"dec{i}_Wh"], weights[f"dec{i}_b"]
            )[0]
        recon = x.reshape(bsz * t_len, -1) @ head_w + head_b
        diff = recon.reshape(batch.shape) - batch
        if small.loss is LossKind.MAE:
            return float(np.abs(diff).sum() / diff.size)
        return float((diff * diff).sum() / diff.size)

    factor = small.reg.factor
    reg_l1 = small.reg.kind is RegKind.L1

    def reg_term(name: str, orig: float, value: float) -> float:
        if small.reg.kind is RegKind.NONE or not is_weight_matrix(name):
            return reg_base
        if reg_l1:
            return reg_base + factor * (abs(value) - abs(orig))
        return reg_base + factor * (value * value - orig * orig)

    max_rel = 0.0
    for name in weight_names(small):
        stage = _param_stage(small, name)
        flat_w = weights[name].reshape(-1)
        flat_g = grads[name].reshape(-1)
        for i in range(flat_w.size):
            orig = flat_w[i]
            flat_w[i] = orig + h
            lp = data_loss_from(stage) + reg_term(name, orig, orig + h)
            flat_w[i] = orig - h
            lm = data_loss_from(stage) + reg_term(name, orig, orig - h)
            flat_w[i] = orig
            numeric = (lp - lm) / (2.0 * h)
            analytic = flat_g[i]
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-12)
            max_rel = max(max_rel, rel)
    return max_rel


__all__ = [
    "TrainedModel",
    "evaluate_loss",
    "gradient_check",
    "regularization_loss",
    "train",
]
