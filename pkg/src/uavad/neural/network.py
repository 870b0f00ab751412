"""Forward pass, loss, and backpropagation through the autoencoder.

The reconstruction pipeline is: encoder LSTM stack (final layer emits its
last hidden state), repeat bridge, decoder LSTM stack, then one affine map
applied independently at every timestep (linear output, since targets such
as attitude deltas are unbounded).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteLoss, ShapeMismatch
from ..features import NormParams
from ._backend import kernels
from .specs import LossKind, ModelSpec, RegKind, is_weight_matrix, weight_names


@dataclass
class TrainedModel:
    """Model spec plus learned weights, normalization, and threshold."""

    spec: ModelSpec
    weights: dict[str, np.ndarray]
    norm: NormParams | None
    threshold: float | None = None
    training_history: list[tuple[float, float | None]] = field(default_factory=list)


@dataclass
class ForwardCache:
    """Per-layer activations kept for backpropagation."""

    enc: list[tuple]
    dec: list[tuple]
    bridged: np.ndarray


def _check_batch(spec: ModelSpec, batch: np.ndarray):
    if batch.ndim != 3 or batch.shape[1] != spec.timesteps or batch.shape[2] != spec.features:
        raise ShapeMismatch(
            f"batch shape {batch.shape} does not match "
            f"(B, {spec.timesteps}, {spec.features})"
        )


def _run_lstm_stack(layers, weights, prefix, x):
    caches = []
    for i, _layer in enumerate(layers):
        wx = weights[f"{prefix}{i}_Wx"]
        wh = weights[f"{prefix}{i}_Wh"]
        b = weights[f"{prefix}{i}_b"]
        h_out, gates, cells, tanh_c = kernels.lstm_forward(x, wx, wh, b)
        caches.append((x, gates, cells, tanh_c, h_out))
        x = h_out
    return x, caches


def forward(spec: ModelSpec, weights: dict[str, np.ndarray], batch: np.ndarray):
    """Reconstruct a batch; returns (reconstruction, cache)."""
    batch = np.ascontiguousarray(batch, dtype=np.float64)
    _check_batch(spec, batch)
    bsz, t_len = batch.shape[0], spec.timesteps

    enc_out, enc_caches = _run_lstm_stack(spec.encoder, weights, "enc", batch)
    encoding = enc_out[:, -1, :]
    bridged = np.ascontiguousarray(
        np.broadcast_to(encoding[:, None, :], (bsz, t_len, encoding.shape[1]))
    )
    dec_out, dec_caches = _run_lstm_stack(spec.decoder, weights, "dec", bridged)

    head_w = weights["head_W"]
    head_b = weights["head_b"]
    recon = dec_out.reshape(bsz * t_len, -1) @ head_w + head_b
    recon = recon.reshape(bsz, t_len, spec.features)
    return recon, ForwardCache(enc_caches, dec_caches, bridged)


def model_forward(model: TrainedModel, batch: np.ndarray):
    return forward(model.spec, model.weights, batch)


def _data_loss(spec: ModelSpec, recon, target):
    diff = recon - target
    n = diff.size
    if spec.loss is LossKind.MAE:
        return float(np.abs(diff).sum() / n), np.sign(diff) / n
    return float((diff * diff).sum() / n), (2.0 / n) * diff


def regularization_loss(spec: ModelSpec, weights) -> float:
    if spec.reg.kind is RegKind.NONE:
        return 0.0
    total = 0.0
    for name in weight_names(spec):
        if not is_weight_matrix(name):
            continue
        w = weights[name]
        total += np.abs(w).sum() if spec.reg.kind is RegKind.L1 else (w * w).sum()
    return spec.reg.factor * float(total)


def _add_regularization_grads(spec: ModelSpec, weights, grads):
    if spec.reg.kind is RegKind.NONE:
        return
    for name, g in grads.items():
        if not is_weight_matrix(name):
            continue
        w = weights[name]
        if spec.reg.kind is RegKind.L1:
            g += spec.reg.factor * np.sign(w)
        else:
            g += (2.0 * spec.reg.factor) * w


def loss_only(spec: ModelSpec, weights, batch) -> float:
    """Training objective without gradients (finite-difference probe)."""
    recon, _ = forward(spec, weights, batch)
    data_loss, _ = _data_loss(spec, recon, batch)
    return data_loss + regularization_loss(spec, weights)


def loss_and_gradients(spec: ModelSpec, weights, batch):
    """Training loss and its gradient for every parameter (BPTT)."""
    batch = np.ascontiguousarray(batch, dtype=np.float64)
    recon, cache = forward(spec, weights, batch)
    data_loss, d_recon = _data_loss(spec, recon, batch)
    loss = data_loss + regularization_loss(spec, weights)
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"loss diverged to {loss!r}")

    bsz, t_len = batch.shape[0], spec.timesteps
    grads: dict[str, np.ndarray] = {}

    dec_out = cache.dec[-1][4]
    flat_out = dec_out.reshape(bsz * t_len, -1)
    flat_dr = d_recon.reshape(bsz * t_len, -1)
    grads["head_W"] = flat_out.T @ flat_dr
    grads["head_b"] = flat_dr.sum(axis=0)
    d_cur = np.ascontiguousarray(
        (flat_dr @ weights["head_W"].T).reshape(bsz, t_len, -1)
    )

    for i in range(len(spec.decoder) - 1, -1, -1):
        x_in, gates, cells, tanh_c, h_out = cache.dec[i]
        dx, dwx, dwh, db = kernels.lstm_backward(
            x_in, weights[f"dec{i}_Wx"], weights[f"dec{i}_Wh"],
            gates, cells, tanh_c, h_out, d_cur,
        )
        grads[f"dec{i}_Wx"] = dwx
        grads[f"dec{i}_Wh"] = dwh
        grads[f"dec{i}_b"] = db
        d_cur = dx

    # the bridge tiled the encoding T times, so its gradient is the sum
    d_encoding = d_cur.sum(axis=1)
    top = len(spec.encoder) - 1
    d_top = np.zeros_like(cache.enc[top][4])
    d_top[:, -1, :] = d_encoding
    d_cur = d_top
    for i in range(top, -1, -1):
        x_in, gates, cells, tanh_c, h_out = cache.enc[i]
        dx, dwx, dwh, db = kernels.lstm_backward(
            x_in, weights[f"enc{i}_Wx"], weights[f"enc{i}_Wh"],
            gates, cells, tanh_c, h_out, d_cur,
        )
        grads[f"enc{i}_Wx"] = dwx
        grads[f"enc{i}_Wh"] = dwh
        grads[f"enc{i}_b"] = db
        d_cur = dx

    _add_regularization_grads(spec, weights, grads)
    return loss, grads


def reconstruction_errors(spec: ModelSpec, weights, windows: np.ndarray) -> np.ndarray:
    """Per-window reconstruction error (MAE or MSE mean; no reg term).

    Windows are scored in fixed chunks of the spec's batch size, so a given
    array always produces the same errors.
    """
    windows = np.ascontiguousarray(windows, dtype=np.float64)
    if windows.ndim != 3 or windows.shape[1:] != (spec.timesteps, spec.features):
        raise ShapeMismatch(
            f"window array shape {windows.shape} does not match "
            f"(N, {spec.timesteps}, {spec.features})"
        )
    errors = np.empty(windows.shape[0])
    for lo in range(0, windows.shape[0], spec.batch_size):
        chunk = windows[lo : lo + spec.batch_size]
        recon, _ = forward(spec, weights, chunk)
        diff = recon - chunk
        if spec.loss is LossKind.MAE:
            errors[lo : lo + spec.batch_size] = np.abs(diff).mean(axis=(1, 2))
        else:
            errors[lo : lo + spec.batch_size] = (diff * diff).mean(axis=(1, 2))
    return errors
