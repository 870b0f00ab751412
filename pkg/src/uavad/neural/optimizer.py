"""Adam optimizer (beta1=0.9, beta2=0.999, eps=1e-8, bias-corrected)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """Per-parameter first/second moment estimates and the step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, weights: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(w) for k, w in weights.items()},
            v={k: np.zeros_like(w) for k, w in weights.items()},
            t=0,
        )


def adam_step(
    weights: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One Adam update; pure (returns fresh weights and state)."""
    if set(weights) != set(grads) or set(weights) != set(state.m):
        raise ShapeMismatch("weights, grads, and state must share parameter names")
    t = state.t + 1
    bc1 = 1.0 - BETA1**t
    bc2 = 1.0 - BETA2**t
    new_w: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for name, w in weights.items():
        g = grads[name]
        if g.shape != w.shape or state.m[name].shape != w.shape:
            raise ShapeMismatch(f"{name}: gradient/state shape mismatch")
        m = BETA1 * state.m[name] + (1.0 - BETA1) * g
        v = BETA2 * state.v[name] + (1.0 - BETA2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        new_w[name] = w - lr * m_hat / (np.sqrt(v_hat) + EPSILON)
        new_m[name] = m
        new_v[name] = v
    return new_w, AdamState(new_m, new_v, t)
