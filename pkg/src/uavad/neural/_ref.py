"""Pure-NumPy LSTM layer kernels (fallback backend).

Interface contract shared with the compiled backend in ``_core``:

    lstm_forward(x, wx, wh, b) -> (h_out, gates, cells, tanh_c)
    lstm_backward(x, wx, wh, gates, cells, tanh_c, h_out, d_h)
        -> (dx, dwx, dwh, db)

Shapes: x is (B, T, I) float64 C-contiguous; wx (I, 4H); wh (H, 4H);
b (4H,).  Gate layout along the 4H axis is [input, forget, candidate,
output]; candidate and cell output use tanh, the gates are logistic.
Initial hidden and cell states are zero.  Both backends hoist the
input-to-gate products into single matrix multiplies so their arithmetic
matches step for step.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # two-branch form avoids overflow in exp for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def lstm_forward(x, wx, wh, b):
    bsz, t_len, _ = x.shape
    hid = wh.shape[0]
    gates = np.empty((bsz, t_len, 4 * hid))
    cells = np.empty((bsz, t_len, hid))
    tanh_c = np.empty((bsz, t_len, hid))
    h_out = np.empty((bsz, t_len, hid))

    xw = x.reshape(bsz * t_len, -1) @ wx
    xw = xw.reshape(bsz, t_len, 4 * hid)

    h_prev = np.zeros((bsz, hid))
    c_prev = np.zeros((bsz, hid))
    for t in range(t_len):
        z = xw[:, t, :] + h_prev @ wh + b
        gi = _sigmoid(z[:, :hid])
        gf = _sigmoid(z[:, hid : 2 * hid])
        gg = np.tanh(z[:, 2 * hid : 3 * hid])
        go = _sigmoid(z[:, 3 * hid :])
        c = gf * c_prev + gi * gg
        tc = np.tanh(c)
        h = go * tc
        gates[:, t, :hid] = gi
        gates[:, t, hid : 2 * hid] = gf
        gates[:, t, 2 * hid : 3 * hid] = gg
        gates[:, t, 3 * hid :] = go
        cells[:, t] = c
        tanh_c[:, t] = tc
        h_out[:, t] = h
        h_prev = h
        c_prev = c
    return h_out, gates, cells, tanh_c


def lstm_backward(x, wx, wh, gates, cells, tanh_c, h_out, d_h):
    bsz, t_len, _ = x.shape
    hid = wh.shape[0]
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * hid)
    dz_all = np.empty((bsz, t_len, 4 * hid))

    dh_next = np.zeros((bsz, hid))
    dc_next = np.zeros((bsz, hid))
    for t in range(t_len - 1, -1, -1):
        gi = gates[:, t, :hid]
        gf = gates[:, t, hid : 2 * hid]
        gg = gates[:, t, 2 * hid : 3 * hid]
        go = gates[:, t, 3 * hid :]
        tc = tanh_c[:, t]

        dh = d_h[:, t] + dh_next
        dc = dc_next + dh * go * (1.0 - tc * tc)
        c_prev = cells[:, t - 1] if t > 0 else 0.0

        dz = dz_all[:, t]
        dz[:, :hid] = (dc * gg) * gi * (1.0 - gi)
        dz[:, hid : 2 * hid] = (dc * c_prev) * gf * (1.0 - gf)
        dz[:, 2 * hid : 3 * hid] = (dc * gi) * (1.0 - gg * gg)
        dz[:, 3 * hid :] = (dh * tc) * go * (1.0 - go)

        if t > 0:
            dwh += h_out[:, t - 1].T @ dz
        db += dz.sum(axis=0)
        dh_next = dz @ wh.T
        dc_next = dc * gf

    dz_flat = dz_all.reshape(bsz * t_len, 4 * hid)
    dx = (dz_flat @ wx.T).reshape(x.shape)
    dwx = x.reshape(bsz * t_len, -1).T @ dz_flat
    return dx, dwx, dwh, db
