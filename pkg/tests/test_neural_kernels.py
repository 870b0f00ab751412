"""Backend agreement and batch invariance for the LSTM layer kernels."""

import numpy as np
import pytest

from uavad.neural import backend_name, get_kernels


def make_layer(rng, inp, hid):
    wx = rng.normal(0, 0.3, (inp, 4 * hid))
    wh = rng.normal(0, 0.3, (hid, 4 * hid))
    b = rng.normal(0, 0.1, 4 * hid)
    return wx, wh, b


def both_backends():
    try:
        compiled = get_kernels("compiled")
    except ImportError:
        pytest.skip("compiled backend not built")
    return compiled, get_kernels("python")


@pytest.mark.parametrize("shape", [(1, 1, 1, 1), (5, 7, 3, 6), (4, 12, 2, 9)])
def test_forward_matches_reference(shape):
    compiled, ref = both_backends()
    bsz, t_len, inp, hid = shape
    rng = np.random.default_rng(42)
    x = np.ascontiguousarray(rng.normal(size=(bsz, t_len, inp)))
    wx, wh, b = make_layer(rng, inp, hid)
    for a, r in zip(compiled.lstm_forward(x, wx, wh, b), ref.lstm_forward(x, wx, wh, b)):
        np.testing.assert_allclose(a, r, rtol=0, atol=1e-13)


@pytest.mark.parametrize("shape", [(1, 1, 1, 1), (5, 7, 3, 6), (4, 12, 2, 9)])
def test_backward_matches_reference(shape):
    compiled, ref = both_backends()
    bsz, t_len, inp, hid = shape
    rng = np.random.default_rng(43)
    x = np.ascontiguousarray(rng.normal(size=(bsz, t_len, inp)))
    wx, wh, b = make_layer(rng, inp, hid)
    d_h = np.ascontiguousarray(rng.normal(size=(bsz, t_len, hid)))
    fwd_c = compiled.lstm_forward(x, wx, wh, b)
    fwd_r = ref.lstm_forward(x, wx, wh, b)
    out_c = compiled.lstm_backward(x, wx, wh, fwd_c[1], fwd_c[2], fwd_c[3], fwd_c[0], d_h)
    out_r = ref.lstm_backward(x, wx, wh, fwd_r[1], fwd_r[2], fwd_r[3], fwd_r[0], d_h)
    for a, r in zip(out_c, out_r):
        np.testing.assert_allclose(a, r, rtol=0, atol=1e-12)


def test_forward_batch_invariance():
    # each batch row's output must not depend on the rest of the batch
    kernels = get_kernels()
    rng = np.random.default_rng(44)
    x = np.ascontiguousarray(rng.normal(size=(4, 10, 3)))
    wx, wh, b = make_layer(rng, 3, 8)
    full = kernels.lstm_forward(x, wx, wh, b)[0]
    for i in range(4):
        single = kernels.lstm_forward(np.ascontiguousarray(x[i : i + 1]), wx, wh, b)[0]
        assert np.abs(single[0] - full[i]).max() <= 1e-12


def test_backend_name_known():
    assert backend_name() in ("compiled", "python")
