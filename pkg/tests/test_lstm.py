import numpy as np
import pytest

from stochvid.autodiff import ConvLSTMParams, Tensor, conv_lstm_cell, init_conv_lstm


def zero_params(cin, ch, k=3):
    kernel = Tensor(np.zeros((k, k, cin + ch, 4 * ch)), requires_grad=True)
    bias = Tensor(np.zeros(4 * ch), requires_grad=True)
    return ConvLSTMParams(kernel, bias)


def test_zero_network_emits_zero_state():
    p = zero_params(1, 1)
    x = Tensor(np.zeros((1, 2, 2, 1)))
    h = Tensor(np.zeros((1, 2, 2, 1)))
    c = Tensor(np.zeros((1, 2, 2, 1)))
    h2, c2 = conv_lstm_cell(x, h, c, p)
    np.testing.assert_array_equal(h2.data, np.zeros((1, 2, 2, 1)))
    np.testing.assert_array_equal(c2.data, np.zeros((1, 2, 2, 1)))


def test_saturated_forget_gate_preserves_cell():
    ch = 1
    p = zero_params(1, ch)
    p.bias.data[ch : 2 * ch] = 20.0  # forget gate wide open
    x = Tensor(np.zeros((1, 2, 2, 1)))
    h = Tensor(np.zeros((1, 2, 2, 1)))
    c = Tensor(np.full((1, 2, 2, 1), 0.7))
    _, c2 = conv_lstm_cell(x, h, c, p)
    np.testing.assert_allclose(c2.data, c.data, atol=1e-7)


def test_forward_matches_scalar_loop_oracle():
    rng = np.random.default_rng(9)
    B, H, W, cin, ch, k = 1, 2, 2, 1, 1, 3
    params = init_conv_lstm(rng, cin, ch, k, dtype=np.float64)
    params.kernel.data = rng.normal(0, 0.5, size=params.kernel.shape)
    params.bias.data = rng.normal(0, 0.5, size=params.bias.shape)
    x = rng.normal(size=(B, H, W, cin))
    h = rng.normal(size=(B, H, W, ch))
    c = rng.normal(size=(B, H, W, ch))

    h2, c2 = conv_lstm_cell(Tensor(x), Tensor(h), Tensor(c), params)

    # scalar recomputation of the gate equations, zero padding
    xh = np.concatenate([x, h], axis=-1)
    pad = k // 2
    xp = np.pad(xh, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    for i in range(H):
        for j in range(W):
            gates = np.zeros(4 * ch)
            for di in range(k):
                for dj in range(k):
                    for cc in range(cin + ch):
                        gates += xp[0, i + di, j + dj, cc] * params.kernel.data[di, dj, cc]
            gates += params.bias.data
            gi = 1 / (1 + np.exp(-gates[0]))
            gf = 1 / (1 + np.exp(-gates[1]))
            gg = np.tanh(gates[2])
            go = 1 / (1 + np.exp(-gates[3]))
            c_ref = gf * c[0, i, j, 0] + gi * gg
            h_ref = go * np.tanh(c_ref)
            assert c2.data[0, i, j, 0] == pytest.approx(c_ref, abs=1e-6)
            assert h2.data[0, i, j, 0] == pytest.approx(h_ref, abs=1e-6)


def test_mismatched_spatial_dims_rejected():
    p = zero_params(1, 1)
    x = Tensor(np.zeros((1, 4, 4, 1)))
    h = Tensor(np.zeros((1, 2, 2, 1)))
    with pytest.raises(ValueError):
        conv_lstm_cell(x, h, h, p)


def test_forget_bias_initialized_to_one():
    p = init_conv_lstm(np.random.default_rng(0), 2, 3)
    np.testing.assert_array_equal(p.bias.data[3:6], np.ones(3))
    assert p.bias.data[:3].sum() == 0.0
