"""Convolutional LSTM cell, composed from the primitive ops.

Gate layout along the output channel axis is (input, forget, candidate,
output). The forget-gate bias is initialized to +1 so fresh cells start
out remembering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .tensor import Tensor, as_tensor


@dataclass
class ConvLSTMParams:
    kernel: Tensor  # (k, k, Cin + Ch, 4*Ch)
    bias: Tensor    # (4*Ch,)

    @property
    def hidden_channels(self) -> int:
        return self.kernel.shape[-1] // 4


def init_conv_lstm(
    rng: np.random.Generator,
    in_channels: int,
    hidden_channels: int,
    kernel_size: int = 3,
    dtype=np.float32,
) -> ConvLSTMParams:
    fan_in = kernel_size * kernel_size * (in_channels + hidden_channels)
    std = np.sqrt(1.0 / fan_in)
    kernel = rng.normal(
        0.0, std, size=(kernel_size, kernel_size, in_channels + hidden_channels, 4 * hidden_channels)
    ).astype(dtype)
    bias = np.zeros(4 * hidden_channels, dtype=dtype)
    bias[hidden_channels : 2 * hidden_channels] = 1.0  # forget gate
    return ConvLSTMParams(Tensor(kernel, requires_grad=True), Tensor(bias, requires_grad=True))


def conv_lstm_cell(x, hidden, cell, params: ConvLSTMParams, padding: str = "same_zero"):
    """One step of a convolutional LSTM; returns (hidden', cell')."""
    x, hidden, cell = as_tensor(x), as_tensor(hidden), as_tensor(cell)
    if x.shape[:3] != hidden.shape[:3] or hidden.shape != cell.shape:
        raise ValueError(
            f"conv_lstm_cell: spatial dims disagree, input {x.shape}, "
            f"hidden {hidden.shape}, cell {cell.shape}"
        )
    ch = params.hidden_channels
    gates = ops.add_bias(
        ops.conv2d(ops.concat_channels([x, hidden]), params.kernel, 1, padding),
        params.bias,
    )
    i = ops.sigmoid(ops.slice_channels(gates, 0, ch))
    f = ops.sigmoid(ops.slice_channels(gates, ch, 2 * ch))
    g = ops.tanh(ops.slice_channels(gates, 2 * ch, 3 * ch))
    o = ops.sigmoid(ops.slice_channels(gates, 3 * ch, 4 * ch))
    cell_next = ops.add(ops.multiply(f, cell), ops.multiply(i, g))
    hidden_next = ops.multiply(o, ops.tanh(cell_next))
    return hidden_next, cell_next
