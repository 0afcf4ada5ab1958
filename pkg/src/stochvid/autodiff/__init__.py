from . import ops
from .adam import Adam, AdamState, adam_step
from .gradcheck import GradCheckReport, grad_check
from .lstm import ConvLSTMParams, conv_lstm_cell, init_conv_lstm
from .tensor import GradientTape, Tensor, as_tensor

__all__ = [
    "Adam",
    "AdamState",
    "ConvLSTMParams",
    "GradCheckReport",
    "GradientTape",
    "Tensor",
    "adam_step",
    "as_tensor",
    "conv_lstm_cell",
    "grad_check",
    "init_conv_lstm",
    "ops",
]
