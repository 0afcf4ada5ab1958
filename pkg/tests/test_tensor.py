import numpy as np
import pytest

from stochvid.autodiff import GradientTape, Tensor, ops


def test_tensor_defaults_to_float32():
    t = Tensor([1, 2, 3])
    assert t.dtype == np.float32
    assert t.grad is None
    assert not t.requires_grad


def test_float64_preserved():
    t = Tensor(np.zeros(3, dtype=np.float64))
    assert t.dtype == np.float64


def test_no_recording_without_tape():
    x = Tensor([1.0, 2.0], requires_grad=True)
    y = ops.square(x)
    assert not y.requires_grad  # nothing recorded, nothing propagates


def test_backward_accumulates_into_leaves():
    x = Tensor([2.0, 3.0], requires_grad=True)
    with GradientTape() as tape:
        loss = ops.reduce_sum(ops.square(x))
        tape.backward(loss)
    np.testing.assert_allclose(x.grad, [4.0, 6.0], rtol=1e-6)


def test_backward_twice_doubles_every_gradient():
    x = Tensor([1.5, -0.5], requires_grad=True)
    with GradientTape() as tape:
        loss = ops.reduce_sum(ops.multiply(x, x))
    tape.backward(loss)
    first = x.grad.copy()
    tape.backward(loss)
    np.testing.assert_allclose(x.grad, 2.0 * first, rtol=1e-6)


def test_reused_intermediate_accumulates_once_per_use():
    # y = x^2 used twice: loss = sum(y) + sum(y) => dloss/dx = 4x
    x = Tensor([1.0, 2.0], requires_grad=True)
    with GradientTape() as tape:
        y = ops.square(x)
        loss = ops.add(ops.reduce_sum(y), ops.reduce_sum(y))
        tape.backward(loss)
    np.testing.assert_allclose(x.grad, [4.0, 8.0], rtol=1e-6)


def test_backward_requires_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with GradientTape() as tape:
        y = ops.square(x)
        with pytest.raises(ValueError):
            tape.backward(y)


def test_reverse_order_is_execution_order_reversed():
    # d/dx of sigmoid(square(x)) needs square's vjp to run after sigmoid's
    x = Tensor([0.7], requires_grad=True)
    with GradientTape() as tape:
        loss = ops.reduce_sum(ops.sigmoid(ops.square(x)))
        tape.backward(loss)
    s = 1.0 / (1.0 + np.exp(-0.49))
    np.testing.assert_allclose(x.grad, [s * (1 - s) * 1.4], rtol=1e-6)


def test_detach_blocks_gradient():
    x = Tensor([3.0], requires_grad=True)
    with GradientTape() as tape:
        loss = ops.reduce_sum(ops.square(x.detach()))
        tape.backward(loss)
    assert x.grad is None
