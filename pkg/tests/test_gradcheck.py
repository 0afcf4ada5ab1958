import numpy as np
import pytest

from stochvid.autodiff import GradientTape, Tensor, grad_check, ops
from stochvid.autodiff.gradcheck import _rel_error
from stochvid.autodiff.lstm import conv_lstm_cell, init_conv_lstm


def rand_t(rng, shape, lo=-1.0, hi=1.0):
    return Tensor(rng.uniform(lo, hi, size=shape), requires_grad=True)


def test_conv2d_gradcheck_passes():
    rng = np.random.default_rng(0)
    x = rand_t(rng, (1, 5, 5, 2))
    k = rand_t(rng, (3, 3, 2, 2))
    report = grad_check(lambda a, b: ops.conv2d(a, b, 1, "same_zero"), [x, k])
    assert not report.failed, report.reason
    assert report.max_rel_error <= 1e-5


def test_linear_op_agrees_to_machine_level():
    rng = np.random.default_rng(1)
    x = rand_t(rng, (7,))
    report = grad_check(lambda a: ops.scale(a, 1.7), [x])
    assert report.max_rel_error <= 1e-10


def test_corrupted_gradient_is_flagged():
    def doubled_square(x):
        # forward of square with a vjp that is off by 2x
        from stochvid.autodiff.tensor import record

        out = Tensor(x.data * x.data)
        data = x.data
        return record((x,), out, lambda g: (g * 4.0 * data,))

    rng = np.random.default_rng(2)
    x = rand_t(rng, (5,), lo=0.5, hi=1.5)
    report = grad_check(doubled_square, [x], tolerance=1e-5)
    assert report.failed
    assert report.max_rel_error == pytest.approx(1.0, rel=0.05)


def test_nonfinite_gradient_reported_as_failure():
    rng = np.random.default_rng(3)
    x = rand_t(rng, (3,), lo=-0.5, hi=0.5)  # log of negatives -> nan
    with np.errstate(invalid="ignore"):
        report = grad_check(lambda a: ops.log(a), [x])
    assert report.failed
    assert "non-finite" in report.reason


def test_rel_error_helper_handles_zeros():
    assert _rel_error(np.zeros(3), np.zeros(3)) == 0.0


OP_CASES = [
    ("relu", lambda x: ops.relu(x), [(2, 3)], (0.1, 1.0)),
    ("sigmoid", lambda x: ops.sigmoid(x), [(2, 3)], (-2.0, 2.0)),
    ("tanh", lambda x: ops.tanh(x), [(4,)], (-2.0, 2.0)),
    ("exp", lambda x: ops.exp(x), [(3, 2)], (-1.0, 1.0)),
    ("log", lambda x: ops.log(x), [(5,)], (0.5, 2.0)),
    ("square", lambda x: ops.square(x), [(4,)], (-2.0, 2.0)),
    ("add", lambda a, b: ops.add(a, b), [(3, 2), (3, 2)], (-1.0, 1.0)),
    ("sub", lambda a, b: ops.sub(a, b), [(3, 2), (3, 2)], (-1.0, 1.0)),
    ("multiply", lambda a, b: ops.multiply(a, b), [(2, 4), (2, 4)], (-1.0, 1.0)),
    ("scale", lambda x: ops.scale(x, -0.37), [(6,)], (-1.0, 1.0)),
    ("add_scalar", lambda x: ops.add_scalar(x, 2.5), [(4,)], (-1.0, 1.0)),
    ("add_bias", lambda x, b: ops.add_bias(x, b), [(2, 2, 2, 3), (3,)], (-1.0, 1.0)),
    ("clamp_min", lambda x: ops.clamp_min(x, 0.1), [(8,)], (-1.0, 1.0)),
    ("reshape", lambda x: ops.reshape(x, (6,)), [(2, 3)], (-1.0, 1.0)),
    ("concat", lambda a, b: ops.concat_channels([a, b]), [(1, 2, 2, 2), (1, 2, 2, 1)], (-1.0, 1.0)),
    ("slice", lambda x: ops.slice_channels(x, 1, 3), [(1, 2, 2, 4)], (-1.0, 1.0)),
    ("tile_spatial", lambda v: ops.tile_spatial(v, 3, 2), [(2, 2)], (-1.0, 1.0)),
    ("spatial_mean", lambda x: ops.spatial_mean(x), [(2, 3, 3, 2)], (-1.0, 1.0)),
    ("reduce_sum", lambda x: ops.reduce_sum(x), [(3, 3)], (-1.0, 1.0)),
    ("reduce_mean", lambda x: ops.reduce_mean(x), [(3, 3)], (-1.0, 1.0)),
    ("upsample", lambda x: ops.upsample_nearest(x, 2), [(1, 2, 2, 2)], (-1.0, 1.0)),
    ("resize_down", lambda x: ops.nearest_resize(x, (2, 2)), [(1, 4, 4, 1)], (-1.0, 1.0)),
    ("resize_up", lambda x: ops.nearest_resize(x, (5, 5)), [(1, 2, 2, 1)], (-1.0, 1.0)),
    ("softmax", lambda x: ops.softmax_channels(x), [(2, 2, 2, 3)], (-2.0, 2.0)),
    (
        "conv_strided",
        lambda x, k: ops.conv2d(x, k, 2, "same_replicate"),
        [(1, 5, 5, 2), (3, 3, 2, 2)],
        (-1.0, 1.0),
    ),
    ("conv_valid", lambda x, k: ops.conv2d(x, k, 1, "valid"), [(1, 4, 4, 1), (3, 3, 1, 2)], (-1.0, 1.0)),
    ("apply_kernels", lambda f, k: ops.apply_kernels(f, k), [(1, 4, 4, 2), (1, 2, 3, 3)], (0.0, 1.0)),
    (
        "composite",
        lambda c, p, s, m: ops.composite(c, p, s, ops.softmax_channels(m)),
        [(2, 1, 3, 3, 2), (1, 3, 3, 2), (1, 3, 3, 2), (1, 3, 3, 4)],
        (-1.0, 1.0),
    ),
]


@pytest.mark.parametrize("name,fn,shapes,bounds", OP_CASES, ids=[c[0] for c in OP_CASES])
def test_every_primitive_gradchecks(name, fn, shapes, bounds):
    rng = np.random.default_rng(hash(name) % 2**32)
    for trial in range(5):
        inputs = [rand_t(rng, s, *bounds) for s in shapes]
        report = grad_check(fn, inputs, projection_seed=trial)
        assert not report.failed, f"{name} trial {trial}: {report.reason}"


def test_conv_lstm_cell_gradcheck():
    rng = np.random.default_rng(12)
    params = init_conv_lstm(rng, 1, 1, 3, dtype=np.float64)
    params.kernel.requires_grad = True
    params.bias.requires_grad = True
    x = rand_t(rng, (1, 2, 2, 1))
    h = rand_t(rng, (1, 2, 2, 1))
    c = rand_t(rng, (1, 2, 2, 1))

    def cell_h(xi, hi, ci, ker, bia):
        from stochvid.autodiff.lstm import ConvLSTMParams

        h2, c2 = conv_lstm_cell(xi, hi, ci, ConvLSTMParams(ker, bia))
        return ops.add(h2, c2)

    report = grad_check(cell_h, [x, h, c, params.kernel, params.bias])
    assert not report.failed, report.reason


def test_reparameterization_gradient_identities():
    # z = mu + exp(log_sigma) * eps: dL/dmu == dL/dz, dL/dlog_sigma == dL/dz * eps * sigma
    rng = np.random.default_rng(4)
    mu = Tensor(rng.normal(size=(2, 2)), requires_grad=True)
    log_sigma = Tensor(rng.normal(size=(2, 2)) * 0.3, requires_grad=True)
    eps = rng.normal(size=(2, 2))
    proj = rng.normal(size=(2, 2))
    with GradientTape() as tape:
        z = ops.add(mu, ops.multiply(ops.exp(log_sigma), Tensor(eps)))
        loss = ops.reduce_sum(ops.multiply(z, Tensor(proj)))
        tape.backward(loss)
    np.testing.assert_allclose(mu.grad, proj, rtol=1e-6)
    np.testing.assert_allclose(log_sigma.grad, proj * eps * np.exp(log_sigma.data), rtol=1e-6)
