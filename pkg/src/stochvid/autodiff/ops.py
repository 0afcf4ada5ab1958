"""Differentiable primitives: elementwise math, shape ops, convolutions.

Each op computes its forward value with numpy and registers a vjp on the
active tape. Tensors are laid out channels-last: images are (B, H, W, C).
"""

from __future__ import annotations

import numpy as np

from .conv import (
    PAD_MODES,
    extract_patches,
    fold_patches,
    pad_input,
    unpad_gradient,
)
from .tensor import Tensor, as_tensor, record


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# elementwise
# ---------------------------------------------------------------------------

def relu(x) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.maximum(x.data, 0))
    mask = x.data > 0
    return record((x,), out, lambda g: (g * mask,))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    s = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(s)
    return record((x,), out, lambda g: (g * s * (1.0 - s),))


def tanh(x) -> Tensor:
    x = as_tensor(x)
    t = np.tanh(x.data)
    out = Tensor(t)
    return record((x,), out, lambda g: (g * (1.0 - t * t),))


def exp(x) -> Tensor:
    x = as_tensor(x)
    e = np.exp(x.data)
    out = Tensor(e)
    return record((x,), out, lambda g: (g * e,))


def log(x) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.log(x.data))
    data = x.data
    return record((x,), out, lambda g: (g / data,))


def square(x) -> Tensor:
    x = as_tensor(x)
    out = Tensor(x.data * x.data)
    data = x.data
    return record((x,), out, lambda g: (g * (2.0 * data),))


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "add")
    out = Tensor(a.data + b.data)
    return record((a, b), out, lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "sub")
    out = Tensor(a.data - b.data)
    return record((a, b), out, lambda g: (g, -g))


def multiply(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "multiply")
    out = Tensor(a.data * b.data)
    da, db = a.data, b.data
    return record((a, b), out, lambda g: (g * db, g * da))


def scale(x, s: float) -> Tensor:
    x = as_tensor(x)
    s = float(s)
    out = Tensor(x.data * s)
    return record((x,), out, lambda g: (g * s,))


def add_scalar(x, c: float) -> Tensor:
    x = as_tensor(x)
    out = Tensor(x.data + float(c))
    return record((x,), out, lambda g: (g,))


def add_bias(x, b) -> Tensor:
    """Add a per-channel bias (C,) to a (..., C) tensor."""
    x, b = as_tensor(x), as_tensor(b)
    if b.ndim != 1 or x.shape[-1] != b.shape[0]:
        raise ValueError(f"add_bias: bias {b.shape} does not match channels of {x.shape}")
    out = Tensor(x.data + b.data)
    axes = tuple(range(x.ndim - 1))
    return record((x, b), out, lambda g: (g, g.sum(axis=axes)))


def clamp_min(x, threshold: float) -> Tensor:
    """max(x, threshold); gradient passes only where x > threshold."""
    x = as_tensor(x)
    t = float(threshold)
    out = Tensor(np.maximum(x.data, t))
    mask = x.data > t
    return record((x,), out, lambda g: (g * mask,))


# ---------------------------------------------------------------------------
# shape ops
# ---------------------------------------------------------------------------

def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    shape = tuple(shape)
    out = Tensor(x.data.reshape(shape))
    orig = x.shape
    return record((x,), out, lambda g: (g.reshape(orig),))


def concat_channels(parts) -> Tensor:
    """Concatenate along the trailing (channel) axis."""
    parts = [as_tensor(p) for p in parts]
    lead = parts[0].shape[:-1]
    for p in parts[1:]:
        if p.shape[:-1] != lead:
            raise ValueError(
                f"concat_channels: leading dims differ, {parts[0].shape} vs {p.shape}"
            )
    out = Tensor(np.concatenate([p.data for p in parts], axis=-1))
    widths = [p.shape[-1] for p in parts]
    splits = np.cumsum(widths)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=-1))

    return record(tuple(parts), out, vjp)


def slice_channels(x, start: int, stop: int) -> Tensor:
    x = as_tensor(x)
    C = x.shape[-1]
    if not (0 <= start < stop <= C):
        raise ValueError(f"slice_channels: [{start}:{stop}] out of range for C={C}")
    out = Tensor(np.ascontiguousarray(x.data[..., start:stop]))
    shape = x.shape

    def vjp(g):
        gx = np.zeros(shape, dtype=g.dtype)
        gx[..., start:stop] = g
        return (gx,)

    return record((x,), out, vjp)


def tile_spatial(v, height: int, width: int) -> Tensor:
    """Broadcast a (B, C) vector to a (B, H, W, C) map."""
    v = as_tensor(v)
    if v.ndim != 2:
        raise ValueError(f"tile_spatial expects (B, C), got {v.shape}")
    out = Tensor(np.broadcast_to(v.data[:, None, None, :], (v.shape[0], height, width, v.shape[1])).copy())
    return record((v,), out, lambda g: (g.sum(axis=(1, 2)),))


def spatial_mean(x) -> Tensor:
    """Mean over the H, W axes of (B, H, W, C) -> (B, C)."""
    x = as_tensor(x)
    if x.ndim != 4:
        raise ValueError(f"spatial_mean expects (B,H,W,C), got {x.shape}")
    B, H, W, C = x.shape
    out = Tensor(x.data.mean(axis=(1, 2)))
    inv = 1.0 / (H * W)

    def vjp(g):
        return (np.broadcast_to(g[:, None, None, :] * inv, (B, H, W, C)).copy(),)

    return record((x,), out, vjp)


def reduce_sum(x) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.asarray(x.data.sum(), dtype=x.dtype))
    shape = x.shape
    return record((x,), out, lambda g: (np.broadcast_to(g, shape).copy(),))


def reduce_mean(x) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.asarray(x.data.mean(), dtype=x.dtype))
    shape, inv = x.shape, 1.0 / x.size
    return record((x,), out, lambda g: (np.broadcast_to(g * inv, shape).copy(),))


def upsample_nearest(x, factor: int = 2) -> Tensor:
    """Nearest-neighbor upsample of (B, H, W, C) by an integer factor."""
    x = as_tensor(x)
    if x.ndim != 4:
        raise ValueError(f"upsample_nearest expects (B,H,W,C), got {x.shape}")
    f = int(factor)
    out = Tensor(x.data.repeat(f, axis=1).repeat(f, axis=2))
    B, H, W, C = x.shape

    def vjp(g):
        return (g.reshape(B, H, f, W, f, C).sum(axis=(2, 4)),)

    return record((x,), out, vjp)


def nearest_resize(x, size: tuple[int, int]) -> Tensor:
    """Nearest-neighbor resize of (B, H, W, C) to (H2, W2), any ratio."""
    x = as_tensor(x)
    if x.ndim != 4:
        raise ValueError(f"nearest_resize expects (B,H,W,C), got {x.shape}")
    B, H, W, C = x.shape
    H2, W2 = size
    ri = (np.arange(H2) * H // H2).astype(np.intp)
    ci = (np.arange(W2) * W // W2).astype(np.intp)
    out = Tensor(np.ascontiguousarray(x.data[:, ri][:, :, ci]))

    def vjp(g):
        gx = np.zeros((B, H, W, C), dtype=g.dtype)
        np.add.at(gx, (slice(None), ri[:, None], ci[None, :]), g)
        return (gx,)

    return record((x,), out, vjp)


def softmax_channels(x) -> Tensor:
    """Softmax over the trailing axis, stabilized by max subtraction."""
    x = as_tensor(x)
    if x.shape[-1] < 1:
        raise ValueError(f"softmax_channels: empty trailing axis in {x.shape}")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(s)

    def vjp(g):
        dot = (g * s).sum(axis=-1, keepdims=True)
        return (s * (g - dot),)

    return record((x,), out, vjp)


# ---------------------------------------------------------------------------
# convolutions
# ---------------------------------------------------------------------------

def conv2d(x, kernel, stride: int = 1, padding: str = "same_zero") -> Tensor:
    """Cross-correlate (B,H,W,Cin) with (k,k,Cin,Cout).

    Output height is ceil(H/stride) for the same-* modes and
    (H-k)//stride + 1 for valid. Gradients are defined w.r.t. both the
    input and the kernel.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if x.ndim != 4 or kernel.ndim != 4:
        raise ValueError(f"conv2d expects (B,H,W,Cin) and (k,k,Cin,Cout), got {x.shape} and {kernel.shape}")
    kh, kw, cin, cout = kernel.shape
    if kh != kw or kh % 2 == 0:
        raise ValueError(f"conv2d: kernel must be square with odd extent, got {kernel.shape}")
    if x.shape[-1] != cin:
        raise ValueError(
            f"conv2d: input channels {x.shape} do not match kernel {kernel.shape}"
        )
    if stride < 1:
        raise ValueError(f"conv2d: stride must be >= 1, got {stride}")
    if padding not in PAD_MODES:
        raise ValueError(f"conv2d: unknown padding {padding!r}, expected one of {PAD_MODES}")

    B, H, W, _ = x.shape
    xp, pads = pad_input(x.data, kh, kw, stride, padding)
    patches = extract_patches(xp, kh, kw, stride)  # (B,Ho,Wo,kh,kw,Cin)
    _, Ho, Wo = patches.shape[:3]
    kmat = kernel.data.reshape(kh * kw * cin, cout)
    out_data = patches.reshape(-1, kh * kw * cin) @ kmat
    out = Tensor(out_data.reshape(B, Ho, Wo, cout))

    padded_shape = xp.shape

    def vjp(g):
        gmat = g.reshape(-1, cout)
        gk = (patches.reshape(-1, kh * kw * cin).T @ gmat).reshape(kernel.shape)
        dpatches = (gmat @ kmat.T).reshape(B, Ho, Wo, kh, kw, cin)
        gxp = fold_patches(dpatches, padded_shape, stride)
        gx = unpad_gradient(gxp, pads, H, W, padding)
        return (gx, gk)

    return record((x, kernel), out, vjp)


def apply_kernels(frame, kernels) -> Tensor:
    """Transform a frame by a bank of normalized motion kernels.

    frame: (B, H, W, C). kernels: (M, k, k) shared across the batch, or
    (B, M, k, k) per sample. Each kernel is correlated depthwise (same
    kernel for every color channel) with replicate padding, so a constant
    frame is a fixed point of any normalized kernel. Returns (M, B, H, W, C).
    """
    frame, kernels = as_tensor(frame), as_tensor(kernels)
    if frame.ndim != 4:
        raise ValueError(f"apply_kernels expects frame (B,H,W,C), got {frame.shape}")
    batched = kernels.ndim == 4
    if not batched and kernels.ndim != 3:
        raise ValueError(f"apply_kernels: kernels must be (M,k,k) or (B,M,k,k), got {kernels.shape}")
    kh, kw = kernels.shape[-2:]
    if kh != kw or kh % 2 == 0:
        raise ValueError(f"apply_kernels: kernels must be square and odd, got {kernels.shape}")

    B, H, W, C = frame.shape
    xp, pads = pad_input(frame.data, kh, kw, 1, "same_replicate")
    patches = extract_patches(xp, kh, kw, 1)  # (B,H,W,kh,kw,C)
    if batched:
        out_data = np.einsum("bmij,bhwijc->mbhwc", kernels.data, patches, optimize=True)
    else:
        out_data = np.einsum("mij,bhwijc->mbhwc", kernels.data, patches, optimize=True)
    out = Tensor(np.ascontiguousarray(out_data))

    padded_shape = xp.shape

    def vjp(g):
        if batched:
            gk = np.einsum("mbhwc,bhwijc->bmij", g, patches, optimize=True)
            dpatches = np.einsum("mbhwc,bmij->bhwijc", g, kernels.data, optimize=True)
        else:
            gk = np.einsum("mbhwc,bhwijc->mij", g, patches, optimize=True)
            dpatches = np.einsum("mbhwc,mij->bhwijc", g, kernels.data, optimize=True)
        gxp = fold_patches(np.ascontiguousarray(dpatches), padded_shape, 1)
        gx = unpad_gradient(gxp, pads, H, W, "same_replicate")
        return (gx, gk)

    return record((frame, kernels), out, vjp)


def composite(candidates, prev_frame, synthesized, masks) -> Tensor:
    """Per-pixel convex merge of motion candidates, the static previous
    frame, and the synthesized frame.

    candidates: (M, B, H, W, C); masks: (B, H, W, M+2) softmax weights,
    channel M weighting prev_frame and channel M+1 the synthesized frame.
    """
    candidates = as_tensor(candidates)
    prev_frame = as_tensor(prev_frame)
    synthesized = as_tensor(synthesized)
    masks = as_tensor(masks)
    M = candidates.shape[0]
    if masks.shape[-1] != M + 2:
        raise ValueError(
            f"composite: expected {M + 2} mask channels for {M} candidates, got {masks.shape}"
        )
    _same_shape(prev_frame, synthesized, "composite")

    mk = masks.data[..., :M]
    mp = masks.data[..., M : M + 1]
    ms = masks.data[..., M + 1 :]
    out_data = np.einsum("mbhwc,bhwm->bhwc", candidates.data, mk, optimize=True)
    out_data += prev_frame.data * mp + synthesized.data * ms
    out = Tensor(out_data)

    cdata, pdata, sdata = candidates.data, prev_frame.data, synthesized.data

    def vjp(g):
        gc = np.einsum("bhwc,bhwm->mbhwc", g, mk, optimize=True)
        gp = g * mp
        gs = g * ms
        gmk = np.einsum("bhwc,mbhwc->bhwm", g, cdata, optimize=True)
        gmp = (g * pdata).sum(axis=-1, keepdims=True)
        gms = (g * sdata).sum(axis=-1, keepdims=True)
        gmask = np.concatenate([gmk, gmp, gms], axis=-1)
        return (np.ascontiguousarray(gc), gp, gs, gmask)

    return record((candidates, prev_frame, synthesized, masks), out, vjp)
