"""Patch extraction and scatter helpers behind the convolution ops.

Forward convolutions go through im2col so the inner loop is a single
BLAS matmul; backward passes reuse the extracted patches for the kernel
gradient and fold patch gradients back with k*k vectorized adds.
"""

from __future__ import annotations

import numpy as np

PAD_MODES = ("same_zero", "same_replicate", "valid")


def _pad_amounts(size: int, k: int, stride: int) -> tuple[int, int]:
    out = -(-size // stride)  # ceil
    total = max(0, (out - 1) * stride + k - size)
    lo = total // 2
    return lo, total - lo


def pad_input(x: np.ndarray, kh: int, kw: int, stride: int, padding: str):
    """Pad (B,H,W,C) per mode; returns (padded, (pt, pb, pl, pr))."""
    if padding == "valid":
        return x, (0, 0, 0, 0)
    pt, pb = _pad_amounts(x.shape[1], kh, stride)
    pl, pr = _pad_amounts(x.shape[2], kw, stride)
    mode = "constant" if padding == "same_zero" else "edge"
    xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)), mode=mode)
    return xp, (pt, pb, pl, pr)


def extract_patches(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """Sliding windows of a padded (B,H,W,C) array -> (B,Ho,Wo,kh,kw,C)."""
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    windows = windows[:, ::stride, ::stride]  # (B,Ho,Wo,C,kh,kw)
    return np.ascontiguousarray(windows.transpose(0, 1, 2, 4, 5, 3))


def fold_patches(
    dpatches: np.ndarray,
    padded_shape: tuple[int, ...],
    stride: int,
) -> np.ndarray:
    """Adjoint of extract_patches: scatter-add (B,Ho,Wo,kh,kw,C) windows."""
    B, Ho, Wo, kh, kw, C = dpatches.shape
    gxp = np.zeros(padded_shape, dtype=dpatches.dtype)
    for di in range(kh):
        for dj in range(kw):
            gxp[:, di : di + Ho * stride : stride, dj : dj + Wo * stride : stride, :] += dpatches[
                :, :, :, di, dj, :
            ]
    return gxp


def unpad_gradient(
    gxp: np.ndarray, pads: tuple[int, int, int, int], H: int, W: int, padding: str
) -> np.ndarray:
    """Map a padded-input gradient back to the input.

    Zero/valid padding just crops; replicate padding folds the border
    contributions into the nearest edge pixel (each padded cell was a
    copy of that pixel).
    """
    pt, pb, pl, pr = pads
    if padding != "same_replicate":
        return gxp[:, pt : pt + H, pl : pl + W, :]
    g = gxp.copy()
    if pl:
        g[:, :, pl, :] += g[:, :, :pl, :].sum(axis=2)
    if pr:
        g[:, :, pl + W - 1, :] += g[:, :, pl + W :, :].sum(axis=2)
    if pt:
        g[:, pt, :, :] += g[:, :pt, :, :].sum(axis=1)
    if pb:
        g[:, pt + H - 1, :, :] += g[:, pt + H :, :, :].sum(axis=1)
    return g[:, pt : pt + H, pl : pl + W, :]
