"""Approximate posterior over the video-level latent.

A convolutional tower reads the whole clip (context and future frames
concatenated on channels) and emits 8x8 mean / log-standard-deviation
maps. Sampling uses the reparameterization z = mu + exp(log_sigma) * eps
so gradients reach the tower but never the noise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, ops

LATENT_SIZE = 8
MIN_LOG_SIGMA = -5.0
TOWER_WIDTHS = (32, 64, 128, 256)


class LatentMode(enum.Enum):
    TIME_INVARIANT = "time_invariant"
    TIME_VARIANT = "time_variant"


@dataclass
class PosteriorParams:
    mu: Tensor         # (B, 8, 8, Cz)
    log_sigma: Tensor  # (B, 8, 8, Cz), clamped at MIN_LOG_SIGMA


@dataclass
class LatentSample:
    z: Tensor
    source: str                    # "posterior" | "prior"
    frame_index: int | None = None  # None marks a whole-video draw


@dataclass
class InferenceConfig:
    frame_size: int = 64
    frame_count: int = 4          # full video length, context + future
    in_channels: int = 3
    latent_channels: int = 1
    conv_kernel: int = 3
    min_log_sigma: float = MIN_LOG_SIGMA

    def __post_init__(self):
        size = self.frame_size
        if size < LATENT_SIZE or size & (size - 1):
            raise ValueError(f"frame_size must be a power of two >= {LATENT_SIZE}, got {size}")

    @property
    def num_stages(self) -> int:
        return int(np.log2(self.frame_size // LATENT_SIZE))

    @property
    def stage_channels(self) -> tuple[int, ...]:
        n = self.num_stages
        if n == 0:
            return (TOWER_WIDTHS[0],)  # single stride-1 stage keeps the tower nonempty
        return TOWER_WIDTHS[:n]


class InferenceNet:
    """q(z | all frames): stride-2 tower down to 8x8 plus 1x1 heads."""

    def __init__(self, config: InferenceConfig, rng: np.random.Generator, dtype=np.float32):
        self.config = config
        self.params: dict[str, Tensor] = {}
        k = config.conv_kernel
        cin = config.in_channels * config.frame_count
        for i, cout in enumerate(config.stage_channels):
            fan_in = k * k * cin
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(k, k, cin, cout)).astype(dtype)
            self.params[f"tower.{i}.kernel"] = Tensor(w, requires_grad=True)
            self.params[f"tower.{i}.bias"] = Tensor(np.zeros(cout, dtype=dtype), requires_grad=True)
            cin = cout
        cz = config.latent_channels
        for head in ("mu", "log_sigma"):
            # zero-initialized heads: a fresh posterior is exactly the prior
            self.params[f"head.{head}.kernel"] = Tensor(
                np.zeros((1, 1, cin, cz), dtype=dtype), requires_grad=True
            )
            self.params[f"head.{head}.bias"] = Tensor(np.zeros(cz, dtype=dtype), requires_grad=True)

    def infer_posterior(self, video: np.ndarray | Tensor) -> PosteriorParams:
        """video: (B, T, H, W, C) with T the full configured length."""
        data = video.data if isinstance(video, Tensor) else np.asarray(video, dtype=np.float32)
        if data.ndim == 4:
            data = data[None]
        B, T, H, W, C = data.shape
        cfg = self.config
        if T < cfg.frame_count:
            raise ValueError(
                f"posterior needs all {cfg.frame_count} frames including the future, got {T}"
            )
        if T > cfg.frame_count:
            raise ValueError(f"video length {T} exceeds configured {cfg.frame_count}")
        if H != cfg.frame_size or W != cfg.frame_size:
            raise ValueError(f"frames are {H}x{W}, tower configured for {cfg.frame_size}")
        x = Tensor(np.ascontiguousarray(data.transpose(0, 2, 3, 1, 4)).reshape(B, H, W, T * C))
        stride = 2 if self.config.num_stages else 1
        for i in range(len(cfg.stage_channels)):
            x = ops.relu(
                ops.add_bias(
                    ops.conv2d(x, self.params[f"tower.{i}.kernel"], stride, "same_zero"),
                    self.params[f"tower.{i}.bias"],
                )
            )
        mu = ops.add_bias(
            ops.conv2d(x, self.params["head.mu.kernel"], 1, "same_zero"),
            self.params["head.mu.bias"],
        )
        raw = ops.add_bias(
            ops.conv2d(x, self.params["head.log_sigma.kernel"], 1, "same_zero"),
            self.params["head.log_sigma.bias"],
        )
        return PosteriorParams(mu=mu, log_sigma=ops.clamp_min(raw, cfg.min_log_sigma))


def sample_latent(params: PosteriorParams, noise: np.ndarray | Tensor) -> LatentSample:
    """Reparameterized posterior draw; noise is treated as a constant."""
    eps = noise.data if isinstance(noise, Tensor) else np.asarray(noise, dtype=np.float32)
    if eps.shape != params.mu.shape:
        raise ValueError(f"noise shape {eps.shape} does not match mu {params.mu.shape}")
    z = ops.add(params.mu, ops.multiply(ops.exp(params.log_sigma), Tensor(eps)))
    return LatentSample(z=z, source="posterior")


def sample_prior(shape: tuple[int, ...], rng: np.random.Generator) -> LatentSample:
    z = rng.standard_normal(shape, dtype=np.float32)
    return LatentSample(z=Tensor(z), source="prior")


def latent_plan(
    mode: LatentMode,
    total_frames: int,
    context_frames: int,
    source: str,
    params: PosteriorParams | None = None,
    rng: np.random.Generator | None = None,
    latent_shape: tuple[int, ...] | None = None,
) -> list[LatentSample]:
    """One latent per predicted frame.

    time_invariant replicates a single draw across all predicted frames;
    time_variant draws fresh per frame from the same source (and, for the
    posterior, the same shared parameters).
    """
    if total_frames <= context_frames:
        raise ValueError(f"need at least one predicted frame ({total_frames} <= {context_frames})")
    steps = total_frames - context_frames
    if source == "posterior":
        if params is None or rng is None:
            raise ValueError("posterior plan needs PosteriorParams and an rng")
        shape = params.mu.shape

        def draw():
            return sample_latent(params, rng.standard_normal(shape, dtype=np.float32))

    elif source == "prior":
        if rng is None or latent_shape is None:
            raise ValueError("prior plan needs an rng and latent_shape")

        def draw():
            return sample_prior(latent_shape, rng)

    else:
        raise ValueError(f"unknown latent source {source!r}")

    if mode is LatentMode.TIME_INVARIANT:
        sample = draw()
        return [sample] * steps
    plan = []
    for i in range(steps):
        s = draw()
        s.frame_index = context_frames + i
        plan.append(s)
    return plan
