"""Recurrent motion-kernel generator.

Each step encodes the previous frame through stride-2 conv-LSTM stages,
injects the latent (and optional tiled action) at the bottleneck, and
decodes three heads: a bank of normalized motion kernels, per-pixel
compositing masks, and a directly synthesized frame. The next frame is
the mask-weighted convex combination of the kernel-transformed previous
frame, the untouched previous frame, and the synthesized frame, so
outputs can never leave [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, ops
from .autodiff.lstm import ConvLSTMParams, conv_lstm_cell, init_conv_lstm
from .inference import LATENT_SIZE, LatentSample


@dataclass
class GeneratorConfig:
    frame_size: int = 64
    in_channels: int = 3
    lstm_channels: tuple[int, ...] = (16, 32)
    num_masks: int = 10
    cdna_kernel: int = 5
    conv_kernel: int = 3
    action_dim: int = 0
    latent_channels: int = 1
    skip_connections: bool = True

    def __post_init__(self):
        self.lstm_channels = tuple(self.lstm_channels)
        if self.frame_size % (1 << len(self.lstm_channels)):
            raise ValueError(
                f"frame_size {self.frame_size} not divisible by 2^{len(self.lstm_channels)}"
            )

    @property
    def bottleneck_size(self) -> int:
        return self.frame_size >> len(self.lstm_channels)

    @property
    def action_conditioned(self) -> bool:
        return self.action_dim > 0


@dataclass
class GeneratorState:
    """Per-layer conv-LSTM hidden/cell pairs plus the fed-frame buffer."""

    lstm: list[tuple[Tensor, Tensor]]
    prev_frame: Tensor | None = None


@dataclass
class ConditioningVector:
    latent: LatentSample
    action: np.ndarray | None = None  # (B, action_dim)


@dataclass
class CdnaOutputs:
    kernels: Tensor            # (B, M, k, k), each kernel sums to 1
    masks: Tensor              # (B, H, W, M+2) softmax weights
    synthesized_frame: Tensor  # (B, H, W, C) in [0, 1]


@dataclass
class SamplingPolicy:
    """How rollout picks each step's input frame after the context."""

    mode: str = "inference"                 # "train" | "inference"
    ground_truth_prob: float = 0.0          # epsilon of the scheduled-sampling decay
    rng: np.random.Generator | None = None

    def __post_init__(self):
        if self.mode not in ("train", "inference"):
            raise ValueError(f"unknown sampling mode {self.mode!r}")
        if self.mode == "train" and self.rng is None:
            raise ValueError("training-mode sampling needs an rng for the feed coin")


def normalize_kernels(logits: Tensor | np.ndarray) -> Tensor:
    """Softmax over each kernel's spatial entries -> nonnegative, sum-1."""
    t = logits if isinstance(logits, Tensor) else Tensor(logits)
    if t.ndim not in (3, 4):
        raise ValueError(f"normalize_kernels expects (M,k,k) or (B,M,k,k), got {t.shape}")
    kh, kw = t.shape[-2], t.shape[-1]
    flat = ops.reshape(t, t.shape[:-2] + (kh * kw,))
    return ops.reshape(ops.softmax_channels(flat), t.shape)


def _conv_block(x, kernel, bias, stride=1):
    return ops.relu(ops.add_bias(ops.conv2d(x, kernel, stride, "same_zero"), bias))


class GeneratorNet:
    """Conditional next-frame predictor with motion kernels and masks."""

    def __init__(self, config: GeneratorConfig, rng: np.random.Generator, dtype=np.float32):
        self.config = config
        self.params: dict[str, Tensor] = {}
        self.lstm_params: list[ConvLSTMParams] = []
        k = config.conv_kernel
        chans = config.lstm_channels

        def he(name, shape):
            fan_in = int(np.prod(shape[:-1]))
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape).astype(dtype)
            self.params[name] = Tensor(w, requires_grad=True)

        def zeros(name, shape):
            self.params[name] = Tensor(np.zeros(shape, dtype=dtype), requires_grad=True)

        cin = config.in_channels
        for i, ch in enumerate(chans):
            he(f"enc.{i}.kernel", (k, k, cin, ch))
            zeros(f"enc.{i}.bias", (ch,))
            lstm = init_conv_lstm(rng, ch, ch, k, dtype=dtype)
            self.params[f"lstm.{i}.kernel"] = lstm.kernel
            self.params[f"lstm.{i}.bias"] = lstm.bias
            self.lstm_params.append(lstm)
            cin = ch

        bott_in = chans[-1] + config.latent_channels + (config.action_dim or 0)
        he("bottleneck.kernel", (k, k, bott_in, chans[-1]))
        zeros("bottleneck.bias", (chans[-1],))

        m, kc = config.num_masks, config.cdna_kernel
        zeros("cdna.kernel", (1, 1, chans[-1], m * kc * kc))
        zeros("cdna.bias", (m * kc * kc,))

        dec_in = chans[-1]
        for i in range(len(chans) - 1, 0, -1):
            cin_dec = dec_in + (chans[i - 1] if config.skip_connections else 0)
            he(f"dec.{i}.kernel", (k, k, cin_dec, chans[i - 1]))
            zeros(f"dec.{i}.bias", (chans[i - 1],))
            dec_in = chans[i - 1]
        cin_dec = dec_in + (config.in_channels if config.skip_connections else 0)
        he("dec.0.kernel", (k, k, cin_dec, chans[0]))
        zeros("dec.0.bias", (chans[0],))

        zeros("mask.kernel", (k, k, chans[0], config.num_masks + 2))
        zeros("mask.bias", (config.num_masks + 2,))
        zeros("synth.kernel", (k, k, chans[0], config.in_channels))
        zeros("synth.bias", (config.in_channels,))

    def init_state(self, batch: int, dtype=np.float32) -> GeneratorState:
        size = self.config.frame_size
        pairs = []
        for ch in self.config.lstm_channels:
            size //= 2
            h = Tensor(np.zeros((batch, size, size, ch), dtype=dtype))
            c = Tensor(np.zeros((batch, size, size, ch), dtype=dtype))
            pairs.append((h, c))
        return GeneratorState(lstm=pairs)

    def predict_next_frame(
        self,
        prev_frame: Tensor | np.ndarray,
        cond: ConditioningVector,
        state: GeneratorState,
    ) -> tuple[Tensor, CdnaOutputs, GeneratorState]:
        cfg = self.config
        prev = prev_frame if isinstance(prev_frame, Tensor) else Tensor(prev_frame)
        if cfg.action_conditioned and cond.action is None:
            raise ValueError("generator is action-conditioned but no action was given")

        x = prev
        hiddens: list[Tensor] = []
        new_pairs: list[tuple[Tensor, Tensor]] = []
        for i in range(len(cfg.lstm_channels)):
            x = _conv_block(x, self.params[f"enc.{i}.kernel"], self.params[f"enc.{i}.bias"], stride=2)
            h, c = conv_lstm_cell(x, *state.lstm[i], self.lstm_params[i])
            new_pairs.append((h, c))
            hiddens.append(h)
            x = h

        bh = bw = cfg.bottleneck_size
        parts = [x]
        if cfg.action_conditioned:
            action = np.asarray(cond.action, dtype=np.float32)
            if action.ndim != 2 or action.shape[1] != cfg.action_dim:
                raise ValueError(f"action must be (B, {cfg.action_dim}), got {action.shape}")
            parts.append(ops.tile_spatial(Tensor(action), bh, bw))
        z = cond.latent.z
        if z.shape[1] != bh or z.shape[2] != bw:
            z = ops.nearest_resize(z, (bh, bw))
        parts.append(z)
        feat = _conv_block(
            ops.concat_channels(parts), self.params["bottleneck.kernel"], self.params["bottleneck.bias"]
        )

        m, kc = cfg.num_masks, cfg.cdna_kernel
        klogits = ops.spatial_mean(
            ops.add_bias(ops.conv2d(feat, self.params["cdna.kernel"], 1, "same_zero"), self.params["cdna.bias"])
        )
        kernels = normalize_kernels(ops.reshape(klogits, (klogits.shape[0], m, kc, kc)))

        d = feat
        for i in range(len(cfg.lstm_channels) - 1, 0, -1):
            d = ops.upsample_nearest(d, 2)
            if cfg.skip_connections:
                d = ops.concat_channels([d, hiddens[i - 1]])
            d = _conv_block(d, self.params[f"dec.{i}.kernel"], self.params[f"dec.{i}.bias"])
        d = ops.upsample_nearest(d, 2)
        if cfg.skip_connections:
            d = ops.concat_channels([d, prev])
        d = _conv_block(d, self.params["dec.0.kernel"], self.params["dec.0.bias"])

        masks = ops.softmax_channels(
            ops.add_bias(ops.conv2d(d, self.params["mask.kernel"], 1, "same_zero"), self.params["mask.bias"])
        )
        synthesized = ops.sigmoid(
            ops.add_bias(ops.conv2d(d, self.params["synth.kernel"], 1, "same_zero"), self.params["synth.bias"])
        )

        candidates = ops.apply_kernels(prev, kernels)
        next_frame = ops.composite(candidates, prev, synthesized, masks)
        outputs = CdnaOutputs(kernels=kernels, masks=masks, synthesized_frame=synthesized)
        return next_frame, outputs, GeneratorState(lstm=new_pairs, prev_frame=next_frame)

    def rollout(
        self,
        frames: np.ndarray,
        context: int,
        latents: list[LatentSample],
        actions: np.ndarray | None = None,
        policy: SamplingPolicy | None = None,
    ) -> list[Tensor]:
        """Predict frames context..T-1 given ground truth for the context.

        frames: (B, >=context, H, W, C). In training mode frames must
        cover the whole horizon so scheduled sampling can feed ground
        truth; inference mode self-feeds after the context.
        """
        cfg = self.config
        policy = policy or SamplingPolicy()
        if context < 1:
            raise ValueError("rollout needs at least one context frame")
        total = context + len(latents)
        B = frames.shape[0]
        if policy.mode == "train" and frames.shape[1] < total:
            raise ValueError(f"training rollout over {total} frames, batch has {frames.shape[1]}")
        if cfg.action_conditioned:
            if actions is None:
                raise ValueError("generator is action-conditioned but no actions were given")
            if actions.shape[1] < total:
                raise ValueError(
                    f"horizon {total} exceeds available actions ({actions.shape[1]})"
                )

        state = self.init_state(B)
        preds: list[Tensor] = []
        prev: Tensor | None = None
        for t in range(1, total):
            if t <= context:
                fed = Tensor(np.ascontiguousarray(frames[:, t - 1]))
            elif policy.mode == "train":
                coin = policy.rng.random(B) < policy.ground_truth_prob
                if coin.all():
                    fed = Tensor(np.ascontiguousarray(frames[:, t - 1]))
                elif not coin.any():
                    fed = prev
                else:
                    m = coin.astype(np.float32)[:, None, None, None]
                    gt = np.ascontiguousarray(frames[:, t - 1])
                    mask = np.broadcast_to(m, gt.shape).copy()
                    fed = ops.add(
                        Tensor(gt * mask), ops.multiply(prev, Tensor(1.0 - mask))
                    )
            else:
                fed = prev
            latent = latents[t - context] if t >= context else latents[0]
            action_t = actions[:, t] if cfg.action_conditioned else None
            cond = ConditioningVector(latent=latent, action=action_t)
            frame, _, state = self.predict_next_frame(fed, cond, state)
            prev = frame
            if t >= context:
                preds.append(frame)
        return preds
