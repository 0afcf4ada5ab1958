"""Video containers shared across the dataset, model, and eval layers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class VideoSequence:
    """T frames of (H, W, C) pixels in [0, 1] plus optional per-frame actions."""

    frames: np.ndarray            # (T, H, W, C) float32
    actions: np.ndarray | None = None  # (T, A) float32

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 4:
            raise ValueError(f"VideoSequence frames must be (T,H,W,C), got {self.frames.shape}")
        if self.actions is not None:
            self.actions = np.asarray(self.actions, dtype=np.float32)
            if self.actions.shape[0] != self.frames.shape[0]:
                raise ValueError(
                    f"actions cover {self.actions.shape[0]} frames, video has {self.frames.shape[0]}"
                )

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def frame_shape(self) -> tuple[int, int, int]:
        return self.frames.shape[1:]
