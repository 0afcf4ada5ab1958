"""Adam with bias correction.

Defaults (lr 0.001, beta1 0.9, beta2 0.999, eps 1e-8) are the package's
training defaults. A parameter whose grad slot is empty is left alone
(its moments do not decay and its step counter does not advance), which
is what lets early training phases leave whole subnetworks untouched.
Non-finite gradients either skip the step (default, counted) or raise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def for_param(cls, param: Tensor) -> "AdamState":
        return cls(np.zeros_like(param.data), np.zeros_like(param.data))


def adam_step(
    params: list[Tensor],
    grads: list[np.ndarray | None],
    states: list[AdamState],
    lr: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    on_nonfinite: str = "skip",
) -> bool:
    """Apply one bias-corrected Adam update in place.

    Returns True if the step was applied, False if it was skipped because
    a gradient contained non-finite values (on_nonfinite="skip").
    """
    if lr <= 0:
        raise ValueError(f"adam_step: learning rate must be positive, got {lr}")
    if on_nonfinite not in ("skip", "reject"):
        raise ValueError(f"adam_step: on_nonfinite must be 'skip' or 'reject', got {on_nonfinite!r}")
    for p, g in zip(params, grads):
        if g is None:
            continue
        if p.data.shape != g.shape:
            raise ValueError(f"adam_step: grad shape {g.shape} does not match param {p.data.shape}")
        if not np.all(np.isfinite(g)):
            if on_nonfinite == "reject":
                raise FloatingPointError("adam_step: non-finite gradient")
            warnings.warn("adam_step: skipping update, non-finite gradient", RuntimeWarning)
            return False
    for p, g, s in zip(params, grads, states):
        if g is None:
            continue
        s.t += 1
        s.m = beta1 * s.m + (1.0 - beta1) * g
        s.v = beta2 * s.v + (1.0 - beta2) * (g * g)
        m_hat = s.m / (1.0 - beta1 ** s.t)
        v_hat = s.v / (1.0 - beta2 ** s.t)
        p.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.data.dtype, copy=False)
    return True


@dataclass
class Adam:
    """Optimizer bound to a named parameter set."""

    params: dict[str, Tensor]
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    on_nonfinite: str = "skip"
    skipped_steps: int = 0
    states: dict[str, AdamState] = field(default_factory=dict)

    def __post_init__(self):
        for name, p in self.params.items():
            self.states.setdefault(name, AdamState.for_param(p))

    def step(self) -> bool:
        names = list(self.params)
        applied = adam_step(
            [self.params[n] for n in names],
            [self.params[n].grad for n in names],
            [self.states[n] for n in names],
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            on_nonfinite=self.on_nonfinite,
        )
        if not applied:
            self.skipped_steps += 1
        return applied

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None
