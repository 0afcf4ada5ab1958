"""Finite-difference verification of reverse-mode gradients.

The op under test is reduced to a scalar through a fixed random
projection, so every output entry influences the loss. Central
differences use a step of 1e-5 relative to each entry's magnitude and
run in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ops
from .tensor import GradientTape, Tensor


@dataclass
class GradCheckReport:
    max_rel_error: float
    per_input: list[float]
    failed: bool
    reason: str = ""
    messages: list[str] = field(default_factory=list)


def _rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.abs(numeric), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def grad_check(
    fn,
    inputs: list[Tensor],
    rel_step: float = 1e-5,
    tolerance: float = 1e-5,
    projection_seed: int = 0,
) -> GradCheckReport:
    """Compare reverse-mode gradients of sum(fn(inputs) * R) against
    central finite differences, input by input.

    All inputs are promoted to float64; fn must be a pure function of
    them built from the registered primitives.
    """
    inputs64 = [Tensor(t.data.astype(np.float64), requires_grad=True) for t in inputs]

    def scalar_loss():
        out = fn(*inputs64)
        rng = np.random.default_rng(projection_seed)
        proj = Tensor(rng.normal(size=out.shape))
        return ops.reduce_sum(ops.multiply(out, proj))

    with GradientTape() as tape:
        loss = scalar_loss()
        tape.backward(loss)
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in inputs64]

    per_input: list[float] = []
    messages: list[str] = []
    failed = False
    for idx, t in enumerate(inputs64):
        flat = t.data.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            h = rel_step * max(1.0, abs(orig))
            flat[i] = orig + h
            f_plus = scalar_loss().item()
            flat[i] = orig - h
            f_minus = scalar_loss().item()
            flat[i] = orig
            numeric[i] = (f_plus - f_minus) / (2.0 * h)
        numeric = numeric.reshape(t.shape)
        if not (np.all(np.isfinite(analytic[idx])) and np.all(np.isfinite(numeric))):
            failed = True
            messages.append(f"input {idx}: non-finite gradient estimate")
            per_input.append(float("inf"))
            continue
        err = _rel_error(analytic[idx], numeric)
        per_input.append(err)
        if err > tolerance:
            failed = True
            messages.append(f"input {idx}: rel error {err:.3e} exceeds {tolerance:.1e}")

    finite = [e for e in per_input if np.isfinite(e)]
    return GradCheckReport(
        max_rel_error=max(finite) if finite else float("inf"),
        per_input=per_input,
        failed=failed,
        reason="; ".join(messages),
        messages=messages,
    )
