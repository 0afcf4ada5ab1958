"""Training objective: pixel reconstruction plus weighted KL to the prior."""

from __future__ import annotations

from .autodiff import Tensor, ops
from .inference import PosteriorParams


def kl_to_standard_normal(params: PosteriorParams) -> Tensor:
    """Closed-form KL(N(mu, sigma^2) || N(0, 1)), summed over latent
    entries and averaged over the batch.

    Per entry: 0.5 * (mu^2 + sigma^2 - 1 - 2 log sigma), with
    sigma = exp(log_sigma).
    """
    mu, log_sigma = params.mu, params.log_sigma
    batch = mu.shape[0]
    sigma_sq = ops.exp(ops.scale(log_sigma, 2.0))
    per_entry = ops.add_scalar(
        ops.add(ops.add(ops.square(mu), sigma_sq), ops.scale(log_sigma, -2.0)), -1.0
    )
    return ops.scale(ops.reduce_sum(per_entry), 0.5 / batch)


def reconstruction_loss(predicted: list[Tensor], target) -> Tensor:
    """Mean squared error averaged over pixels, frames, and batch.

    predicted: per-step (B, H, W, C) tensors; target: (B, n, H, W, C).
    """
    n = len(predicted)
    if target.shape[1] != n:
        raise ValueError(f"{n} predicted frames but target has {target.shape[1]}")
    total = None
    for t, pred in enumerate(predicted):
        step = ops.reduce_mean(ops.square(ops.sub(pred, Tensor(target[:, t]))))
        total = step if total is None else ops.add(total, step)
    return ops.scale(total, 1.0 / n)


def elbo_loss(
    predicted: list[Tensor],
    target,
    posterior: PosteriorParams | None,
    beta: float,
) -> tuple[Tensor, Tensor, Tensor]:
    """Returns (total, recon, kl); total = recon + beta * kl.

    With no posterior (prior-only phase) the KL term is zero.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    recon = reconstruction_loss(predicted, target)
    if posterior is None:
        kl = Tensor(0.0)
        return recon, recon, kl
    kl = kl_to_standard_normal(posterior)
    total = ops.add(recon, ops.scale(kl, beta))
    return total, recon, kl
