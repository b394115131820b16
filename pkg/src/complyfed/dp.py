"""Per-sample clipping, Gaussian noise injection, and the DP-SGD epoch.

The DP-SGD step per mini-batch of size B: clip each per-sample gradient to
L2 norm C, sum the clipped gradients, add N(0, (eta*C)^2) noise per
coordinate, divide by B, and take an SGD step. Effective per-step noise on
the averaged gradient therefore has std eta*C/B per coordinate.

Noise is drawn from numpy's PCG64 Generator (ziggurat normal sampling), so a
fixed seed reproduces the exact noise realization across runs. Each call owns
its generator; there is no shared RNG state between clients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import EmptyDatasetError, ModelSpec, per_sample_grad_matrix
from .params import ParamVector


@dataclass(frozen=True)
class DPConfig:
    noise_multiplier: float
    clip_norm: float = 1.0
    lr: float = 0.001
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.noise_multiplier <= 0:
            raise ValueError("noise_multiplier must be > 0")
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def clip(g: ParamVector, clip_norm: float) -> ParamVector:
    """Scale g to L2 norm at most clip_norm: g * min(1, C / ||g||)."""
    if clip_norm <= 0:
        raise ValueError("clip_norm must be > 0")
    norm = g.l2_norm()
    if norm <= clip_norm:
        return g
    return g.scale(clip_norm / norm)


def dp_sgd_epoch(
    spec: ModelSpec,
    params: ParamVector,
    features: np.ndarray,
    labels: np.ndarray,
    dp: DPConfig,
) -> ParamVector:
    """One shuffled DP-SGD pass; deterministic given dp.seed.

    The short final batch is kept and divided by its actual size.
    """
    n = len(labels)
    if n == 0:
        raise EmptyDatasetError("dataset is empty")
    rng = np.random.default_rng(dp.seed)
    perm = rng.permutation(n)
    values = params.values.copy()
    layout = params.layout
    for start in range(0, n, dp.batch_size):
        idx = perm[start : start + dp.batch_size]
        grads = per_sample_grad_matrix(
            spec, ParamVector(values, layout), features[idx], labels[idx]
        )
        norms = np.linalg.norm(grads, axis=1)
        factors = np.where(norms > dp.clip_norm, dp.clip_norm / np.maximum(norms, 1e-300), 1.0)
        clipped_sum = factors @ grads
        noise = rng.normal(0.0, dp.noise_multiplier * dp.clip_norm, size=values.size)
        values = values - dp.lr * (clipped_sum + noise) / len(idx)
    return ParamVector(values, layout)


def add_uniform_noise(params: ParamVector, sigma: float, seed: int) -> ParamVector:
    """Add i.i.d. N(0, sigma^2) per coordinate; identity when sigma = 0."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return params.copy()
    noise = np.random.default_rng(seed).normal(0.0, sigma, size=params.values.size)
    return ParamVector(params.values + noise, params.layout)
