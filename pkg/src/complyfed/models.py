"""Minimal differentiable classifiers over flat parameter vectors.

Two architectures: multinomial logistic regression and a one-hidden-layer
ReLU MLP, both trained with softmax cross-entropy. Gradients are analytic
(batch and per-sample), and the SGD loops are deterministic given a seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import Layout, LayoutMismatchError, ParamVector


class EmptyDatasetError(ValueError):
    pass


class NegativeMuError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # "logistic" | "mlp"
    input_dim: int
    num_classes: int
    hidden_dim: int = 0
    activation: str = "relu"

    def __post_init__(self):
        if self.kind not in ("logistic", "mlp"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.kind == "logistic" and self.hidden_dim != 0:
            raise ValueError("logistic model has no hidden layer; hidden_dim must be 0")
        if self.kind == "mlp" and self.hidden_dim < 1:
            raise ValueError("mlp requires hidden_dim >= 1")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")

    def layout(self) -> Layout:
        # Per-layer weight then bias, input side first.
        d, c, h = self.input_dim, self.num_classes, self.hidden_dim
        if self.kind == "logistic":
            return (("W", (d, c)), ("b", (c,)))
        return (("W1", (d, h)), ("b1", (h,)), ("W2", (h, c)), ("b2", (c,)))

    def num_params(self) -> int:
        return int(sum(int(np.prod(shape)) for _, shape in self.layout()))


def init_params(spec: ModelSpec, seed: int) -> ParamVector:
    """Glorot-uniform weights, zero biases; bit-reproducible for a seed."""
    rng = np.random.default_rng(seed)
    parts = []
    for name, shape in spec.layout():
        if name.startswith("W"):
            fan_in, fan_out = shape
            a = np.sqrt(6.0 / (fan_in + fan_out))
            parts.append(rng.uniform(-a, a, size=int(np.prod(shape))))
        else:
            parts.append(np.zeros(int(np.prod(shape))))
    return ParamVector(np.concatenate(parts), spec.layout())


def _check_batch(spec: ModelSpec, features: np.ndarray, labels: np.ndarray):
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[1] != spec.input_dim:
        raise ValueError(
            f"features must be (batch, {spec.input_dim}), got {features.shape}"
        )
    if features.shape[0] < 1:
        raise EmptyDatasetError("batch must contain at least one sample")
    if labels.shape != (features.shape[0],):
        raise ValueError("labels must be a 1-D array matching the batch size")
    if labels.min() < 0 or labels.max() >= spec.num_classes:
        raise ValueError("labels must be class indices < num_classes")
    return features, labels


def _forward(spec: ModelSpec, params: ParamVector, features: np.ndarray):
    """Returns (logits, hidden-layer cache or None)."""
    if params.layout != spec.layout():
        raise LayoutMismatchError("params layout does not match model spec")
    t = params.tensors()
    if spec.kind == "logistic":
        return features @ t["W"] + t["b"], None
    z1 = features @ t["W1"] + t["b1"]
    a1 = np.maximum(z1, 0.0)
    return a1 @ t["W2"] + t["b2"], (z1, a1)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward_loss(
    spec: ModelSpec, params: ParamVector, features: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and the (batch, classes) probability matrix."""
    features, labels = _check_batch(spec, features, labels)
    logits, _ = _forward(spec, params, features)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    loss = float(-log_probs[np.arange(len(labels)), labels].mean())
    return loss, np.exp(log_probs)


def _per_sample_grad_matrix(
    spec: ModelSpec, params: ParamVector, features: np.ndarray, labels: np.ndarray
) -> np.ndarray:
    """(batch, num_params) matrix of per-sample loss gradients."""
    logits, cache = _forward(spec, params, features)
    probs = _softmax(logits)
    n = len(labels)
    dlogits = probs
    dlogits[np.arange(n), labels] -= 1.0
    if spec.kind == "logistic":
        dw = np.einsum("bd,bc->bdc", features, dlogits)
        return np.concatenate([dw.reshape(n, -1), dlogits], axis=1)
    z1, a1 = cache
    t = params.tensors()
    dw2 = np.einsum("bh,bc->bhc", a1, dlogits)
    da1 = dlogits @ t["W2"].T
    dz1 = da1 * (z1 > 0.0)
    dw1 = np.einsum("bd,bh->bdh", features, dz1)
    return np.concatenate(
        [dw1.reshape(n, -1), dz1, dw2.reshape(n, -1), dlogits], axis=1
    )


def per_sample_grads(
    spec: ModelSpec, params: ParamVector, features: np.ndarray, labels: np.ndarray
) -> list[ParamVector]:
    features, labels = _check_batch(spec, features, labels)
    matrix = _per_sample_grad_matrix(spec, params, features, labels)
    return [ParamVector(row.copy(), spec.layout()) for row in matrix]


def per_sample_grad_matrix(
    spec: ModelSpec, params: ParamVector, features: np.ndarray, labels: np.ndarray
) -> np.ndarray:
    features, labels = _check_batch(spec, features, labels)
    return _per_sample_grad_matrix(spec, params, features, labels)


def grad(
    spec: ModelSpec, params: ParamVector, features: np.ndarray, labels: np.ndarray
) -> ParamVector:
    """Batch-mean gradient of the cross-entropy loss."""
    features, labels = _check_batch(spec, features, labels)
    logits, cache = _forward(spec, params, features)
    probs = _softmax(logits)
    n = len(labels)
    dlogits = probs
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    if spec.kind == "logistic":
        dw = features.T @ dlogits
        db = dlogits.sum(axis=0)
        return ParamVector(np.concatenate([dw.ravel(), db]), spec.layout())
    z1, a1 = cache
    t = params.tensors()
    dw2 = a1.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dz1 = (dlogits @ t["W2"].T) * (z1 > 0.0)
    dw1 = features.T @ dz1
    db1 = dz1.sum(axis=0)
    return ParamVector(
        np.concatenate([dw1.ravel(), db1, dw2.ravel(), db2]), spec.layout()
    )


def _epoch(
    spec: ModelSpec,
    params: ParamVector,
    features: np.ndarray,
    labels: np.ndarray,
    lr: float,
    batch_size: int,
    seed: int,
    anchor: ParamVector | None = None,
    mu: float = 0.0,
) -> ParamVector:
    n = len(labels)
    if n == 0:
        raise EmptyDatasetError("dataset is empty")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    perm = np.random.default_rng(seed).permutation(n)
    values = params.values.copy()
    layout = params.layout
    for start in range(0, n, batch_size):
        idx = perm[start : start + batch_size]  # short final batch kept
        g = grad(spec, ParamVector(values, layout), features[idx], labels[idx])
        step = g.values
        if anchor is not None and mu != 0.0:
            step = step + mu * (values - anchor.values)
        values = values - lr * step
    return ParamVector(values, layout)


def sgd_epoch(
    spec: ModelSpec,
    params: ParamVector,
    features: np.ndarray,
    labels: np.ndarray,
    lr: float,
    batch_size: int,
    shuffle_seed: int,
) -> ParamVector:
    """One shuffled pass of sequential mini-batch SGD."""
    return _epoch(spec, params, features, labels, lr, batch_size, shuffle_seed)


def proximal_sgd_epoch(
    spec: ModelSpec,
    params: ParamVector,
    anchor: ParamVector,
    mu: float,
    features: np.ndarray,
    labels: np.ndarray,
    lr: float,
    batch_size: int,
    shuffle_seed: int,
) -> ParamVector:
    """SGD epoch with a proximal pull mu * (params - anchor) added per step.

    Identical to sgd_epoch when mu = 0.
    """
    if mu < 0:
        raise NegativeMuError(f"mu must be >= 0, got {mu}")
    params.check_same_layout(anchor)
    return _epoch(
        spec, params, features, labels, lr, batch_size, shuffle_seed, anchor, mu
    )
