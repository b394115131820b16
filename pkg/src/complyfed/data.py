"""Dataset generation, CSV IO, shard partitioning, and quality degradation.

Partitioning follows the fixed scheme: one global shuffle, then
num_clients + 2 near-equal contiguous shards; the last two shards serve as
the aggregator training set and the held-out evaluation set.

Degradation models low-quality client data: a random crop at 80-100% of the
original size resized back bilinearly, additive Gaussian pixel noise, and a
contrast reduction pivoted on each image's own mean. All transforms are
deterministic under the config seed and never touch labels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class BadDimsError(ValueError):
    pass


class TooFewSamplesError(ValueError):
    pass


class NotImageDataError(ValueError):
    pass


class EmptyFileError(ValueError):
    pass


class ParseError(ValueError):
    pass


class NonFiniteFeatureError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64
    image_shape: tuple[int, int] | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise BadDimsError("features must be a 2-D matrix")
        if labels.shape != (features.shape[0],):
            raise BadDimsError("labels length must match feature rows")
        if self.image_shape is not None:
            h, w = self.image_shape
            if h * w != features.shape[1]:
                raise BadDimsError(
                    f"image_shape {self.image_shape} incompatible with d={features.shape[1]}"
                )
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.image_shape)


@dataclass(frozen=True)
class PartitionedData:
    client_shards: tuple[Dataset, ...]
    aggregator_shard: Dataset
    eval_shard: Dataset


@dataclass(frozen=True)
class DegradationConfig:
    crop_fraction_range: tuple[float, float] = (0.8, 1.0)
    gaussian_sigma: float = 0.05
    contrast_factor: float = 0.8
    seed: int = 0

    def __post_init__(self):
        low, high = self.crop_fraction_range
        if not 0.0 < low <= high <= 1.0:
            raise ValueError("crop_fraction_range must satisfy 0 < low <= high <= 1")
        if self.gaussian_sigma < 0:
            raise ValueError("gaussian_sigma must be >= 0")
        if not 0.0 < self.contrast_factor <= 1.0:
            raise ValueError("contrast_factor must be in (0, 1]")


def _smooth_orthonormal_patterns(h: int, w: int, count: int) -> np.ndarray:
    """The `count` lowest-frequency non-constant 2-D cosine modes, unit norm.

    Image-shaped synthetic data carries its class signal in these smooth
    patterns so that spatial transforms (crop/resize) degrade the signal
    gracefully instead of deleting single pixels.
    """
    ys = (np.arange(h) + 0.5) / h
    xs = (np.arange(w) + 0.5) / w
    modes = sorted(
        ((fy + fx, fy, fx) for fy in range(h) for fx in range(w) if fy or fx)
    )
    if count > len(modes):
        raise BadDimsError(f"only {len(modes)} smooth modes exist for {h}x{w} images")
    patterns = np.empty((count, h * w))
    for c, (_, fy, fx) in enumerate(modes[:count]):
        grid = np.outer(np.cos(np.pi * fy * ys), np.cos(np.pi * fx * xs))
        patterns[c] = grid.ravel() / np.linalg.norm(grid)
    return patterns


def synth_classification(
    n: int,
    d: int,
    classes: int,
    class_separation: float,
    seed: int,
    image_shape: tuple[int, int] | None = None,
) -> Dataset:
    """Gaussian class clusters at pairwise mean distance class_separation.

    Unit covariance per cluster; the whole feature matrix is affinely
    rescaled into [0, 1]; labels are as balanced as n allows. Plain feature
    vectors place class means on scaled standard basis vectors; image-shaped
    data places them on smooth orthonormal pixel patterns instead.
    """
    if n < classes:
        raise BadDimsError(f"need n >= classes, got n={n}, classes={classes}")
    if d < 1 or classes < 2:
        raise BadDimsError("need d >= 1 and classes >= 2")
    if image_shape is not None and image_shape[0] * image_shape[1] != d:
        raise BadDimsError(f"image_shape {image_shape} incompatible with d={d}")
    rng = np.random.default_rng(seed)
    scale = class_separation / np.sqrt(2.0)
    if image_shape is not None:
        means = _smooth_orthonormal_patterns(*image_shape, classes) * scale
    elif classes <= d:
        # Scaled standard basis vectors give exact pairwise distances.
        means = np.zeros((classes, d))
        for c in range(classes):
            means[c, c] = scale
    else:
        dirs = rng.normal(size=(classes, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        means = dirs * scale
    counts = [n // classes + (1 if c < n % classes else 0) for c in range(classes)]
    labels = np.concatenate([np.full(k, c, dtype=np.int64) for c, k in enumerate(counts)])
    features = means[labels] + rng.normal(size=(n, d))
    perm = rng.permutation(n)
    features, labels = features[perm], labels[perm]
    lo, hi = features.min(), features.max()
    if hi > lo:
        features = (features - lo) / (hi - lo)
    else:
        features = np.zeros_like(features)
    return Dataset(features, labels, image_shape)


def load_csv(path: str | Path) -> Dataset:
    """Rows of d float feature columns plus one integer label column.

    A header row is detected (and skipped) when its cells do not parse as
    numbers. Features must be finite.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise EmptyFileError(f"{path} contains no data rows")

    def parse_row(row: list[str], row_num: int) -> tuple[list[float], int]:
        if len(row) < 2:
            raise ParseError(f"{path}: row {row_num} has fewer than 2 columns")
        feats = []
        for col, cell in enumerate(row[:-1]):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: row {row_num}, column {col + 1}: {cell!r} is not a number"
                ) from None
            if not np.isfinite(value):
                raise NonFiniteFeatureError(
                    f"{path}: row {row_num}, column {col + 1}: non-finite feature {cell!r}"
                )
            feats.append(value)
        cell = row[-1]
        try:
            label = int(cell)
        except ValueError:
            raise ParseError(
                f"{path}: row {row_num}, column {len(row)}: label {cell!r} is not an integer"
            ) from None
        return feats, label

    start = 0
    try:
        parse_row(rows[0], 1)
    except (ParseError, NonFiniteFeatureError):
        if len(rows) == 1:
            raise
        start = 1  # header row
    if start == len(rows):
        raise EmptyFileError(f"{path} contains only a header")

    width = len(rows[start])
    features, labels = [], []
    for i, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise ParseError(f"{path}: row {i} has {len(row)} columns, expected {width}")
        feats, label = parse_row(row, i)
        features.append(feats)
        labels.append(label)
    return Dataset(np.array(features), np.array(labels))


def save_csv(path: str | Path, data: Dataset) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for feats, label in zip(data.features, data.labels):
            writer.writerow([repr(float(v)) for v in feats] + [int(label)])


def partition(data: Dataset, num_clients: int, seed: int) -> PartitionedData:
    """One global shuffle, then num_clients + 2 near-equal contiguous shards.

    Shard sizes differ by at most one; the last two shards become the
    aggregator and evaluation sets.
    """
    if num_clients < 1:
        raise ValueError("num_clients must be >= 1")
    n = len(data)
    num_shards = num_clients + 2
    if n < num_shards:
        raise TooFewSamplesError(
            f"need at least {num_shards} samples for {num_clients} clients, got {n}"
        )
    perm = np.random.default_rng(seed).permutation(n)
    shard_indices = np.array_split(perm, num_shards)
    shards = [data.subset(idx) for idx in shard_indices]
    return PartitionedData(
        client_shards=tuple(shards[:num_clients]),
        aggregator_shard=shards[num_clients],
        eval_shard=shards[num_clients + 1],
    )


def _bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resize: output corners sample input corners."""
    in_h, in_w = image.shape
    ys = np.linspace(0.0, in_h - 1.0, out_h) if in_h > 1 else np.zeros(out_h)
    xs = np.linspace(0.0, in_w - 1.0, out_w) if in_w > 1 else np.zeros(out_w)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = image[np.ix_(y0, x0)] * (1 - wx) + image[np.ix_(y0, x1)] * wx
    bot = image[np.ix_(y1, x0)] * (1 - wx) + image[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


def degrade(data: Dataset, cfg: DegradationConfig) -> Dataset:
    """Crop/resize, Gaussian noise, and contrast reduction per image.

    Per image: sample a crop fraction f in the configured range, take a
    uniformly positioned round(f*h) x round(f*w) crop, bilinear-resize back,
    add N(0, sigma^2) per pixel, apply p' = mean(p) + contrast * (p - mean(p)),
    and clamp to [0, 1].
    """
    if data.image_shape is None:
        raise NotImageDataError("degradation requires image-shaped data")
    h, w = data.image_shape
    rng = np.random.default_rng(cfg.seed)
    low, high = cfg.crop_fraction_range
    out = np.empty_like(data.features)
    for i in range(len(data)):
        image = data.features[i].reshape(h, w)
        f = rng.uniform(low, high)
        ch = max(1, int(round(f * h)))
        cw = max(1, int(round(f * w)))
        oy = rng.integers(0, h - ch + 1)
        ox = rng.integers(0, w - cw + 1)
        crop = image[oy : oy + ch, ox : ox + cw]
        if (ch, cw) != (h, w):
            image = _bilinear_resize(crop, h, w)
        else:
            image = crop
        if cfg.gaussian_sigma > 0:
            image = image + rng.normal(0.0, cfg.gaussian_sigma, size=(h, w))
        mean = image.mean()
        image = mean + cfg.contrast_factor * (image - mean)
        out[i] = np.clip(image, 0.0, 1.0).ravel()
    return Dataset(out, data.labels.copy(), data.image_shape)
