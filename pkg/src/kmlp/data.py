"""Datasets: IDX and CSV loaders, synthetic generators, stratified splits."""
from __future__ import annotations

import csv
import os
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import FormatError, InvalidArgument

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    # one of SPLITS per row; None means every row is training data
    tags: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise InvalidArgument("features must be N x d with one label per row")
        if not np.all(np.isfinite(self.features)):
            raise InvalidArgument("features contain non-finite values")
        if self.tags is not None and self.tags.shape[0] != self.labels.shape[0]:
            raise InvalidArgument("one split tag per row required")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    def mask(self, split):
        if split not in SPLITS:
            raise InvalidArgument(f"unknown split {split!r}")
        if self.tags is None:
            return np.full(len(self), split == "train")
        return self.tags == split

    def subset(self, split):
        """``(features, labels)`` of the rows tagged ``split``."""
        m = self.mask(split)
        return self.features[m], self.labels[m]


def _make(features, labels, n_classes=None, tags=None):
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels).astype(np.int64).ravel()
    if labels.size and labels.min() < 0:
        raise InvalidArgument("labels must be nonnegative class indices")
    if n_classes is None:
        n_classes = int(labels.max()) + 1 if labels.size else 0
    return LabeledDataset(features, labels, int(n_classes), tags)


def data_dir() -> Path:
    """Dataset directory, overridable through ``KMLP_DATA_DIR``."""
    return Path(os.environ.get("KMLP_DATA_DIR", Path.home() / ".cache" / "kmlp"))


def resolve(path) -> Path:
    """Relative paths that do not exist here are looked up under :func:`data_dir`."""
    p = Path(path)
    if p.is_absolute() or p.exists() or "KMLP_DATA_DIR" not in os.environ:
        return p
    return data_dir() / p


def normalize(dataset: LabeledDataset) -> LabeledDataset:
    """Per-feature min-max scaling into [0, 1]; constant features become 0."""
    X = dataset.features
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return replace(dataset, features=np.clip((X - lo) / span, 0.0, 1.0))


# ------------------------------------------------------------------ IDX

def _read_idx(path, magic):
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated header", offset=len(raw))
    found, count = struct.unpack(">II", raw[:8])
    if found != magic:
        raise FormatError(f"{path}: magic 0x{found:08x}, expected 0x{magic:08x}", offset=0)
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError(f"{path}: truncated header", offset=len(raw))
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    if len(raw) != header + size:
        raise FormatError(f"{path}: expected {header + size} bytes, found {len(raw)}",
                          offset=min(len(raw), header + size))
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Read an IDX image/label pair; pixels are scaled by 1/255."""
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(f"{images.shape[0]} images but {labels.shape[0]} labels", offset=4)
    features = images.reshape(images.shape[0], -1).astype(float) / 255.0
    return _make(features, labels)


def save_idx(images, labels, images_path, labels_path):
    """Write uint8 images (N x rows x cols) and labels in IDX layout."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8).ravel()
    if images.ndim != 3:
        raise InvalidArgument("images must be N x rows x cols")
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


# ------------------------------------------------------------------ CSV

def load_csv(path, label_column=-1, header=False, normalized=False) -> LabeledDataset:
    """One example per row: numeric features plus an integer label column."""
    rows, labels = [], []
    with open(resolve(path), newline="") as fh:
        reader = csv.reader(fh)
        width = None
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError(f"{path}:{lineno}: expected {width} fields, got {len(row)}",
                                  line=lineno)
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}", line=lineno) from None
            label = values.pop(label_column)
            if label != int(label):
                raise FormatError(f"{path}:{lineno}: label {label} is not an integer",
                                  line=lineno)
            rows.append(values)
            labels.append(int(label))
    if not rows:
        raise FormatError(f"{path}: no data rows")
    dataset = _make(np.array(rows, dtype=float), labels)
    return normalize(dataset) if normalized else dataset


def save_csv(dataset: LabeledDataset, path, header=False):
    """Features followed by the label; floats written with full precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"x{j}" for j in range(dataset.dim)] + ["label"])
        for x, y in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


# ------------------------------------------------------------ generators

def gen_rectangles(n, side=28, seed=None) -> LabeledDataset:
    """Images of one rectangle outline; label 1 when wider than tall.

    Width and height are drawn from [3, side - 2] (ties redrawn), the
    rectangle is placed uniformly inside the image, and its 1-pixel border
    is set to 1.0 on a zero background.
    """
    if n < 1 or side < 6:
        raise InvalidArgument("need n >= 1 and side >= 6")
    rng = np.random.default_rng(seed)
    w = rng.integers(3, side - 1, size=n)
    h = rng.integers(3, side - 1, size=n)
    ties = w == h
    while ties.any():
        w[ties] = rng.integers(3, side - 1, size=ties.sum())
        h[ties] = rng.integers(3, side - 1, size=ties.sum())
        ties = w == h
    x0 = rng.integers(0, side - w + 1)
    y0 = rng.integers(0, side - h + 1)
    r = np.arange(side)[None, :, None]
    c = np.arange(side)[None, None, :]
    x0, y0, w3, h3 = (v[:, None, None] for v in (x0, y0, w, h))
    inside = (r >= y0) & (r < y0 + h3) & (c >= x0) & (c < x0 + w3)
    interior = (r > y0) & (r < y0 + h3 - 1) & (c > x0) & (c < x0 + w3 - 1)
    images = (inside & ~interior).astype(np.uint8) * 255
    features = images.reshape(n, -1).astype(float) / 255.0
    return _make(features, (w > h).astype(int), n_classes=2)


def gen_blobs(n, d=2, separation=6.0, seed=None) -> LabeledDataset:
    """Two unit-variance Gaussian clusters centered at +-(separation/2) e_1."""
    if n < 2 or n % 2:
        raise InvalidArgument("n must be a positive even number")
    if d < 1:
        raise InvalidArgument("d must be positive")
    rng = np.random.default_rng(seed)
    labels = np.repeat([0, 1], n // 2)
    X = rng.standard_normal((n, d))
    X[:, 0] += np.where(labels == 1, separation / 2.0, -separation / 2.0)
    order = rng.permutation(n)
    return _make(X[order], labels[order], n_classes=2)


# ---------------------------------------------------------------- splits

def _allocate(count, fractions):
    exact = count * np.asarray(fractions, dtype=float)
    alloc = np.floor(exact + 1e-9).astype(int)
    remainder = count - alloc.sum()
    for k in np.argsort(-(exact - alloc), kind="stable")[:remainder]:
        alloc[k] += 1
    for k in np.flatnonzero((alloc == 0) & (np.asarray(fractions) > 0)):
        alloc[np.argmax(alloc)] -= 1
        alloc[k] += 1
    return alloc


def split(dataset: LabeledDataset, fractions: Sequence[float] = (0.8, 0.1, 0.1),
          seed=None) -> LabeledDataset:
    """Stratified train/validation/test tags, proportional within every class."""
    fractions = list(fractions) + [0.0] * (3 - len(fractions))
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1) > 1e-9:
        raise InvalidArgument("fractions must be three nonnegative numbers summing to 1")
    needed = sum(f > 0 for f in fractions)
    rng = np.random.default_rng(seed)
    tags = np.empty(len(dataset), dtype=object)
    for k in np.unique(dataset.labels):
        rows = np.flatnonzero(dataset.labels == k)
        if rows.size < needed:
            raise InvalidArgument(f"class {k} has {rows.size} rows for {needed} splits")
        rows = rng.permutation(rows)
        bounds = np.cumsum(_allocate(rows.size, fractions))
        for name, part in zip(SPLITS, np.split(rows, bounds[:-1])):
            tags[part] = name
    return replace(dataset, tags=tags.astype(str))
