"""MNIST IDX reading/writing and the binary {0, 1} splits.

IDX layout: a 4-byte big-endian magic (``0x00000803`` for images,
``0x00000801`` for labels), one big-endian uint32 per dimension, then raw
unsigned bytes. Gzip-wrapped files (``1f 8b`` prefix) are unwrapped
transparently.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, IdxFormatError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _maybe_gunzip(data: bytes) -> bytes:
    if data[:2] == b"\x1f\x8b":
        return gzip.decompress(data)
    return data


def _parse(data: bytes, magic: int, ndim: int) -> np.ndarray:
    data = _maybe_gunzip(bytes(data))
    header = 4 + 4 * ndim
    if len(data) < 4:
        raise IdxFormatError("file too short for magic number", 0)
    (found,) = struct.unpack(">I", data[:4])
    if found != magic:
        raise IdxFormatError(f"bad magic 0x{found:08x}, expected 0x{magic:08x}", 0)
    if len(data) < header:
        raise IdxFormatError(f"truncated header, need {header} bytes", len(data))
    dims = struct.unpack(f">{ndim}I", data[4:header])
    expected = int(np.prod(dims, dtype=np.int64))
    payload = len(data) - header
    if payload < expected:
        raise IdxFormatError(f"truncated payload: dims {dims} need {expected} bytes, found {payload}", len(data))
    if payload > expected:
        raise IdxFormatError(f"payload longer than dims {dims} allow ({payload} > {expected} bytes)", header + expected)
    return np.frombuffer(data, dtype=np.uint8, offset=header).reshape(dims).copy()


def parse_idx_images(data: bytes) -> np.ndarray:
    """Parse an image file into a ``(count, rows, cols)`` uint8 array."""
    return _parse(data, IMAGES_MAGIC, 3)


def parse_idx_labels(data: bytes) -> np.ndarray:
    """Parse a label file into a ``(count,)`` uint8 array of digits 0-9."""
    labels = _parse(data, LABELS_MAGIC, 1)
    if labels.size and labels.max() > 9:
        k = int(np.argmax(labels > 9))
        raise IdxFormatError(f"label {labels[k]} is not a digit", 8 + k)
    return labels


def serialize_idx_images(images) -> bytes:
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError(f"images must be (count, rows, cols), got shape {images.shape}")
    return struct.pack(">4I", IMAGES_MAGIC, *images.shape) + images.tobytes()


def serialize_idx_labels(labels) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8).ravel()
    return struct.pack(">2I", LABELS_MAGIC, labels.size) + labels.tobytes()


def _find(data_dir: Path, stem: str) -> Path | None:
    for name in (stem, stem + ".gz"):
        if (data_dir / name).exists():
            return data_dir / name
    return None


def load_mnist(data_dir, split: str = "train"):
    """Read ``{split}-images-idx3-ubyte[.gz]`` and the matching labels.

    ``split`` is ``"train"`` or ``"t10k"``.
    """
    data_dir = Path(data_dir)
    img = _find(data_dir, f"{split}-images-idx3-ubyte")
    lab = _find(data_dir, f"{split}-labels-idx1-ubyte")
    missing = [n for n, p in ((f"{split}-images-idx3-ubyte", img), (f"{split}-labels-idx1-ubyte", lab)) if p is None]
    if missing:
        raise FileNotFoundError(f"{', '.join(missing)}[.gz] not found in {data_dir}")
    images = parse_idx_images(img.read_bytes())
    labels = parse_idx_labels(lab.read_bytes())
    if len(images) != len(labels):
        raise IdxFormatError(f"{len(images)} images but {len(labels)} labels", 4)
    return images, labels


@dataclass
class Dataset:
    """Flattened features in [0, 1], digit labels in {0, 1} and one-hot targets.

    ``source_index`` records which rows of the source arrays were taken.
    """

    features: np.ndarray
    labels: np.ndarray
    source_index: np.ndarray | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels differ in length")

    @property
    def targets(self) -> np.ndarray:
        return np.eye(2)[self.labels]

    def __len__(self):
        return len(self.labels)


def make_binary_split(images, labels, n_train: int, n_val: int, seed=0):
    """Balanced, disjoint train/validation sets of digits 0 and 1.

    Each split holds half zeros and half ones (odd sizes give the extra
    sample to digit 0). Pixels are divided by 255.
    """
    images = np.asarray(images)
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    quotas = [((n_train + 1) // 2, (n_val + 1) // 2), (n_train // 2, n_val // 2)]
    train_idx, val_idx = [], []
    for digit, (q_train, q_val) in enumerate(quotas):
        pool = np.flatnonzero(labels == digit)
        if pool.size < q_train + q_val:
            raise ConfigurationError(f"need {q_train + q_val} images of digit {digit}, only {pool.size} available")
        pool = rng.permutation(pool)
        train_idx.append(pool[:q_train])
        val_idx.append(pool[q_train:q_train + q_val])
    train_idx = rng.permutation(np.concatenate(train_idx))
    val_idx = rng.permutation(np.concatenate(val_idx))

    def build(idx):
        feats = images[idx].reshape(len(idx), -1).astype(float) / 255.0
        return Dataset(feats, labels[idx].astype(int), source_index=idx)

    return build(train_idx), build(val_idx)


def _edges(size, parts):
    return np.round(np.linspace(0, size, parts + 1)).astype(int)


def pool_to_grid(image, rows: int, cols: int) -> np.ndarray:
    """Block-average a 2-D image onto a ``rows x cols`` grid, scaled to [0, pi].

    Block edges are ``round(linspace(0, size, parts + 1))``, so sizes that do
    not divide evenly get blocks differing by at most one pixel. The image
    is expected in [0, 1]; a flat 784-vector is reshaped to 28x28.
    """
    if rows < 1 or cols < 1:
        raise ConfigurationError("rows and cols must be positive")
    image = np.asarray(image, dtype=float)
    if image.ndim == 1:
        side = int(round(np.sqrt(image.size)))
        image = image.reshape(side, side)
    h, w = image.shape
    if rows > h or cols > w:
        raise ConfigurationError(f"grid {rows}x{cols} larger than image {h}x{w}")
    re, ce = _edges(h, rows), _edges(w, cols)
    sums = np.add.reduceat(np.add.reduceat(image, re[:-1], axis=0), ce[:-1], axis=1)
    areas = np.outer(np.diff(re), np.diff(ce))
    return np.pi * (sums / areas).ravel()
