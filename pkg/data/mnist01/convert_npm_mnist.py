"""Rebuild the digit-0/1 IDX fixture from the ``mnist`` npm package (v1.1.0, MIT).

That package stores MNIST digits as JSON lists of ``byte / 255`` rounded to
three decimals; 256 distinct values per file, so ``round(v * 255)`` recovers
the original bytes exactly.

Usage::

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python convert_npm_mnist.py package/src/digits .
"""

import gzip
import json
import sys
from pathlib import Path

import numpy as np

from esqnn.mnist import serialize_idx_images, serialize_idx_labels


def main(digits_dir, out_dir):
    images, labels = [], []
    for digit in (0, 1):
        raw = np.array(json.loads(Path(digits_dir, f"{digit}.json").read_text())["data"])
        grid = np.round(raw * 255).astype(np.uint8).reshape(-1, 28, 28)
        images.append(grid)
        labels.append(np.full(len(grid), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.default_rng(0).permutation(len(labels))
    out = Path(out_dir)
    # mtime=0 keeps the gzip bytes reproducible
    out.joinpath("train-images-idx3-ubyte.gz").write_bytes(gzip.compress(serialize_idx_images(images[order]), mtime=0))
    out.joinpath("train-labels-idx1-ubyte.gz").write_bytes(gzip.compress(serialize_idx_labels(labels[order]), mtime=0))
    print(f"wrote {len(labels)} images ({np.bincount(labels).tolist()} per digit) to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:3])
