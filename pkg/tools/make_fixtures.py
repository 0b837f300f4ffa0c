#!/usr/bin/env python3
"""Build the bundled digit-recognition fixtures.

Produces gzipped IDX files (the classic big-endian digit-file layout)
under data/digits-desk (8000 train / 2000 test) and data/digits-mini
(512 train / 128 test).  Source images are scikit-learn's bundled 8x8
handwritten digits, upscaled to 28x28 with bilinear interpolation and
quantized to 255 grey levels; the base images are split into disjoint
train/test pools so no test digit appears in training, then cycled
round-robin per class up to the requested split sizes.  Fully
deterministic.

Run from the repository root:  python3 tools/make_fixtures.py
"""

import gzip
import struct
import sys
from pathlib import Path

import numpy as np
from scipy import ndimage
from sklearn.datasets import load_digits

ROOT = Path(__file__).resolve().parent.parent


def _write_gz(path, payload):
    # fixed mtime so regeneration is byte-identical
    with open(path, "wb") as raw:
        with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as fh:
            fh.write(payload)


def write_idx_images(path, images):
    n = images.shape[0]
    side = int(np.sqrt(images.shape[1]))
    header = struct.pack(">IIII", 0x00000803, n, side, side)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_gz(path, header + images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    header = struct.pack(">II", 0x00000801, labels.shape[0])
    _write_gz(path, header + labels.astype(np.uint8).tobytes())


def upscale(img8):
    """8x8 [0,16] -> 28x28 [0,1]."""
    big = ndimage.zoom(img8 / 16.0, 3.5, order=1)
    return np.clip(big, 0.0, 1.0)


def build_split(pool_by_class, count):
    """Round-robin over classes so every prefix is nearly balanced."""
    images = np.empty((count, 28 * 28), dtype=np.uint8)
    labels = np.empty(count, dtype=np.uint8)
    cursors = {c: 0 for c in pool_by_class}
    for i in range(count):
        cls = i % 10
        pool = pool_by_class[cls]
        base = pool[cursors[cls] % len(pool)]
        cursors[cls] += 1
        images[i] = np.round(base * 255.0).astype(np.uint8).ravel()
        labels[i] = cls
    return images, labels


def main():
    digits = load_digits()
    upscaled = np.stack([upscale(img) for img in digits.images])
    labels = digits.target

    train_pool = {c: [] for c in range(10)}
    test_pool = {c: [] for c in range(10)}
    # every 5th base image of each class goes to the test pool
    per_class_seen = {c: 0 for c in range(10)}
    for img, cls in zip(upscaled, labels):
        k = per_class_seen[cls]
        per_class_seen[cls] += 1
        (test_pool if k % 5 == 4 else train_pool)[cls].append(img)

    for name, n_train, n_test in (("digits-desk", 8000, 2000),
                                  ("digits-mini", 512, 128)):
        out = ROOT / "data" / name
        tr_x, tr_y = build_split(train_pool, n_train)
        te_x, te_y = build_split(test_pool, n_test)
        write_idx_images(out / "train-images-idx3-ubyte.gz", tr_x)
        write_idx_labels(out / "train-labels-idx1-ubyte.gz", tr_y)
        write_idx_images(out / "t10k-images-idx3-ubyte.gz", te_x)
        write_idx_labels(out / "t10k-labels-idx1-ubyte.gz", te_y)
        print(f"{name}: {n_train} train / {n_test} test -> {out}")


if __name__ == "__main__":
    sys.exit(main())
