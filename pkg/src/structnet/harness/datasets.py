"""Dataset loading: IDX image/label files and synthetic generators.

IDX is the classic big-endian binary container for digit images: a magic
number (0x00000803 for uint8 rank-3 images, 0x00000801 for uint8 rank-1
labels), one 4-byte big-endian size per dimension, then the raw payload.
Files may be gzip-compressed (.gz).
"""

import gzip
import struct
from pathlib import Path

import numpy as np

from ..errors import DataFormatError, ParameterError

__all__ = ["Dataset", "read_idx_file", "load_idx", "synth_dataset"]

_IMAGE_MAGIC = 0x00000803
_LABEL_MAGIC = 0x00000801


class Dataset:
    """Inputs plus labels with a train/test split.

    inputs: float arrays (count, dim) scaled to the model's input space;
    labels: int class indices or float regression targets, per split.
    """

    __slots__ = ("name", "train_x", "train_y", "test_x", "test_y", "task")

    def __init__(self, name, train_x, train_y, test_x, test_y, task):
        self.name = name
        self.train_x = np.asarray(train_x, dtype=float)
        self.train_y = np.asarray(train_y)
        self.test_x = np.asarray(test_x, dtype=float)
        self.test_y = np.asarray(test_y)
        self.task = task
        for x, y in ((self.train_x, self.train_y), (self.test_x, self.test_y)):
            if x.ndim != 2:
                raise DataFormatError("dataset inputs must be 2-d arrays")
            if x.shape[0] != y.shape[0]:
                raise DataFormatError(
                    f"{x.shape[0]} inputs vs {y.shape[0]} labels"
                )
        if self.train_x.shape[1] != self.test_x.shape[1]:
            raise DataFormatError("train and test input dims differ")

    @property
    def input_dim(self):
        return self.train_x.shape[1]

    def class_count(self):
        if self.task != "classification":
            raise ParameterError("class_count on a regression dataset")
        return int(max(self.train_y.max(), self.test_y.max())) + 1

    def __repr__(self):
        return (
            f"Dataset({self.name!r}, {self.train_x.shape[0]} train, "
            f"{self.test_x.shape[0]} test, dim {self.input_dim}, {self.task})"
        )


def _read_bytes(path):
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    if path.suffix == ".gz" or raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except OSError as exc:
            raise DataFormatError(f"bad gzip stream in {path}: {exc}") from exc
    return raw


def read_idx_file(path):
    """Parse one IDX file into an array of uint8 image rows or labels."""
    raw = _read_bytes(path)
    if len(raw) < 8:
        raise DataFormatError(f"{path}: too short for an IDX header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic == _IMAGE_MAGIC:
        ndim = 3
    elif magic == _LABEL_MAGIC:
        ndim = 1
    else:
        raise DataFormatError(f"{path}: unknown IDX magic 0x{magic:08x}")
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise DataFormatError(f"{path}: truncated IDX dimension block")
    dims = struct.unpack(">" + "I" * ndim, raw[4:header])
    count = int(np.prod(dims))
    payload = raw[header:]
    if len(payload) != count:
        raise DataFormatError(
            f"{path}: payload holds {len(payload)} bytes, header promises {count}"
        )
    data = np.frombuffer(payload, dtype=np.uint8)
    if ndim == 3:
        return data.reshape(dims[0], dims[1] * dims[2])
    return data


def load_idx(directory, name=None):
    """Load a directory of MNIST-layout IDX files as a Dataset.

    Expects train-images-idx3-ubyte, train-labels-idx1-ubyte,
    t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte, each optionally
    gzipped.  Pixels are scaled to [0, 1]; labels must be digits 0-9.
    """
    directory = Path(directory)

    def find(stem):
        for suffix in ("", ".gz"):
            p = directory / (stem + suffix)
            if p.exists():
                return p
        raise DataFormatError(f"missing {stem}[.gz] under {directory}")

    train_x = read_idx_file(find("train-images-idx3-ubyte"))
    train_y = read_idx_file(find("train-labels-idx1-ubyte"))
    test_x = read_idx_file(find("t10k-images-idx3-ubyte"))
    test_y = read_idx_file(find("t10k-labels-idx1-ubyte"))
    for x, y, split in ((train_x, train_y, "train"), (test_x, test_y, "test")):
        if x.shape[0] != y.shape[0]:
            raise DataFormatError(
                f"{split}: {x.shape[0]} images vs {y.shape[0]} labels"
            )
    if train_y.size and (train_y.max() > 9 or test_y.max() > 9):
        raise DataFormatError("labels outside 0-9")
    return Dataset(
        name or directory.name,
        train_x / 255.0,
        train_y.astype(np.int64),
        test_x / 255.0,
        test_y.astype(np.int64),
        "classification",
    )


def _two_bumps(x):
    """The fixed smooth regression target: two opposing Gaussian bumps."""
    c1 = np.array([0.45, 0.3])
    c2 = np.array([-0.4, -0.35])
    spread = 2.0 * 0.35 * 0.35
    d1 = ((x - c1) ** 2).sum(axis=-1)
    d2 = ((x - c2) ** 2).sum(axis=-1)
    return np.exp(-d1 / spread) - np.exp(-d2 / spread)


def synth_dataset(kind, n_points, seed=0):
    """Deterministic synthetic data: smooth 2-d regression or two spirals.

    regression: inputs uniform in [-1,1]^2, target the fixed two-bump
    surface.  two_spirals: the classic interleaved pair, one class per
    arm, balanced to within one point.  A quarter of the points (at least
    one) is held out as the test split.
    """
    if n_points <= 0:
        raise ParameterError(f"n_points must be positive, got {n_points}")
    rng = np.random.default_rng(seed)
    if kind == "regression":
        x = rng.uniform(-1.0, 1.0, size=(n_points, 2))
        y = _two_bumps(x)
        task = "regression"
    elif kind == "two_spirals":
        half = n_points // 2
        counts = (n_points - half, half)
        xs, ys = [], []
        for cls, cnt in enumerate(counts):
            t = rng.uniform(0.25, 1.0, size=cnt)
            angle = t * 3.0 * np.pi + cls * np.pi
            radius = t
            pts = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
            pts += rng.normal(scale=0.02, size=pts.shape)
            xs.append(pts)
            ys.append(np.full(cnt, cls, dtype=np.int64))
        x = np.concatenate(xs)
        y = np.concatenate(ys)
        order = rng.permutation(n_points)
        x, y = x[order], y[order]
        task = "classification"
    else:
        raise ParameterError(f"unknown synthetic dataset kind {kind!r}")
    n_test = max(1, n_points // 4)
    return Dataset(
        f"synth-{kind}",
        x[n_test:],
        y[n_test:],
        x[:n_test],
        y[:n_test],
        task,
    )
