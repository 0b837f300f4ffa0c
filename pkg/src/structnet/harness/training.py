"""Mini-batch SGD training with per-epoch CSV metrics."""

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..network import (
    backward_batch,
    build_network,
    forward_batch,
    loss_eval_batch,
    sgd_step,
)

__all__ = ["TrainConfig", "train", "LOG_HEADER"]

LOG_HEADER = ("epoch", "lr", "train_loss", "train_acc", "test_loss", "test_acc")


@dataclass
class TrainConfig:
    """Everything a training run needs.

    variants may be a single tag ("dense", "toeplitz", "hankel", "lower",
    "upper", or "lu" for alternating triangulars) or one tag per layer.
    lr_decay multiplies the rate by 0.2 every 10 epochs when set.
    """

    dataset: object
    dims: tuple
    variants: object = "dense"
    activation: str = "tanh"
    loss: str = ""
    lr: float = 0.01
    batch_size: int = 20
    epochs: int = 10
    seed: int = 0
    lr_decay: bool = False
    log_path: str = ""

    def resolved_loss(self):
        if self.loss:
            return self.loss
        return "cross_entropy" if self.dataset.task == "classification" else "mse"


def _validate(config):
    ds = config.dataset
    dims = tuple(int(d) for d in config.dims)
    if len(dims) < 2:
        raise ConfigError("dims must list input, hidden..., output sizes")
    if dims[0] != ds.input_dim:
        raise ConfigError(
            f"dims[0]={dims[0]} but the dataset has input dim {ds.input_dim}"
        )
    loss = config.resolved_loss()
    if loss not in ("cross_entropy", "mse"):
        raise ConfigError(f"unknown loss {loss!r}")
    if loss == "cross_entropy":
        classes = ds.class_count()
        if dims[-1] < classes:
            raise ConfigError(
                f"output dim {dims[-1]} below the dataset's {classes} classes"
            )
    if config.batch_size < 1:
        raise ConfigError("batch_size must be at least 1")
    if config.epochs < 0:
        raise ConfigError("epochs cannot be negative")
    if config.lr <= 0:
        raise ConfigError("lr must be positive")
    return dims, loss


def _metrics(net, loss, x, y, batch=512):
    total_loss = 0.0
    hits = 0
    count = x.shape[0]
    if count == 0:
        return 0.0, None
    for i0 in range(0, count, batch):
        xb, yb = x[i0 : i0 + batch], y[i0 : i0 + batch]
        out, _, _ = forward_batch(net, xb)
        val, _ = loss_eval_batch(loss, out, yb)
        total_loss += val * xb.shape[0]
        if loss == "cross_entropy":
            hits += int(np.sum(out.argmax(axis=1) == yb))
    acc = hits / count if loss == "cross_entropy" else None
    return total_loss / count, acc


def train(config):
    """Run mini-batch SGD; returns (net, log rows).

    Each log row matches LOG_HEADER; accuracy cells are empty for
    regression losses.  Writes the rows to config.log_path when set.
    Deterministic for a fixed seed.
    """
    dims, loss = _validate(config)
    ds = config.dataset
    net = build_network(dims, config.variants, config.activation, seed=config.seed)
    rows = []
    rng = np.random.default_rng(config.seed + 1)
    lr = config.lr
    for epoch in range(1, config.epochs + 1):
        if config.lr_decay and epoch > 1 and (epoch - 1) % 10 == 0:
            lr *= 0.2
        order = rng.permutation(ds.train_x.shape[0])
        for i0 in range(0, order.size, config.batch_size):
            idx = order[i0 : i0 + config.batch_size]
            out, zs, ys = forward_batch(net, ds.train_x[idx])
            _, grad = loss_eval_batch(loss, out, ds.train_y[idx])
            net = sgd_step(net, backward_batch(net, zs, ys, grad), lr)
        train_loss, train_acc = _metrics(net, loss, ds.train_x, ds.train_y)
        test_loss, test_acc = _metrics(net, loss, ds.test_x, ds.test_y)
        rows.append(
            (
                epoch,
                lr,
                train_loss,
                "" if train_acc is None else train_acc,
                test_loss,
                "" if test_acc is None else test_acc,
            )
        )
    if config.log_path:
        Path(config.log_path).write_text(log_to_csv(rows), encoding="utf-8")
    return net, rows


def log_to_csv(rows):
    """Render log rows with the fixed header; repr-format the floats."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOG_HEADER)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()
