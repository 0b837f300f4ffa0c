"""Command-line interface.

Subcommands: train, compress, eval, bench, convert-shallow, export-conv.
Exit codes: 0 success, 1 usage error, 2 runtime failure.  All randomness
hangs off --seed flags; messages go to stderr, results to stdout or the
requested output files.
"""

import argparse
import json
import sys

import numpy as np

from ..activations import ACTIVATIONS
from ..compressor import (
    CompressOptions,
    compress,
    restructure_shallow,
    toeplitz_layer_to_conv,
)
from ..errors import ConfigError, StructnetError
from ..identity_approx import SampleDomain
from ..network import Layer, NetworkSpec
from ..structmat import DenseMatrix, ToeplitzMatrix
from .benchmarks import KINDS, bench, records_to_csv
from .datasets import Dataset, load_idx, synth_dataset
from .modelio import load_model, save_model
from .training import TrainConfig, log_to_csv, train

__all__ = ["main"]


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_dataset_flags(sub):
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--synth", choices=("regression", "two_spirals"),
                       help="generate a synthetic dataset")
    group.add_argument("--data", metavar="DIR",
                       help="directory of IDX digit files (optionally gzipped)")
    sub.add_argument("--n-points", type=int, default=2000,
                     help="synthetic dataset size (default 2000)")
    sub.add_argument("--limit-train", type=int, default=0,
                     help="cap the training split at N samples")
    sub.add_argument("--limit-test", type=int, default=0,
                     help="cap the test split at N samples")


def _load_dataset(args):
    if args.synth:
        ds = synth_dataset(args.synth, args.n_points, seed=args.seed)
    else:
        ds = load_idx(args.data)
    if args.limit_train or args.limit_test:
        tr = args.limit_train or ds.train_x.shape[0]
        te = args.limit_test or ds.test_x.shape[0]
        ds = Dataset(
            ds.name,
            ds.train_x[:tr],
            ds.train_y[:tr],
            ds.test_x[:te],
            ds.test_y[:te],
            ds.task,
        )
    return ds


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="structnet",
        description="structured-matrix neural networks: train, compress, bench",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("train", help="mini-batch SGD training")
    _add_dataset_flags(p)
    p.add_argument("--dims", type=_int_list, required=True,
                   help="layer widths, e.g. 784,128,128,10")
    p.add_argument("--variant", default="dense",
                   help="weight structure: dense, toeplitz, hankel, lower, upper, "
                        "lu, or a comma list per layer")
    p.add_argument("--activation", default="tanh", choices=sorted(ACTIVATIONS))
    p.add_argument("--loss", default="", choices=("", "cross_entropy", "mse"))
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr-decay", action="store_true",
                   help="multiply lr by 0.2 every 10 epochs")
    p.add_argument("--log", default="", help="write per-epoch metrics CSV here")
    p.add_argument("--out", default="", help="write the trained model here")

    p = subs.add_parser("compress", help="rewrite a dense model with structured weights")
    p.add_argument("--model", required=True)
    p.add_argument("--mode", required=True, choices=("toeplitz", "hankel", "lu"))
    p.add_argument("--eps", required=True, type=float)
    p.add_argument("--samples", type=int, default=2000,
                   help="tuning-cloud size (default 2000)")
    p.add_argument("--radius", type=float, default=1.0,
                   help="domain half-width per coordinate (default 1)")
    p.add_argument("--factor-budget", type=int, default=0,
                   help="cap on factors per weight (default: 2n+5)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="", help="write the structured model here")

    p = subs.add_parser("eval", help="score a model on a dataset")
    p.add_argument("--model", required=True)
    _add_dataset_flags(p)
    p.add_argument("--loss", default="", choices=("", "cross_entropy", "mse"))
    p.add_argument("--seed", type=int, default=0)

    p = subs.add_parser("bench", help="matvec/train-step micro-benchmarks")
    p.add_argument("--sizes", type=_int_list, default=[64, 256],
                   help="comma-separated sizes (default 64,256)")
    p.add_argument("--kinds", default=",".join(KINDS),
                   help="comma-separated kinds (default: all)")
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default="", help="write CSV here instead of stdout")

    p = subs.add_parser("convert-shallow",
                        help="exact structured rewrite of a 1-hidden-layer model")
    p.add_argument("--model", required=True)
    p.add_argument("--mode", required=True, choices=("toeplitz", "hankel", "lower"))
    p.add_argument("--out", default="", help="write the rewritten model here")

    p = subs.add_parser("export-conv",
                        help="emit the conv kernels of a model's Toeplitz layers")
    p.add_argument("--model", required=True)
    p.add_argument("--out", default="", help="write the kernel JSON here")
    return parser


def _cmd_train(args):
    ds = _load_dataset(args)
    variants = args.variant if "," not in args.variant else args.variant.split(",")
    config = TrainConfig(
        dataset=ds,
        dims=tuple(args.dims),
        variants=variants,
        activation=args.activation,
        loss=args.loss,
        lr=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        lr_decay=args.lr_decay,
        log_path=args.log,
    )
    net, rows = train(config)
    if rows:
        last = rows[-1]
        print(
            f"epoch {last[0]}: train_loss {last[2]:.6f} test_loss {last[4]:.6f}"
            + (f" test_acc {last[5]:.4f}" if last[5] != "" else "")
        )
    else:
        print("0 epochs requested; wrote the initialized model")
    if args.out:
        save_model(net, args.out)
        print(f"model -> {args.out}")
    if args.log:
        print(f"log -> {args.log}")
    return 0


def _cmd_compress(args):
    net, _ = load_model(args.model)
    rng = np.random.default_rng(args.seed)
    pts = rng.uniform(-args.radius, args.radius, size=(args.samples, net.in_dim))
    domain = SampleDomain(pts, radius=args.radius)
    opts = CompressOptions(seed=args.seed, factor_budget=args.factor_budget)
    report = compress(net, domain, args.eps, args.mode, opts)
    print(f"mode {report.mode}  eps {report.eps:g}")
    print(f"factor counts per layer: {list(report.factor_counts)}")
    print(f"insertions: {len(report.h_values)}  h values: "
          + " ".join(f"{h:g}" for h in report.h_values))
    print("per-weight reconstruction errors: "
          + " ".join(f"{e:.3g}" for e in report.per_weight_errors))
    print(f"achieved sup error on {report.validation_count} validation points: "
          f"{report.achieved:.6g}")
    if args.out:
        extra = {
            "compression_report": {
                "eps": report.eps,
                "mode": report.mode,
                "achieved": report.achieved,
                "tuning_sup": report.tuning_sup,
                "factor_counts": list(report.factor_counts),
                "h_values": list(report.h_values),
                "per_weight_errors": list(report.per_weight_errors),
                "widths": list(report.widths),
                "validation_count": report.validation_count,
            }
        }
        save_model(report.network, args.out, extra=extra)
        print(f"model -> {args.out}")
    return 0


def _cmd_eval(args):
    net, _ = load_model(args.model)
    ds = _load_dataset(args)
    loss = args.loss or ("cross_entropy" if ds.task == "classification" else "mse")
    from .training import _metrics  # shared scoring loop

    test_loss, test_acc = _metrics(net, loss, ds.test_x, ds.test_y)
    print(f"test_loss {test_loss:.6f}"
          + (f"  test_acc {test_acc:.4f}" if test_acc is not None else ""))
    total = 0
    for i, layer in enumerate(net.layers):
        w = layer.weight
        count = w.params.size + layer.bias.size
        total += count
        kind = type(w).__name__.replace("Matrix", "").lower()
        if kind == "triangular":
            kind = w.orientation
        print(f"layer {i}: {kind} {w.rows}x{w.cols}  weight params "
              f"{w.params.size}  bias {layer.bias.size}")
    print(f"total parameters: {total}")
    return 0


def _cmd_bench(args):
    kinds = [k for k in args.kinds.split(",") if k]
    records = bench(args.sizes, kinds, reps=args.reps, seed=args.seed)
    text = records_to_csv(records)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"csv -> {args.csv}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_convert_shallow(args):
    net, _ = load_model(args.model)
    if len(net.layers) != 2:
        raise ConfigError(
            "convert-shallow needs a model with exactly one hidden layer "
            f"(2 layers total), got {len(net.layers)}"
        )
    hidden, out = net.layers
    if out.activation is not None or out.weight.rows != 1:
        raise ConfigError(
            "convert-shallow needs a linear scalar output layer"
        )
    if hidden.activation is None:
        raise ConfigError("convert-shallow needs an activation on the hidden layer")
    d = out.weight.to_dense()[0]
    a, mat, bias = restructure_shallow(d, hidden.weight.to_dense(), hidden.bias, args.mode)
    rewritten = NetworkSpec([
        Layer(mat, bias, hidden.activation),
        Layer(DenseMatrix(1, mat.rows, a), out.bias, None),
    ])
    print(f"hidden width {hidden.weight.rows} -> {mat.rows} ({args.mode})")
    if args.out:
        save_model(rewritten, args.out)
        print(f"model -> {args.out}")
    return 0


def _cmd_export_conv(args):
    net, _ = load_model(args.model)
    kernels = []
    for i, layer in enumerate(net.layers):
        if isinstance(layer.weight, ToeplitzMatrix):
            spec = toeplitz_layer_to_conv(layer.weight)
            kernels.append({
                "layer": i,
                "rows": spec.rows,
                "cols": spec.cols,
                "stride": spec.stride,
                "kernel": [float(v) for v in spec.kernel],
            })
    text = json.dumps(kernels, indent=1)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"kernels -> {args.out}")
    else:
        print(text)
    return 0


_DISPATCH = {
    "train": _cmd_train,
    "compress": _cmd_compress,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "convert-shallow": _cmd_convert_shallow,
    "export-conv": _cmd_export_conv,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _DISPATCH[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StructnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
