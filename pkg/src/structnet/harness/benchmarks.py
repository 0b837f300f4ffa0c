"""Matvec and train-step micro-benchmarks with CSV output.

Timings use the monotonic nanosecond clock; every (kind, size) case is
warmed up first so one-time caches (FFT twiddles, circulant spectra,
materialized views) do not pollute the measurement.
"""

import io
import time
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..network import Layer, NetworkSpec, backward, forward, loss_eval, sgd_step
from ..structmat import DenseMatrix, HankelMatrix, ToeplitzMatrix

__all__ = ["BenchRecord", "bench", "records_to_csv", "KINDS", "CSV_HEADER"]

CSV_HEADER = "kind,n,median_ns,p10_ns,p90_ns"

KINDS = (
    "dense",
    "toeplitz_naive",
    "toeplitz_fft",
    "hankel_naive",
    "hankel_fft",
    "trainstep_dense",
    "trainstep_toeplitz",
    "trainstep_toeplitz_fft",
)


@dataclass(frozen=True)
class BenchRecord:
    kind: str
    n: int
    reps: int
    median_ns: int
    p10_ns: int
    p90_ns: int


def _matvec_case(kind, n, rng):
    x = rng.standard_normal(n)
    if kind == "dense":
        mat = DenseMatrix(n, n, rng.standard_normal(n * n))
        return lambda: mat.matvec_naive(x)
    params = rng.standard_normal(2 * n - 1)
    if kind.startswith("toeplitz"):
        mat = ToeplitzMatrix(n, n, params)
    else:
        mat = HankelMatrix(n, n, params)
    if kind.endswith("_fft"):
        return lambda: mat.matvec_fft(x)
    return lambda: mat.matvec_naive(x)


def _trainstep_case(kind, n, rng):
    fast = kind.endswith("_fft")
    if "dense" in kind:
        weight = DenseMatrix(n, n, rng.standard_normal(n * n) / np.sqrt(n))
    else:
        weight = ToeplitzMatrix(n, n, rng.standard_normal(2 * n - 1) / np.sqrt(n))
    net = NetworkSpec([Layer(weight, np.zeros(n), "tanh"), ])
    x = rng.standard_normal(n)
    t = rng.standard_normal(n)

    def step():
        out, tape = forward(net, x, fast=fast)
        _, g = loss_eval("mse", out, t)
        grads = backward(net, tape, g, fast=fast)
        sgd_step(net, grads, 0.01)

    return step


def bench(sizes, kinds=KINDS, reps=30, seed=0):
    """Time each kind at each size; returns a list of BenchRecord.

    Needs reps >= 30 for stable percentiles and sizes >= 16.
    """
    if reps < 30:
        raise ParameterError(f"reps must be at least 30, got {reps}")
    sizes = [int(n) for n in sizes]
    for n in sizes:
        if n < 16:
            raise ParameterError(f"benchmark sizes start at 16, got {n}")
    for kind in kinds:
        if kind not in KINDS:
            raise ParameterError(f"unknown bench kind {kind!r}; choose from {KINDS}")
    records = []
    rng = np.random.default_rng(seed)
    for kind in kinds:
        for n in sizes:
            case = (
                _trainstep_case(kind, n, rng)
                if kind.startswith("trainstep")
                else _matvec_case(kind, n, rng)
            )
            for _ in range(3):
                case()
            times = np.empty(reps)
            for i in range(reps):
                t0 = time.perf_counter_ns()
                case()
                times[i] = time.perf_counter_ns() - t0
            records.append(
                BenchRecord(
                    kind=kind,
                    n=n,
                    reps=reps,
                    median_ns=int(np.median(times)),
                    p10_ns=int(np.percentile(times, 10)),
                    p90_ns=int(np.percentile(times, 90)),
                )
            )
    return records


def records_to_csv(records):
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in records:
        buf.write(f"{r.kind},{r.n},{r.median_ns},{r.p10_ns},{r.p90_ns}\n")
    return buf.getvalue()
