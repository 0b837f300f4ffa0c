"""Top-level acceptance checks, one per release criterion.

Every test records a PASS/FAIL summary line through the ``criterion``
fixture (re-printed at the end of the run) and then asserts, so a red
test still leaves a readable verdict behind.
"""

import time

import numpy as np

from structnet import (
    CompressOptions,
    FitOptions,
    HankelMatrix,
    Layer,
    NetworkSpec,
    ToeplitzMatrix,
    TriangularMatrix,
    apply_conv1d,
    backward,
    build_network,
    choose_h,
    compress,
    conv_to_toeplitz,
    embed_rows_hankel,
    embed_rows_toeplitz,
    forward,
    get_activation,
    loss_eval,
    lu_approx,
    measure_sup_error,
    parameter_count,
    restructure_shallow,
    rho_apply,
    toeplitz_factorize,
    toeplitz_layer_to_conv,
)
from structnet.identity_approx import SampleDomain
from structnet.harness import TrainConfig, bench, load_idx, synth_dataset, train


def rel_err(approx, exact):
    scale = np.linalg.norm(exact)
    return float(np.linalg.norm(approx - exact) / (scale if scale else 1.0))


def test_criterion_01_fft_matvec_equivalence(criterion):
    rng = np.random.default_rng(201)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(200):
        m = int(rng.integers(3, 258))
        n = int(rng.integers(3, 258))
        cls = ToeplitzMatrix if i % 2 == 0 else HankelMatrix
        mat = cls(m, n, rng.standard_normal(m + n - 1))
        x = rng.standard_normal(n)
        worst = max(worst, rel_err(mat.matvec_fft(x), mat.matvec_naive(x)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 10.0
    criterion(1, "fft matvec equivalence", ok,
              f"200 matrices, worst rel err {worst:.2e}, {elapsed:.1f}s")
    assert worst <= 1e-10
    assert elapsed < 10.0


def _random_test_net(rng, variant, act):
    """Small net with random biases, redrawn until every preactivation
    clears the leaky-relu kink by a margin safely above the probe step."""
    for _ in range(80):
        depth = int(rng.integers(1, 4))
        widths = tuple(int(rng.integers(2, 9)) for _ in range(depth + 1))
        base = build_network(widths, variant, act, seed=int(rng.integers(2**31)))
        net = NetworkSpec([
            Layer(lay.weight, rng.normal(size=lay.weight.rows) * 0.5,
                  lay.activation.name if lay.activation else None)
            for lay in base.layers
        ])
        x = rng.normal(size=widths[0])
        target = rng.normal(size=widths[-1])
        _, tape = forward(net, x)
        clearance = min(float(np.min(np.abs(z))) for z in tape.preacts)
        if act != "leaky_relu" or clearance > 1e-3:
            return net, x, target
    raise AssertionError("no kink-clear draw found")


def _fd_loss_grads(net, x, target, step):
    def loss_at(layers):
        out, _ = forward(NetworkSpec(layers), x)
        return loss_eval("mse", out, target)[0]

    wgrads, bgrads = [], []
    for idx, layer in enumerate(net.layers):
        act = layer.activation.name if layer.activation else None
        wp = np.asarray(layer.weight.params, dtype=float)
        g = np.zeros_like(wp)
        for k in range(wp.size):
            vals = []
            for sign in (1.0, -1.0):
                bumped = wp.copy()
                bumped[k] += sign * step
                layers = list(net.layers)
                layers[idx] = Layer(layer.weight.with_params(bumped),
                                    layer.bias, act)
                vals.append(loss_at(layers))
            g[k] = (vals[0] - vals[1]) / (2 * step)
        wgrads.append(g)
        bp = np.asarray(layer.bias, dtype=float)
        gb = np.zeros_like(bp)
        for k in range(bp.size):
            vals = []
            for sign in (1.0, -1.0):
                bumped = bp.copy()
                bumped[k] += sign * step
                layers = list(net.layers)
                layers[idx] = Layer(layer.weight, bumped, act)
                vals.append(loss_at(layers))
            gb[k] = (vals[0] - vals[1]) / (2 * step)
        bgrads.append(gb)
    return wgrads, bgrads


def test_criterion_02_gradients_match_finite_differences(criterion):
    rng = np.random.default_rng(202)
    variants = ("dense", "toeplitz", "hankel", "lu")
    acts = ("tanh", "sigmoid", "leaky_relu")
    t0 = time.perf_counter()
    worst = 0.0
    for case in range(50):
        variant = variants[case % 4]
        act = acts[case % 3]
        net, x, target = _random_test_net(rng, variant, act)
        out, tape = forward(net, x)
        _, g = loss_eval("mse", out, target)
        grads = backward(net, tape, g)
        fd_w, fd_b = _fd_loss_grads(net, x, target, step=1e-5)
        for analytic, fd in zip(list(grads.weights) + list(grads.biases),
                                fd_w + fd_b):
            denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-6)
            worst = max(worst, float(np.max(np.abs(analytic - fd) / denom)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 60.0
    criterion(2, "gradients vs finite differences", ok,
              f"50 nets, worst per-parameter rel err {worst:.2e}, {elapsed:.1f}s")
    assert worst <= 1e-4
    assert elapsed < 60.0


def test_criterion_03_shallow_rewrite_exactness(criterion):
    rng = np.random.default_rng(203)
    sigma = get_activation("tanh")
    worst = 0.0
    for mode in ("toeplitz", "hankel", "lower"):
        d = rng.normal(size=5)
        w = rng.normal(size=(5, 3))
        b = rng.normal(size=5)
        a, mat, bias = restructure_shallow(d, w, b, mode)
        dense = mat.to_dense()
        for _ in range(100):
            x = rng.normal(size=3)
            orig = float(d @ sigma.ev(w @ x + b))
            new = float(a @ sigma.ev(dense @ x + bias))
            worst = max(worst, abs(orig - new))
    # 2x2 embeddings written out by hand
    square = np.array([[1.0, 2.0], [3.0, 4.0]])
    toep, toep_rows = embed_rows_toeplitz(square)
    hank, hank_rows = embed_rows_hankel(square)
    toep_want = np.array([[1.0, 2.0], [4.0, 1.0], [3.0, 4.0]])
    hank_want = np.array([[1.0, 2.0], [2.0, 3.0], [3.0, 4.0]])
    displays_ok = (
        np.array_equal(toep.to_dense(), toep_want)
        and np.array_equal(hank.to_dense(), hank_want)
        and toep_rows == [0, 2]
        and hank_rows == [0, 2]
    )
    ok = worst <= 1e-12 and displays_ok
    criterion(3, "exact shallow restructuring", ok,
              f"3 modes x 100 points, worst gap {worst:.2e}, "
              f"2x2 embeddings {'match' if displays_ok else 'MISMATCH'}")
    assert worst <= 1e-12
    assert displays_ok


def test_criterion_04_identity_knob_meets_tolerance(criterion):
    axis = np.linspace(-1.0, 1.0, 22)
    grid = np.stack(np.meshgrid(axis, axis, axis), axis=-1).reshape(-1, 3)
    assert grid.shape[0] >= 10_000
    domain = SampleDomain(grid, radius=1.0)
    t0 = time.perf_counter()
    worst_margin = -np.inf
    cases = 0
    for name in ("relu", "leaky_relu", "sigmoid", "tanh", "identity"):
        sigma = get_activation(name)
        for eps in (1e-2, 1e-3, 1e-4):
            h = choose_h(sigma, domain, eps)
            gap = rho_apply(sigma, h, grid) - grid
            sup = float(np.max(np.linalg.norm(gap, axis=1)))
            worst_margin = max(worst_margin, sup - eps)
            cases += 1
    elapsed = time.perf_counter() - t0
    ok = worst_margin <= 0.0 and elapsed < 30.0
    criterion(4, "identity approximator tolerance", ok,
              f"{cases} activation/eps cases on {grid.shape[0]} grid points, "
              f"worst sup-minus-eps {worst_margin:.2e}, {elapsed:.1f}s")
    assert worst_margin <= 0.0
    assert elapsed < 30.0


def test_criterion_05_deep_compression_end_to_end(criterion):
    ds = synth_dataset("regression", 2000, seed=0)
    config = TrainConfig(dataset=ds, dims=(2, 8, 8, 1), epochs=40, lr=0.05,
                         batch_size=20, seed=0)
    net, rows = train(config)
    tuning = SampleDomain(
        np.random.default_rng(205).uniform(-1.0, 1.0, size=(2000, 2)),
        radius=1.0,
    )
    held_out = np.random.default_rng(987).uniform(-1.0, 1.0, size=(10_000, 2))
    gaps, times = {}, {}
    alternation_ok = True
    for mode in ("lu", "toeplitz", "hankel"):
        t0 = time.perf_counter()
        report = compress(net, tuning, 0.1, mode, CompressOptions(seed=0))
        times[mode] = time.perf_counter() - t0
        gaps[mode] = measure_sup_error(net, report.network, held_out)
        if mode == "lu":
            oris = [lay.weight.orientation for lay in report.network.layers
                    if isinstance(lay.weight, TriangularMatrix)]
            alternation_ok = len(oris) >= 2 and all(
                o == ("upper" if i % 2 == 0 else "lower")
                for i, o in enumerate(oris)
            )
    worst_gap = max(gaps.values())
    slowest = max(times.values())
    ok = worst_gap <= 0.1 and alternation_ok and slowest < 300.0
    criterion(5, "trained-net compression", ok,
              "sup gaps on 10000 held-out points: "
              + " ".join(f"{m} {gaps[m]:.4f} ({times[m]:.0f}s)" for m in gaps)
              + f", triangular factors {'alternate' if alternation_ok else 'DO NOT alternate'}")
    assert worst_gap <= 0.1, gaps
    assert alternation_ok
    assert slowest < 300.0


def test_criterion_06_conv_round_trip(criterion):
    rng = np.random.default_rng(206)
    worst = 0.0
    params_exact = True
    for _ in range(50):
        m = int(rng.integers(1, 33))
        n = int(rng.integers(1, 33))
        t = ToeplitzMatrix(m, n, rng.standard_normal(m + n - 1))
        spec = toeplitz_layer_to_conv(t)
        back = conv_to_toeplitz(spec)
        params_exact &= np.array_equal(back.params, t.params)
        params_exact &= (back.rows, back.cols) == (m, n)
        x = rng.standard_normal(n)
        worst = max(worst, rel_err(apply_conv1d(spec, x), t.matvec_naive(x)))
    ok = params_exact and worst <= 1e-13
    criterion(6, "conv kernel round trip", ok,
              f"50 matrices, params {'bit-exact' if params_exact else 'DIFFER'}, "
              f"worst functional rel err {worst:.2e}")
    assert params_exact
    assert worst <= 1e-13


def test_criterion_07_fft_speedup_scaling(criterion):
    sizes = (512, 1024, 2048, 4096)
    records = bench(sizes=sizes, kinds=("dense", "toeplitz_fft"), reps=30, seed=0)
    med = {(r.kind, r.n): r.median_ns for r in records}
    ratios = [med[("dense", n)] / med[("toeplitz_fft", n)] for n in sizes]
    growing = all(b > a for a, b in zip(ratios, ratios[1:]))
    crossover = ratios[-1] > 1.0
    ok = growing and crossover
    criterion(7, "fft matvec speedup", ok,
              "dense/fft median ratios "
              + " ".join(f"n={n}: {r:.2f}" for n, r in zip(sizes, ratios)))
    assert crossover, ratios
    assert growing, ratios


def test_criterion_08_digit_benchmark_parity(criterion):
    ds = load_idx("data/digits-desk")
    assert ds.train_x.shape == (8000, 784)
    t0 = time.perf_counter()
    acc = {}
    for variant in ("dense", "toeplitz", "lu"):
        config = TrainConfig(dataset=ds, dims=(784, 128, 128, 10),
                             variants=variant, activation="relu",
                             lr=0.01, batch_size=20, epochs=10, seed=11)
        _, rows = train(config)
        acc[variant] = float(rows[-1][5])
    elapsed = time.perf_counter() - t0
    gap_toep = acc["dense"] - acc["toeplitz"]
    gap_lu = acc["dense"] - acc["lu"]
    ok = (acc["toeplitz"] >= 0.88 and gap_toep <= 0.05 and gap_lu <= 0.03
          and elapsed < 900.0)
    criterion(8, "digit-classification parity", ok,
              f"test acc dense {acc['dense']:.4f} toeplitz {acc['toeplitz']:.4f} "
              f"lu {acc['lu']:.4f}; gaps {gap_toep * 100:.1f}pt / "
              f"{gap_lu * 100:.1f}pt, {elapsed:.0f}s")
    assert acc["toeplitz"] >= 0.88, acc
    assert gap_toep <= 0.05, acc
    assert gap_lu <= 0.03, acc
    assert elapsed < 900.0


def test_criterion_09_parameter_count_audit(criterion):
    shapes = [(5, 5), (7, 4), (3, 9), (1, 6), (6, 1), (1, 1), (12, 12)]
    mismatches = []
    for m, n in shapes:
        for variant, cls in (("toeplitz", ToeplitzMatrix), ("hankel", HankelMatrix)):
            want = m + n - 1
            got = parameter_count(variant, m, n)
            stored = cls(m, n, np.zeros(got)).params.size
            if not (got == want == stored):
                mismatches.append((variant, m, n, got, want, stored))
        for orientation in ("lower", "upper"):
            if orientation == "lower":
                want = sum(1 for i in range(m) for j in range(n) if j <= i)
            else:
                want = sum(1 for i in range(m) for j in range(n) if j >= i)
            got = parameter_count("triangular", m, n, orientation)
            stored = TriangularMatrix(m, n, orientation, np.zeros(got)).params.size
            if not (got == want == stored):
                mismatches.append((orientation, m, n, got, want, stored))
    ok = not mismatches
    criterion(9, "parameter-count audit", ok,
              f"{len(shapes)} shapes x 4 variants: "
              + ("all counts match enumeration" if ok else f"mismatches {mismatches}"))
    assert not mismatches


def test_criterion_10_factorization_quality(criterion):
    details = []
    planted_worst = 0.0
    for seed in (41, 141, 241):
        rng = np.random.default_rng(seed)
        t1 = ToeplitzMatrix(4, 4, rng.standard_normal(7))
        t2 = ToeplitzMatrix(4, 4, rng.standard_normal(7))
        b = t1.to_dense() @ t2.to_dense()
        chain = toeplitz_factorize(b, 2, FitOptions(target=1e-5))
        planted_worst = max(planted_worst, rel_err(chain.product(), b))
    details.append(f"planted pairs worst {planted_worst:.2e}")

    budget_worst = 0.0
    for seed in (501, 502):
        rng = np.random.default_rng(seed)
        b = rng.standard_normal((4, 4))
        chain = toeplitz_factorize(b, 13, FitOptions(target=5e-3))
        budget_worst = max(budget_worst, rel_err(chain.product(), b))
    details.append(f"random 4x4 at 13 factors worst {budget_worst:.2e}")

    rng = np.random.default_rng(210)
    b = rng.standard_normal((8, 8))
    lo, up = lu_approx(b, 1e-8)
    lu_err = rel_err(lo.to_dense() @ up.to_dense(), b)
    details.append(f"8x8 triangular split {lu_err:.2e}")

    exchange = np.eye(4)[::-1].copy()  # zero leading minors all the way down
    lo2, up2 = lu_approx(exchange, 1e-6)
    minor_err = rel_err(lo2.to_dense() @ up2.to_dense(), exchange)
    details.append(f"zero-leading-minor case {minor_err:.2e}")

    ok = (planted_worst <= 1e-4 and budget_worst <= 1e-2
          and lu_err <= 1e-8 and minor_err <= 1e-6)
    criterion(10, "factorization quality", ok, ", ".join(details))
    assert planted_worst <= 1e-4
    assert budget_worst <= 1e-2
    assert lu_err <= 1e-8
    assert minor_err <= 1e-6
