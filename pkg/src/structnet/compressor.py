"""Dense-to-structured network compression.

Rewrites a trained dense network as one whose every weight is Toeplitz,
Hankel, or triangular, within a target sup-norm error on a sampled
domain.  The construction factors each weight into a chain of structured
matrices, then splices identity-approximating activations between the
chain links so the factors become genuine network layers; all scalings
are absorbed into neighboring factors, which keeps their structure.

Also hosts the exact single-hidden-layer restructuring and the bridge
between Toeplitz layers and stride-1 convolutions.
"""

from dataclasses import dataclass

import numpy as np

from .activations import get_activation
from .decompose import (
    FactorChain,
    FitOptions,
    hankel_factorize,
    lu_chain,
    toeplitz_factorize,
)
from .errors import (
    CompressionInfeasibleError,
    DimensionError,
    FactorizationError,
    ParameterError,
)
from .identity_approx import SampleDomain, choose_h, rho_apply
from .network import Layer, NetworkSpec, forward_batch
from .structmat import (
    DenseMatrix,
    HankelMatrix,
    StructuredMatrix,
    ToeplitzMatrix,
    TriangularMatrix,
    embed_rows_hankel,
    embed_rows_toeplitz,
    identity_toeplitz,
)

__all__ = [
    "CompressOptions",
    "CompressionReport",
    "compress",
    "restructure_shallow",
    "measure_sup_error",
    "operator_norm",
    "Conv1dSpec",
    "toeplitz_layer_to_conv",
    "conv_to_toeplitz",
    "apply_conv1d",
]


# --------------------------------------------------------------------------
# small utilities
# --------------------------------------------------------------------------

def operator_norm(a, iters=100, seed=0):
    """Spectral norm estimate by power iteration on A^T A.

    Power iteration approaches the top singular value from below, so the
    estimate is inflated by 1% before use in error budgets.
    """
    if hasattr(a, "to_dense"):
        a = a.to_dense()
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    s = 0.0
    for _ in range(iters):
        w = a @ v
        s = np.linalg.norm(w)
        if s == 0.0:
            return 0.0
        v = a.T @ w
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
    return float(s) * 1.01


def measure_sup_error(net_a, net_b, points):
    """Largest Euclidean gap between two networks over sample points."""
    pts = np.asarray(points, dtype=float)
    out_a, _, _ = forward_batch(net_a, pts)
    out_b, _, _ = forward_batch(net_b, pts)
    return float(np.max(np.linalg.norm(out_a - out_b, axis=1)))


def _flip_selector(rows, cols):
    """Hankel selector: exchange block in the leading square, zeros below."""
    anti = np.zeros(rows + cols - 1)
    anti[min(rows, cols) - 1] = 1.0
    return HankelMatrix(rows, cols, anti)


# --------------------------------------------------------------------------
# options and report
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CompressOptions:
    """Knobs for compress().

    factor_budget caps the factor count tried per weight (defaults to the
    2n+5 existence budget for the weight's square size); fit carries base
    gradient-descent options (its target is overridden per layer from the
    error budget); validation_factor sizes the held-out resample relative
    to the tuning cloud.
    """

    seed: int = 0
    factor_budget: int = 0
    fit: FitOptions = FitOptions(max_iter=8000, restarts=9)
    lu_tol: float = 1e-9
    validation_factor: int = 5


@dataclass(frozen=True)
class CompressionReport:
    """What compress() did and how well it worked."""

    eps: float
    mode: str
    achieved: float
    factor_counts: tuple
    h_values: tuple
    per_weight_errors: tuple
    network: NetworkSpec
    widths: tuple
    tuning_sup: float
    validation_count: int


# --------------------------------------------------------------------------
# per-mode factor chains for one weight matrix
# --------------------------------------------------------------------------

_SCHEDULE = (1, 2, 3, 4, 5, 6, 8, 10, 13, 17, 21, 26, 32)


def _already_structured(weight, mode):
    if mode == "toeplitz":
        return isinstance(weight, ToeplitzMatrix)
    if mode == "hankel":
        return isinstance(weight, HankelMatrix)
    return isinstance(weight, TriangularMatrix)


def _square_and_selector(arr, mode):
    """Express a rectangular weight as square-to-factor plus an exact
    structured selector; returns (square, selector, side) with side 'right'
    when the selector is applied before the square's chain."""
    m, n = arr.shape
    if m == n:
        return arr, None, None
    if mode == "toeplitz":
        if m > n:
            square = np.zeros((m, m))
            square[:, :n] = arr
            return square, identity_toeplitz(m, n), "right"
        square = np.zeros((n, n))
        square[:m, :] = arr
        return square, identity_toeplitz(m, n), "left"
    flip_in = np.eye(n)[::-1]
    flip_out = np.eye(m)[::-1]
    if m > n:
        square = np.zeros((m, m))
        square[:, :n] = arr @ flip_in
        return square, _flip_selector(m, n), "right"
    square = np.zeros((n, n))
    square[:m, :] = flip_out @ arr
    return square, _flip_selector(m, n), "left"


def _chain_candidate(arr, mode, r, fit_opts):
    """Factor one weight at budget r; returns factors in product order."""
    if mode == "lu":
        chain = lu_chain(arr, 1e-9)
        return chain.factors
    square, selector, side = _square_and_selector(arr, mode)
    fitter = toeplitz_factorize if mode == "toeplitz" else hankel_factorize
    chain = fitter(square, r, fit_opts)
    if selector is None:
        return chain.factors
    if side == "right":
        return chain.factors + (selector,)
    return (selector,) + chain.factors


def _product(factors):
    prod = factors[0].to_dense()
    for f in factors[1:]:
        prod = prod @ f.to_dense()
    return prod


# --------------------------------------------------------------------------
# the construction
# --------------------------------------------------------------------------

def _push_layer(pts, weight_dense, bias, activation):
    y = pts @ weight_dense.T + bias
    return activation.ev(y) if activation else y


def _net_activation(net):
    """The single activation shared by the network's nonlinear layers."""
    acts = {l.activation.name: l.activation for l in net.layers if l.activation}
    if not acts:
        return get_activation("identity")
    if len(acts) > 1:
        raise ParameterError(
            f"compression needs one shared activation, found {sorted(acts)}"
        )
    return next(iter(acts.values()))


def compress(dense_net, domain, eps, mode, opts=None):
    """Rewrite a network with structured weights, within eps on the domain.

    The error budget is split half for weight factorization and half for
    the identity insertions.  Factorization quality is judged by measured
    effect: each candidate chain replaces its layer inside the partially
    rewritten network and the induced output change over the tuning cloud
    must stay within the layer's share.  Insertion scales h are then
    chosen successively on the pushed-forward cloud, each against its
    share deflated by a downstream Lipschitz bound (product of factor
    operator norms).  The result is validated on a fresh resample.
    """
    if eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if mode not in ("toeplitz", "hankel", "lu"):
        raise ParameterError(f"unknown compression mode {mode!r}")
    if opts is None:
        opts = CompressOptions()
    if domain.dim != dense_net.in_dim:
        raise DimensionError(
            f"domain dim {domain.dim} does not match network input {dense_net.in_dim}"
        )
    sigma = _net_activation(dense_net)
    if not sigma.uniformly_continuous:
        raise ParameterError(
            f"activation {sigma.name!r} is not flagged uniformly continuous"
        )
    layers = dense_net.layers
    k = len(layers)
    pts = domain.points

    if all(_already_structured(l.weight, mode) for l in layers):
        return CompressionReport(
            eps=eps,
            mode=mode,
            achieved=0.0,
            factor_counts=(1,) * k,
            h_values=(),
            per_weight_errors=(0.0,) * k,
            network=dense_net,
            widths=dense_net.widths,
            tuning_sup=0.0,
            validation_count=0,
        )

    eps_fact = eps / 2.0
    eps_ins = eps / 2.0
    to_factor = [not _already_structured(l.weight, mode) for l in layers]
    share = eps_fact / max(1, sum(to_factor))

    # reference outputs of the untouched network, and per-stage clouds
    # pushed through the original layers (for the downstream halves)
    orig_clouds = [pts]
    for layer in layers:
        orig_clouds.append(
            _push_layer(orig_clouds[-1], layer.weight.to_dense(), layer.bias, layer.activation)
        )

    def downstream(values, start):
        for layer in layers[start:]:
            values = _push_layer(values, layer.weight.to_dense(), layer.bias, layer.activation)
        return values

    chains = []
    errors = []
    cloud = pts  # pushed through the already-replaced prefix
    for j, layer in enumerate(layers):
        arr = layer.weight.to_dense()
        if not to_factor[j]:
            chains.append((layer.weight,))
            errors.append(0.0)
            cloud = _push_layer(cloud, arr, layer.bias, layer.activation)
            continue
        base = downstream(
            _push_layer(cloud, arr, layer.bias, layer.activation), j + 1
        )
        cap = opts.factor_budget or (2 * max(arr.shape) + 5)
        radius = float(np.max(np.linalg.norm(cloud, axis=1))) or 1.0
        norm_b = float(np.linalg.norm(arr)) or 1.0
        down_lip = 1.0
        for later in layers[j + 1 :]:
            down_lip *= operator_norm(later.weight.to_dense(), seed=opts.seed)
        goal = share / (max(down_lip, 1e-12) * radius * norm_b)
        goal = float(np.clip(0.5 * goal, 1e-10, 0.2))
        accepted = None
        best_gap = np.inf
        for r in _SCHEDULE:
            if r > cap:
                break
            if mode == "lu" and r > 1:
                break  # lu chains have a fixed two-factor shape
            fit = FitOptions(
                max_iter=opts.fit.max_iter,
                step=opts.fit.step,
                seed=opts.seed,
                target=goal,
                noise=opts.fit.noise,
                restarts=opts.fit.restarts,
            )
            try:
                factors = _chain_candidate(arr, mode, r, fit)
            except FactorizationError as exc:
                raise CompressionInfeasibleError(
                    f"layer {j}: weight factorization failed: {exc}", layer=j
                ) from exc
            prod = _product(factors)
            replaced = downstream(
                _push_layer(cloud, prod, layer.bias, layer.activation), j + 1
            )
            gap = float(np.max(np.linalg.norm(replaced - base, axis=1)))
            if gap <= share:
                accepted = (factors, prod)
                break
            if gap < best_gap:
                best_gap = gap
        if accepted is None:
            raise CompressionInfeasibleError(
                f"layer {j}: no factor chain within its error share "
                f"{share:.3g} (best measured effect {best_gap:.3g}); "
                f"raise eps or the factor budget",
                layer=j,
            )
        factors, prod = accepted
        chains.append(factors)
        err = float(np.linalg.norm(arr - prod) / norm_b)
        errors.append(err)
        cloud = _push_layer(cloud, prod, layer.bias, layer.activation)

    # --- insertion stage: realize each chain as sub-layers, choosing h's
    # successively on the cloud as it actually flows through the result ---
    n_ins = sum(len(c) - 1 for c in chains)
    chain_norms = [
        float(np.prod([operator_norm(f.to_dense(), seed=opts.seed) for f in c]))
        for c in chains
    ]
    suffix = [1.0] * (k + 1)
    for j in range(k - 1, -1, -1):
        suffix[j] = suffix[j + 1] * chain_norms[j]

    a = sigma.smooth_point
    sig_a = float(sigma.ev(np.asarray(a)))
    slope = float(sigma.deriv(np.asarray(a)))

    new_layers = []
    h_values = []
    cloud = pts
    for j, layer in enumerate(layers):
        apps = list(reversed(chains[j]))  # application order
        c = len(apps)
        if c == 1:
            new_layers.append(Layer(apps[0], layer.bias, layer.activation))
            cloud = _push_layer(cloud, apps[0].to_dense(), layer.bias, layer.activation)
            continue
        app_norms = [operator_norm(f.to_dense(), seed=opts.seed) for f in apps]
        hs = []
        values = cloud
        for t in range(c - 1):
            u = values @ apps[t].to_dense().T
            rest = float(np.prod(app_norms[t + 1 :])) * suffix[j + 1]
            budget = eps_ins / (n_ins * max(rest, 1e-12) * np.sqrt(u.shape[1]))
            h = choose_h(sigma, SampleDomain(u), budget)
            hs.append(h)
            values = rho_apply(sigma, h, u)
        h_values.extend(hs)
        # realized sub-layers: scale into the activation, then undo the
        # scale and the constant offset in the next weight and bias
        rows0 = apps[0].rows
        new_layers.append(Layer(apps[0].scale(hs[0]), np.full(rows0, a), sigma))
        for t in range(1, c - 1):
            w = apps[t].scale(hs[t] / (hs[t - 1] * slope))
            corr = (hs[t] * sig_a / (hs[t - 1] * slope)) * (
                apps[t].to_dense() @ np.ones(apps[t].cols)
            )
            new_layers.append(Layer(w, np.full(apps[t].rows, a) - corr, sigma))
        w = apps[-1].scale(1.0 / (hs[-1] * slope))
        corr = (sig_a / (hs[-1] * slope)) * (
            apps[-1].to_dense() @ np.ones(apps[-1].cols)
        )
        new_layers.append(Layer(w, layer.bias - corr, layer.activation))
        cloud = _push_layer(cloud, _product(chains[j]), layer.bias, layer.activation)

    structured = NetworkSpec(new_layers)
    tuning_sup = measure_sup_error(dense_net, structured, pts)

    rng = np.random.default_rng(opts.seed + 1)
    n_val = opts.validation_factor * len(pts)
    val = rng.uniform(-domain.radius, domain.radius, size=(n_val, domain.dim))
    achieved = measure_sup_error(dense_net, structured, val)

    return CompressionReport(
        eps=eps,
        mode=mode,
        achieved=achieved,
        factor_counts=tuple(len(c) for c in chains),
        h_values=tuple(h_values),
        per_weight_errors=tuple(errors),
        network=structured,
        widths=structured.widths,
        tuning_sup=tuning_sup,
        validation_count=n_val,
    )


# --------------------------------------------------------------------------
# exact shallow restructuring
# --------------------------------------------------------------------------

def restructure_shallow(d, b, c, mode):
    """Rewrite d . sigma(B x + c) as a . sigma(A x + bias) with structured A.

    Exact for every activation: the toeplitz/hankel modes embed B's rows
    into a structured matrix with padding rows whose outputs get zero
    outer weight; the lower mode stacks zero rows on top so the weight
    becomes lower triangular.  Returns (a, A, bias).
    """
    d = np.asarray(d, dtype=float)
    arr = b.to_dense() if isinstance(b, StructuredMatrix) else np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = arr.shape
    if d.shape != (m,) or c.shape != (m,):
        raise DimensionError(
            f"outer weight and bias must have length {m}, got {d.shape} and {c.shape}"
        )
    if mode in ("toeplitz", "hankel"):
        embed = embed_rows_toeplitz if mode == "toeplitz" else embed_rows_hankel
        mat, row_map = embed(arr)
        a = np.zeros(mat.rows)
        bias = np.zeros(mat.rows)
        a[row_map] = d
        bias[row_map] = c
        return a, mat, bias
    if mode == "lower":
        stacked = np.zeros((m + n, n))
        stacked[n:, :] = arr
        mat = TriangularMatrix.from_dense(stacked, "lower")
        a = np.concatenate([np.zeros(n), d])
        bias = np.concatenate([np.zeros(n), c])
        return a, mat, bias
    raise ParameterError(f"unknown restructure mode {mode!r}")


# --------------------------------------------------------------------------
# Toeplitz <-> stride-1 convolution
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Conv1dSpec:
    """A stride-1 valid cross-correlation with explicit matvec shape."""

    kernel: np.ndarray
    rows: int
    cols: int
    stride: int = 1


def toeplitz_layer_to_conv(t):
    """Kernel equivalent of a Toeplitz matvec: the diagonals reversed."""
    if not isinstance(t, ToeplitzMatrix):
        raise ParameterError("expected a ToeplitzMatrix")
    kernel = np.array(t.params[::-1])
    kernel.setflags(write=False)
    return Conv1dSpec(kernel=kernel, rows=t.rows, cols=t.cols)


def conv_to_toeplitz(spec):
    """Inverse of toeplitz_layer_to_conv; parameter-exact round trip."""
    if spec.stride != 1:
        raise ParameterError("only stride-1 kernels correspond to Toeplitz matvecs")
    kernel = np.asarray(spec.kernel, dtype=float)
    if kernel.shape != (spec.rows + spec.cols - 1,):
        raise DimensionError(
            f"kernel length {kernel.size} does not match shape "
            f"{spec.rows}x{spec.cols}"
        )
    return ToeplitzMatrix(spec.rows, spec.cols, kernel[::-1])


def apply_conv1d(spec, x):
    """Run the convolution: zero-extend, then valid cross-correlation."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.cols,):
        raise DimensionError(f"input length {x.shape} does not match {spec.cols}")
    extended = np.zeros(spec.cols + 2 * (spec.rows - 1))
    if spec.rows == 1:
        extended = x.copy()
    else:
        extended[spec.rows - 1 : spec.rows - 1 + spec.cols] = x
    return np.correlate(extended, spec.kernel, mode="valid")[:: spec.stride]
