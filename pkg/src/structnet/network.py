"""Feed-forward networks over structured weight matrices.

A network is a chain of affine layers with scalar activations between
them: z_{i+1} = act(A_i z_i + b_i), final layer usually linear.  Weights
are StructuredMatrix values, and gradients are taken directly with
respect to each layer's structured parameter vector, so a Toeplitz layer
trains over its diagonals, a triangular layer over its stored triangle,
and structural zeros stay zero forever.
"""

import numpy as np

from .activations import ActivationSpec, get_activation
from .errors import DimensionError, ParameterError
from .structmat import (
    DenseMatrix,
    HankelMatrix,
    StructuredMatrix,
    ToeplitzMatrix,
    TriangularMatrix,
    antidiagonal_index,
    diagonal_index,
    fft_convolve,
    parameter_count,
    triangle_flat_indices,
)

__all__ = [
    "Layer",
    "NetworkSpec",
    "GradientTape",
    "Gradients",
    "forward",
    "backward",
    "sgd_step",
    "loss_eval",
    "build_network",
]


class Layer:
    """One affine stage: weight, bias, and an optional activation.

    ``activation`` is None for a linear (usually final) layer.
    """

    __slots__ = ("weight", "bias", "activation")

    def __init__(self, weight, bias, activation=None):
        if not isinstance(weight, StructuredMatrix):
            raise ParameterError("layer weight must be a StructuredMatrix")
        bias = np.array(bias, dtype=float)
        if bias.ndim != 1 or bias.shape[0] != weight.rows:
            raise DimensionError(
                f"bias length {bias.shape} does not match weight rows {weight.rows}"
            )
        bias.setflags(write=False)
        if activation is not None and not isinstance(activation, ActivationSpec):
            activation = get_activation(activation)
        self.weight = weight
        self.bias = bias
        self.activation = activation

    @property
    def rows(self):
        return self.weight.rows

    @property
    def cols(self):
        return self.weight.cols

    def __repr__(self):
        act = self.activation.name if self.activation else "linear"
        return f"Layer({type(self.weight).__name__} {self.rows}x{self.cols}, {act})"


class NetworkSpec:
    """An immutable sequence of layers whose shapes chain."""

    __slots__ = ("layers",)

    def __init__(self, layers):
        layers = tuple(layers)
        if not layers:
            raise ParameterError("a network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.rows != b.cols:
                raise DimensionError(
                    f"layer output {a.rows} feeds layer expecting {b.cols}"
                )
        self.layers = layers

    @property
    def in_dim(self):
        return self.layers[0].cols

    @property
    def out_dim(self):
        return self.layers[-1].rows

    @property
    def widths(self):
        """Dimension sequence in_dim, hidden..., out_dim."""
        return (self.in_dim,) + tuple(l.rows for l in self.layers)

    def parameter_count(self):
        return sum(l.weight.params.size + l.bias.size for l in self.layers)

    def __len__(self):
        return len(self.layers)

    def __repr__(self):
        dims = "->".join(str(d) for d in self.widths)
        return f"NetworkSpec({dims}, {len(self.layers)} layers)"


class GradientTape:
    """Per-layer inputs and pre-activations recorded by a forward pass."""

    __slots__ = ("inputs", "preacts", "output")

    def __init__(self, inputs, preacts, output):
        self.inputs = tuple(inputs)
        self.preacts = tuple(preacts)
        self.output = output

    def check(self, net, tol=1e-9):
        """Re-verify the recorded invariants against ``net``."""
        if len(self.inputs) != len(net.layers) or len(self.preacts) != len(net.layers):
            raise ParameterError("tape does not match the network's layer count")
        for k, layer in enumerate(net.layers):
            y = layer.weight.to_dense() @ self.inputs[k] + layer.bias
            if np.max(np.abs(y - self.preacts[k])) > tol:
                raise ParameterError(f"tape pre-activation {k} is inconsistent")
            z_next = layer.activation.ev(y) if layer.activation else y
            recorded = self.inputs[k + 1] if k + 1 < len(net.layers) else self.output
            if np.max(np.abs(z_next - recorded)) > tol:
                raise ParameterError(f"tape forward value after layer {k} is inconsistent")
        return True


class Gradients:
    """Weight-parameter and bias gradients, one pair per layer."""

    __slots__ = ("weights", "biases")

    def __init__(self, weights, biases):
        self.weights = tuple(np.asarray(w, dtype=float) for w in weights)
        self.biases = tuple(np.asarray(b, dtype=float) for b in biases)

    def __len__(self):
        return len(self.weights)


def forward(net, x, fast=False):
    """Evaluate the network, returning (output, GradientTape).

    fast=True routes Toeplitz and Hankel layers through the FFT matvec;
    both routes agree to high precision, the slow path being the
    reference.
    """
    z = np.asarray(x, dtype=float)
    if z.ndim != 1 or z.shape[0] != net.in_dim:
        raise DimensionError(
            f"input of length {z.shape} fed to a network expecting {net.in_dim}"
        )
    inputs, preacts = [], []
    for layer in net.layers:
        inputs.append(z)
        w = layer.weight
        if fast and isinstance(w, (ToeplitzMatrix, HankelMatrix)):
            y = w.matvec_fft(z) + layer.bias
        else:
            y = w.matvec_naive(z) + layer.bias
        preacts.append(y)
        z = layer.activation.ev(y) if layer.activation else y
    return z, GradientTape(inputs, preacts, z)


def _weight_gradient(weight, g, z, fast):
    """Gradient of <g, W z> with respect to W's structured parameters."""
    if isinstance(weight, ToeplitzMatrix):
        # diagonal component d accumulates sum_{i-j=d-(n-1)} g_i z_j,
        # the full cross-correlation of g with z
        if fast:
            return fft_convolve(g, z[::-1])
        return np.convolve(g, z[::-1])
    if isinstance(weight, HankelMatrix):
        # anti-diagonal component s accumulates sum_{i+j=s} g_i z_j
        if fast:
            return fft_convolve(g, z)
        return np.convolve(g, z)
    if isinstance(weight, TriangularMatrix):
        flat = triangle_flat_indices(weight.orientation, weight.rows, weight.cols)
        return np.outer(g, z).ravel()[flat]
    return np.outer(g, z).ravel()


def backward(net, tape, loss_grad, fast=False):
    """Reverse-mode gradients of a scalar loss through the tape.

    ``loss_grad`` is the loss gradient with respect to the network output.
    Returns Gradients aligned with net.layers.
    """
    g = np.asarray(loss_grad, dtype=float)
    if g.shape != (net.out_dim,):
        raise DimensionError(
            f"loss gradient shape {g.shape} does not match output dim {net.out_dim}"
        )
    if len(tape.inputs) != len(net.layers):
        raise ParameterError("tape does not match the network's layer count")
    wgrads = [None] * len(net.layers)
    bgrads = [None] * len(net.layers)
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        if layer.activation is not None:
            g = g * layer.activation.deriv(tape.preacts[k])
        wgrads[k] = _weight_gradient(layer.weight, g, tape.inputs[k], fast)
        bgrads[k] = g
        if k:
            g = layer.weight.transpose().matvec_naive(g)
    return Gradients(wgrads, bgrads)


def sgd_step(net, grads, lr):
    """One plain gradient step; returns a new network, never mutates."""
    if lr <= 0:
        raise ParameterError(f"learning rate must be positive, got {lr}")
    if len(grads) != len(net.layers):
        raise ParameterError("gradient count does not match layer count")
    new_layers = []
    for layer, wg, bg in zip(net.layers, grads.weights, grads.biases):
        if wg.shape != layer.weight.params.shape or bg.shape != layer.bias.shape:
            raise DimensionError("gradient shapes do not match layer parameters")
        new_layers.append(
            Layer(
                layer.weight.with_params(layer.weight.params - lr * wg),
                layer.bias - lr * bg,
                layer.activation,
            )
        )
    return NetworkSpec(new_layers)


def loss_eval(kind, prediction, target):
    """Scalar loss and its gradient with respect to ``prediction``.

    mse: mean squared error against a target vector.  cross_entropy:
    softmax cross-entropy against an integer class index.
    """
    p = np.asarray(prediction, dtype=float)
    if kind == "mse":
        t = np.asarray(target, dtype=float)
        if t.shape != p.shape:
            raise DimensionError(f"mse shapes differ: {p.shape} vs {t.shape}")
        diff = p - t
        return float(np.mean(diff * diff)), 2.0 * diff / p.size
    if kind == "cross_entropy":
        idx = int(target)
        if idx != target or not 0 <= idx < p.size:
            raise ParameterError(
                f"class index {target!r} out of range for {p.size} logits"
            )
        shifted = p - np.max(p)
        lse = float(np.log(np.sum(np.exp(shifted))))
        loss = lse - float(shifted[idx])
        grad = np.exp(shifted - lse)
        grad[idx] -= 1.0
        return loss, grad
    raise ParameterError(f"unknown loss kind {kind!r}")


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------

def _make_weight(variant, rows, cols, rng):
    """Random structured weight, uniform +-1/sqrt(fan_in) on the parameters."""
    bound = 1.0 / np.sqrt(cols)
    if variant == "dense":
        count = rows * cols
    elif variant in ("toeplitz", "hankel"):
        count = rows + cols - 1
    elif variant in ("lower", "upper"):
        count = parameter_count("triangular", rows, cols, variant)
    else:
        raise ParameterError(f"unknown weight variant {variant!r}")
    params = rng.uniform(-bound, bound, size=count)
    if variant == "dense":
        return DenseMatrix(rows, cols, params)
    if variant == "toeplitz":
        return ToeplitzMatrix(rows, cols, params)
    if variant == "hankel":
        return HankelMatrix(rows, cols, params)
    return TriangularMatrix(rows, cols, variant, params)


def build_network(dims, variants, activation, seed=0, final_activation=False):
    """Assemble a randomly initialized network.

    dims: width sequence (in, hidden..., out).  variants: one tag per
    layer, or a single tag applied everywhere; the tag "lu" alternates
    upper/lower starting upper at the input.  activation applies to every
    layer except the last unless final_activation is set.
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise ParameterError("need at least an input and an output dimension")
    count = len(dims) - 1
    if isinstance(variants, str):
        if variants == "lu":
            variants = ["upper" if k % 2 == 0 else "lower" for k in range(count)]
        else:
            variants = [variants] * count
    elif len(variants) != count:
        raise ParameterError(
            f"{len(variants)} variant tags for {count} layers"
        )
    act = get_activation(activation) if activation else None
    rng = np.random.default_rng(seed)
    layers = []
    for k in range(count):
        rows, cols = dims[k + 1], dims[k]
        w = _make_weight(variants[k], rows, cols, rng)
        use = act if (k < count - 1 or final_activation) else None
        layers.append(Layer(w, np.zeros(rows), use))
    return NetworkSpec(layers)


# --------------------------------------------------------------------------
# batched paths (internal plumbing shared by training and compression)
# --------------------------------------------------------------------------

def forward_batch(net, X):
    """Vectorized forward over rows of X; returns (outputs, Zs, Ys).

    Zs[k] is the batch input to layer k, Ys[k] the batch pre-activation;
    matches forward() layer by layer but leans on matrix-matrix products.
    """
    Z = np.asarray(X, dtype=float)
    if Z.ndim != 2 or Z.shape[1] != net.in_dim:
        raise DimensionError(
            f"batch of shape {Z.shape} fed to a network expecting {net.in_dim}"
        )
    Zs, Ys = [], []
    for layer in net.layers:
        Zs.append(Z)
        Y = Z @ layer.weight.to_dense().T + layer.bias
        Ys.append(Y)
        Z = layer.activation.ev(Y) if layer.activation else Y
    return Z, Zs, Ys


def backward_batch(net, Zs, Ys, G):
    """Batched reverse pass; G holds one loss gradient per row.

    Returns Gradients whose entries are summed over the batch, so feeding
    loss gradients of the batch-mean loss yields mean-loss gradients.
    """
    G = np.asarray(G, dtype=float)
    wgrads = [None] * len(net.layers)
    bgrads = [None] * len(net.layers)
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        if layer.activation is not None:
            G = G * layer.activation.deriv(Ys[k])
        dense = G.T @ Zs[k]
        w = layer.weight
        if isinstance(w, ToeplitzMatrix):
            wgrads[k] = np.bincount(
                diagonal_index(w.rows, w.cols), dense.ravel(), w.params.size
            )
        elif isinstance(w, HankelMatrix):
            wgrads[k] = np.bincount(
                antidiagonal_index(w.rows, w.cols), dense.ravel(), w.params.size
            )
        elif isinstance(w, TriangularMatrix):
            flat = triangle_flat_indices(w.orientation, w.rows, w.cols)
            wgrads[k] = dense.ravel()[flat]
        else:
            wgrads[k] = dense.ravel()
        bgrads[k] = G.sum(axis=0)
        if k:
            G = G @ w.to_dense()
    return Gradients(wgrads, bgrads)


def loss_eval_batch(kind, P, targets):
    """Mean loss over the batch and its gradient with respect to P."""
    P = np.asarray(P, dtype=float)
    b = P.shape[0]
    if kind == "mse":
        T = np.asarray(targets, dtype=float)
        if T.ndim == 1:
            T = T[:, None]
        if T.shape != P.shape:
            raise DimensionError(f"mse shapes differ: {P.shape} vs {T.shape}")
        diff = P - T
        return float(np.mean(np.mean(diff * diff, axis=1))), 2.0 * diff / (P.shape[1] * b)
    if kind == "cross_entropy":
        idx = np.asarray(targets)
        if idx.ndim != 1 or idx.shape[0] != b:
            raise DimensionError("one class index per batch row required")
        if np.any(idx < 0) or np.any(idx >= P.shape[1]):
            raise ParameterError("class index out of range")
        shifted = P - P.max(axis=1, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        loss = float(np.mean(lse[:, 0] - shifted[np.arange(b), idx]))
        grad = np.exp(shifted - lse)
        grad[np.arange(b), idx] -= 1.0
        return loss, grad / b
    raise ParameterError(f"unknown loss kind {kind!r}")
