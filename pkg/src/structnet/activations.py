"""Scalar activations with designated smooth points.

Every activation carries a point ``a`` where it is continuously
differentiable with nonzero slope, which the identity-approximation
machinery scales around.  Evaluators are vectorized over numpy arrays.
"""

import numpy as np

from .errors import ParameterError

__all__ = ["ActivationSpec", "get_activation", "ACTIVATIONS"]


class ActivationSpec:
    """A named scalar activation plus the data the compressor needs.

    ``ev`` and ``deriv`` map arrays to arrays elementwise.  ``smooth_point``
    is a scalar ``a`` with ``deriv(a) != 0`` around which the function is
    continuously differentiable; ``uniformly_continuous`` records whether
    the function is uniformly continuous on the whole line (all built-ins
    are).
    """

    __slots__ = ("name", "ev", "deriv", "smooth_point", "uniformly_continuous")

    def __init__(self, name, ev, deriv, smooth_point, uniformly_continuous=True):
        self.name = name
        self.ev = ev
        self.deriv = deriv
        self.smooth_point = float(smooth_point)
        self.uniformly_continuous = bool(uniformly_continuous)
        slope = float(deriv(np.asarray(self.smooth_point)))
        if slope == 0.0 or not np.isfinite(slope):
            raise ParameterError(
                f"activation {name!r} has zero or non-finite slope "
                f"{slope!r} at its designated point {smooth_point!r}"
            )

    def __call__(self, x):
        return self.ev(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"ActivationSpec({self.name!r}, a={self.smooth_point})"


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_deriv(x):
    return (np.asarray(x) > 0.0).astype(float)


def _leaky(x):
    x = np.asarray(x)
    return np.where(x > 0.0, x, 0.01 * x)


def _leaky_deriv(x):
    return np.where(np.asarray(x) > 0.0, 1.0, 0.01)


def _sigmoid(x):
    # split by sign so the exponential never overflows
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _sigmoid_deriv(x):
    s = _sigmoid(x)
    return s * (1.0 - s)


def _tanh_deriv(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _identity(x):
    return np.asarray(x, dtype=float)


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float))


# Designated smooth points: the piecewise-linear activations sit at 1 (well
# inside the slope-1 branch); tanh sits at 0.5 rather than the origin so a
# nonzero function value flows through the bias-correction paths.
ACTIVATIONS = {
    "relu": ActivationSpec("relu", _relu, _relu_deriv, 1.0),
    "leaky_relu": ActivationSpec("leaky_relu", _leaky, _leaky_deriv, 1.0),
    "sigmoid": ActivationSpec("sigmoid", _sigmoid, _sigmoid_deriv, 0.0),
    "tanh": ActivationSpec("tanh", np.tanh, _tanh_deriv, 0.5),
    "identity": ActivationSpec("identity", _identity, _one, 0.0),
}


def get_activation(name):
    """Look up a built-in activation by name."""
    if isinstance(name, ActivationSpec):
        return name
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ParameterError(
            f"unknown activation {name!r}; available: {sorted(ACTIVATIONS)}"
        ) from None
