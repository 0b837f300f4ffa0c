"""Approximating the identity map with a scaled activation.

For an activation sigma with a smooth point ``a`` (nonzero slope), the map

    rho_h(x) = [sigma(h*x + a) - sigma(a)] / (h * sigma'(a))

converges to the identity uniformly on bounded sets as h -> 0.  Networks
realize it as scale-into-activation followed by an affine correction, which
keeps structured weights structured because both steps are plain scalings.
"""

import numpy as np

from .errors import ParameterError, SelectionError

__all__ = ["SampleDomain", "rho_apply", "choose_h"]


class SampleDomain:
    """A finite point cloud standing in for a compact domain.

    points: array of shape (count, dim).  radius: a bound on the magnitude
    of every coordinate of every point (computed when not supplied).
    """

    __slots__ = ("points", "radius")

    def __init__(self, points, radius=None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ParameterError("domain needs a nonempty 2-d point array")
        if not np.all(np.isfinite(pts)):
            raise ParameterError("domain points must be finite")
        bound = float(np.max(np.abs(pts))) if pts.size else 0.0
        if radius is None:
            radius = bound
        elif radius < bound:
            raise ParameterError(
                f"stated radius {radius} is below the observed coordinate "
                f"bound {bound}"
            )
        self.points = pts
        self.points.setflags(write=False)
        self.radius = float(radius)

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return f"SampleDomain({len(self)} points, dim={self.dim}, radius={self.radius:g})"


def rho_apply(sigma, h, x):
    """Apply rho_h coordinatewise to ``x``.

    rho_h(x)_i = [sigma(h*x_i + a) - sigma(a)] / (h * sigma'(a)) with a the
    activation's smooth point.  h must be nonzero.
    """
    if h == 0.0:
        raise ParameterError("rho_h needs h != 0")
    a = sigma.smooth_point
    slope = float(sigma.deriv(np.asarray(a)))
    x = np.asarray(x, dtype=float)
    return (sigma.ev(h * x + a) - float(sigma.ev(np.asarray(a)))) / (h * slope)


def choose_h(sigma, domain, eps):
    """Find h with sup over the domain of ||rho_h(x) - x|| <= eps.

    Halving search h = 1, 1/2, 1/4, ... down to 2**-60, returning the first
    h that passes; larger h keeps the difference quotient well conditioned.
    Raises SelectionError when the search bottoms out, which signals that
    the activation is not smooth enough at its designated point for the
    requested accuracy at this domain radius.
    """
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    pts = domain.points
    h = 1.0
    for _ in range(61):
        gap = rho_apply(sigma, h, pts) - pts
        worst = float(np.max(np.linalg.norm(gap, axis=1))) if pts.size else 0.0
        if worst <= eps:
            return h
        h *= 0.5
    raise SelectionError(
        f"no h in [2**-60, 1] brings the identity-approximation error under "
        f"{eps:g} for {sigma.name} on a radius-{domain.radius:g} domain"
    )
