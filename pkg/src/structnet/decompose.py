"""Factoring dense matrices into chains of structured ones.

Three routes are provided: a pivot-free LU with an escalating diagonal
perturbation for matrices whose leading minors vanish, a padding reduction
that turns rectangular problems into square ones, and a gradient-descent
fitter that approximates a square matrix by a product of Toeplitz (or Hankel)
factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, FactorizationError, ParameterError
from .structmat import (
    DenseMatrix,
    HankelMatrix,
    StructuredMatrix,
    ToeplitzMatrix,
    TriangularMatrix,
    antidiagonal_index,
    diagonal_index,
    hankel_from_edges,
    identity_toeplitz,
    project_hankel,
    project_toeplitz,
    toeplitz_from_edges,
    triangle_flat_indices,
)

__all__ = [
    "FactorChain",
    "FitOptions",
    "PadResult",
    "lu_approx",
    "lu_chain",
    "pad_to_square",
    "toeplitz_factorize",
    "hankel_factorize",
]

_PIVOT_FLOOR = 1e-12  # relative threshold below which a pivot counts as unstable


@dataclass(frozen=True)
class FactorChain:
    """A product of structured factors approximating a target matrix.

    ``factors`` is kept in product order, so the chain represents
    ``factors[0] @ factors[1] @ ... @ factors[-1]`` and the last entry is the
    first one applied to a vector.
    """

    factors: tuple
    target_shape: tuple
    reconstruction_error: float

    def __post_init__(self):
        if not self.factors:
            raise DimensionError("a factor chain needs at least one factor")
        for left, right in zip(self.factors, self.factors[1:]):
            if left.cols != right.rows:
                raise DimensionError(
                    f"factors do not compose: {left.shape} then {right.shape}"
                )
        head, tail = self.factors[0], self.factors[-1]
        if (head.rows, tail.cols) != tuple(self.target_shape):
            raise DimensionError("chain shape does not match the target shape")

    def __len__(self):
        return len(self.factors)

    def product(self):
        """Dense product of the chain."""
        out = self.factors[0].to_dense()
        for f in self.factors[1:]:
            out = out @ f.to_dense()
        return out

    def apply(self, x):
        """Apply the chain to a vector, rightmost factor first."""
        for f in reversed(self.factors):
            x = f.matvec_naive(x)
        return x


def _as_array(b):
    if isinstance(b, StructuredMatrix):
        return b.to_dense()
    arr = np.asarray(b, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError("expected a matrix")
    return arr


def _rel_error(target, approx, norm=None):
    norm = np.linalg.norm(target) if norm is None else norm
    if norm == 0.0:
        return float(np.linalg.norm(approx - target))
    return float(np.linalg.norm(approx - target) / norm)


# --------------------------------------------------------------------------
# LU without pivoting
# --------------------------------------------------------------------------

def _doolittle(a, pivot_floor):
    """Plain Doolittle elimination; returns None on an unstable pivot."""
    n = a.shape[0]
    u = a.copy()
    lo = np.eye(n)
    for k in range(n - 1):
        pivot = u[k, k]
        if abs(pivot) < pivot_floor:
            return None
        mult = u[k + 1:, k] / pivot
        lo[k + 1:, k] = mult
        u[k + 1:, k:] -= np.outer(mult, u[k, k:])
        u[k + 1:, k] = 0.0
    if n > 0 and abs(u[n - 1, n - 1]) < pivot_floor:
        return None
    return lo, u


def lu_approx(b, tol):
    """Factor a square matrix as (unit lower) @ (upper) without pivoting.

    Zero or tiny leading minors stall pivot-free elimination, so the matrix
    is perturbed by delta * D for a fixed random-sign unit diagonal D, with
    delta walking the schedule 0, tol/10, tol, 10*tol, ... until elimination
    is stable and the reconstruction satisfies ||B - LU||_F / ||B||_F <= tol.

    Returns ``(L, U)`` as TriangularMatrix values; raises FactorizationError
    (reporting the best delta tried) when the schedule is exhausted.
    """
    arr = _as_array(b)
    m, n = arr.shape
    if m != n:
        raise DimensionError(f"lu_approx needs a square matrix, got {m}x{n}")
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    norm = np.linalg.norm(arr)
    pivot_floor = _PIVOT_FLOOR * max(norm, np.finfo(np.float64).tiny)
    signs = np.where(np.random.default_rng(0x5EED).random(n) < 0.5, -1.0, 1.0)

    deltas = [0.0, tol / 10.0]
    d = tol
    while d * np.sqrt(n) <= max(tol * norm, tol):
        deltas.append(d)
        d *= 10.0
    deltas.append(d)  # one step past the bound, in case roundoff helps

    best_delta, best_err = None, np.inf
    for delta in deltas:
        perturbed = arr + delta * np.diag(signs) if delta else arr
        result = _doolittle(perturbed, pivot_floor)
        if result is None:
            continue
        lo, up = result
        err = _rel_error(arr, lo @ up, norm)
        if err < best_err:
            best_delta, best_err = delta, err
        if err <= tol:
            return (
                TriangularMatrix.from_dense(lo, "lower"),
                TriangularMatrix.from_dense(up, "upper"),
            )
    raise FactorizationError(
        f"no stable elimination met tol={tol:g} (best delta {best_delta}, "
        f"best error {best_err:g})",
        best_delta=best_delta,
        best_error=best_err,
    )


# --------------------------------------------------------------------------
# rectangular padding
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PadResult:
    """Square extension S and banded-Toeplitz selector P of a rectangular B.

    ``side`` records where the selector acts: ``"right"`` means B = S @ P
    (tall input, S is B with zero columns appended), ``"left"`` means
    B = P @ S (wide input, S is B with zero rows appended).  Square inputs
    come back unchanged with an identity selector on the right.
    """

    square: DenseMatrix
    selector: ToeplitzMatrix
    side: str


def pad_to_square(b):
    """Extend a rectangular matrix to a square one times a selector."""
    arr = _as_array(b)
    m, n = arr.shape
    if m == n:
        return PadResult(DenseMatrix.from_array(arr), identity_toeplitz(n), "right")
    if m > n:
        square = np.zeros((m, m))
        square[:, :n] = arr
        return PadResult(DenseMatrix.from_array(square), identity_toeplitz(m, n), "right")
    square = np.zeros((n, n))
    square[:m, :] = arr
    return PadResult(DenseMatrix.from_array(square), identity_toeplitz(m, n), "left")


# --------------------------------------------------------------------------
# LU chains with the padding absorbed
# --------------------------------------------------------------------------

def lu_chain(b, tol):
    """Two-factor triangular chain for any rectangular matrix.

    Square matrices factor directly.  A tall matrix is extended with zero
    columns, factored, and the column selection is absorbed into U (keeping
    it upper triangular); a wide matrix is handled by the transposed
    construction, absorbing the row selection into L.  In application order
    the chain is always upper first, then lower.
    """
    arr = _as_array(b)
    m, n = arr.shape
    if m == n:
        lo, up = lu_approx(arr, tol)
    elif m > n:
        pad = pad_to_square(arr)
        lo, up_sq = lu_approx(pad.square, tol)
        # B = (L @ U) @ P and U @ P keeps the leading n columns, still upper
        up = TriangularMatrix.from_dense(up_sq.to_dense()[:, :n], "upper")
    else:
        pad = pad_to_square(arr)
        lo_sq, up = lu_approx(pad.square, tol)
        # B = P @ (L @ U) and P @ L keeps the leading m rows, still lower
        lo = TriangularMatrix.from_dense(lo_sq.to_dense()[:m, :], "lower")
    err = _rel_error(arr, lo.to_dense() @ up.to_dense())
    return FactorChain((lo, up), (m, n), err)


# --------------------------------------------------------------------------
# gradient-descent chain fitting
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FitOptions:
    """Knobs for the gradient-descent chain fitter.

    ``step`` is the initial line-search step; it grows on accepted steps and
    halves on rejections.  ``noise`` sets the scale of the perturbation used
    to initialize the trailing factors.  ``restarts`` re-runs the descent
    with fresh initialization noise when the target has not been met.
    """

    max_iter: int = 12000
    step: float = 0.1
    seed: int = 0
    target: float = 1e-10
    noise: float = 0.05
    restarts: int = 8

    def __post_init__(self):
        if self.max_iter < 1:
            raise ParameterError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.step <= 0:
            raise ParameterError(f"step must be positive, got {self.step}")
        if self.target < 0:
            raise ParameterError(f"target must be nonnegative, got {self.target}")
        if self.noise < 0:
            raise ParameterError(f"noise must be nonnegative, got {self.noise}")
        if self.restarts < 1:
            raise ParameterError(f"restarts must be at least 1, got {self.restarts}")


class _ChainProblem:
    """Least-squares fit of a product of same-structure factors to a target."""

    def __init__(self, target, r, kind):
        self.target = target
        self.n = target.shape[0]
        self.r = r
        self.kind = kind
        self.norm = np.linalg.norm(target)
        self.index = (
            diagonal_index(self.n, self.n)
            if kind == "toeplitz"
            else antidiagonal_index(self.n, self.n)
        )
        self.plen = 2 * self.n - 1

    def materialize(self, theta):
        win = np.lib.stride_tricks.sliding_window_view(theta, self.n, axis=1)
        if self.kind == "toeplitz":
            return win[:, :, ::-1]
        return win

    def objective(self, theta):
        mats = self.materialize(theta)
        prod = mats[0]
        for k in range(1, self.r):
            prod = prod @ mats[k]
        diff = prod - self.target
        return float(np.sum(diff * diff)), diff

    def gradient(self, theta, diff):
        mats = self.materialize(theta)
        prefixes = [np.eye(self.n)]
        for k in range(self.r - 1):
            prefixes.append(prefixes[-1] @ mats[k])
        suffixes = [np.eye(self.n)]
        for k in range(self.r - 1, 0, -1):
            suffixes.insert(0, mats[k] @ suffixes[0])
        grad = np.empty_like(theta)
        for k in range(self.r):
            dense_grad = 2.0 * prefixes[k].T @ diff @ suffixes[k].T
            grad[k] = np.bincount(
                self.index, weights=dense_grad.ravel(), minlength=self.plen
            )
        return grad

    def initial(self, rng, noise, attempt):
        """Restart-diverse starting point.

        Attempts cycle through three families: projection seed in the leading
        factor, projection seed in the trailing factor, and a fully random
        draw whose per-factor norms multiply out to the target's.  The noise
        scale escalates every full cycle so late attempts explore far basins.
        """
        theta = np.zeros((self.r, self.plen))
        mode = attempt % 3
        spread = noise * (1.0 + attempt // 3)
        if mode == 2:
            counts = np.bincount(self.index, minlength=self.plen).astype(float)
            want = max(self.norm, 1e-12) ** (1.0 / self.r)
            for k in range(self.r):
                v = rng.standard_normal(self.plen)
                v *= want / np.sqrt(float(counts @ (v * v)))
                theta[k] = v
            return theta
        slot = 0 if mode == 0 else self.r - 1
        flip = np.eye(self.n)[::-1]
        if self.kind == "toeplitz":
            head = project_toeplitz(self.target).params
        else:
            # the filler factors start near the exchange matrix (the Hankel
            # analogue of the identity, since its square is the identity), so
            # the projection slot absorbs B times the flips the rest
            # contribute: on the right when it leads, on the left when it
            # trails
            if (self.r - 1) % 2 == 0:
                absorbed = self.target
            elif slot == 0:
                absorbed = self.target @ flip
            else:
                absorbed = flip @ self.target
            head = project_hankel(absorbed).params
        base = np.zeros(self.plen)
        base[self.n - 1] = 1.0  # identity diagonals, or the exchange anti-diagonals
        for k in range(self.r):
            theta[k] = base + spread * rng.standard_normal(self.plen)
        theta[slot] = head
        if attempt >= 6:
            theta[slot] = theta[slot] + spread * rng.standard_normal(self.plen)
        return theta

    def rebalance(self, theta):
        """Equalize factor norms; the product (and objective) is unchanged."""
        norms = np.linalg.norm(theta, axis=1)
        if np.any(norms == 0.0):
            return theta
        geo = np.exp(np.mean(np.log(norms)))
        return theta * (geo / norms)[:, None]


def _descend(problem, theta, opts):
    """Armijo-backtracked gradient descent; returns (theta, sqrt(objective)).

    Accepted steps grow the next trial step, rejections halve it, and every
    few iterations the factors are rescaled to equal norms (a no-op for the
    objective that keeps gradients usable in long chains).
    """
    f, diff = problem.objective(theta)
    alpha = opts.step
    target_f = (opts.target * problem.norm) ** 2
    for it in range(opts.max_iter):
        if f <= target_f:
            break
        grad = problem.gradient(theta, diff)
        gsq = float(np.sum(grad * grad))
        if gsq == 0.0 or not np.isfinite(gsq):
            break
        accepted = False
        a = alpha
        for _ in range(60):
            trial = theta - a * grad
            ft, dt = problem.objective(trial)
            if ft <= f - 1e-4 * a * gsq:
                theta, f, diff = trial, ft, dt
                alpha = min(a * 2.0, 1e8)
                accepted = True
                break
            a *= 0.5
        if not accepted:
            break
        if problem.r > 1 and it % 10 == 9:
            theta = problem.rebalance(theta)
            f, diff = problem.objective(theta)
    return theta, float(np.sqrt(max(f, 0.0)))


def _fit_chain(b, r, opts, kind):
    arr = _as_array(b)
    m, n = arr.shape
    if m != n:
        raise DimensionError(
            f"{kind} chain fitting needs a square target, got {m}x{n}; pad first"
        )
    if r < 1:
        raise ParameterError(f"factor count must be >= 1, got {r}")
    if opts is None:
        opts = FitOptions()
    cls = ToeplitzMatrix if kind == "toeplitz" else HankelMatrix
    edges = toeplitz_from_edges if kind == "toeplitz" else hankel_from_edges

    if r == 1:
        exact = edges(arr)
        if np.array_equal(exact.to_dense(), arr):
            return FactorChain((exact,), (n, n), 0.0)
        # a single factor is a linear least-squares problem whose gradient
        # vanishes exactly at the per-(anti)diagonal mean projection
        proj = project_toeplitz(arr) if kind == "toeplitz" else project_hankel(arr)
        return FactorChain((proj,), (n, n), _rel_error(arr, proj.to_dense()))

    problem = _ChainProblem(arr, r, kind)
    norm = problem.norm
    best_theta, best_err = None, np.inf
    for attempt in range(opts.restarts + 1):
        rng = np.random.default_rng(opts.seed + 7919 * attempt)
        theta0 = problem.initial(rng, opts.noise, attempt)
        theta, resid = _descend(problem, theta0, opts)
        err = resid / norm if norm else resid
        if err < best_err:
            best_theta, best_err = theta, err
        if best_err <= opts.target:
            break
    factors = tuple(cls(n, n, row) for row in best_theta)
    return FactorChain(factors, (n, n), best_err)


def toeplitz_factorize(b, r, opts=None):
    """Fit B ~ T_1 @ ... @ T_r with Toeplitz factors by gradient descent.

    The objective ||B - T_1...T_r||_F is minimized over the diagonal
    parameters with an Armijo backtracking line search, starting from the
    diagonal-mean projection of B for the first factor and noisy identities
    for the rest.  A Toeplitz B with r = 1 is returned exactly.
    """
    return _fit_chain(b, r, opts, "toeplitz")


def hankel_factorize(b, r, opts=None):
    """Hankel counterpart of ``toeplitz_factorize``.

    Trailing factors initialize near the exchange matrix, the Hankel analogue
    of the identity (its square is the identity), with the head factor
    compensating for the parity of the flips.
    """
    return _fit_chain(b, r, opts, "hankel")
