"""Structured matrix kernels: Toeplitz, Hankel, triangular and dense variants.

Storage conventions
-------------------
* ``ToeplitzMatrix``: one parameter per diagonal.  For an ``m x n`` matrix the
  vector has length ``m + n - 1`` and is ordered from the top-right diagonal
  to the bottom-left one, so entry ``(i, j)`` (0-based) is
  ``diagonals[i - j + n - 1]``.
* ``HankelMatrix``: one parameter per anti-diagonal, ordered from the top-left
  corner down, so entry ``(i, j)`` is ``antidiagonals[i + j]``.
* ``TriangularMatrix``: the stored triangle packed row-major; everything else
  is a structural zero.
* ``DenseMatrix``: all entries, row-major.

Instances are immutable: every operation returns a new object, and parameter
arrays are frozen so in-place writes raise.  Dense materializations are cached
on first use, which keeps repeated products cheap without changing semantics.
"""

from __future__ import annotations

import functools

import numpy as np

from .errors import DimensionError, SizeError

__all__ = [
    "StructuredMatrix",
    "ToeplitzMatrix",
    "HankelMatrix",
    "TriangularMatrix",
    "DenseMatrix",
    "fft",
    "fft_convolve",
    "matvec_naive",
    "matvec_fft",
    "to_dense",
    "scale",
    "transpose",
    "embed_rows_toeplitz",
    "embed_rows_hankel",
    "parameter_count",
    "project_toeplitz",
    "project_hankel",
    "toeplitz_from_edges",
    "hankel_from_edges",
    "identity_toeplitz",
    "next_pow2",
    "diagonal_index",
    "antidiagonal_index",
    "triangle_flat_indices",
]


def _own(values, dtype=np.float64):
    """Copy ``values`` into a fresh read-only contiguous array."""
    arr = np.asarray(values, dtype=dtype)
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def _check_shape(rows, cols):
    if int(rows) != rows or int(cols) != cols or rows < 1 or cols < 1:
        raise DimensionError(f"matrix shape must be positive, got {rows}x{cols}")
    return int(rows), int(cols)


# --------------------------------------------------------------------------
# index helpers shared with the gradient and factorization code
# --------------------------------------------------------------------------

@functools.lru_cache(maxsize=512)
def diagonal_index(m, n):
    """Flat map sending dense position (i, j) to its diagonal slot i - j + n - 1."""
    i = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    idx = (i - j + n - 1).ravel()
    idx.setflags(write=False)
    return idx


@functools.lru_cache(maxsize=512)
def antidiagonal_index(m, n):
    """Flat map sending dense position (i, j) to its anti-diagonal slot i + j."""
    i = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    idx = (i + j).ravel()
    idx.setflags(write=False)
    return idx


@functools.lru_cache(maxsize=512)
def triangle_flat_indices(orientation, m, n):
    """Row-major flat positions of the stored triangle of an m x n matrix."""
    i = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    keep = (i <= j) if orientation == "upper" else (i >= j)
    idx = np.flatnonzero(keep.ravel())
    idx.setflags(write=False)
    return idx


@functools.lru_cache(maxsize=512)
def _triangle_rows(orientation, m, n):
    """Per-row (col_lo, col_hi, param_lo, param_hi) spans of the stored triangle."""
    spans = []
    p = 0
    for i in range(m):
        if orientation == "upper":
            lo, hi = i, n
        else:
            lo, hi = 0, min(i + 1, n)
        width = max(0, hi - lo)
        spans.append((lo, lo + width, p, p + width))
        p += width
    return tuple(spans)


def parameter_count(variant, rows, cols, orientation=None):
    """Number of free parameters a variant stores for an m x n matrix.

    Triangular counts depend on the orientation and on whether the matrix is
    tall or wide; the other variants are shape-symmetric.
    """
    m, n = _check_shape(rows, cols)
    if variant in ("toeplitz", "hankel"):
        return m + n - 1
    if variant == "dense":
        return m * n
    if variant == "triangular":
        if orientation == "upper":
            return n * (n + 1) // 2 if m >= n else (2 * n - m + 1) * m // 2
        if orientation == "lower":
            return (2 * m - n + 1) * n // 2 if m >= n else m * (m + 1) // 2
        raise DimensionError(f"unknown orientation: {orientation!r}")
    raise DimensionError(f"unknown variant: {variant!r}")


# --------------------------------------------------------------------------
# matrix variants
# --------------------------------------------------------------------------

class StructuredMatrix:
    """Common behaviour for the four matrix variants.

    Subclasses set ``variant`` and implement ``_materialize`` plus the
    constructors used by ``with_params``/``transpose``.
    """

    variant = "abstract"

    def __init__(self, rows, cols, params):
        self.rows, self.cols = _check_shape(rows, cols)
        self.params = _own(params)
        if self.params.ndim != 1:
            raise DimensionError("parameter vector must be one-dimensional")
        self._dense = None
        self._transpose = None

    @property
    def shape(self):
        return (self.rows, self.cols)

    def to_dense(self):
        """Materialized entries as a read-only (rows, cols) float array."""
        if self._dense is None:
            dense = np.ascontiguousarray(self._materialize(), dtype=np.float64)
            dense.setflags(write=False)
            self._dense = dense
        return self._dense

    def _materialize(self):
        raise NotImplementedError

    def _check_vector(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.cols,):
            raise DimensionError(
                f"vector of length {x.shape} does not match {self.rows}x{self.cols}"
            )
        return x

    def matvec_naive(self, x):
        """Direct-summation product A @ x."""
        x = self._check_vector(x)
        return self.to_dense() @ x

    def matmat(self, other):
        """Dense product against a (cols, k) array; used by batched callers."""
        return self.to_dense() @ np.asarray(other, dtype=np.float64)

    def with_params(self, params):
        """Same shape and variant, new parameter vector."""
        raise NotImplementedError

    def scale(self, c):
        """The matrix c * A; scaling acts on the parameter vector."""
        return self.with_params(self.params * float(c))

    def transpose(self):
        if self._transpose is None:
            t = self._build_transpose()
            t._transpose = self
            self._transpose = t
        return self._transpose

    def _build_transpose(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.rows}x{self.cols})"


class ToeplitzMatrix(StructuredMatrix):
    """Matrix constant along diagonals, stored as one value per diagonal."""

    variant = "toeplitz"

    def __init__(self, rows, cols, diagonals):
        super().__init__(rows, cols, diagonals)
        expect = self.rows + self.cols - 1
        if self.params.size != expect:
            raise DimensionError(
                f"need {expect} diagonals for {self.rows}x{self.cols}, "
                f"got {self.params.size}"
            )
        self._spectrum = None

    @property
    def diagonals(self):
        return self.params

    def _materialize(self):
        win = np.lib.stride_tricks.sliding_window_view(self.params, self.cols)
        return win[:, ::-1]

    def with_params(self, params):
        return ToeplitzMatrix(self.rows, self.cols, params)

    def _build_transpose(self):
        return ToeplitzMatrix(self.cols, self.rows, self.params[::-1])

    def _circulant_spectrum(self):
        """FFT of the first column of the circulant the matrix embeds into."""
        if self._spectrum is None:
            m, n = self.rows, self.cols
            size = next_pow2(m + n - 1)
            col = np.zeros(size)
            col[0] = self.params[n - 1]
            if m > 1:
                col[1:m] = self.params[n:]
            if n > 1:
                col[size - n + 1:] = self.params[:n - 1]
            self._spectrum = fft(col)
        return self._spectrum

    def matvec_fft(self, x):
        """A @ x through the circulant embedding; O((m+n) log(m+n))."""
        x = self._check_vector(x)
        spectrum = self._circulant_spectrum()
        padded = np.zeros(spectrum.size, dtype=np.complex128)
        padded[: self.cols] = x
        prod = spectrum * fft(padded)
        return fft(prod, inverse=True)[: self.rows].real


class HankelMatrix(StructuredMatrix):
    """Matrix constant along anti-diagonals, one value per anti-diagonal."""

    variant = "hankel"

    def __init__(self, rows, cols, antidiagonals):
        super().__init__(rows, cols, antidiagonals)
        expect = self.rows + self.cols - 1
        if self.params.size != expect:
            raise DimensionError(
                f"need {expect} anti-diagonals for {self.rows}x{self.cols}, "
                f"got {self.params.size}"
            )
        self._flipped = None

    @property
    def antidiagonals(self):
        return self.params

    def _materialize(self):
        return np.lib.stride_tricks.sliding_window_view(self.params, self.cols)

    def with_params(self, params):
        return HankelMatrix(self.rows, self.cols, params)

    def _build_transpose(self):
        return HankelMatrix(self.cols, self.rows, self.params)

    def matvec_fft(self, x):
        """A @ x by reducing to the row-reversed Toeplitz matrix."""
        if self._flipped is None:
            # reversing the rows of a Hankel matrix gives a Toeplitz matrix
            # whose diagonal vector is the reversed anti-diagonal vector
            self._flipped = ToeplitzMatrix(self.rows, self.cols, self.params[::-1])
        return self._flipped.matvec_fft(x)[::-1]


class TriangularMatrix(StructuredMatrix):
    """Lower or upper triangular matrix storing only the nonzero triangle."""

    variant = "triangular"

    def __init__(self, rows, cols, orientation, packed):
        if orientation not in ("lower", "upper"):
            raise DimensionError(f"orientation must be lower|upper, got {orientation!r}")
        self.orientation = orientation
        super().__init__(rows, cols, packed)
        expect = parameter_count("triangular", self.rows, self.cols, orientation)
        if self.params.size != expect:
            raise DimensionError(
                f"{orientation} {self.rows}x{self.cols} stores {expect} entries, "
                f"got {self.params.size}"
            )

    @classmethod
    def from_dense(cls, arr, orientation):
        """Pack the stored triangle of ``arr``; entries outside it are ignored."""
        arr = np.asarray(arr, dtype=np.float64)
        m, n = arr.shape
        packed = arr.ravel()[triangle_flat_indices(orientation, m, n)]
        return cls(m, n, orientation, packed)

    def _materialize(self):
        dense = np.zeros(self.rows * self.cols)
        dense[triangle_flat_indices(self.orientation, self.rows, self.cols)] = self.params
        return dense.reshape(self.rows, self.cols)

    def with_params(self, params):
        return TriangularMatrix(self.rows, self.cols, self.orientation, params)

    def _build_transpose(self):
        other = "lower" if self.orientation == "upper" else "upper"
        return TriangularMatrix.from_dense(self.to_dense().T, other)

    def matvec_naive(self, x):
        # structural zeros are skipped: each row only touches its stored span
        x = self._check_vector(x)
        y = np.zeros(self.rows)
        for i, (lo, hi, plo, phi) in enumerate(
            _triangle_rows(self.orientation, self.rows, self.cols)
        ):
            if phi > plo:
                y[i] = np.dot(self.params[plo:phi], x[lo:hi])
        return y


class DenseMatrix(StructuredMatrix):
    """Unstructured matrix; parameters are all entries, row-major."""

    variant = "dense"

    def __init__(self, rows, cols, entries):
        entries = np.asarray(entries, dtype=np.float64)
        if entries.ndim == 2:
            if entries.shape != (rows, cols):
                raise DimensionError(
                    f"entries shaped {entries.shape}, expected ({rows}, {cols})"
                )
            entries = entries.ravel()
        super().__init__(rows, cols, entries)
        if self.params.size != self.rows * self.cols:
            raise DimensionError(
                f"need {self.rows * self.cols} entries, got {self.params.size}"
            )

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError("expected a 2-d array")
        return cls(arr.shape[0], arr.shape[1], arr)

    def _materialize(self):
        return self.params.reshape(self.rows, self.cols)

    def with_params(self, params):
        return DenseMatrix(self.rows, self.cols, params)

    def _build_transpose(self):
        return DenseMatrix(self.cols, self.rows, self.to_dense().T)


# --------------------------------------------------------------------------
# radix-2 FFT
# --------------------------------------------------------------------------

def next_pow2(n):
    """Smallest power of two >= n."""
    if n < 1:
        raise SizeError(f"need a positive length, got {n}")
    return 1 << (int(n) - 1).bit_length()


@functools.lru_cache(maxsize=64)
def _bit_reversal(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    rev.setflags(write=False)
    return rev

@functools.lru_cache(maxsize=64)
def _stage_twiddles(n, inverse):
    sign = 1.0 if inverse else -1.0
    stages = []
    size = 2
    while size <= n:
        k = np.arange(size // 2)
        tw = np.exp(sign * 2j * np.pi * k / size)
        tw.setflags(write=False)
        stages.append(tw)
        size *= 2
    return tuple(stages)


def fft(values, inverse=False):
    """Radix-2 Cooley-Tukey transform; the length must be a power of two.

    The forward direction uses the e^{-2*pi*i*jk/n} kernel; the inverse is
    conjugate-kernel with the 1/n normalization, so fft(fft(x), inverse=True)
    recovers x up to roundoff.
    """
    x = np.asarray(values, dtype=np.complex128)
    if x.ndim != 1:
        raise SizeError("fft expects a one-dimensional vector")
    n = x.size
    if n == 0 or (n & (n - 1)) != 0:
        raise SizeError(f"fft length must be a power of two, got {n}")
    if n == 1:
        return x.copy()
    x = x[_bit_reversal(n)]
    for tw in _stage_twiddles(n, bool(inverse)):
        half = tw.size
        block = x.reshape(-1, 2 * half)
        even = block[:, :half]
        odd = block[:, half:] * tw
        nxt = np.empty_like(block)
        nxt[:, :half] = even + odd
        nxt[:, half:] = even - odd
        x = nxt.reshape(-1)
    if inverse:
        x = x / n
    return x


def fft_convolve(a, b):
    """Full linear convolution of two real vectors via the radix-2 FFT."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out_len = a.size + b.size - 1
    size = next_pow2(out_len)
    fa = fft(np.concatenate([a, np.zeros(size - a.size)]))
    fb = fft(np.concatenate([b, np.zeros(size - b.size)]))
    return fft(fa * fb, inverse=True)[:out_len].real


# --------------------------------------------------------------------------
# module-level operations over the variants
# --------------------------------------------------------------------------

def matvec_naive(a, x):
    """A @ x by direct summation (structural zeros skipped for triangular)."""
    return a.matvec_naive(x)


def matvec_fft(a, x):
    """A @ x through the circulant/FFT route; Toeplitz and Hankel only."""
    if not isinstance(a, (ToeplitzMatrix, HankelMatrix)):
        raise TypeError(f"matvec_fft supports Toeplitz/Hankel, got {a.variant}")
    return a.matvec_fft(x)


def to_dense(a):
    """Materialize any variant as a DenseMatrix."""
    return DenseMatrix(a.rows, a.cols, a.to_dense())


def scale(a, c):
    """c * A with the variant tag preserved."""
    return a.scale(c)


def transpose(a):
    """A^T with the variant preserved (orientation flips for triangular)."""
    return a.transpose()


def _dense_input(b):
    if isinstance(b, StructuredMatrix):
        return b.to_dense()
    arr = np.asarray(b, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError("expected a matrix (2-d array or StructuredMatrix)")
    return arr


def embed_rows_toeplitz(b):
    """Insert rows to turn an arbitrary matrix into a Toeplitz one.

    Between each adjacent pair of rows, cols - 1 new rows are inserted, each
    shifting the previous row one slot to the right while drawing its fresh
    leading entries from the next original row (taken right to left).  The
    result is an ((m-1)*n + 1) x n Toeplitz matrix in which the original rows
    appear unchanged; their 0-based positions are returned as the second
    value.
    """
    arr = _dense_input(b)
    m, n = arr.shape
    out_rows = (m - 1) * n + 1
    diag = np.empty(out_rows + n - 1)
    diag[:n] = arr[0, ::-1]
    if m > 1:
        diag[n:] = arr[1:, ::-1].ravel()
    row_map = list(range(0, out_rows, n))
    return ToeplitzMatrix(out_rows, n, diag), row_map


def embed_rows_hankel(b):
    """Hankel counterpart of ``embed_rows_toeplitz``.

    The anti-diagonal parameter vector is exactly the row-major flattening of
    the input, so the embedded matrix walks through the original entries in
    reading order.  Original rows sit at the returned 0-based positions.
    """
    arr = _dense_input(b)
    m, n = arr.shape
    out_rows = (m - 1) * n + 1
    row_map = list(range(0, out_rows, n))
    return HankelMatrix(out_rows, n, arr.ravel()), row_map


# --------------------------------------------------------------------------
# projections and exact-structure extraction
# --------------------------------------------------------------------------

def project_toeplitz(arr):
    """Closest Toeplitz matrix in Frobenius norm: per-diagonal means."""
    arr = _dense_input(arr)
    m, n = arr.shape
    idx = diagonal_index(m, n)
    sums = np.bincount(idx, weights=arr.ravel(), minlength=m + n - 1)
    counts = np.bincount(idx, minlength=m + n - 1)
    return ToeplitzMatrix(m, n, sums / counts)


def project_hankel(arr):
    """Closest Hankel matrix in Frobenius norm: per-anti-diagonal means."""
    arr = _dense_input(arr)
    m, n = arr.shape
    idx = antidiagonal_index(m, n)
    sums = np.bincount(idx, weights=arr.ravel(), minlength=m + n - 1)
    counts = np.bincount(idx, minlength=m + n - 1)
    return HankelMatrix(m, n, sums / counts)


def toeplitz_from_edges(arr):
    """Toeplitz matrix built from the first row and first column of ``arr``.

    Reproduces ``arr`` exactly if and only if ``arr`` is Toeplitz.
    """
    arr = _dense_input(arr)
    m, n = arr.shape
    diag = np.concatenate([arr[0, ::-1], arr[1:, 0]])
    return ToeplitzMatrix(m, n, diag)


def hankel_from_edges(arr):
    """Hankel matrix built from the first row and last column of ``arr``."""
    arr = _dense_input(arr)
    m, n = arr.shape
    anti = np.concatenate([arr[0, :], arr[1:, n - 1]])
    return HankelMatrix(m, n, anti)


def identity_toeplitz(rows, cols=None):
    """Rectangular identity-banded Toeplitz matrix (ones on the main diagonal)."""
    m = rows
    n = rows if cols is None else cols
    diag = np.zeros(m + n - 1)
    diag[n - 1] = 1.0
    return ToeplitzMatrix(m, n, diag)
