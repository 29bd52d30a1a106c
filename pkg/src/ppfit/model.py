"""Piecewise polynomials in the global power basis.

Segment ``i`` (0-based internally) covers ``[xi[i], xi[i+1]]`` and is the
polynomial ``sum_j coeffs[i, j] * x**j`` in *global* coordinates.  Intervals
are half-open, ``[xi[i], xi[i+1])``, except the last which is closed.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np


class DomainError(ValueError):
    """Raised when an abscissa lies outside the breakpoint range."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def uniform_breakpoints(lo: float, hi: float, m: int) -> np.ndarray:
    if m < 1:
        raise ValueError("segment count must be >= 1")
    if not hi > lo:
        raise ValueError("degenerate domain")
    xi = np.linspace(lo, hi, m + 1)
    xi[0], xi[-1] = lo, hi
    return xi


def quantile_breakpoints(x, m: int) -> np.ndarray:
    """Breakpoints at data quantiles; ends pinned to the data range."""
    x = np.asarray(x, dtype=float)
    xi = np.quantile(x, np.linspace(0.0, 1.0, m + 1))
    xi[0], xi[-1] = x.min(), x.max()
    if np.any(np.diff(xi) <= 0):
        raise ValueError("quantile placement produced repeated breakpoints")
    return xi


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError("x and y must have equal length")
        if x.size == 0:
            raise ValueError("dataset is empty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "x", _frozen(x[order]))
        object.__setattr__(self, "y", _frozen(y[order]))

    def __len__(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Piecewise polynomial with ``m`` segments of degree ``d``.

    Parameters
    ----------
    breakpoints : array_like, shape (m+1,)
        Strictly increasing segment boundaries.
    coeffs : array_like, shape (m, d+1)
        ``coeffs[i, j]`` multiplies ``x**j`` on segment ``i``.
    """

    breakpoints: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.breakpoints, dtype=float).ravel()
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if xi.size < 2 or np.any(np.diff(xi) <= 0):
            raise ValueError("breakpoints must be strictly increasing, length >= 2")
        if c.shape[0] != xi.size - 1:
            raise ValueError(
                f"coeffs has {c.shape[0]} rows, expected {xi.size - 1} segments"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "breakpoints", _frozen(xi))
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def n_segments(self) -> int:
        return self.coeffs.shape[0]

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def with_coeffs(self, coeffs) -> PiecewisePolynomial:
        return PiecewisePolynomial(self.breakpoints, coeffs)

    def __call__(self, x, r: int = 0):
        return evaluate(self, x, r)


def segment_index(breakpoints, x) -> np.ndarray | int:
    """1-based segment index for ``x`` (scalar or array)."""
    xi = np.asarray(breakpoints, dtype=float)
    xa = np.asarray(x, dtype=float)
    if np.any((xa < xi[0]) | (xa > xi[-1])) or np.any(np.isnan(xa)):
        raise DomainError(f"x outside [{xi[0]}, {xi[-1]}]")
    m = xi.size - 1
    idx = np.searchsorted(xi, xa, side="right")
    idx = np.minimum(idx, m)
    if idx.ndim == 0:
        return int(idx)
    return idx


def derivative_row(x, degree: int, r: int) -> np.ndarray:
    """Row vector ``d^r/dx^r [x^0, ..., x^d]`` evaluated at ``x``.

    Vectorized over ``x``: returns shape ``x.shape + (degree+1,)``.
    """
    xa = np.asarray(x, dtype=float)
    out = np.zeros(xa.shape + (degree + 1,))
    for j in range(r, degree + 1):
        out[..., j] = (factorial(j) // factorial(j - r)) * xa ** (j - r)
    return out


def poly_eval(c, x, r: int = 0):
    """Evaluate ``sum_j c[j] x^j`` (or its r-th derivative) by Horner."""
    c = np.asarray(c, dtype=float)
    d = c.size - 1
    if r > d:
        return np.zeros(np.shape(x))
    dc = c[r:] * np.array([factorial(j) // factorial(j - r) for j in range(r, d + 1)])
    xa = np.asarray(x, dtype=float)
    acc = np.zeros_like(xa) + dc[-1]
    for a in dc[-2::-1]:
        acc = acc * xa + a
    return acc


def evaluate(pp: PiecewisePolynomial, x, r: int = 0):
    if r < 0:
        raise ValueError("derivative order must be >= 0")
    seg = np.asarray(segment_index(pp.breakpoints, x)) - 1
    xa = np.asarray(x, dtype=float)
    if seg.ndim == 0:
        return float(poly_eval(pp.coeffs[int(seg)], xa, r))
    out = np.empty(xa.shape)
    for s in np.unique(seg):
        mask = seg == s
        out[mask] = poly_eval(pp.coeffs[s], xa[mask], r)
    return out


def eval_at_boundary(pp: PiecewisePolynomial, i: int, side: str, r: int = 0) -> float:
    """Evaluate segment ``i`` (1-based) at its own left or right endpoint."""
    if not 1 <= i <= pp.n_segments:
        raise IndexError(f"segment index {i} out of range 1..{pp.n_segments}")
    if side == "left":
        x = pp.breakpoints[i - 1]
    elif side == "right":
        x = pp.breakpoints[i]
    else:
        raise ValueError("side must be 'left' or 'right'")
    return float(poly_eval(pp.coeffs[i - 1], x, r))


def dense_sample(pp: PiecewisePolynomial, per_segment_count: int) -> np.ndarray:
    """Sample value, slope and curvature on a uniform grid per segment.

    Returns an array with columns ``x, f, f', f''`` and
    ``m * per_segment_count`` rows.  Each segment is sampled on its own
    closed interval with its own polynomial, so boundary rows show the
    one-sided values.
    """
    if per_segment_count < 2:
        raise ValueError("per_segment_count must be >= 2")
    rows = []
    xi = pp.breakpoints
    for i in range(pp.n_segments):
        xs = np.linspace(xi[i], xi[i + 1], per_segment_count)
        c = pp.coeffs[i]
        rows.append(
            np.column_stack([xs] + [poly_eval(c, xs, r) for r in range(3)])
        )
    return np.vstack(rows)


def local_basis_transform(breakpoints, degree: int) -> np.ndarray:
    """Matrices ``T`` with ``coeffs[i] = T[i] @ local[i]``.

    ``local[i, l]`` multiplies ``((x - xi[i]) / w_i) ** l`` on segment ``i``;
    the result is in the global power basis.  Shape ``(m, d+1, d+1)``.
    """
    xi = np.asarray(breakpoints, dtype=float)
    m = xi.size - 1
    T = np.zeros((m, degree + 1, degree + 1))
    for i in range(m):
        a, w = xi[i], xi[i + 1] - xi[i]
        for l in range(degree + 1):
            for j in range(l + 1):
                T[i, j, l] = comb(l, j) * (-a) ** (l - j) / w**l
    return T


@dataclass(frozen=True)
class AffineMap:
    """Working coordinate ``u = (x - offset) * scale``."""

    offset: float = 0.0
    scale: float = 1.0

    @classmethod
    def for_range(cls, lo: float, hi: float, segments: int, how: str = "segments") -> AffineMap:
        """``segments``: centred, unit-width segments, ``u`` in [-m/2, m/2].
        ``unit``: ``u`` in [0, 1].  ``none``: identity.
        """
        if how == "none":
            return cls()
        if not hi > lo:
            raise ValueError("degenerate data range")
        if how == "segments":
            return cls(offset=0.5 * (lo + hi), scale=segments / (hi - lo))
        if how == "unit":
            return cls(offset=lo, scale=1.0 / (hi - lo))
        raise ValueError(f"unknown normalization {how!r}")

    def forward(self, x):
        return (np.asarray(x, dtype=float) - self.offset) * self.scale

    def inverse(self, u):
        return np.asarray(u, dtype=float) / self.scale + self.offset

    def apply(self, data: Dataset) -> Dataset:
        return Dataset(self.forward(data.x), data.y)
