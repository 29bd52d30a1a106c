"""Approximation, continuity and strain-energy losses with analytic gradients.

All three losses are quadratic in the flattened coefficient vector, so each
is expressed through a fixed linear operator:

* ``l2``  -- design matrix ``V`` (one row per data point),
* ``lck`` -- jump matrix ``D`` (one row per handled breakpoint/order pair),
* ``le``  -- block-diagonal Gram kernel ``K`` of the second derivatives.

:class:`Objective` caches these for one (data, breakpoints, degree, mode)
combination; the module-level functions build them on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import NamedTuple

import numpy as np

from .model import Dataset, PiecewisePolynomial, derivative_row, poly_eval, segment_index

MODES = ("open", "cyclic", "periodic")
_WEIGHT_SLACK = 1e-12


@dataclass(frozen=True)
class ContinuityMode:
    variant: str = "open"
    k: int = 0

    def __post_init__(self):
        if self.variant not in MODES:
            raise ValueError(f"unknown continuity mode {self.variant!r}")
        if self.k < 0:
            raise ValueError("continuity order must be >= 0")

    @property
    def wraps(self) -> bool:
        return self.variant != "open"

    def handled(self, m: int) -> list[tuple[int, int]]:
        """``(i, j)`` pairs (1-based breakpoint index, order) that are constrained."""
        pairs = []
        last = m if self.wraps else m - 1
        for i in range(1, last + 1):
            for j in range(self.k + 1):
                if i == m and j == 0 and self.variant == "cyclic":
                    continue
                pairs.append((i, j))
        return pairs

    def normalizer(self, m: int) -> int:
        return m if self.wraps else m - 1


@dataclass(frozen=True)
class ObjectiveWeights:
    """Weights of the scalarized objective; energy gets ``1 - alpha - beta``."""

    alpha: float
    beta: float

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (np.isfinite(a) and np.isfinite(b)):
            raise ValueError("weights must be finite")
        if a < 0 or b < 0:
            raise ValueError(f"weights must be non-negative (alpha={a}, beta={b})")
        if a + b > 1 + _WEIGHT_SLACK:
            raise ValueError(f"alpha + beta must not exceed 1 (got {a + b})")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def gamma(self) -> float:
        return max(0.0, 1.0 - (self.alpha + self.beta))


class LossBreakdown(NamedTuple):
    l2: float
    lck: float
    le: float
    total: float


def combine(l2: float, lck: float, le: float, w: ObjectiveWeights) -> LossBreakdown:
    total = w.alpha * lck + w.beta * l2 + w.gamma * le
    return LossBreakdown(float(l2), float(lck), float(le), float(total))


# --------------------------------------------------------------------------
# operators


def design_matrix(breakpoints, degree: int, x) -> np.ndarray:
    """Rows map flattened coefficients to ``f(x_p)``."""
    xi = np.asarray(breakpoints, dtype=float)
    x = np.asarray(x, dtype=float)
    m, w = xi.size - 1, degree + 1
    seg = np.atleast_1d(segment_index(xi, x)) - 1
    V = np.zeros((x.size, m * w))
    powers = derivative_row(x, degree, 0)
    for p in range(x.size):
        s = seg[p]
        V[p, s * w:(s + 1) * w] = powers[p]
    return V


def jump_matrix(breakpoints, degree: int, mode: ContinuityMode) -> np.ndarray:
    """Rows map flattened coefficients to the jumps ``Delta_{i,j}``."""
    xi = np.asarray(breakpoints, dtype=float)
    m, w = xi.size - 1, degree + 1
    pairs = mode.handled(m)
    D = np.zeros((len(pairs), m * w))
    for row, (i, j) in enumerate(pairs):
        # right neighbour evaluated at its left end, minus segment i at its right end
        nxt = i % m
        D[row, nxt * w:(nxt + 1) * w] += derivative_row(xi[nxt], degree, j)
        D[row, (i - 1) * w:i * w] -= derivative_row(xi[i], degree, j)
    return D


def _kernel_factors(degree: int) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(degree + 1)
    jj, kk = np.meshgrid(j, j, indexing="ij")
    mask = (jj >= 2) & (kk >= 2)
    expo = np.where(mask, jj + kk - 3, 1)
    fac = np.where(mask, jj * kk * (jj - 1) * (kk - 1) / expo, 0.0)
    return fac, expo


def energy_kernel(breakpoints, degree: int) -> np.ndarray:
    """Per-segment Gram matrices of ``x -> j(j-1) x^(j-2)``; shape (m, d+1, d+1)."""
    return _energy_kernel_cached(tuple(float(v) for v in np.ravel(breakpoints)), degree)


@lru_cache(maxsize=64)
def _energy_kernel_cached(xi: tuple, degree: int) -> np.ndarray:
    xi = np.asarray(xi)
    fac, expo = _kernel_factors(degree)
    hi = xi[1:, None, None] ** expo
    lo = xi[:-1, None, None] ** expo
    K = fac * (hi - lo)
    K.setflags(write=False)
    return K


def _energy_from_kernel(K: np.ndarray, coeffs: np.ndarray) -> float:
    return max(0.0, float(np.einsum("ij,ijk,ik->", coeffs, K, coeffs)))


# --------------------------------------------------------------------------
# losses


def loss_l2(pp: PiecewisePolynomial, data: Dataset) -> float:
    if len(data) == 0:
        raise ValueError("empty dataset")
    r = pp(data.x) - data.y
    return float(np.mean(r * r))


def _exact_derivative(c, x, r: int) -> Fraction:
    xf = Fraction(float(x))
    acc = Fraction(0)
    for p in range(len(c) - 1, r - 1, -1):
        acc = acc * xf + Fraction(float(c[p])) * (factorial(p) // factorial(p - r))
    return acc


def discontinuity(pp: PiecewisePolynomial, i: int, j: int, mode: ContinuityMode) -> float:
    """Jump of the ``j``-th derivative at breakpoint ``i`` (1-based).

    Evaluated in exact rational arithmetic on the stored float coefficients
    and rounded once, so residues after a continuity projection are not
    masked by cancellation in the power basis.
    """
    m = pp.n_segments
    last = m if mode.wraps else m - 1
    if not 1 <= i <= last:
        raise IndexError(f"breakpoint index {i} out of range 1..{last} for {mode.variant}")
    xi, c = pp.breakpoints, pp.coeffs
    nxt = i % m
    return float(_exact_derivative(c[nxt], xi[nxt], j) - _exact_derivative(c[i - 1], xi[i], j))


def jumps(pp: PiecewisePolynomial, mode: ContinuityMode) -> np.ndarray:
    """All handled jumps, ordered as ``mode.handled(m)``."""
    return np.array(
        [discontinuity(pp, i, j, mode) for i, j in mode.handled(pp.n_segments)]
    )


def loss_ck(pp: PiecewisePolynomial, mode: ContinuityMode) -> float:
    norm = mode.normalizer(pp.n_segments)
    if norm == 0:
        return 0.0
    delta = jumps(pp, mode)
    return float(np.sum(delta * delta) / norm)


def loss_energy(pp: PiecewisePolynomial) -> float:
    """Closed-form integral of the squared second derivative."""
    if pp.degree < 2:
        return 0.0
    return _energy_from_kernel(energy_kernel(pp.breakpoints, pp.degree), pp.coeffs)


def energy_quadrature(pp: PiecewisePolynomial, subdivisions: int = 64) -> float:
    """Composite Simpson estimate of the energy integral.

    ``subdivisions`` Simpson panels (two sub-intervals each) per segment.
    Independent of the closed form; used as a cross-check.
    """
    if subdivisions < 1:
        raise ValueError("subdivisions must be >= 1")
    total = 0.0
    xi = pp.breakpoints
    for i in range(pp.n_segments):
        a, b = xi[i], xi[i + 1]
        x = np.linspace(a, b, 2 * subdivisions + 1)
        f2 = poly_eval(pp.coeffs[i], x, 2)
        g = f2 * f2
        h = (b - a) / (2 * subdivisions)
        total += h / 3 * (g[0] + g[-1] + 4 * g[1:-1:2].sum() + 2 * g[2:-1:2].sum())
    return float(total)


def scalarized(pp, data, mode, w: ObjectiveWeights) -> LossBreakdown:
    return combine(loss_l2(pp, data), loss_ck(pp, mode), loss_energy(pp), w)


def gradient(pp, data, mode, w: ObjectiveWeights) -> np.ndarray:
    return Objective(data, pp.breakpoints, pp.degree, mode, w).gradient(pp.coeffs)


# --------------------------------------------------------------------------
# cached objective used by the trainer


class Objective:
    """Scalarized loss for a fixed data set, breakpoint vector and mode."""

    def __init__(self, data: Dataset, breakpoints, degree: int,
                 mode: ContinuityMode, weights: ObjectiveWeights):
        self.data = data
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.degree = degree
        self.mode = mode
        self.weights = weights
        self.shape = (self.breakpoints.size - 1, degree + 1)
        self.V = design_matrix(self.breakpoints, degree, data.x)
        self.D = jump_matrix(self.breakpoints, degree, mode)
        self.K = energy_kernel(self.breakpoints, degree)
        self._ck_norm = mode.normalizer(self.shape[0])

    def breakdown(self, coeffs: np.ndarray) -> LossBreakdown:
        return self._evaluate(coeffs, need_grad=False)[0]

    def gradient(self, coeffs: np.ndarray) -> np.ndarray:
        return self._evaluate(coeffs, need_grad=True)[1]

    def value_and_grad(self, coeffs: np.ndarray):
        return self._evaluate(coeffs, need_grad=True)

    def _evaluate(self, coeffs, need_grad: bool):
        c = np.asarray(coeffs, dtype=float).reshape(self.shape)
        flat = c.ravel()
        w = self.weights
        n = len(self.data)

        resid = self.V @ flat - self.data.y
        l2 = float(np.mean(resid * resid))
        if self._ck_norm:
            delta = self.D @ flat
            lck = float(np.sum(delta * delta) / self._ck_norm)
        else:
            delta = np.zeros(0)
            lck = 0.0
        le = _energy_from_kernel(self.K, c) if self.degree >= 2 else 0.0
        out = combine(l2, lck, le, w)
        if not need_grad:
            return out, None

        g = (2.0 * w.beta / n) * (self.V.T @ resid)
        if self._ck_norm:
            g += (2.0 * w.alpha / self._ck_norm) * (self.D.T @ delta)
        g = g.reshape(self.shape)
        if self.degree >= 2 and w.gamma:
            g += 2.0 * w.gamma * np.einsum("ijk,ik->ij", self.K, c)
        return out, g
