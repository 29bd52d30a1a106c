"""Projection onto exact C^k continuity by local Hermite corrections.

Every handled breakpoint with jumps ``Delta_j`` (j = 0..k) is closed by
moving both adjacent segments half way: the left segment receives
``sum_j Delta_j / 2 * H_j`` and the right segment ``-sum_j Delta_j / 2 * G_j``.
``H_j`` has unit ``j``-th derivative at the segment's right end and vanishes
to order ``k`` at its left end; ``G_j`` is the mirror image.  Because each
correction vanishes to order ``k`` at the opposite end, the corrections at
the two ends of a segment do not interact and one simultaneous pass is
exact.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import factorial

import numpy as np
from numpy.polynomial import Polynomial

from .losses import ContinuityMode, jumps, loss_energy, loss_l2
from .model import Dataset, PiecewisePolynomial


RESOLUTION_FACTOR = 64.0


class ContinuityPreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class CorrectionReport:
    max_abs_delta_before: float
    max_abs_delta_after: float
    le_before: float
    le_after: float
    l2_before: float | None = None
    l2_after: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _local_hermite(k: int, at_right: bool) -> np.ndarray:
    """Local-coordinate basis on [0, 1]; row j holds coefficients of t^0..t^(2k+1)."""
    n = 2 * k + 2
    A = np.zeros((n, n))
    for r in range(k + 1):
        for p in range(r, n):
            falling = factorial(p) // factorial(p - r)
            # t = 0 contributes only the p == r term
            if p == r:
                A[r, p] = falling
            A[k + 1 + r, p] = falling
    rhs = np.zeros((n, k + 1))
    base = k + 1 if at_right else 0
    for j in range(k + 1):
        rhs[base + j, j] = 1.0
    return np.linalg.solve(A, rhs).T


def hermite_step_basis(k: int, a: float, b: float, at: str = "right") -> np.ndarray:
    """Global power-basis coefficients of the Hermite step basis on ``[a, b]``.

    Returns shape ``(k+1, 2k+2)``.  For ``at="right"`` row ``j`` is ``H_j``
    with ``H_j^(r)(a) = 0`` and ``H_j^(r)(b) = [r == j]`` for ``r <= k``;
    ``at="left"`` swaps the roles of the endpoints.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if not b > a:
        raise ValueError("degenerate interval")
    if at not in ("left", "right"):
        raise ValueError("at must be 'left' or 'right'")
    w = b - a
    local = _local_hermite(k, at == "right")
    # x-derivatives pick up a factor w^-j from the chain rule
    t = Polynomial([-a / w, 1.0 / w])
    out = np.zeros((k + 1, 2 * k + 2))
    for j in range(k + 1):
        g = Polynomial(local[j] * w**j)(t)
        c = g.coef
        out[j, : c.size] = c
    return out


def _correction_pass(coeffs: np.ndarray, xi: np.ndarray, mode: ContinuityMode,
                     delta: np.ndarray) -> np.ndarray:
    k, m = mode.k, coeffs.shape[0]
    gaps: dict[int, np.ndarray] = {}
    for (i, j), dj in zip(mode.handled(m), delta):
        gaps.setdefault(i, np.zeros(k + 1))[j] = dj
    out = coeffs.copy()
    for i, gap in gaps.items():
        if not np.any(gap):
            continue
        left, right = i - 1, i % m
        half = 0.5 * gap
        H = hermite_step_basis(k, xi[left], xi[left + 1], at="right")
        G = hermite_step_basis(k, xi[right], xi[right + 1], at="left")
        out[left, : 2 * k + 2] += half @ H
        out[right, : 2 * k + 2] -= half @ G
    return out


def jump_resolution(pp: PiecewisePolynomial, mode: ContinuityMode) -> np.ndarray:
    """Rounding unit of each handled jump, ordered as ``mode.handled(m)``.

    ``eps * sum_p |c_p| p!/(p-j)! |xi|^(p-j)`` over both one-sided
    evaluations: the smallest jump the float coefficients can express.
    """
    m, d = pp.n_segments, pp.degree
    xi, c = pp.breakpoints, np.abs(pp.coeffs)
    eps = np.finfo(float).eps
    out = []
    for i, j in mode.handled(m):
        nxt = i % m
        mag = 0.0
        for seg, x in ((nxt, xi[nxt]), (i - 1, xi[i])):
            for p in range(j, d + 1):
                mag += c[seg, p] * (factorial(p) // factorial(p - j)) * abs(x) ** (p - j)
        out.append(eps * mag)
    return np.array(out)


def enforce_ck(pp: PiecewisePolynomial, mode: ContinuityMode,
               data: Dataset | None = None,
               refine: int = 1) -> tuple[PiecewisePolynomial, CorrectionReport]:
    """Return a C^k-continuous copy of ``pp`` plus a before/after report.

    All handled breakpoints are corrected in one simultaneous pass; jumps
    below ``RESOLUTION_FACTOR`` times their rounding unit (see
    :func:`jump_resolution`) are left alone, which makes the projection
    idempotent.  In
    floating point the power-basis coefficients cannot absorb the
    correction exactly, so up to ``refine`` further passes are applied to
    the (exactly evaluated) residual jumps at the breakpoints that were
    violated in the input; a pass is kept only if it lowers the largest
    residual.
    """
    k, d = mode.k, pp.degree
    if d < 2 * k + 1:
        raise ContinuityPreconditionError(
            f"degree {d} too low for C^{k} correction (needs >= {2 * k + 1})"
        )
    xi = pp.breakpoints
    pairs = mode.handled(pp.n_segments)
    before = jumps(pp, mode)
    # jumps the stored coefficients cannot resolve count as closed
    gaps = np.where(np.abs(before) > RESOLUTION_FACTOR * jump_resolution(pp, mode), before, 0.0)
    out = pp.with_coeffs(_correction_pass(np.asarray(pp.coeffs), xi, mode, gaps))
    after = jumps(out, mode)
    # refinement stays on breakpoints that were corrected, so segments
    # away from them keep their coefficients bitwise
    corrected = {i for (i, _), g in zip(pairs, gaps) if g != 0.0}
    touched = np.array([i in corrected for i, _ in pairs], dtype=bool)
    for _ in range(refine):
        worst = np.max(np.abs(after), initial=0.0)
        if worst == 0.0:
            break
        resid = np.where(touched, after, 0.0)
        cand = out.with_coeffs(_correction_pass(np.asarray(out.coeffs), xi, mode, resid))
        cand_after = jumps(cand, mode)
        if np.max(np.abs(cand_after), initial=0.0) >= worst:
            break
        out, after = cand, cand_after

    report = CorrectionReport(
        max_abs_delta_before=float(np.max(np.abs(before), initial=0.0)),
        max_abs_delta_after=float(np.max(np.abs(after), initial=0.0)),
        le_before=loss_energy(pp),
        le_after=loss_energy(out),
        l2_before=None if data is None else loss_l2(pp, data),
        l2_after=None if data is None else loss_l2(out, data),
    )
    return out, report


def continuity_scale(pp: PiecewisePolynomial) -> float:
    """Magnitude reference for judging floating-point residue of the jumps."""
    xmax = float(np.max(np.abs(pp.breakpoints)))
    return max(1.0, float(np.max(np.abs(pp.coeffs))) * xmax**pp.degree)
