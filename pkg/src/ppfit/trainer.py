"""Full-batch gradient-descent fitting with early stopping."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial, legendre

from .losses import ContinuityMode, LossBreakdown, Objective, ObjectiveWeights
from .model import (
    Dataset,
    PiecewisePolynomial,
    local_basis_transform,
    quantile_breakpoints,
    uniform_breakpoints,
)

logger = logging.getLogger(__name__)

VARIANTS = ("amsgrad", "adam", "sgd")
INIT_STRATEGIES = ("per_segment_lsq", "zeros")
PARAMETERIZATIONS = ("local", "global")
NORMALIZATIONS = ("segments", "unit", "none")
RIDGE = 1e-8


class TrainingDivergedError(RuntimeError):
    """Non-finite loss or gradient; ``history`` holds the finite epochs."""

    def __init__(self, message: str, history: list[LossBreakdown]):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class OptimizerHyper:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    variant: str = "amsgrad"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown optimizer {self.variant!r}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("moment decay rates must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


@dataclass(frozen=True)
class FitConfig:
    degree: int = 7
    segments: int = 16
    mode: ContinuityMode = field(default_factory=lambda: ContinuityMode("periodic", 2))
    weights: ObjectiveWeights = field(default_factory=lambda: ObjectiveWeights(0.1, 0.9))
    epochs: int = 1000
    patience: int = 100
    hyper: OptimizerHyper = field(default_factory=OptimizerHyper)
    init: str = "per_segment_lsq"
    seed: int = 0
    placement: str = "uniform"
    parameterization: str = "local"
    normalize: str = "segments"

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if self.segments < 1:
            raise ValueError("segments must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")
        if self.init not in INIT_STRATEGIES:
            raise ValueError(f"unknown init strategy {self.init!r}")
        if self.placement not in ("uniform", "quantile"):
            raise ValueError(f"unknown breakpoint placement {self.placement!r}")
        if self.parameterization not in PARAMETERIZATIONS:
            raise ValueError(f"unknown parameterization {self.parameterization!r}")
        if self.normalize not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalize!r}")
        if self.mode.k > self.degree:
            raise ValueError(f"continuity order {self.mode.k} exceeds degree {self.degree}")

    def with_weights(self, alpha: float, beta: float) -> FitConfig:
        return replace(self, weights=ObjectiveWeights(alpha, beta))

    def breakpoints_for(self, data: Dataset) -> np.ndarray:
        lo, hi = float(data.x[0]), float(data.x[-1])
        if self.placement == "quantile":
            return quantile_breakpoints(data.x, self.segments)
        return uniform_breakpoints(lo, hi, self.segments)


@dataclass
class FitResult:
    model: PiecewisePolynomial
    history: list[LossBreakdown]
    best_epoch: int
    stopped_early: bool

    @property
    def best(self) -> LossBreakdown:
        return self.history[self.best_epoch]


@dataclass
class OptimizerState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    second_moment_max: np.ndarray
    step_count: int = 0

    @classmethod
    def zeros(cls, shape) -> OptimizerState:
        return cls(np.zeros(shape), np.zeros(shape), np.zeros(shape), 0)


def init_coeffs(data: Dataset, breakpoints, degree: int,
                strategy: str = "per_segment_lsq", seed: int = 0) -> np.ndarray:
    """Starting coefficients.

    ``per_segment_lsq`` fits every segment on its own points with a tiny
    ridge term on the segment's Legendre coefficients of order >= 2.
    Segments holding fewer than ``degree + 1`` points get a constant at
    their mean ``y`` (zero if empty).  ``seed`` is accepted
    for interface stability; neither strategy is random.
    """
    xi = np.asarray(breakpoints, dtype=float)
    m = xi.size - 1
    coeffs = np.zeros((m, degree + 1))
    if strategy == "zeros":
        return coeffs
    if strategy != "per_segment_lsq":
        raise ValueError(f"unknown init strategy {strategy!r}")
    seg = np.searchsorted(xi, data.x, side="right") - 1
    seg = np.clip(seg, 0, m - 1)
    # the affine part is left undamped so exact lines are recovered unbiased
    damp = np.sqrt(RIDGE) * np.eye(degree + 1)[2:]
    for i in range(m):
        mask = seg == i
        cnt = int(mask.sum())
        if cnt == 0:
            continue
        if cnt < degree + 1:
            coeffs[i, 0] = float(np.mean(data.y[mask]))
            continue
        # ridge on Legendre coefficients over the segment: the monomial
        # columns are nearly collinear and a ridge there biases the fit
        dom = [xi[i], xi[i + 1]]
        s = (2.0 * data.x[mask] - dom[0] - dom[1]) / (dom[1] - dom[0])
        A = np.vstack([legendre.legvander(s, degree), damp])
        rhs = np.concatenate([data.y[mask], np.zeros(damp.shape[0])])
        theta = np.linalg.lstsq(A, rhs, rcond=None)[0]
        c = legendre.Legendre(theta, domain=dom).convert(kind=Polynomial).coef
        coeffs[i, : c.size] = c
    return coeffs


def step(state: OptimizerState, coeffs: np.ndarray, grads: np.ndarray,
         hyper: OptimizerHyper) -> tuple[OptimizerState, np.ndarray]:
    """One optimizer update; returns new state and coefficients."""
    g = np.asarray(grads, dtype=float)
    if not np.all(np.isfinite(g)):
        raise TrainingDivergedError("non-finite gradient", [])
    t = state.step_count + 1
    if hyper.variant == "sgd":
        new = coeffs - hyper.learning_rate * g
        return replace(state, step_count=t), new

    b1, b2 = hyper.beta1, hyper.beta2
    m = b1 * state.first_moment + (1 - b1) * g
    v = b2 * state.second_moment + (1 - b2) * g * g
    if hyper.variant == "amsgrad":
        vmax = np.maximum(state.second_moment_max, v)
        new = coeffs - hyper.learning_rate * m / (np.sqrt(vmax) + hyper.epsilon)
    else:
        vmax = state.second_moment_max
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        new = coeffs - hyper.learning_rate * m_hat / (np.sqrt(v_hat) + hyper.epsilon)
    return OptimizerState(m, v, vmax, t), new


def fit(data: Dataset, config: FitConfig, breakpoints=None,
        init: np.ndarray | None = None) -> FitResult:
    """Minimize the scalarized loss; return the best coefficients seen.

    Works in the coordinates of ``data`` (no normalization here).  With
    ``parameterization="local"`` the optimizer state lives on per-segment
    scaled monomial coefficients, which are mapped linearly to the global
    power-basis coefficients before every loss evaluation.
    """
    xi = config.breakpoints_for(data) if breakpoints is None else np.asarray(breakpoints, float)
    objective = Objective(data, xi, config.degree, config.mode, config.weights)
    if init is None:
        coeffs = init_coeffs(data, xi, config.degree, config.init, config.seed)
    else:
        coeffs = np.array(init, dtype=float)

    if config.parameterization == "local":
        T = local_basis_transform(xi, config.degree)
        params = np.linalg.solve(T, coeffs[..., None])[..., 0]

        def to_coeffs(p):
            return np.einsum("ijl,il->ij", T, p)

        def to_param_grad(g):
            return np.einsum("ijl,ij->il", T, g)
    else:
        params = coeffs

        def to_coeffs(p):
            return p

        def to_param_grad(g):
            return g

    state = OptimizerState.zeros(params.shape)
    history: list[LossBreakdown] = []
    best_total, best_epoch, best_coeffs = np.inf, 0, None
    wait = 0
    stopped_early = False
    for epoch in range(config.epochs):
        coeffs = to_coeffs(params)
        loss, grad = objective.value_and_grad(coeffs)
        if not (np.isfinite(loss.total) and np.all(np.isfinite(grad))):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}", history)
        history.append(loss)
        if loss.total < best_total:
            best_total, best_epoch, best_coeffs = loss.total, epoch, coeffs.copy()
            wait = 0
        else:
            wait += 1
            if wait >= config.patience and epoch + 1 < config.epochs:
                stopped_early = True
                break
        if epoch + 1 < config.epochs:
            state, params = step(state, params, to_param_grad(grad), config.hyper)

    logger.debug("fit finished: %d epochs, best %d, total %.6g",
                 len(history), best_epoch, best_total)
    return FitResult(PiecewisePolynomial(xi, best_coeffs), history, best_epoch, stopped_early)
