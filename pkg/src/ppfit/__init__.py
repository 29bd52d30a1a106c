"""Energy-regularized C^k piecewise polynomial fitting by gradient descent."""

from .ckmin import CorrectionReport, enforce_ck, hermite_step_basis
from .io import gen_dataset, read_points_csv, read_result_json, write_points_csv, write_result_json
from .losses import (
    ContinuityMode,
    LossBreakdown,
    Objective,
    ObjectiveWeights,
    discontinuity,
    energy_quadrature,
    gradient,
    loss_ck,
    loss_energy,
    loss_l2,
    scalarized,
)
from .model import (
    AffineMap,
    Dataset,
    DomainError,
    PiecewisePolynomial,
    dense_sample,
    eval_at_boundary,
    evaluate,
    segment_index,
)
from .pipeline import run
from .sweep import TABLE1_GRID, SweepRecord, default_grid, pareto_front, sweep
from .trainer import FitConfig, FitResult, OptimizerHyper, OptimizerState, fit, init_coeffs, step

__version__ = "0.1.0"
