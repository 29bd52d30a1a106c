"""One complete run: normalize, fit, project to C^k, measure."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .ckmin import CorrectionReport, enforce_ck
from .io import RunArtifact
from .losses import ContinuityMode, LossBreakdown, ObjectiveWeights, scalarized
from .model import AffineMap, Dataset, PiecewisePolynomial
from .trainer import FitConfig, FitResult, OptimizerHyper, fit


@dataclass
class RunOutcome:
    config: FitConfig
    mapping: AffineMap
    fit: FitResult
    model: PiecewisePolynomial
    report: CorrectionReport
    losses: LossBreakdown

    @property
    def pre_projection(self) -> LossBreakdown:
        return self.fit.best


def run(data: Dataset, config: FitConfig) -> RunOutcome:
    mapping = AffineMap.for_range(
        float(data.x[0]), float(data.x[-1]), config.segments, config.normalize
    )
    work = mapping.apply(data)
    result = fit(work, config)
    projected, report = enforce_ck(result.model, config.mode, work)
    losses = scalarized(projected, work, config.mode, config.weights)
    return RunOutcome(config, mapping, result, projected, report, losses)


def config_to_dict(config: FitConfig) -> dict:
    return {
        "degree": config.degree,
        "segments": config.segments,
        "mode": config.mode.variant,
        "k": config.mode.k,
        "alpha": config.weights.alpha,
        "beta": config.weights.beta,
        "epochs": config.epochs,
        "patience": config.patience,
        "optimizer": asdict(config.hyper),
        "init": config.init,
        "seed": config.seed,
        "placement": config.placement,
        "parameterization": config.parameterization,
        "normalize": config.normalize,
    }


def config_from_dict(d: dict) -> FitConfig:
    return FitConfig(
        degree=int(d["degree"]),
        segments=int(d["segments"]),
        mode=ContinuityMode(d["mode"], int(d["k"])),
        weights=ObjectiveWeights(d["alpha"], d["beta"]),
        epochs=int(d["epochs"]),
        patience=int(d["patience"]),
        hyper=OptimizerHyper(**d["optimizer"]),
        init=d["init"],
        seed=int(d["seed"]),
        placement=d["placement"],
        parameterization=d.get("parameterization", "local"),
        normalize=d.get("normalize", "segments"),
    )


def to_artifact(outcome: RunOutcome) -> RunArtifact:
    hist = outcome.fit.history
    return RunArtifact(
        config=config_to_dict(outcome.config),
        breakpoints=outcome.model.breakpoints.tolist(),
        coeffs=outcome.model.coeffs.tolist(),
        losses=outcome.losses._asdict(),
        correction=outcome.report.to_dict(),
        domain={"offset": outcome.mapping.offset, "scale": outcome.mapping.scale},
        training={
            "epochs_run": len(hist),
            "best_epoch": outcome.fit.best_epoch,
            "stopped_early": outcome.fit.stopped_early,
            "pre_projection": outcome.pre_projection._asdict(),
            "total_history": [h.total for h in hist],
        },
    )


def artifact_mapping(artifact: RunArtifact) -> AffineMap:
    return AffineMap(float(artifact.domain["offset"]), float(artifact.domain["scale"]))


def dense_rows_original_units(model: PiecewisePolynomial, mapping: AffineMap,
                              per_segment_count: int) -> np.ndarray:
    """Dense ``x, f, f', f''`` rows with ``x`` and derivatives in data units."""
    from .model import dense_sample

    rows = dense_sample(model, per_segment_count)
    s = mapping.scale
    return np.column_stack(
        [mapping.inverse(rows[:, 0]), rows[:, 1], rows[:, 2] * s, rows[:, 3] * s * s]
    )
