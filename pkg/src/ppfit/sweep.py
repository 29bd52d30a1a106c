"""Weight sweeps over the scalarized objective and Pareto filtering."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .io import write_result_json
from .losses import ObjectiveWeights
from .model import Dataset
from .pipeline import RunOutcome, run, to_artifact
from .trainer import FitConfig, TrainingDivergedError

logger = logging.getLogger(__name__)

# two beta values per alpha, selected on the CLI with ``--grid table1``
TABLE1_GRID: tuple[tuple[float, float], ...] = (
    (0.10, 0.900),
    (0.10, 0.450),
    (0.50, 0.500),
    (0.50, 0.250),
    (0.75, 0.250),
    (0.75, 0.125),
    (0.99, 0.010),
    (0.99, 0.005),
)


def default_grid(alphas=(0.10, 0.50, 0.75, 0.99), per_alpha: int = 8) -> list[tuple[float, float]]:
    """The eight ``table1`` pairs plus ``per_alpha`` halvings of ``1 - alpha`` per alpha.

    The halvings ``(1 - alpha) * 2**-p`` are log-spaced in ``(0, 1 - alpha]``
    and already contain every ``table1`` pair.
    """
    grid = list(TABLE1_GRID)
    for a in alphas:
        for p in range(per_alpha):
            b = round((1.0 - a) * 2.0**-p, 12)
            if not any(abs(a - ga) < 1e-12 and abs(b - gb) < 1e-12 for ga, gb in grid):
                grid.append((a, b))
    return grid


@dataclass
class SweepRecord:
    alpha: float
    beta: float
    l2: float
    le: float
    lck: float
    seed: int
    epochs_run: int
    model_ref: str | None = None
    status: str = "ok"
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return asdict(self)


def _run_point(args) -> tuple[RunOutcome | None, str | None]:
    data, config = args
    try:
        return run(data, config), None
    except (TrainingDivergedError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def sweep(data: Dataset, base_config: FitConfig, weight_grid, workers: int = 1,
          out_dir=None) -> list[SweepRecord]:
    """Fit, project and measure every ``(alpha, beta)`` of ``weight_grid``.

    Records come back in grid order.  With ``workers > 1`` the fits run in
    separate processes; results are identical to the sequential run.  When
    ``out_dir`` is given each run is written as ``run_NNN.json``.
    """
    grid = [(float(a), float(b)) for a, b in weight_grid]
    for a, b in grid:
        ObjectiveWeights(a, b)
    jobs = [(data, base_config.with_weights(a, b)) for a, b in grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(j) for j in jobs]

    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)

    records = []
    for idx, ((a, b), (outcome, err)) in enumerate(zip(grid, results)):
        if outcome is None:
            logger.warning("grid point alpha=%g beta=%g failed: %s", a, b, err)
            records.append(SweepRecord(a, b, float("nan"), float("nan"), float("nan"),
                                       base_config.seed, 0, status="failed", error=err))
            continue
        ref = None
        if out_dir is not None:
            ref = f"run_{idx:03d}.json"
            write_result_json(Path(out_dir) / ref, to_artifact(outcome))
        records.append(SweepRecord(
            alpha=a,
            beta=b,
            l2=outcome.losses.l2,
            le=outcome.losses.le,
            lck=outcome.losses.lck,
            seed=base_config.seed,
            epochs_run=len(outcome.fit.history),
            model_ref=ref,
        ))
    return records


def pareto_front(records) -> list:
    """Records not dominated in ``(l2, le)``; exact duplicates keep the first.

    Failed or non-finite records are ignored.  Output keeps input order.
    """
    cands = [
        (r.l2, r.le, idx) for idx, r in enumerate(records)
        if getattr(r, "ok", True) and np.isfinite(r.l2) and np.isfinite(r.le)
    ]
    cands.sort()
    keep = set()
    best_le = np.inf
    for l2, le, idx in cands:
        # every earlier candidate has l2 <= this one; an equal le there is
        # either a dominator (smaller l2) or an earlier duplicate
        if le < best_le:
            keep.add(idx)
            best_le = le
    return [records[i] for i in sorted(keep)]
