"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .ckmin import ContinuityPreconditionError
from .io import (
    CsvParseError,
    SchemaError,
    gen_dataset,
    read_points_csv,
    read_result_json,
    write_dense_csv,
    write_points_csv,
    write_result_json,
)
from .losses import ContinuityMode, ObjectiveWeights
from .pipeline import artifact_mapping, dense_rows_original_units, run, to_artifact
from .sweep import TABLE1_GRID, SweepRecord, default_grid, pareto_front, sweep
from .trainer import FitConfig, OptimizerHyper, TrainingDivergedError

log = logging.getLogger("ppfit")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
RECORD_FIELDS = ["alpha", "beta", "l2", "le", "lck", "seed", "epochs_run", "model_ref", "status"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fit_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--degree", type=int, default=7)
    p.add_argument("--segments", type=int, default=16)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--mode", choices=["open", "cyclic", "periodic"], default="periodic")
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--patience", type=int, default=100)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=["amsgrad", "adam", "sgd"], default="amsgrad")
    p.add_argument("--init", choices=["per_segment_lsq", "zeros"], default="per_segment_lsq")
    p.add_argument("--placement", choices=["uniform", "quantile"], default="uniform")
    p.add_argument("--parameterization", choices=["local", "global"], default="local")
    p.add_argument("--normalize", choices=["segments", "unit", "none"], default="segments")
    p.add_argument("--seed", type=int, default=0)


def _config(args, alpha: float = 0.1, beta: float = 0.9) -> FitConfig:
    return FitConfig(
        degree=args.degree,
        segments=args.segments,
        mode=ContinuityMode(args.mode, args.k),
        weights=ObjectiveWeights(alpha, beta),
        epochs=args.epochs,
        patience=args.patience,
        hyper=OptimizerHyper(learning_rate=args.lr, variant=args.optimizer),
        init=args.init,
        seed=args.seed,
        placement=args.placement,
        parameterization=args.parameterization,
        normalize=args.normalize,
    )


def _check_projectable(config: FitConfig) -> None:
    if config.degree < 2 * config.mode.k + 1:
        raise ContinuityPreconditionError(
            f"degree {config.degree} too low for C^{config.mode.k} projection "
            f"(needs >= {2 * config.mode.k + 1})"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ppfit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="noisy sin(4 pi x^2) benchmark points")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit one weight pair and project to C^k")
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--out", required=True)
    p.add_argument("--plot-out")
    _fit_options(p)

    p = sub.add_parser("sweep", help="fit every weight pair of a grid")
    p.add_argument("--data", required=True)
    p.add_argument("--grid", default="table1",
                   help="'table1', 'default', or a CSV file with alpha,beta columns")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    _fit_options(p)

    p = sub.add_parser("front", help="Pareto front of a sweep directory")
    p.add_argument("--in-dir", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("plot-data", help="dense x,f,f1,f2 samples of a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--samples-per-segment", type=int, default=32)
    p.add_argument("--out", required=True)
    p.add_argument("--plot-out")
    return parser


def _read_grid(spec: str) -> list[tuple[float, float]]:
    if spec == "table1":
        return list(TABLE1_GRID)
    if spec == "default":
        return default_grid()
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"grid must be 'table1', 'default' or an existing file: {spec}")
    grid = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                grid.append((float(row["alpha"]), float(row["beta"])))
            except (KeyError, TypeError, ValueError):
                raise UsageError(f"{path}: rows need numeric 'alpha' and 'beta'") from None
    if not grid:
        raise UsageError(f"{path}: empty grid")
    return grid


def _write_records(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([
                f"{v:.17g}" if isinstance(v, float) else ("" if v is None else v)
                for v in (getattr(r, f) for f in RECORD_FIELDS)
            ])


def cmd_gen_data(args) -> int:
    write_points_csv(args.out, gen_dataset(args.n, args.seed, args.sigma))
    return EXIT_OK


def cmd_fit(args) -> int:
    config = _config(args, args.alpha, args.beta)
    _check_projectable(config)
    data = read_points_csv(args.data)
    outcome = run(data, config)
    write_result_json(args.out, to_artifact(outcome))
    log.info("l2=%.6g le=%.6g lck=%.3g", outcome.losses.l2, outcome.losses.le,
             outcome.losses.lck)
    if args.plot_out:
        from .plotting import plot_fit

        rows = dense_rows_original_units(outcome.model, outcome.mapping, 32)
        plot_fit(rows, args.plot_out, data=data,
                 breakpoints=outcome.mapping.inverse(outcome.model.breakpoints),
                 title=f"alpha={config.weights.alpha:g}, beta={config.weights.beta:g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _config(args)
    _check_projectable(base)
    grid = _read_grid(args.grid)
    data = read_points_csv(args.data)
    records = sweep(data, base, grid, workers=args.workers, out_dir=args.out_dir)
    _write_records(Path(args.out_dir) / "records.csv", records)
    if all(not r.ok for r in records):
        return EXIT_NUMERIC
    return EXIT_OK


def _records_from_dir(in_dir: Path) -> list[SweepRecord]:
    files = sorted(in_dir.glob("run_*.json"))
    if not files:
        raise UsageError(f"no run_*.json files in {in_dir}")
    records = []
    for f in files:
        art = read_result_json(f)
        records.append(SweepRecord(
            alpha=float(art.config["alpha"]),
            beta=float(art.config["beta"]),
            l2=float(art.losses["l2"]),
            le=float(art.losses["le"]),
            lck=float(art.losses["lck"]),
            seed=int(art.config.get("seed", 0)),
            epochs_run=int((art.training or {}).get("epochs_run", 0)),
            model_ref=f.name,
        ))
    return records


def cmd_front(args) -> int:
    from .plotting import plot_front

    records = _records_from_dir(Path(args.in_dir))
    front = pareto_front(records)
    _write_records(args.out, front)
    plot_front(records, front, Path(args.out).with_suffix(".png"))
    return EXIT_OK


def cmd_plot_data(args) -> int:
    art = read_result_json(args.model)
    mapping = artifact_mapping(art)
    rows = dense_rows_original_units(art.model, mapping, args.samples_per_segment)
    write_dense_csv(args.out, rows)
    if args.plot_out:
        from .plotting import plot_fit

        plot_fit(rows, args.plot_out, breakpoints=mapping.inverse(art.model.breakpoints))
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "front": cmd_front,
    "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (TrainingDivergedError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError, CsvParseError, SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
