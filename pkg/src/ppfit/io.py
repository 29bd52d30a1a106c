"""Benchmark data generation and the CSV / JSON file formats.

Noise generator
---------------
Noise is reproducible across languages: a SplitMix64 stream seeded with
``seed`` produces 64-bit words ``z``; each word maps to a uniform
``u = (z >> 11) * 2**-53`` in [0, 1).  Consecutive uniform pairs
``(u1, u2)`` become two standard normals by Box-Muller,
``r = sqrt(-2 ln(1 - u1))``, ``(r cos(2 pi u2), r sin(2 pi u2))``, consumed
in that order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Dataset, PiecewisePolynomial

RESULT_VERSION = "1"
_MASK64 = (1 << 64) - 1


class SchemaError(ValueError):
    pass


class UnsupportedVersionError(SchemaError):
    pass


class CsvParseError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def splitmix64(seed: int):
    """Infinite SplitMix64 word stream."""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def standard_normals(n: int, seed: int) -> np.ndarray:
    words = splitmix64(seed)
    out = []
    while len(out) < n:
        u1 = (next(words) >> 11) * 2.0**-53
        u2 = (next(words) >> 11) * 2.0**-53
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        out.append(r * math.cos(2.0 * math.pi * u2))
        out.append(r * math.sin(2.0 * math.pi * u2))
    return np.array(out[:n])


def target_function(x):
    return np.sin(4.0 * np.pi * np.asarray(x, dtype=float) ** 2)


def gen_dataset(n: int = 100, seed: int = 0, noise_sigma: float = 0.1) -> Dataset:
    """Noisy samples of ``sin(4 pi x^2)`` on a uniform grid over [0, 1]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    x = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
    y = target_function(x)
    if noise_sigma > 0:
        y = y + noise_sigma * standard_normals(n, seed)
    return Dataset(x, y)


# --------------------------------------------------------------------------
# CSV


def write_points_csv(path, data: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        for x, y in zip(data.x, data.y):
            w.writerow([f"{x:.17g}", f"{y:.17g}"])


def read_points_csv(path) -> Dataset:
    xs, ys = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["x", "y"]:
            raise CsvParseError(path, 1, "expected header 'x,y'")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise CsvParseError(path, line, f"expected 2 columns, got {len(row)}")
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                raise CsvParseError(path, line, f"non-numeric value in {row!r}") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise CsvParseError(path, line, "non-finite value")
            xs.append(x)
            ys.append(y)
    if not xs:
        raise CsvParseError(path, 1, "no data rows")
    return Dataset(xs, ys)


def write_dense_csv(path, rows: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "f", "f1", "f2"])
        for r in rows:
            w.writerow([f"{v:.17g}" for v in r])


# --------------------------------------------------------------------------
# JSON result artifact


@dataclass
class RunArtifact:
    config: dict
    breakpoints: list
    coeffs: list
    losses: dict
    correction: dict | None = None
    domain: dict = field(default_factory=lambda: {"offset": 0.0, "scale": 1.0})
    training: dict | None = None
    dense_samples: str | None = None

    @property
    def model(self) -> PiecewisePolynomial:
        return PiecewisePolynomial(self.breakpoints, self.coeffs)

    def to_dict(self) -> dict:
        return {
            "version": RESULT_VERSION,
            "config": self.config,
            "domain": self.domain,
            "breakpoints": list(self.breakpoints),
            "coeffs": [list(r) for r in self.coeffs],
            "losses": self.losses,
            "correction": self.correction,
            "training": self.training,
            "dense_samples": self.dense_samples,
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_result_json(path, artifact: RunArtifact) -> None:
    # json emits repr() floats, which round-trip exactly
    text = json.dumps(_plain(artifact.to_dict()), indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def read_result_json(path) -> RunArtifact:
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise SchemaError("result file must hold a JSON object")
    version = raw.get("version")
    if version != RESULT_VERSION:
        raise UnsupportedVersionError(f"unsupported result version {version!r}")
    for key in ("config", "breakpoints", "coeffs", "losses"):
        if key not in raw:
            raise SchemaError(f"missing required key {key!r}")
    coeffs = raw["coeffs"]
    if not (isinstance(coeffs, list) and coeffs and all(isinstance(r, list) for r in coeffs)):
        raise SchemaError("'coeffs' must be a non-empty list of rows")
    return RunArtifact(
        config=raw["config"],
        breakpoints=[float(v) for v in raw["breakpoints"]],
        coeffs=[[float(v) for v in r] for r in coeffs],
        losses=raw["losses"],
        correction=raw.get("correction"),
        domain=raw.get("domain") or {"offset": 0.0, "scale": 1.0},
        training=raw.get("training"),
        dense_samples=raw.get("dense_samples"),
    )
