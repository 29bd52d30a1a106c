import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppfit.io import gen_dataset
from ppfit.losses import ContinuityMode, ObjectiveWeights
from ppfit.pipeline import run
from ppfit.sweep import TABLE1_GRID, SweepRecord, default_grid, pareto_front, sweep
from ppfit.trainer import FitConfig, OptimizerHyper

from conftest import brute_force_front


def rec(l2, le, **kw):
    return SweepRecord(alpha=0.1, beta=0.5, l2=l2, le=le, lck=0.0, seed=0, epochs_run=1, **kw)


def pairs(records):
    return [(r.l2, r.le) for r in records]


def test_front_examples():
    assert pairs(pareto_front([rec(1, 2), rec(2, 1), rec(2, 2)])) == [(1, 2), (2, 1)]
    assert pairs(pareto_front([rec(1, 1), rec(2, 2)])) == [(1, 1)]
    assert pareto_front([]) == []


def test_front_duplicates_keep_first():
    a, b = rec(1, 1, model_ref="a"), rec(1, 1, model_ref="b")
    front = pareto_front([a, b, rec(0.5, 3, model_ref="c"), rec(2, 2, model_ref="d")])
    assert [r.model_ref for r in front] == ["a", "c"]


def test_front_skips_failed_records():
    bad = rec(float("nan"), float("nan"), status="failed")
    assert pareto_front([bad, rec(1, 1)]) == [pareto_front([rec(1, 1)])[0]]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 500))
def test_front_matches_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    # coarse values force ties and duplicates
    pts = rng.integers(0, 12, (n, 2)).astype(float) if seed % 2 else rng.random((n, 2))
    records = [rec(a, b, model_ref=str(i)) for i, (a, b) in enumerate(pts)]
    front = pareto_front(records)
    assert [int(r.model_ref) for r in front] == brute_force_front(records)
    for r in front:
        for s in front:
            assert not (r.l2 <= s.l2 and r.le <= s.le and (r.l2 < s.l2 or r.le < s.le))


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_front_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    pts = rng.integers(0, 8, (60, 2)).astype(float)
    records = [rec(a, b) for a, b in pts]
    perm = rng.permutation(60)
    assert sorted(set(pairs(pareto_front(records)))) == sorted(
        set(pairs(pareto_front([records[i] for i in perm]))))


def test_default_grid():
    grid = default_grid()
    assert len(grid) == 32
    assert len(set(grid)) == 32
    for pair in TABLE1_GRID:
        assert pair in grid
    for a, b in grid:
        ObjectiveWeights(a, b)
        assert 0 < b <= 1 - a + 1e-12


SMALL = FitConfig(degree=5, segments=4, mode=ContinuityMode("periodic", 2), epochs=60,
                  patience=20, hyper=OptimizerHyper(learning_rate=1e-2))


@pytest.fixture(scope="module")
def data():
    return gen_dataset(40, seed=3)


def test_sweep_of_one_point_equals_pipeline(data):
    (r,) = sweep(data, SMALL, [(0.5, 0.25)])
    out = run(data, SMALL.with_weights(0.5, 0.25))
    assert (r.l2, r.le, r.lck) == (out.losses.l2, out.losses.le, out.losses.lck)
    assert r.epochs_run == len(out.fit.history)


def test_identical_grid_points_identical_records(data):
    a, b = sweep(data, SMALL, [(0.1, 0.45), (0.1, 0.45)])
    assert a == b


def test_parallel_matches_sequential(data, tmp_path):
    grid = list(TABLE1_GRID[:4])
    seq = sweep(data, SMALL, grid, out_dir=tmp_path / "seq")
    par = sweep(data, SMALL, grid, workers=3, out_dir=tmp_path / "par")
    assert seq == par
    for i in range(len(grid)):
        name = f"run_{i:03d}.json"
        assert (tmp_path / "seq" / name).read_bytes() == (tmp_path / "par" / name).read_bytes()


def test_records_are_projected(data):
    for r in sweep(data, SMALL, TABLE1_GRID):
        assert r.ok
        assert r.lck <= 1e-18
    assert [(r.alpha, r.beta) for r in sweep(data, SMALL, TABLE1_GRID[:2])] == list(
        TABLE1_GRID[:2])


def test_invalid_grid_point_rejected(data):
    with pytest.raises(ValueError):
        sweep(data, SMALL, [(0.6, 0.6)])


def test_divergent_point_is_marked_failed(data):
    cfg = FitConfig(degree=5, segments=4, mode=ContinuityMode("open", 2), epochs=3000,
                    patience=3000, init="zeros", parameterization="global",
                    hyper=OptimizerHyper(learning_rate=50.0, variant="sgd"))
    with np.errstate(all="ignore"):
        records = sweep(data, cfg, [(0.0, 1.0), (0.0, 0.0)])
    assert records[0].status == "failed" and records[0].error
    assert not np.isfinite(records[0].l2)
    # zero energy gradient at the zero start: this point stays finite
    assert records[1].ok
