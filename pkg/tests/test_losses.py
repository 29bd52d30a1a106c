import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from ppfit.losses import (
    _energy_kernel_cached,
    ContinuityMode,
    Objective,
    ObjectiveWeights,
    discontinuity,
    energy_kernel,
    energy_quadrature,
    gradient,
    loss_ck,
    loss_energy,
    loss_l2,
    scalarized,
)
from ppfit.model import Dataset, PiecewisePolynomial

from conftest import finite_difference, random_instance, random_model

TWO = PiecewisePolynomial([0.0, 1.0, 2.0], [[0.0, 1.0], [-1.0, 2.0]])
LINE = PiecewisePolynomial([0.0, 1.0], [[0.0, 1.0]])


def single(*coeffs):
    return PiecewisePolynomial([0.0, 1.0], [list(coeffs)])


def exact_energy(pp):
    """Integrate f''^2 segment by segment with numpy's polynomial algebra."""
    total = 0.0
    for i in range(pp.n_segments):
        f2 = Polynomial(pp.coeffs[i]).deriv(2)
        sq = (f2 * f2).integ()
        total += sq(pp.breakpoints[i + 1]) - sq(pp.breakpoints[i])
    return total


# ---- l2 -------------------------------------------------------------------

@pytest.mark.parametrize("pp, x, y, expected", [
    (LINE, [0.0, 1.0], [0.0, 1.0], 0.0),
    (LINE, [0.0, 1.0], [0.0, 0.0], 0.5),
    (single(0.0), [0.5], [2.0], 4.0),
])
def test_l2_examples(pp, x, y, expected):
    assert loss_l2(pp, Dataset(x, y)) == expected


def test_l2_point_on_breakpoint_uses_right_segment():
    # p1(1) = 1 and p2(1) = 1 agree, so use a model with a value jump
    pp = PiecewisePolynomial([0.0, 1.0, 2.0], [[0.0], [5.0]])
    assert loss_l2(pp, Dataset([1.0], [5.0])) == 0.0


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_l2_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    pp = random_model(rng)
    x = rng.uniform(0, 1, 40)
    y = rng.normal(size=40)
    perm = rng.permutation(40)
    assert loss_l2(pp, Dataset(x, y)) == loss_l2(pp, Dataset(x[perm], y[perm]))


# ---- continuity -------------------------------------------------------------

def test_discontinuity_examples():
    open1 = ContinuityMode("open", 1)
    assert discontinuity(TWO, 1, 0, open1) == 0.0
    assert discontinuity(TWO, 1, 1, open1) == 1.0
    assert discontinuity(TWO, 2, 1, ContinuityMode("cyclic", 1)) == -1.0


def test_discontinuity_index_range():
    with pytest.raises(IndexError):
        discontinuity(TWO, 2, 0, ContinuityMode("open", 0))
    with pytest.raises(IndexError):
        discontinuity(TWO, 0, 0, ContinuityMode("periodic", 0))
    with pytest.raises(IndexError):
        discontinuity(TWO, 3, 0, ContinuityMode("cyclic", 0))


def test_shared_polynomial_has_no_jumps(rng):
    c = rng.uniform(-2, 2, 6)
    pp = PiecewisePolynomial([0.0, 0.3, 0.55, 1.0], np.tile(c, (3, 1)))
    for j in range(6):
        for i in (1, 2):
            assert discontinuity(pp, i, j, ContinuityMode("open", 5)) == 0.0


def test_loss_ck_examples():
    assert loss_ck(TWO, ContinuityMode("open", 1)) == 1.0
    assert loss_ck(TWO, ContinuityMode("open", 0)) == 0.0
    split = PiecewisePolynomial([0.0, 0.2, 0.7, 1.0], np.tile([0.3, -1.0, 2.0, 0.5], (3, 1)))
    assert loss_ck(split, ContinuityMode("open", 3)) == 0.0


def test_loss_ck_single_segment_open_is_zero():
    assert loss_ck(single(1.0, 2.0), ContinuityMode("open", 1)) == 0.0


def test_loss_ck_wrap_modes():
    # cyclic skips the value jump at the wrap, periodic counts it
    const = PiecewisePolynomial([0.0, 0.5, 1.0], [[3.0, 0.0], [3.0, 0.0]])
    for variant in ("open", "cyclic", "periodic"):
        assert loss_ck(const, ContinuityMode(variant, 1)) == 0.0
    ramp = PiecewisePolynomial([0.0, 0.5, 1.0], [[0.0, 1.0], [0.0, 1.0]])
    assert loss_ck(ramp, ContinuityMode("cyclic", 1)) == 0.0
    # periodic: value jump p1(0) - p2(1) = -1 at i = m, normalized by m = 2
    assert loss_ck(ramp, ContinuityMode("periodic", 1)) == 0.5


# ---- energy -----------------------------------------------------------------

@pytest.mark.parametrize("coeffs, expected", [
    ((0.0, 0.0, 1.0), 4.0),
    ((0.0, 0.0, 0.0, 1.0), 12.0),
    ((0.0, 0.0, 1.0, 1.0), 28.0),
    ((5.0, -3.0), 0.0),
])
def test_energy_examples(coeffs, expected):
    assert loss_energy(single(*coeffs)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("subdivisions", [1, 2, 64])
def test_quadrature_examples(subdivisions):
    assert energy_quadrature(single(0, 0, 1), subdivisions) == pytest.approx(4.0, rel=1e-15)
    assert energy_quadrature(single(0, 0, 0, 1), subdivisions) == pytest.approx(12.0, rel=1e-15)


def test_quadrature_rejects_zero_subdivisions():
    with pytest.raises(ValueError):
        energy_quadrature(single(0, 0, 1), 0)


def test_quadrature_random_degree7_example(rng):
    # 64 Simpson panels per segment on a random degree-7 model
    for _ in range(20):
        pp = PiecewisePolynomial([0.0, 1.0], rng.uniform(-2, 2, (1, 8)))
        le = loss_energy(pp)
        assert abs(energy_quadrature(pp, 64) - le) / le < 1e-10


def test_energy_matches_exact_polynomial_integration(rng):
    for _ in range(300):
        pp = random_model(rng)
        le = loss_energy(pp)
        assert le == pytest.approx(exact_energy(pp), rel=1e-10, abs=1e-10)


def test_quadrature_converges_at_fourth_order(rng):
    for _ in range(20):
        pp = random_model(rng, min_degree=4)
        le = exact_energy(pp)
        e1 = abs(energy_quadrature(pp, 64) - le)
        e2 = abs(energy_quadrature(pp, 128) - le)
        if e2 < 1e-11 * max(1.0, le):
            continue
        assert 14.0 < e1 / e2 < 18.0
        assert abs(energy_quadrature(pp, 2048) - le) <= 1e-9 * max(1.0, le)


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_energy_non_negative(seed):
    rng = np.random.default_rng(seed)
    pp = random_model(rng)
    c = rng.normal(scale=10.0 ** rng.uniform(-3, 3), size=pp.coeffs.shape)
    assert loss_energy(pp.with_coeffs(c)) >= 0.0


def test_energy_kernel_cache_is_bitwise_stable(rng):
    pp = random_model(rng, min_degree=2)
    first = np.array(energy_kernel(pp.breakpoints, pp.degree))
    _energy_kernel_cached.cache_clear()
    again = energy_kernel(pp.breakpoints, pp.degree)
    assert np.array_equal(first, again)
    assert not again.flags.writeable
    obj = Objective(Dataset([0.5], [0.0]), pp.breakpoints, pp.degree,
                    ContinuityMode(), ObjectiveWeights(0.0, 0.0))
    assert obj.breakdown(pp.coeffs).le == loss_energy(pp)


def test_energy_kernel_matches_direct_formula(rng):
    pp = random_model(rng, min_degree=2)
    xi, c = pp.breakpoints, pp.coeffs
    total = 0.0
    for i in range(pp.n_segments):
        for j in range(2, pp.degree + 1):
            for k in range(2, pp.degree + 1):
                e = j + k - 3
                total += (c[i, j] * c[i, k] * j * k * (j - 1) * (k - 1) / e
                          * (xi[i + 1] ** e - xi[i] ** e))
    assert loss_energy(pp) == pytest.approx(total, rel=1e-12)


# ---- weights and scalarization -----------------------------------------------

@pytest.mark.parametrize("alpha, beta", [(-0.1, 0.5), (0.6, 0.6), (0.5, np.nan)])
def test_weights_validation(alpha, beta):
    with pytest.raises(ValueError):
        ObjectiveWeights(alpha, beta)


def test_scalarized_examples():
    data = Dataset([0.0, 0.5, 1.0], [0.1, -0.2, 0.4])
    pp = PiecewisePolynomial([0.0, 0.5, 1.0], [[0.0, 1.0, 3.0], [1.0, 0.0, 2.0]])
    mode = ContinuityMode("open", 1)
    b = scalarized(pp, data, mode, ObjectiveWeights(0.5, 0.5))
    assert b.total == pytest.approx(0.5 * b.lck + 0.5 * b.l2, rel=1e-15)
    b = scalarized(pp, data, mode, ObjectiveWeights(0.0, 1.0))
    assert b.total == b.l2
    assert ObjectiveWeights(0.10, 0.45).gamma == pytest.approx(0.45, abs=1e-15)


def test_total_is_affine_in_alpha(rng):
    pp = random_model(rng, min_degree=3)
    data = Dataset(rng.uniform(0, 1, 20), rng.normal(size=20))
    mode = ContinuityMode("periodic", 2)
    a0, da, beta = 0.1, 0.1, 0.3
    b0 = scalarized(pp, data, mode, ObjectiveWeights(a0, beta))
    b1 = scalarized(pp, data, mode, ObjectiveWeights(a0 + da, beta))
    scale = max(1.0, abs(b0.lck), abs(b0.le))
    assert b1.total - b0.total == pytest.approx(da * (b0.lck - b0.le), abs=1e-12 * scale)


# ---- gradient -----------------------------------------------------------------

def test_gradient_examples():
    g = gradient(single(0.0), Dataset([0.5], [1.0]), ContinuityMode(), ObjectiveWeights(0, 1))
    assert g[0, 0] == -2.0
    g = gradient(single(0.0, 0.0, 1.0), Dataset([0.5], [0.25]), ContinuityMode(),
                 ObjectiveWeights(0, 0))
    assert g[0, 2] == pytest.approx(8.0, rel=1e-15)


def test_gradient_matches_finite_differences(rng):
    for _ in range(40):
        pp, data, mode, w = random_instance(rng)
        g = Objective(data, pp.breakpoints, pp.degree, mode, w).gradient(pp.coeffs)
        fd = finite_difference(pp, data, mode, w)
        err = np.abs(g - fd) / np.maximum(1.0, np.abs(fd))
        assert err.max() < 1e-5
        np.testing.assert_array_equal(g, gradient(pp, data, mode, w))


def test_gradient_high_order_continuity(rng):
    # k up to d makes the loss large; a quadratic needs no small step
    for _ in range(10):
        pp = random_model(rng, min_degree=4)
        data = Dataset(rng.uniform(0, 1, 30), rng.normal(size=30))
        mode = ContinuityMode("periodic", pp.degree)
        w = ObjectiveWeights(0.3, 0.3)
        g = gradient(pp, data, mode, w)
        fd = finite_difference(pp, data, mode, w, h=1e-2)
        np.testing.assert_allclose(g, fd, rtol=1e-7, atol=1e-7 * np.abs(fd).max())
