import numpy as np
import pytest

from fdbands import (
    Curve,
    FunctionalSample,
    Grid,
    MomentOrders,
    ShapeMismatch,
    UnsupportedOrder,
    empirical_cross_cov,
    moment_residuals,
    pointwise_moments,
)
from fdbands.simmodels import ModelSpec, model_a_cov, model_mean, sample_model
from fdbands.rng import StreamKey
from fdbands.verify import isserlis_moment_cov

GRID2 = Grid([0.0, 1.0])


def _sample(columns):
    # columns: list per grid point; broadcast a 1-point dataset onto GRID2
    arr = np.array(columns, dtype=float)
    return FunctionalSample(GRID2, np.column_stack([arr, arr]))


def test_orders_validation():
    MomentOrders((1, 2, 4))
    with pytest.raises(UnsupportedOrder):
        MomentOrders((2, 2))
    with pytest.raises(UnsupportedOrder):
        MomentOrders((3, 2))
    with pytest.raises(UnsupportedOrder):
        MomentOrders((0,))
    with pytest.raises(UnsupportedOrder):
        MomentOrders((1, 9))
    with pytest.raises(UnsupportedOrder):
        MomentOrders(())


def test_first_and_second_moments_hand_values():
    m = pointwise_moments(_sample([1.0, 2.0, 3.0]), MomentOrders((1, 2)))
    assert m.values[0] == pytest.approx([2.0, 2.0], abs=0)
    assert m.values[1] == pytest.approx([14.0 / 3.0, 14.0 / 3.0], rel=1e-15)


def test_constant_sample_moment_is_power():
    c = 1.7
    m = pointwise_moments(_sample([c, c, c]), MomentOrders((1, 3, 5)))
    for row, r in zip(m.values, (1, 3, 5)):
        assert row == pytest.approx([c**r, c**r], rel=1e-14)


def test_residuals_hand_values():
    res = moment_residuals(_sample([1.0, 2.0, 3.0]), MomentOrders((1, 2)))
    assert res.values[0, :, 0] == pytest.approx([-1.0, 0.0, 1.0], abs=0)
    want = np.array([1.0, 4.0, 9.0]) - 14.0 / 3.0
    assert res.values[1, :, 0] == pytest.approx(want, rel=1e-15)
    assert abs(res.values[1, :, 0].sum()) <= 1e-14


def test_residuals_sum_to_zero_on_random_samples():
    rng = np.random.default_rng(31)
    grid = Grid(np.linspace(0, 1, 17))
    values = np.exp(rng.standard_normal((60, 17))) * 5.0
    res = moment_residuals(FunctionalSample(grid, values), MomentOrders((1, 2, 3, 4)))
    sums = np.abs(res.values.sum(axis=1))
    scale = np.max(np.abs(res.values), axis=1)
    assert np.all(sums <= 1e-10 * 60 * np.maximum(scale, 1e-300))


def test_cross_cov_hand_values():
    a = np.array([[-1.0], [0.0], [1.0]])
    assert empirical_cross_cov(a, a)[0, 0] == pytest.approx(2.0 / 3.0, rel=1e-15)
    b = np.array([[1.0], [-2.0], [1.0]])
    assert empirical_cross_cov(a, b)[0, 0] == pytest.approx(0.0, abs=1e-15)


def test_cross_cov_diagonal_nonnegative_and_symmetric_psd():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((40, 9))
    a -= a.mean(axis=0)
    cov = empirical_cross_cov(a, a)
    assert np.all(np.diag(cov) >= 0)
    assert np.max(np.abs(cov - cov.T)) <= 1e-12
    eigvals = np.linalg.eigvalsh(cov)
    assert eigvals.min() >= -1e-10


def test_cross_cov_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        empirical_cross_cov(np.zeros((3, 2)), np.zeros((4, 2)))


def test_moment_residual_cov_matches_isserlis_blocks():
    # Gaussian model, N = 5000: empirical cross-covariance of order-1 and
    # order-2 residuals against the product-moment expansion, compared on
    # the standardized (correlation-like) scale at distinct point pairs.
    # (Equal-point pairs of the cross block carry sixth-moment sampling
    # noise well above the tolerance at this N, so they are not selected.)
    grid = Grid.equispaced(6)
    sample = sample_model(ModelSpec("A"), 5000, grid, StreamKey(2024))
    res = moment_residuals(sample, MomentOrders((1, 2)))
    emp12 = empirical_cross_cov(res.values[0], res.values[1])

    mean = Curve(grid, model_mean("A", grid.points))
    cov = model_a_cov(grid)
    want11 = isserlis_moment_cov(mean, cov, 1, 1)
    want12 = isserlis_moment_cov(mean, cov, 1, 2)
    want22 = isserlis_moment_cov(mean, cov, 2, 2)

    scale = np.sqrt(np.outer(np.diag(want11), np.diag(want22)))
    distinct = ~np.eye(len(grid), dtype=bool)
    assert np.max((np.abs(emp12 - want12) / scale)[distinct]) <= 0.05

    emp11 = empirical_cross_cov(res.values[0], res.values[0])
    assert np.max(np.abs(emp11 - want11) / np.sqrt(np.outer(np.diag(want11), np.diag(want11)))) <= 0.05
