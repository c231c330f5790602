from __future__ import annotations

import numpy as np
import pytest

from ftcdf.estimators import (CensoredSample, EstimatorConfig, StepEstimate,
                              edf, evaluate_on_grid, smoothed_cdf,
                              standardize_path)
from ftcdf.kernels import (TRAPEZOID, FlatTopSpec, GaussianKernel, get_table,
                           integrated_kernel)

TRAP = FlatTopSpec(TRAPEZOID, 0.75)


def trap_table():
    return get_table(TRAP, 1e-8)


def test_sample_validation():
    with pytest.raises(ValueError):
        CensoredSample(np.array([]), np.array([], dtype=bool))
    with pytest.raises(ValueError):
        CensoredSample(np.array([1.0, np.nan]), np.array([True, True]))
    with pytest.raises(ValueError):
        CensoredSample(np.array([1.0, 2.0]), np.array([True]))
    s = CensoredSample.uncensored([3.0, 1.0])
    assert s.n == 2 and np.all(s.event)


def test_config_validation():
    with pytest.raises(ValueError):
        EstimatorConfig(GaussianKernel(), 0.0)
    with pytest.raises(TypeError):
        EstimatorConfig(object(), 1.0)


def test_step_estimate_validation_and_eval():
    with pytest.raises(ValueError):
        StepEstimate(np.array([2.0, 1.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        StepEstimate(np.array([1.0, 2.0]), np.array([0.5, -0.1]))
    with pytest.raises(ValueError):
        StepEstimate(np.array([1.0]), np.array([1.5]))
    step = StepEstimate(np.array([1.0, 3.0]), np.array([0.25, 0.5]))
    assert step.total_mass == 0.75
    assert step.cdf(0.0) == 0.0
    assert step.cdf(1.0) == 0.25
    np.testing.assert_allclose(step.cdf(np.array([2.0, 3.0, 9.0])),
                               [0.25, 0.75, 0.75])
    assert step.survival(3.0) == pytest.approx(0.25)


def test_edf_examples():
    s = CensoredSample.uncensored([1.0, 2.0, 3.0])
    e = edf(s)
    assert e.cdf(2.0) == pytest.approx(2.0 / 3.0, abs=0)
    tied = edf(CensoredSample.uncensored([1.0, 1.0, 2.0]))
    assert tied.cdf(1.0) == pytest.approx(2.0 / 3.0, abs=0)
    assert tied.heights[0] == 2.0 / 3.0
    assert e.cdf(0.5) == 0.0
    assert e.cdf(3.0) == 1.0
    with pytest.raises(ValueError):
        edf(CensoredSample(np.array([1.0, 2.0]), np.array([True, False])))


def test_standardize_path_examples():
    np.testing.assert_allclose(standardize_path([0.1, 0.05, 0.3]),
                               [0.1, 0.1, 0.3])
    np.testing.assert_allclose(standardize_path([-0.02, 0.5, 1.01]),
                               [0.0, 0.5, 1.0])
    valid = np.array([0.0, 0.2, 0.2, 0.9, 1.0])
    np.testing.assert_array_equal(standardize_path(valid), valid)
    assert standardize_path(np.array([])).size == 0


@pytest.mark.parametrize("kern", [GaussianKernel(), None])
def test_single_point_sample_half(kern):
    kern = kern or trap_table()
    s = CensoredSample.uncensored([0.0])
    cfg = EstimatorConfig(kern, 1.0)
    assert smoothed_cdf(s, cfg, 0.0) == pytest.approx(0.5, abs=1e-12)


def test_smoothed_cdf_limits():
    tab = trap_table()
    s = CensoredSample.uncensored([-1.0, 0.5, 2.0])
    cfg = EstimatorConfig(tab, 0.3)
    far = tab.tail_cutoff * 0.3 + 3.0
    assert smoothed_cdf(s, cfg, 2.0 + far) == 1.0
    assert smoothed_cdf(s, cfg, -1.0 - far) == 0.0


def test_small_bandwidth_recovers_edf():
    rng = np.random.default_rng(5)
    xs = rng.standard_normal(50)
    s = CensoredSample.uncensored(xs)
    cfg = EstimatorConfig(trap_table(), 1e-9)
    sorted_x = np.sort(xs)
    mids = 0.5 * (sorted_x[:-1] + sorted_x[1:])
    e = edf(s)
    np.testing.assert_allclose(evaluate_on_grid(s, cfg, mids), e.cdf(mids),
                               atol=1e-12)


def test_boundary_reflection():
    rng = np.random.default_rng(9)
    xs = rng.exponential(1.0, 40)
    s = CensoredSample.uncensored(xs)
    tab = trap_table()
    cfg = EstimatorConfig(tab, 0.4, boundary=0.0)
    assert smoothed_cdf(s, cfg, 0.0) == 0.0
    assert smoothed_cdf(s, cfg, -0.5) == 0.0
    # independent reflection arithmetic at a few points
    for t in (0.3, 1.0, 2.5):
        plain = np.mean(tab.kbar((t - xs) / 0.4))
        refl = np.mean(tab.kbar((-t - xs) / 0.4))
        assert smoothed_cdf(s, cfg, t) == pytest.approx(plain - refl,
                                                        abs=1e-12)
    with pytest.raises(ValueError):
        evaluate_on_grid(s, EstimatorConfig(tab, 0.4, boundary=1.0),
                         np.array([1.0]))


def test_grid_matches_scalar_and_validates():
    rng = np.random.default_rng(2)
    s = CensoredSample.uncensored(rng.standard_normal(30))
    cfg = EstimatorConfig(trap_table(), 0.5)
    grid = np.linspace(-3, 3, 21)
    vals = evaluate_on_grid(s, cfg, grid)
    for i in (0, 10, 20):
        assert vals[i] == pytest.approx(smoothed_cdf(s, cfg, grid[i]),
                                        abs=1e-14)
    assert evaluate_on_grid(s, cfg, np.array([])).size == 0
    with pytest.raises(ValueError):
        evaluate_on_grid(s, cfg, np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        evaluate_on_grid(
            CensoredSample(np.array([1.0, 2.0]), np.array([True, False])),
            cfg, grid)


def test_standardized_path_shape():
    rng = np.random.default_rng(14)
    xs = np.abs(rng.standard_normal(25))
    s = CensoredSample.uncensored(xs)
    cfg = EstimatorConfig(trap_table(), 0.6, boundary=0.0, standardize=True)
    grid = np.linspace(0.0, 4.0, 301)
    vals = evaluate_on_grid(s, cfg, grid)
    assert np.all(np.diff(vals) >= 0.0)
    assert vals.min() >= 0.0 and vals.max() <= 1.0
    assert vals[0] == 0.0


def test_smoothed_cdf_is_continuous():
    rng = np.random.default_rng(8)
    s = CensoredSample.uncensored(rng.standard_normal(40))
    cfg = EstimatorConfig(trap_table(), 0.5)
    grid = np.linspace(-3, 3, 6001)
    vals = evaluate_on_grid(s, cfg, grid)
    # modulus of continuity bounded by max kernel density / h
    step = grid[1] - grid[0]
    assert np.max(np.abs(np.diff(vals))) <= 0.30 / 0.5 * step
