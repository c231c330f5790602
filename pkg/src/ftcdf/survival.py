"""Kaplan-Meier product-limit estimation and flat-top smoothing of it.

The product-limit computation runs in exact rational arithmetic
(fractions.Fraction) with a single correctly rounded float division per
jump, so that with zero censoring the jump data is bitwise identical to
the EDF's d_i/n heights.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .estimators import (CensoredSample, EstimatorConfig, StepEstimate,
                         _check_boundary, smoothed_measure_on_grid,
                         standardize_path)


def kaplan_meier(sample: CensoredSample) -> StepEstimate:
    """Jump measure of the Kaplan-Meier estimate.

    Ties: censorings at a time t stay in the risk set through events at
    t.  Returned heights are the drops of the survival curve (equally,
    jumps of 1 - S); total mass is below 1 when the largest observation
    is censored.
    """
    if not np.any(sample.event):
        raise ValueError("kaplan_meier needs at least one event")
    times = sample.times
    order = np.sort(times)
    event_times, d = np.unique(times[sample.event], return_counts=True)
    # at risk: every observation with time >= t_i
    at_risk = sample.n - np.searchsorted(order, event_times, side="left")
    surv = Fraction(1)
    heights = np.empty(event_times.size, dtype=float)
    for i in range(event_times.size):
        jump = surv * Fraction(int(d[i]), int(at_risk[i]))
        heights[i] = float(jump)
        surv -= jump
    return StepEstimate(event_times, heights)


def smoothed_survival_on_grid(sample: CensoredSample, cfg: EstimatorConfig,
                              grid) -> np.ndarray:
    """Smoothed survival path on an ascending grid.

    S(t) = sum_j s_j (1 - Kbar((t - x_j)/h)) over Kaplan-Meier jumps,
    equal to total mass minus the smoothed CDF of the same jump measure;
    the boundary correction enters through the CDF side.  Standardization
    makes the path nonincreasing within [0, 1].
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        return grid.copy()
    if grid.ndim != 1 or not np.all(np.diff(grid) >= 0):
        raise ValueError("grid must be 1d ascending")
    _check_boundary(sample, cfg)
    step = kaplan_meier(sample)
    cdf_vals = smoothed_measure_on_grid(step.locations, step.heights, cfg,
                                        grid)
    vals = step.total_mass - cdf_vals
    if cfg.standardize:
        vals = np.clip(np.minimum.accumulate(vals), 0.0, 1.0)
    return vals


def smoothed_survival(sample: CensoredSample, cfg: EstimatorConfig,
                      t: float) -> float:
    """Smoothed survival at one point; mirrors smoothed_cdf's conventions.

    Standardization takes the running inf from the path start, over the
    same internal grid construction as the CDF side.
    """
    t = float(t)
    if not cfg.standardize:
        return float(smoothed_survival_on_grid(sample, cfg,
                                               np.array([t]))[0])
    lo = cfg.boundary
    if lo is None:
        cutoff = float(getattr(cfg.kernel, "tail_cutoff"))
        lo = float(np.min(sample.times)) - cutoff * cfg.bandwidth
    if t <= lo:
        raw = smoothed_survival_on_grid(
            sample,
            EstimatorConfig(cfg.kernel, cfg.bandwidth, cfg.boundary, False),
            np.array([t]))[0]
        return float(np.clip(raw, 0.0, 1.0))
    inner = np.linspace(lo, t, 2049)
    return float(smoothed_survival_on_grid(sample, cfg, inner)[-1])
