"""Empirical and kernel-smoothed CDF estimation.

Estimators operate on a CensoredSample and are configured with a kernel
table, a bandwidth, an optional left support boundary (handled by
reflection), and an optional standardization step that rectifies the
estimate into a valid CDF path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# keep grid-by-sample evaluation blocks at ~1M entries
_BLOCK = 1 << 20


@dataclass(frozen=True)
class CensoredSample:
    """Observed times with event flags; all-true flags encode iid data."""
    times: np.ndarray
    event: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        event = np.asarray(self.event, dtype=bool)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("times must be a nonempty 1d array")
        if event.shape != times.shape:
            raise ValueError("event flags must match times in length")
        if not np.all(np.isfinite(times)):
            raise ValueError("times must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "event", event)

    @classmethod
    def uncensored(cls, times) -> "CensoredSample":
        times = np.asarray(times, dtype=float)
        return cls(times, np.ones(times.shape, dtype=bool))

    @property
    def n(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class EstimatorConfig:
    """Kernel, bandwidth and path-shaping options for smoothed estimators.

    kernel must expose kbar(x) (vectorized integrated kernel) and a
    tail_cutoff; KernelTable and GaussianKernel both qualify.
    """
    kernel: object
    bandwidth: float
    boundary: float | None = None
    standardize: bool = False

    def __post_init__(self):
        if not self.bandwidth > 0.0:
            raise ValueError("bandwidth must be positive")
        if not hasattr(self.kernel, "kbar"):
            raise TypeError("kernel must provide a kbar() method")
        if self.boundary is not None:
            object.__setattr__(self, "boundary", float(self.boundary))


@dataclass(frozen=True)
class StepEstimate:
    """Jump measure of a step-function distribution estimate.

    locations are strictly ascending distinct values; heights are the
    positive masses, summing to 1 for an EDF and to <= 1 for Kaplan-Meier
    when the largest observation is censored.
    """
    locations: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        locs = np.asarray(self.locations, dtype=float)
        hts = np.asarray(self.heights, dtype=float)
        if locs.ndim != 1 or locs.shape != hts.shape or locs.size == 0:
            raise ValueError("locations/heights must be matching 1d arrays")
        if not np.all(np.diff(locs) > 0):
            raise ValueError("locations must be strictly ascending")
        if not np.all(hts > 0):
            raise ValueError("heights must be positive")
        if hts.sum() > 1.0 + 1e-12:
            raise ValueError("total jump mass exceeds 1")
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "heights", hts)

    @property
    def total_mass(self) -> float:
        return float(self.heights.sum())

    def cdf(self, t):
        """Step-function CDF value(s): sum of heights at locations <= t."""
        cum = np.concatenate([[0.0], np.cumsum(self.heights)])
        idx = np.searchsorted(self.locations, np.asarray(t, dtype=float),
                              side="right")
        out = cum[idx]
        return float(out) if np.ndim(t) == 0 else out

    def survival(self, t):
        out = 1.0 - self.cdf(t)
        return out


def edf(sample: CensoredSample) -> StepEstimate:
    """Empirical distribution function as a jump measure (1/n per point)."""
    if not np.all(sample.event):
        raise ValueError("edf requires fully uncensored data")
    locs, counts = np.unique(sample.times, return_counts=True)
    return StepEstimate(locs, counts / sample.n)


def standardize_path(raw) -> np.ndarray:
    """Rectify raw grid values into a CDF path: running max, clip to [0,1]."""
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        return raw.copy()
    return np.clip(np.maximum.accumulate(raw), 0.0, 1.0)


def _kbar_sum(locations, weights, kernel, h, points) -> np.ndarray:
    """sum_j w_j * Kbar((t - x_j)/h) for each t, blockwise."""
    points = np.asarray(points, dtype=float)
    out = np.empty(points.shape, dtype=float)
    rows = max(1, _BLOCK // max(1, locations.size))
    for i in range(0, points.size, rows):
        blk = points[i:i + rows]
        args = (blk[:, None] - locations[None, :]) / h
        out[i:i + rows] = kernel.kbar(args) @ weights
    return out


def smoothed_measure_on_grid(locations, weights, cfg: EstimatorConfig,
                             grid) -> np.ndarray:
    """Smoothed CDF of an arbitrary jump measure, with boundary reflection.

    Below the boundary the estimate is exactly 0; at and above it the
    reflected mass is subtracted: F(t) - F(2a - t).
    """
    grid = np.asarray(grid, dtype=float)
    raw = _kbar_sum(locations, weights, cfg.kernel, cfg.bandwidth, grid)
    if cfg.boundary is not None:
        a = cfg.boundary
        refl = _kbar_sum(locations, weights, cfg.kernel, cfg.bandwidth,
                         2.0 * a - grid)
        raw = np.where(grid >= a, raw - refl, 0.0)
    return raw


def _check_boundary(sample: CensoredSample, cfg: EstimatorConfig) -> None:
    if cfg.boundary is not None and np.min(sample.times) < cfg.boundary:
        raise ValueError("observations fall below the stated boundary")


def evaluate_on_grid(sample: CensoredSample, cfg: EstimatorConfig,
                     grid) -> np.ndarray:
    """Smoothed CDF on an ascending grid; standardizes last if configured."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        return grid.copy()
    if grid.ndim != 1 or not np.all(np.diff(grid) >= 0):
        raise ValueError("grid must be 1d ascending")
    if not np.all(sample.event):
        raise ValueError("smoothed CDF requires fully uncensored data")
    _check_boundary(sample, cfg)
    step = edf(sample)
    vals = smoothed_measure_on_grid(step.locations, step.heights, cfg, grid)
    if cfg.standardize:
        vals = standardize_path(vals)
    return vals


def smoothed_cdf(sample: CensoredSample, cfg: EstimatorConfig,
                 t: float) -> float:
    """Smoothed CDF at one point.

    Standardization needs the running sup over s <= t, and the raw path
    is genuinely non-monotone, so the sup is taken over an internal
    2049-point grid from the path start (the boundary, or the point
    where the kernel window falls off the sample) up to t.  Grid
    evaluation via evaluate_on_grid gives the caller explicit control
    instead.
    """
    t = float(t)
    if not cfg.standardize:
        return float(evaluate_on_grid(sample, cfg, np.array([t]))[0])
    lo = cfg.boundary
    if lo is None:
        cutoff = float(getattr(cfg.kernel, "tail_cutoff"))
        lo = float(np.min(sample.times)) - cutoff * cfg.bandwidth
    if t <= lo:
        val = evaluate_on_grid(
            sample,
            EstimatorConfig(cfg.kernel, cfg.bandwidth, cfg.boundary, False),
            np.array([t]))[0]
        return float(np.clip(val, 0.0, 1.0))
    inner = np.linspace(lo, t, 2049)
    return float(evaluate_on_grid(sample, cfg, inner)[-1])
