"""Flat-top smoothing kernels and their integrated (CDF-like) forms.

A flat-top taper is a symmetric frequency-domain window equal to 1 on
[-c, c] and falling to 0 at |s| = 1.  Fourier inversion of the taper
gives a reduced-bias smoothing kernel K; integrating K gives Kbar, the
kernel analogue of a CDF.  Two taper families are provided:

* "trapezoid": linear descent (1 - |s|) / (1 - c) outside the flat part,
  with closed forms for K and Kbar in terms of the sine integral.
* "smooth": infinitely differentiable double-exponential descent with a
  shape parameter b, evaluated by Gauss-Legendre quadrature.

Dense lookup tables (KernelTable) make the kernels cheap inside
estimators; a monotone-rectified copy of Kbar guarantees shape
properties downstream.  The Gaussian kernel is included as a comparator
with the same call surface.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import ndtr, sici

from .quadrature import QuadratureError, adaptive_quad, unit_gl_rule

TRAPEZOID = "trapezoid"
SMOOTH = "smooth"
TABLE_SCHEMA = 1

# closed forms switch to series below this to dodge 0/0 cancellation
_SMALL_ARG = 1e-3
_CHUNK = 1024


@dataclass(frozen=True)
class FlatTopSpec:
    """Parameters of a flat-top taper.

    family: "trapezoid" or "smooth".
    c: flat radius, 0 < c < 1; the taper is exactly 1 on [-c, c].
    b: descent-rate parameter, used by the smooth family only.
    effective_c: radius used by the bandwidth rule h = effective_c / t*.
        Defaults: c for the trapezoid family; 0.5 for the smooth family
        at its reference parameters (b=1, c=0.05).  Other smooth
        parameterizations must state it explicitly.
    """
    family: str
    c: float
    b: float = 1.0
    effective_c: float | None = None

    def __post_init__(self):
        if self.family not in (TRAPEZOID, SMOOTH):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not 0.0 < self.c < 1.0:
            raise ValueError("flat radius c must lie in (0, 1)")
        if self.family == SMOOTH and not self.b > 0.0:
            raise ValueError("smooth family needs b > 0")
        eff = self.effective_c
        if eff is None:
            if self.family == TRAPEZOID:
                eff = self.c
            elif (self.b, self.c) == (1.0, 0.05):
                eff = 0.5
            else:
                raise ValueError(
                    "effective_c has no default for smooth family away from "
                    "(b=1, c=0.05); pass it explicitly")
        if not self.c <= eff <= 1.0:
            raise ValueError("effective_c must lie in [c, 1]")
        object.__setattr__(self, "effective_c", float(eff))


def window(spec: FlatTopSpec, s):
    """Taper value at frequency s (even, 1 on the flat part, 0 beyond 1)."""
    arr = np.abs(np.asarray(s, dtype=float))
    scalar = arr.ndim == 0
    a = np.atleast_1d(arr)
    out = np.zeros_like(a)
    out[a <= spec.c] = 1.0
    mid = (a > spec.c) & (a < 1.0)
    if np.any(mid):
        sm = a[mid]
        if spec.family == TRAPEZOID:
            out[mid] = (1.0 - sm) / (1.0 - spec.c)
        else:
            # double-exponential descent; endpoint overflow collapses to 0
            with np.errstate(over="ignore", under="ignore", divide="ignore"):
                inner = np.exp(-spec.b / (sm - spec.c) ** 2)
                out[mid] = np.exp(-spec.b * inner / (sm - 1.0) ** 2)
    return float(out[0]) if scalar else out


def _trap_kernel(c: float, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    small = np.abs(x) < _SMALL_ARG
    if np.any(small):
        x2 = x[small] ** 2
        ser = (1 - c ** 2) / 2 - x2 * ((1 - c ** 4) / 24 - x2 * (
            (1 - c ** 6) / 720 - x2 * (1 - c ** 8) / 40320))
        out[small] = ser / (np.pi * (1 - c))
    big = ~small
    if np.any(big):
        xb = x[big]
        out[big] = (np.cos(c * xb) - np.cos(xb)) / (np.pi * (1 - c) * xb * xb)
    return out


def _trap_kbar(c: float, t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    small = np.abs(t) < _SMALL_ARG
    if np.any(small):
        ts = t[small]
        t2 = ts * ts
        ser = ts * ((1 - c ** 2) / 2 - t2 * ((1 - c ** 4) / 72 - t2 * (
            (1 - c ** 6) / 3600 - t2 * (1 - c ** 8) / 282240)))
        out[small] = 0.5 + ser / (np.pi * (1 - c))
    big = ~small
    if np.any(big):
        tb = t[big]
        si_t = sici(tb)[0]
        si_ct = sici(c * tb)[0]
        bracket = (np.cos(tb) - np.cos(c * tb)) / tb + si_t - c * si_ct
        out[big] = 0.5 + bracket / (np.pi * (1 - c))
    return out


def _gl_order(umax: float) -> int:
    # cos(s*u) on [0,1] needs roughly 0.7*u Legendre nodes before the
    # superexponential error regime kicks in; padded and capped
    n = int(np.ceil(0.7 * max(umax, 0.0))) + 64
    n = ((n + 31) // 32) * 32
    if n > 60000:
        raise QuadratureError(f"Gauss-Legendre order {n} over budget")
    return n


def _smooth_transforms(spec, x, want_kernel: bool):
    """Vectorized cosine/sine transform of the smooth taper."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nodes, wts = unit_gl_rule(_gl_order(float(np.max(np.abs(x), initial=0.0))))
    kap = window(spec, nodes)
    out = np.empty_like(x)
    if want_kernel:
        coef = kap * wts
        for i in range(0, x.size, _CHUNK):
            blk = x[i:i + _CHUNK, None]
            out[i:i + _CHUNK] = np.cos(blk * nodes) @ coef
        return out / np.pi
    coef = kap * wts / nodes
    for i in range(0, x.size, _CHUNK):
        blk = x[i:i + _CHUNK, None]
        out[i:i + _CHUNK] = np.sin(blk * nodes) @ coef
    return 0.5 + out / np.pi


def _dispatch(spec, x, want_kernel):
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    a = np.atleast_1d(arr)
    if spec.family == TRAPEZOID:
        out = _trap_kernel(spec.c, a) if want_kernel else _trap_kbar(spec.c, a)
    else:
        out = _smooth_transforms(spec, a, want_kernel)
    return float(out[0]) if scalar else out


def kernel(spec: FlatTopSpec, x):
    """Smoothing kernel K(x) = (1/pi) * int_0^1 taper(s) cos(sx) ds."""
    return _dispatch(spec, x, True)


def integrated_kernel(spec: FlatTopSpec, t):
    """Running integral Kbar(t) of the kernel; tends to 0/1 at -/+ infinity."""
    return _dispatch(spec, t, False)


def kernel_by_quad(spec: FlatTopSpec, x: float, tol: float = 1e-10) -> float:
    """Kernel value by adaptive quadrature; independent check route."""
    x = float(x)

    def f(s):
        return window(spec, s) * np.cos(s * x)

    return adaptive_quad(f, 0.0, 1.0, tol) / np.pi


def integrated_kernel_by_quad(spec: FlatTopSpec, t: float,
                              tol: float = 1e-10) -> float:
    """Integrated kernel by adaptive quadrature of taper(s) sin(st)/s."""
    t = float(t)

    def f(s):
        s = np.asarray(s, dtype=float)
        safe = np.where(s == 0.0, 1.0, s)
        ratio = np.where(s == 0.0, t, np.sin(s * t) / safe)
        return window(spec, s) * ratio

    return 0.5 + adaptive_quad(f, 0.0, 1.0, tol) / np.pi


# ---------------------------------------------------------------------------
# lookup tables


def _trap_tail_cutoff(c: float, tol: float) -> float:
    # |1 - Kbar(t)| <= (2/c + 2) / (pi (1-c) t^2), by parts twice
    c2 = (2.0 / c + 2.0) / (np.pi * (1.0 - c))
    return float(np.sqrt(c2 / tol))


def _smooth_tail_cutoff(spec, tol: float) -> float:
    t = 32.0
    while t <= 2.2e5:
        gap = abs(1.0 - integrated_kernel_by_quad(spec, t, tol=tol / 20))
        if gap < 0.5 * tol:
            gap2 = abs(1.0 - integrated_kernel_by_quad(spec, 2 * t, tol=tol / 20))
            if gap2 <= gap:
                return t
        t *= 2.0
    raise QuadratureError("smooth-family tail does not settle below tol")


def _positive_grid(t_end: float, tol: float, decay_const: float) -> np.ndarray:
    """Abscissae 0..t_end: uniform core, then spacing growing like sqrt(t).

    Spacing keeps the cubic-interpolation error (5/384) h^4 |f''''| under
    tol, using |f''''| <= 0.08 near 0 and <= decay_const / t^2 beyond.
    """
    delta0 = min(0.05, (384.0 * tol / (5.0 * 0.08)) ** 0.25)
    t_core = min(16.0, t_end)
    pts = list(np.arange(0.0, t_core, delta0))
    beta = (76.8 * tol / decay_const) ** 0.25
    t = t_core
    while t < t_end:
        pts.append(t)
        t += max(delta0, beta * np.sqrt(t))
    pts.append(t_end)
    return np.asarray(pts)


@dataclass
class KernelTable:
    """Tabulated kernel with certified interpolation error.

    kbar_values holds the raw integrated kernel, genuinely non-monotone
    because flat-top kernels take negative values.  Estimators consume
    the raw values: the bias cancellation that motivates these kernels
    lives in the oscillation, and flattening it would re-introduce a
    systematic error far above the table tolerance.  kbar_rectified is
    the running max clipped to [0,1], kept for diagnostics and for
    shape-oriented callers; path-level standardization is the supported
    way to get a valid CDF out of an estimate.
    """
    spec: FlatTopSpec
    grid: np.ndarray
    k_values: np.ndarray
    kbar_values: np.ndarray
    tail_cutoff: float
    tol: float
    kbar_rectified: np.ndarray = field(init=False)

    def __post_init__(self):
        self.kbar_rectified = np.clip(
            np.maximum.accumulate(self.kbar_values), 0.0, 1.0)
        self._k_spline = CubicSpline(self.grid, self.k_values)
        self._kbar_spline = CubicSpline(self.grid, self.kbar_values)
        self._rect_spline = CubicSpline(self.grid, self.kbar_rectified)

    def k(self, x):
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        a = np.atleast_1d(arr)
        out = np.zeros_like(a)
        inside = np.abs(a) <= self.tail_cutoff
        out[inside] = self._k_spline(a[inside])
        return float(out[0]) if scalar else out

    def kbar(self, x, rectified: bool = False):
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        a = np.atleast_1d(arr)
        out = np.empty_like(a)
        lo = a < -self.tail_cutoff
        hi = a > self.tail_cutoff
        mid = ~(lo | hi)
        out[lo] = 0.0
        out[hi] = 1.0
        if rectified:
            out[mid] = np.clip(self._rect_spline(a[mid]), 0.0, 1.0)
        else:
            out[mid] = self._kbar_spline(a[mid])
        return float(out[0]) if scalar else out

    def cross_moment(self) -> float:
        return kernel_cross_moment(self.spec)

    def to_dict(self) -> dict:
        return {
            "schema": TABLE_SCHEMA,
            "family": self.spec.family,
            "c": self.spec.c,
            "b": self.spec.b,
            "effective_c": self.spec.effective_c,
            "tol": self.tol,
            "tail_cutoff": self.tail_cutoff,
            "grid": self.grid.tolist(),
            "k_values": self.k_values.tolist(),
            "kbar_values": self.kbar_values.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "KernelTable":
        if payload.get("schema") != TABLE_SCHEMA:
            raise ValueError("unsupported kernel table schema")
        spec = FlatTopSpec(payload["family"], payload["c"], payload["b"],
                           payload["effective_c"])
        return cls(spec=spec,
                   grid=np.asarray(payload["grid"], dtype=float),
                   k_values=np.asarray(payload["k_values"], dtype=float),
                   kbar_values=np.asarray(payload["kbar_values"], dtype=float),
                   tail_cutoff=float(payload["tail_cutoff"]),
                   tol=float(payload["tol"]))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "KernelTable":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def cache_key(spec: FlatTopSpec, tol: float) -> str:
    return f"{spec.family}_c{spec.c:g}_b{spec.b:g}_tol{tol:g}"


def _certify(table: KernelTable) -> None:
    """Compare both splines against direct evaluation at panel midpoints."""
    mids = 0.5 * (table.grid[:-1] + table.grid[1:])
    err_k = np.max(np.abs(table.k(mids) - kernel(table.spec, mids)))
    err_b = np.max(np.abs(table.kbar(mids, rectified=False)
                          - integrated_kernel(table.spec, mids)))
    if max(err_k, err_b) > table.tol:
        raise QuadratureError(
            f"table interpolation error {max(err_k, err_b):.3g} exceeds "
            f"tol {table.tol:.3g}")


def _certify_mass(spec: FlatTopSpec, tail_cutoff: float, tol: float) -> None:
    """Total mass of K must be 1 within 10*tol.

    Dense trapezoidal sum of direct kernel values over the core, plus the
    closed-form tail mass 1 - Kbar(T1) + Kbar(-T1); the two routes share
    no code with the spline tables.
    """
    t1 = min(60.0, tail_cutoff)
    step = 2e-4 if spec.family == TRAPEZOID else 1e-3
    xs = np.linspace(-t1, t1, int(2 * t1 / step) + 1)
    core = np.trapezoid(kernel(spec, xs), xs)
    tail = 1.0 - integrated_kernel(spec, t1) + integrated_kernel(spec, -t1)
    mass = core + tail
    if abs(mass - 1.0) > 10.0 * tol:
        raise QuadratureError(f"kernel mass {mass!r} off unity beyond 10*tol")


def build_table(spec: FlatTopSpec, tol: float = 1e-8,
                max_points: int = 400_000) -> KernelTable:
    """Tabulate K and Kbar densely enough for interpolation error <= tol."""
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    if spec.family == TRAPEZOID:
        t_end = _trap_tail_cutoff(spec.c, tol)
    else:
        t_end = _smooth_tail_cutoff(spec, tol)
    decay = 3.0 / (np.pi * (1.0 - spec.c))
    pos = _positive_grid(t_end, tol, decay)
    if 2 * pos.size > max_points:
        raise QuadratureError(
            f"grid of {2 * pos.size} points exceeds max_points={max_points}")
    k_pos = kernel(spec, pos)
    kbar_pos = integrated_kernel(spec, pos)
    grid = np.concatenate([-pos[:0:-1], pos])
    k_vals = np.concatenate([k_pos[:0:-1], k_pos])
    kbar_vals = np.concatenate([1.0 - kbar_pos[:0:-1], kbar_pos])
    table = KernelTable(spec=spec, grid=grid, k_values=k_vals,
                        kbar_values=kbar_vals, tail_cutoff=float(t_end),
                        tol=tol)
    _certify(table)
    _certify_mass(spec, float(t_end), tol)
    return table


_TABLE_CACHE: dict[tuple, KernelTable] = {}


def get_table(spec: FlatTopSpec, tol: float = 1e-8) -> KernelTable:
    """Process-level cache around build_table."""
    key = (spec, tol)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = build_table(spec, tol)
    return _TABLE_CACHE[key]


# ---------------------------------------------------------------------------
# comparator kernel and the variance cross moment


class GaussianKernel:
    """Standard normal kernel with the same call surface as KernelTable."""

    tail_cutoff = 40.0
    tol = 1e-12

    def k(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)

    def kbar(self, x, rectified: bool = False):
        # already a CDF; the flag only exists for signature parity
        return ndtr(np.asarray(x, dtype=float))

    def cross_moment(self) -> float:
        return _gaussian_cross_moment()

    def __repr__(self):
        return "GaussianKernel()"


@lru_cache(maxsize=1)
def _gaussian_cross_moment() -> float:
    f = lambda u: ndtr(u) * (1.0 - ndtr(u))
    return adaptive_quad(f, 0.0, 40.0, 1e-12)


@lru_cache(maxsize=32)
def _flattop_cross_moment(spec: FlatTopSpec) -> float:
    # int u K Kbar du rewritten by parts as (1/2) int Kbar (1 - Kbar):
    # absolutely convergent and even, so integrate once over [0, T]
    f = lambda u: integrated_kernel(spec, u) * (1.0 - integrated_kernel(spec, u))
    if spec.family == TRAPEZOID:
        t_end = 3000.0
        value = adaptive_quad(f, 0.0, t_end, 1e-10)
        # analytic tail of int (1 - Kbar), from the Si asymptotics
        c = spec.c
        tail = (np.cos(t_end) / t_end ** 2
                - np.cos(c * t_end) / (c ** 2 * t_end ** 2)) / (np.pi * (1 - c))
        return value + tail
    t_end = 32.0
    while abs(1.0 - integrated_kernel_by_quad(spec, t_end, tol=1e-13)) > 1e-12:
        t_end *= 2.0
        if t_end > 2.2e5:
            raise QuadratureError("cross moment tail does not settle")
    return adaptive_quad(f, 0.0, t_end, 1e-10)


def kernel_cross_moment(kern) -> float:
    """The constant int u K(u) Kbar(u) du in the second-order variance term."""
    if isinstance(kern, GaussianKernel):
        return _gaussian_cross_moment()
    if isinstance(kern, KernelTable):
        return _flattop_cross_moment(kern.spec)
    if isinstance(kern, FlatTopSpec):
        return _flattop_cross_moment(kern)
    raise TypeError(f"no cross moment for {type(kern).__name__}")
