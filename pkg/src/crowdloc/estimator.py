"""Empirical CDFs, the rank-ordering estimator and the CDF quantile transform.

Plotting positions are the Weibull positions ``i / (m + 1)`` throughout, so the
r-th order statistic of an m-sample sits at probability ``r / (m + 1)``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError


class EmpiricalCdf:
    """Piecewise-linear empirical CDF with Weibull plotting positions.

    ``evaluate`` interpolates linearly between ``(x_(i), i/(m+1))`` and is
    clamped to ``[1/(m+1), m/(m+1)]``. Tied sample values share the mean
    plotting position of their group. ``inverse`` interpolates between the
    sorted samples and is clamped to ``[min, max]``.
    """

    def __init__(self, samples):
        values = np.sort(np.asarray(samples, dtype=float).ravel(), kind="stable")
        if values.size < 2:
            raise InsufficientDataError(
                f"need at least 2 samples to build a CDF, got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("CDF samples must be finite")
        m = values.size
        self.sorted_values = values
        self.plotting_positions = np.arange(1, m + 1) / (m + 1)
        uniq, start, counts = np.unique(values, return_index=True, return_counts=True)
        # mean position of each tie group
        self._knots = uniq
        self._knot_positions = (start + (counts + 1) / 2.0) / (m + 1)
        self.sorted_values.setflags(write=False)
        self.plotting_positions.setflags(write=False)

    @property
    def size(self) -> int:
        return self.sorted_values.size

    @property
    def support(self) -> tuple[float, float]:
        return float(self.sorted_values[0]), float(self.sorted_values[-1])

    def evaluate(self, x):
        return np.interp(x, self._knots, self._knot_positions)

    __call__ = evaluate

    def inverse(self, p):
        return np.interp(p, self.plotting_positions, self.sorted_values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("value,position\n")
        for v, p in zip(self.sorted_values, self.plotting_positions):
            buf.write(f"{float(v)!r},{float(p)!r}\n")
        return buf.getvalue()

    def __repr__(self) -> str:
        lo, hi = self.support
        return f"{type(self).__name__}(size={self.size}, support=[{lo:.4g}, {hi:.4g}])"


class DistanceCdf(EmpiricalCdf):
    """Empirical CDF over non-negative distances (meters)."""

    def __init__(self, distances):
        super().__init__(distances)
        if self.sorted_values[0] < 0:
            raise ValueError("distances must be non-negative")


def ecdf_build(samples) -> EmpiricalCdf:
    return EmpiricalCdf(samples)


@dataclass(frozen=True)
class OrderStatMoments:
    mean: float
    variance: float


def order_stat_moments(a: float, b: float, n: int, r: int) -> OrderStatMoments:
    """Mean and variance of the r-th smallest of n i.i.d. Uniform(a, b) draws."""
    if not 1 <= r <= n:
        raise ValueError(f"rank r={r} outside [1, {n}]")
    if b <= a:
        raise ValueError("need b > a")
    mean = a + (b - a) * r / (n + 1)
    variance = (b - a) ** 2 * r * (n - r + 1) / ((n + 1) ** 2 * (n + 2))
    return OrderStatMoments(mean, variance)


def order_estimate(rss, a: float, b: float) -> np.ndarray:
    """Assign evenly spaced distances by descending RSS rank.

    The r-th largest reading gets ``a + (b - a) * r / (m + 1)``. Ties keep
    their input order. Output is aligned with the input.
    """
    rss = np.asarray(rss, dtype=float).ravel()
    if b <= a:
        raise ValueError("need b > a")
    if rss.size == 0:
        raise InsufficientDataError("order_estimate needs at least one reading")
    m = rss.size
    order = np.argsort(-rss, kind="stable")
    out = np.empty(m)
    out[order] = a + (b - a) * np.arange(1, m + 1) / (m + 1)
    return out


def cdf_convert(s, f_s: EmpiricalCdf, f_d: DistanceCdf):
    """Map RSS to distance through ``F_D^{-1}(1 - F_S(s))``.

    Works on scalars and arrays. Strong signals map to short distances.
    """
    return f_d.inverse(1.0 - f_s.evaluate(s))


def reconstruct_case3(rss, f_d: DistanceCdf) -> np.ndarray:
    """Convert a batch of single-AP readings using their own empirical CDF."""
    rss = np.asarray(rss, dtype=float).ravel()
    f_s = EmpiricalCdf(rss)
    return np.asarray(cdf_convert(rss, f_s, f_d), dtype=float)
