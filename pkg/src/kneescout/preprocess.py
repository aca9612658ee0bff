"""Savitzky-Golay smoothing and the discrete degradation-curvature series.

The curvature proxy at interior index i is

    y_d[i] = y[i - (ws-1)/2] + y[i + (ws-1)/2] - 2 * y[i]

for an odd window ``ws``. On a unit-spaced grid it is zero for any straight
line, negative where three points form a knee, and positive for an elbow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import savgol_filter

from .errors import EvenWindow, OrderTooHigh, SeriesTooShort, WindowTooLarge
from .ingest import NormalizedSeries


@dataclass(frozen=True)
class SmoothedSeries:
    cycles: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cycles", np.asarray(self.cycles, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    def __len__(self) -> int:
        return len(self.cycles)


@dataclass(frozen=True)
class CurvatureSeries:
    """Second-difference curvature values with index bookkeeping.

    ``values[k]`` is the curvature at cycle ``first_cycle + k``; the series
    is shorter than its input by ``ws - 1`` samples ((ws-1)/2 per edge).
    """

    values: np.ndarray
    first_cycle: int
    ws: int

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def cycles(self) -> np.ndarray:
        return self.first_cycle + np.arange(len(self.values), dtype=np.int64)


def savgol_smooth(
    series: NormalizedSeries, window: int = 21, order: int = 3
) -> SmoothedSeries:
    """Smooth with a local least-squares polynomial of the given order.

    Each output point is the center evaluation of the polynomial fitted
    over the window; edges are mirror-padded (reflection about the edge
    sample, which is not repeated), keeping the output length equal to the
    input length. Polynomials up to the filter order are reproduced exactly
    on the interior; the mirrored extension is not polynomial, so the first
    and last half-windows deviate.
    """
    n = len(series)
    if window % 2 == 0:
        raise EvenWindow(f"window must be odd, got {window}")
    if window < 3 or window > n:
        raise WindowTooLarge(f"window {window} outside [3, {n}]")
    if not 0 <= order < window:
        raise OrderTooHigh(f"order {order} must satisfy 0 <= order < window {window}")
    smoothed = savgol_filter(series.values, window, order, mode="mirror")
    return SmoothedSeries(cycles=series.cycles, values=smoothed)


def clip_window(window: int, n: int) -> int:
    """Largest odd window <= min(window, n), never below 3."""
    w = min(window, n)
    if w % 2 == 0:
        w -= 1
    return max(w, 3)


def approximate_curvature(series: SmoothedSeries, ws: int = 3) -> CurvatureSeries:
    """Second-difference curvature over a sliding window of ``ws`` cycles."""
    if ws % 2 == 0 or ws < 3:
        raise EvenWindow(f"ws must be odd and >= 3, got {ws}")
    n = len(series)
    if n < ws:
        raise SeriesTooShort(f"need at least ws={ws} points, got {n}")
    half = (ws - 1) // 2
    y = series.values
    values = y[: n - 2 * half] + y[2 * half :] - 2.0 * y[half : n - half]
    return CurvatureSeries(
        values=values, first_cycle=int(series.cycles[0]) + half, ws=ws
    )
