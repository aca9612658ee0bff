"""Self-join matrix profile of a real series under z-normalized distance.

MASS computes one query's distance profile with an FFT sliding dot product
and running window statistics; STAMP folds all distance profiles into the
matrix profile P and its index I with an element-wise minimum. The merge is
associative and commutative, and ties are broken toward the smallest index,
so the result does not depend on evaluation order.

Conventions that the rest of the pipeline relies on:

* trivial matches are excluded in a band of radius ceil(L/2) around the
  diagonal (masked to +inf in distance profiles);
* two windows whose standard deviation is below 1e-12 are treated as the
  same (constant) shape at distance 0; a constant window against a varying
  one is at distance sqrt(L).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateWindow, SeriesTooShort, WindowTooLarge

FLAT_STD = 1e-12

# Distances below this are recomputed by direct z-normalized subtraction.
# The dot-product formulation's absolute error grows like 1/distance (and
# with 1/window-variance), so small distances need the direct difference,
# which is exact to machine precision there.
REFINE_BELOW = 0.5


@dataclass(frozen=True)
class DistanceProfile:
    """z-normalized distances from one query window to every window."""

    query_start: Optional[int]
    distances: np.ndarray


@dataclass(frozen=True)
class MatrixProfile:
    """Nearest-neighbor distance P and neighbor start index I for window L."""

    P: np.ndarray
    I: np.ndarray
    L: int
    exclusion_radius: int

    def __len__(self) -> int:
        return len(self.P)


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def _sliding_stats(series: np.ndarray, L: int):
    """Running mean and population std of every length-L window."""
    csum = np.cumsum(np.concatenate(([0.0], series)))
    csq = np.cumsum(np.concatenate(([0.0], series * series)))
    mu = (csum[L:] - csum[:-L]) / L
    var = (csq[L:] - csq[:-L]) / L - mu * mu
    sigma = np.sqrt(np.maximum(var, 0.0))
    return mu, sigma


def _distance_from_dot(qt, mu_q, sigma_q, mu, sigma, L):
    """Distances from sliding dot products, with the flat-window rules."""
    q_flat = sigma_q < FLAT_STD
    s_flat = sigma < FLAT_STD
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = (qt - L * mu_q * mu) / (L * sigma_q * sigma)
    rho = np.clip(rho, -1.0, 1.0)
    dist = np.sqrt(2.0 * L * (1.0 - rho))
    if q_flat:
        dist = np.where(s_flat, 0.0, math.sqrt(L))
    else:
        dist = np.where(s_flat, math.sqrt(L), dist)
    return dist


def mass(
    query: np.ndarray,
    series: np.ndarray,
    query_start: Optional[int] = None,
    exclusion_radius: Optional[int] = None,
) -> DistanceProfile:
    """Distance profile of ``query`` against all windows of ``series``.

    When ``query_start`` is given the profile is a self-join row and the
    trivial-match band around it is masked to +inf.
    """
    query = np.asarray(query, dtype=np.float64)
    series = np.asarray(series, dtype=np.float64)
    L, M = len(query), len(series)
    if L < 2:
        raise DegenerateWindow("z-normalization needs window length >= 2")
    if L > M:
        raise WindowTooLarge(f"window {L} exceeds series length {M}")

    nfft = _next_pow2(2 * M)
    series_fft = np.fft.rfft(series, nfft)
    mu, sigma = _sliding_stats(series, L)
    dist = _mass_with_precomputed(query, series, series_fft, mu, sigma, L, M, nfft)

    if query_start is not None:
        radius = (
            math.ceil(L / 2) if exclusion_radius is None else exclusion_radius
        )
        lo = max(0, query_start - radius)
        hi = min(len(dist), query_start + radius + 1)
        dist = dist.copy()
        dist[lo:hi] = np.inf
    return DistanceProfile(query_start=query_start, distances=dist)


def _mass_with_precomputed(query, series, series_fft, mu, sigma, L, M, nfft):
    mu_q = float(np.mean(query))
    sigma_q = float(np.sqrt(max(np.mean(query * query) - mu_q * mu_q, 0.0)))
    qr_fft = np.fft.rfft(query[::-1], nfft)
    qt = np.fft.irfft(series_fft * qr_fft, nfft)[L - 1 : M]
    dist = _distance_from_dot(qt, mu_q, sigma_q, mu, sigma, L)

    if sigma_q >= FLAT_STD:
        near = np.nonzero((dist < REFINE_BELOW) & (sigma >= FLAT_STD))[0]
        if len(near):
            zq = (query - mu_q) / sigma_q
            windows = series[near[:, None] + np.arange(L)]
            zw = (windows - mu[near, None]) / sigma[near, None]
            dist[near] = np.sqrt(np.sum((zw - zq) ** 2, axis=1))
    return dist


def stamp(series: np.ndarray, L: int) -> MatrixProfile:
    """All-pairs nearest-neighbor search over every length-L window.

    P and I are the element-wise minimum over all self-join distance
    profiles; the diagonal band of radius ceil(L/2) is excluded. Ties go to
    the smaller candidate index, which makes I deterministic under any
    processing order.
    """
    series = np.asarray(series, dtype=np.float64)
    M = len(series)
    if L < 2:
        raise DegenerateWindow("z-normalization needs window length >= 2")
    radius = math.ceil(L / 2)
    if M < L + radius + 1:
        raise SeriesTooShort(
            f"series length {M} < L + exclusion + 1 = {L + radius + 1}"
        )

    n = M - L + 1
    nfft = _next_pow2(2 * M)
    series_fft = np.fft.rfft(series, nfft)
    mu, sigma = _sliding_stats(series, L)

    P = np.full(n, np.inf)
    I = np.full(n, -1, dtype=np.int64)
    for j in range(n):
        dist = _mass_with_precomputed(
            series[j : j + L], series, series_fft, mu, sigma, L, M, nfft
        )
        lo = max(0, j - radius)
        hi = min(n, j + radius + 1)
        dist[lo:hi] = np.inf
        finite = np.isfinite(dist)
        better = finite & ((dist < P) | ((dist == P) & (j < I)))
        P = np.where(better, dist, P)
        I = np.where(better, j, I)

    P = np.minimum(P, 2.0 * math.sqrt(L))
    return MatrixProfile(P=P, I=I, L=L, exclusion_radius=radius)
