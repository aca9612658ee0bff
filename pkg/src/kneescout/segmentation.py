"""Arc-curve segmentation of the curvature series and knee extraction.

The matrix profile index induces one arc per window, from its start to its
nearest neighbor's start. Positions crossed by few arcs are likely regime
boundaries; dividing the crossing count by the count an idealized random
index would produce (a parabola) and clamping at 1 gives the corrected arc
curve, whose minima the regime-extracting step selects under an exclusion
zone. The first boundary is the knee onset, the second the knee.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .config import PipelineParams, DEFAULT_PARAMS
from .errors import (
    IndexOutOfRange,
    InsufficientUnmaskedRegion,
    LengthMismatch,
)
from .ingest import CapacityFadeSeries, find_eol, normalize, resample_even
from .matrixprofile import stamp
from .preprocess import approximate_curvature, clip_window, savgol_smooth

# CAC dynamic range below which the three-state assumption looks violated
# (an essentially featureless arc curve has no credible boundaries).
FLAT_CAC_RANGE = 0.05
FLAT_CURVATURE = 1e-9


@dataclass(frozen=True)
class ArcCurveSet:
    ac: np.ndarray
    iac: np.ndarray
    cac: np.ndarray


@dataclass(frozen=True)
class RegimeBoundaries:
    boundaries: List[int]
    exclusion_radius: int


@dataclass(frozen=True)
class KneeReport:
    cell_id: str
    onset_cycle: int
    knee_cycle: int
    eol_cycle: Optional[int]
    method: str  # "curvature_rea" or "double_bacon_watts"
    diagnostics: Dict[str, float] = field(default_factory=dict)


def arc_curve(index: np.ndarray) -> np.ndarray:
    """Number of nearest-neighbor arcs strictly crossing each position.

    An arc (j, I[j]) crosses i when min < i < max. Counted in O(n) by
    marking arc interiors and cumulatively summing.
    """
    index = np.asarray(index, dtype=np.int64)
    n = len(index)
    if n < 2:
        raise IndexOutOfRange(f"index of length {n} has no interior")
    if np.any(index < 0) or np.any(index >= n):
        raise IndexOutOfRange("matrix profile index entries outside [0, n)")
    j = np.arange(n)
    lo = np.minimum(j, index)
    hi = np.maximum(j, index)
    span = hi > lo  # a self-arc has no interior
    mark = np.zeros(n + 1, dtype=np.int64)
    np.add.at(mark, lo[span] + 1, 1)
    np.add.at(mark, hi[span], -1)
    return np.cumsum(mark[:-1])


def iac(n: int) -> np.ndarray:
    """Idealized arc curve: parabola of height n/2, zero at position 0."""
    if n < 2:
        raise IndexOutOfRange(f"need length >= 2, got {n}")
    i = np.arange(n, dtype=np.float64)
    return 2.0 * i * (n - i) / n


def cac(ac: np.ndarray, iac_curve: np.ndarray) -> np.ndarray:
    """Corrected arc curve: min(ac/iac, 1), with 1 where the parabola is 0."""
    ac = np.asarray(ac, dtype=np.float64)
    iac_curve = np.asarray(iac_curve, dtype=np.float64)
    if ac.shape != iac_curve.shape:
        raise LengthMismatch(f"ac length {len(ac)} != iac length {len(iac_curve)}")
    out = np.ones_like(ac)
    nz = iac_curve > 0
    out[nz] = np.minimum(ac[nz] / iac_curve[nz], 1.0)
    return out


def compute_arc_curves(index: np.ndarray) -> ArcCurveSet:
    """All three arc curves of a matrix profile index."""
    ac = arc_curve(index)
    ideal = iac(len(ac))
    return ArcCurveSet(ac=ac, iac=ideal, cac=cac(ac, ideal))


def rea(
    cac_values: np.ndarray, n_boundaries: int, exclusion_radius: int
) -> RegimeBoundaries:
    """Iteratively select CAC minima, masking +-exclusion_radius after each.

    Ties at equal CAC go to the smaller index. Boundaries are returned in
    ascending order and are pairwise separated by more than the exclusion
    radius.
    """
    values = np.asarray(cac_values, dtype=np.float64).copy()
    n = len(values)
    if n_boundaries < 0 or exclusion_radius < 0:
        raise IndexOutOfRange("n_boundaries and exclusion_radius must be >= 0")
    picked = []
    for _ in range(n_boundaries):
        finite = np.isfinite(values)
        if not finite.any():
            raise InsufficientUnmaskedRegion(
                f"cannot place {n_boundaries} boundaries with exclusion "
                f"{exclusion_radius} in a CAC of length {n}"
            )
        b = int(np.argmin(values))  # argmin takes the first minimum: smallest index
        picked.append(b)
        lo = max(0, b - exclusion_radius)
        hi = min(n, b + exclusion_radius + 1)
        values[lo:hi] = np.inf
    return RegimeBoundaries(
        boundaries=sorted(picked), exclusion_radius=exclusion_radius
    )


def identify_knees(
    series: CapacityFadeSeries, params: PipelineParams = DEFAULT_PARAMS
) -> KneeReport:
    """Run the full curvature pipeline and report knee onset and knee.

    Resamples to a unit cycle grid, normalizes by nominal capacity, smooths,
    takes the discrete curvature, computes the matrix profile and corrected
    arc curve, and extracts two regime boundaries. Boundary positions are
    mapped back to cycle numbers by adding the curvature index offset and
    the half-width of the matrix-profile window. An edge band of one
    exclusion radius at each end of the CAC is never selected.
    """
    series = resample_even(series)
    normalized = normalize(series)
    sg_window = clip_window(params.sg_window, len(normalized))
    smoothed = savgol_smooth(normalized, window=sg_window, order=params.sg_order)
    curvature = approximate_curvature(smoothed, ws=params.curv_window)

    if params.cac_window is None:
        mp_window = params.mp_window
    elif params.cac_window > 0:
        mp_window = params.cac_window
    else:
        # 0 selects the floor(N/5) segmentation window of the method's
        # parameter table, relative to the curvature series length
        mp_window = max(2, len(curvature) // 5)
    profile = stamp(curvature.values, mp_window)
    curves = compute_arc_curves(profile.I)
    corrected = curves.cac

    guarded = corrected.copy()
    guard = params.exclusion_radius
    if guard > 0 and len(guarded) > 2 * guard:
        guarded[:guard] = np.inf
        guarded[-guard:] = np.inf
    boundaries = rea(guarded, 2, params.exclusion_radius)

    offset = curvature.first_cycle + (mp_window - 1) // 2
    onset_pos, knee_pos = boundaries.boundaries
    onset_cycle = offset + onset_pos
    knee_cycle = offset + knee_pos

    eol = find_eol(smoothed, params.eol_threshold)
    cac_interior = corrected[1:-1] if len(corrected) > 2 else corrected
    # mirror padding leaves a structural curvature artifact within half a
    # smoothing window of each end, so flatness is judged on the interior
    edge = sg_window // 2
    interior = (
        curvature.values[edge:-edge]
        if len(curvature) > 2 * edge + 2
        else curvature.values
    )
    curv_peak = float(np.max(np.abs(interior)))
    cac_range = float(np.max(cac_interior) - np.min(cac_interior))
    assumption_violated = curv_peak < FLAT_CURVATURE or cac_range < FLAT_CAC_RANGE

    return KneeReport(
        cell_id=series.cell_id,
        onset_cycle=int(onset_cycle),
        knee_cycle=int(knee_cycle),
        eol_cycle=eol,
        method="curvature_rea",
        diagnostics={
            "cac_min_onset": float(corrected[onset_pos]),
            "cac_min_knee": float(corrected[knee_pos]),
            "cac_range": cac_range,
            "curvature_abs_max": curv_peak,
            "assumption_violated": 1.0 if assumption_violated else 0.0,
            "sg_window_used": float(sg_window),
        },
    )
