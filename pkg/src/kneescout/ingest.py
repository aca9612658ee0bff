"""Loading, validation, resampling, and normalization of capacity-fade data.

The canonical representation downstream of this module is a unit-spaced
cycle grid: every identified boundary is a cycle number on that grid. The
first cycle index of the input is authoritative and is never renumbered.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    LengthMismatch,
    MissingColumn,
    NonMonotonicCycles,
    NonPositiveCapacity,
    NonPositiveNominal,
    TooShort,
)

CAPACITY_HEADER = ("cycle", "discharge_capacity_ah")


@dataclass(frozen=True)
class CapacityFadeSeries:
    """Per-cell discharge capacity (Ah) indexed by cycle number."""

    cell_id: str
    cycles: np.ndarray
    capacity_ah: np.ndarray
    q_nom_ah: float

    def __post_init__(self):
        cycles = np.asarray(self.cycles, dtype=np.int64)
        capacity = np.asarray(self.capacity_ah, dtype=np.float64)
        object.__setattr__(self, "cycles", cycles)
        object.__setattr__(self, "capacity_ah", capacity)
        if cycles.shape != capacity.shape:
            raise LengthMismatch(
                f"{len(cycles)} cycle indices vs {len(capacity)} capacity values"
            )
        if len(cycles) < 3:
            raise TooShort(f"need at least 3 points, got {len(cycles)}")
        if np.any(cycles < 0):
            raise NonMonotonicCycles("cycle indices must be nonnegative")
        if np.any(np.diff(cycles) <= 0):
            raise NonMonotonicCycles("cycle indices must be strictly increasing")
        if not np.all(np.isfinite(capacity)) or np.any(capacity <= 0):
            raise NonPositiveCapacity("capacities must be finite and > 0")
        if not np.isfinite(self.q_nom_ah) or self.q_nom_ah <= 0:
            raise NonPositiveNominal(f"q_nom_ah={self.q_nom_ah!r}")

    def __len__(self) -> int:
        return len(self.cycles)


@dataclass(frozen=True)
class NormalizedSeries:
    """Dimensionless capacity fraction on a unit-spaced cycle grid."""

    cycles: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cycles", np.asarray(self.cycles, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.cycles.shape != self.values.shape:
            raise LengthMismatch("cycles and values differ in length")

    def __len__(self) -> int:
        return len(self.cycles)


def load_capacity_csv(
    path,
    cell_id: Optional[str] = None,
    q_nom_ah: Optional[float] = None,
) -> CapacityFadeSeries:
    """Read a ``cycle,discharge_capacity_ah`` CSV into a CapacityFadeSeries.

    Metadata comes from an optional sidecar ``<basename>.meta.json`` with
    fields ``cell_id`` and ``q_nom_ah``; explicit arguments override the
    sidecar. A missing nominal capacity is an error because normalization
    needs the cell's rating, not a value inferred from the data.
    """
    path = Path(path)
    meta = _read_sidecar(path)
    if cell_id is None:
        cell_id = meta.get("cell_id", path.stem)
    if q_nom_ah is None:
        q_nom_ah = meta.get("q_nom_ah")
    if q_nom_ah is None:
        raise NonPositiveNominal(
            f"no q_nom_ah for {path.name}: provide a sidecar {path.stem}.meta.json or an override"
        )

    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(f"{path.name}: empty file") from None
        header = tuple(h.strip() for h in header)
        if header != CAPACITY_HEADER:
            raise MissingColumn(
                f"{path.name}: expected header {','.join(CAPACITY_HEADER)!r}, got {','.join(header)!r}"
            )
        cycles, capacity = [], []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise MissingColumn(f"{path.name}: short row {row!r}")
            cycles.append(int(float(row[0])))
            capacity.append(float(row[1]))

    return CapacityFadeSeries(
        cell_id=cell_id,
        cycles=np.array(cycles, dtype=np.int64),
        capacity_ah=np.array(capacity, dtype=np.float64),
        q_nom_ah=float(q_nom_ah),
    )


def _read_sidecar(path: Path) -> dict:
    sidecar = path.with_suffix(".meta.json")
    if not sidecar.exists():
        return {}
    with open(sidecar, encoding="utf-8") as fh:
        return json.load(fh)


def resample_even(series: CapacityFadeSeries) -> CapacityFadeSeries:
    """Resample onto a unit-spaced cycle grid with a natural cubic spline.

    Input that is already unit-spaced is returned unchanged, bitwise.
    """
    cycles = series.cycles
    if np.all(np.diff(cycles) == 1):
        return series
    if len(cycles) < 4:
        raise TooShort("cubic resampling of uneven cycles needs at least 4 points")
    spline = CubicSpline(
        cycles.astype(np.float64), series.capacity_ah, bc_type="natural"
    )
    grid = np.arange(cycles[0], cycles[-1] + 1, dtype=np.int64)
    return CapacityFadeSeries(
        cell_id=series.cell_id,
        cycles=grid,
        capacity_ah=spline(grid.astype(np.float64)),
        q_nom_ah=series.q_nom_ah,
    )


def normalize(series: CapacityFadeSeries) -> NormalizedSeries:
    """Divide capacities by the cell's initial nominal capacity."""
    if series.q_nom_ah <= 0:
        raise NonPositiveNominal(f"q_nom_ah={series.q_nom_ah!r}")
    return NormalizedSeries(
        cycles=series.cycles, values=series.capacity_ah / series.q_nom_ah
    )


def find_eol(series, threshold: float = 0.8) -> Optional[int]:
    """First cycle at which the normalized value is <= threshold, or None.

    Works on any series with ``cycles`` and ``values``; the identification
    pipeline passes the smoothed series so a single noisy sample cannot
    trigger the crossing.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0,1), got {threshold}")
    below = np.nonzero(series.values <= threshold)[0]
    if len(below) == 0:
        return None
    return int(series.cycles[below[0]])
