"""Batch identification, correlation statistics, and plot-ready exports."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .baconwatts import dbw_knee_report
from .config import PipelineParams, DEFAULT_PARAMS
from .errors import ConstantInput, LengthMismatch
from .ingest import CapacityFadeSeries
from .segmentation import KneeReport, identify_knees

METHODS = ("curvature_rea", "double_bacon_watts")
BATCH_HEADER = "cell_id,method,onset_cycle,knee_cycle,eol_cycle,gap"


@dataclass(frozen=True)
class BatchRow:
    cell_id: str
    method: str
    onset_cycle: int
    knee_cycle: int
    eol_cycle: Optional[int]
    gap: int


@dataclass(frozen=True)
class CorrelationReport:
    r_onset_eol: Optional[float]
    r_knee_eol: Optional[float]
    n_cells: int
    n_excluded: int
    mean_gap: float
    note: str = ""


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch(f"{x.shape} vs {y.shape}")
    if len(x) < 2:
        raise ConstantInput(f"need at least 2 samples, got {len(x)}")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.sum(dx * dx)))
    sy = float(np.sqrt(np.sum(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        raise ConstantInput("correlation undefined for a constant input")
    return float(np.sum(dx * dy) / (sx * sy))


def _report_for(series: CapacityFadeSeries, method: str, params: PipelineParams) -> KneeReport:
    if method == "curvature_rea":
        return identify_knees(series, params)
    if method == "double_bacon_watts":
        return dbw_knee_report(series, params)
    raise ValueError(f"unknown method {method!r}")


def batch_report(
    inputs: Iterable[CapacityFadeSeries],
    methods: Sequence[str] = METHODS,
    params: PipelineParams = DEFAULT_PARAMS,
    jobs: int = 1,
) -> Tuple[List[BatchRow], Dict[str, CorrelationReport]]:
    """Identify every cell with every method and correlate against EoL.

    Cells without a defined EoL are excluded from the correlations (but
    their rows are still emitted); a constant input degenerates the
    correlation to None with a note rather than failing the batch.
    """
    rows: List[BatchRow] = []
    series_list = sorted(inputs, key=lambda s: s.cell_id)
    tasks = [(series, method) for series in series_list for method in methods]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(
                pool.map(_report_for, *zip(*((s, m, params) for s, m in tasks)))
            )
    else:
        reports = [_report_for(s, m, params) for s, m in tasks]
    for (series, method), rep in zip(tasks, reports):
        rows.append(
            BatchRow(
                cell_id=rep.cell_id,
                method=method,
                onset_cycle=rep.onset_cycle,
                knee_cycle=rep.knee_cycle,
                eol_cycle=rep.eol_cycle,
                gap=rep.knee_cycle - rep.onset_cycle,
            )
        )

    correlations: Dict[str, CorrelationReport] = {}
    for method in methods:
        mrows = [r for r in rows if r.method == method]
        with_eol = [r for r in mrows if r.eol_cycle is not None]
        n_excluded = len(mrows) - len(with_eol)
        mean_gap = float(np.mean([r.gap for r in mrows])) if mrows else float("nan")
        r_onset = r_knee = None
        note = ""
        if len(with_eol) >= 2:
            eol = [r.eol_cycle for r in with_eol]
            try:
                r_onset = pearson([r.onset_cycle for r in with_eol], eol)
                r_knee = pearson([r.knee_cycle for r in with_eol], eol)
            except ConstantInput as exc:
                note = f"constant input: {exc}"
        else:
            note = f"only {len(with_eol)} cells with EoL; correlation undefined"
        correlations[method] = CorrelationReport(
            r_onset_eol=r_onset,
            r_knee_eol=r_knee,
            n_cells=len(with_eol),
            n_excluded=n_excluded,
            mean_gap=mean_gap,
            note=note,
        )
    return rows, correlations


def improvement_pct(r_new: float, r_old: float) -> float:
    """Percentage improvement with the benchmark in the denominator."""
    return (r_new - r_old) / r_old * 100.0


def format_batch_csv(
    rows: List[BatchRow], correlations: Dict[str, CorrelationReport]
) -> str:
    """Batch table plus correlation footer lines (comment-prefixed)."""
    lines = [BATCH_HEADER]
    for r in rows:
        eol = "" if r.eol_cycle is None else str(r.eol_cycle)
        lines.append(
            f"{r.cell_id},{r.method},{r.onset_cycle},{r.knee_cycle},{eol},{r.gap}"
        )
    for method, rep in correlations.items():
        parts = [f"# method={method}"]
        parts.append(f"pearson_onset_eol={_fmt(rep.r_onset_eol)}")
        parts.append(f"pearson_knee_eol={_fmt(rep.r_knee_eol)}")
        parts.append(f"n_cells={rep.n_cells}")
        parts.append(f"n_excluded={rep.n_excluded}")
        parts.append(f"mean_gap={rep.mean_gap:.2f}")
        if rep.note:
            parts.append(f"note={rep.note!r}")
        lines.append(" ".join(parts))
    if all(m in correlations for m in METHODS):
        new = correlations["curvature_rea"]
        old = correlations["double_bacon_watts"]
        for kind in ("onset", "knee"):
            r_new = getattr(new, f"r_{kind}_eol")
            r_old = getattr(old, f"r_{kind}_eol")
            if r_new is not None and r_old not in (None, 0.0):
                lines.append(
                    f"# improvement_{kind}_pct={improvement_pct(r_new, r_old):.1f}"
                )
    return "\n".join(lines) + "\n"


def _fmt(value: Optional[float]) -> str:
    return "nan" if value is None else f"{value:.6f}"


def format_scatter_csv(rows: List[BatchRow], method: str, kind: str) -> str:
    """Plot-ready ``onset_or_knee_cycle,eol_cycle`` pairs for one method."""
    if kind not in ("onset", "knee"):
        raise ValueError(f"kind must be onset or knee, got {kind!r}")
    lines = ["onset_or_knee_cycle,eol_cycle"]
    for r in rows:
        if r.method != method or r.eol_cycle is None:
            continue
        cyc = r.onset_cycle if kind == "onset" else r.knee_cycle
        lines.append(f"{cyc},{r.eol_cycle}")
    return "\n".join(lines) + "\n"


def write_report_dir(
    rows: List[BatchRow],
    correlations: Dict[str, CorrelationReport],
    out_dir,
    write_text,
) -> List[Path]:
    """Emit table.csv plus per-method scatter files via ``write_text``."""
    out_dir = Path(out_dir)
    written = []
    table = out_dir / "table.csv"
    write_text(table, format_batch_csv(rows, correlations))
    written.append(table)
    for method in correlations:
        for kind in ("onset", "knee"):
            p = out_dir / f"scatter_{method}_{kind}.csv"
            write_text(p, format_scatter_csv(rows, method, kind))
            written.append(p)
    return written
