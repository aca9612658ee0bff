"""Dataclass configuration shared by the pipeline, the CLI, and the scripts."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional


@dataclass(frozen=True)
class GBRTHyper:
    """Hyperparameters of the boosted-tree knee-onset predictor."""

    n_trees: int = 300
    learning_rate: float = 0.05
    max_depth: int = 3
    min_leaf: int = 2


@dataclass(frozen=True)
class PipelineParams:
    """Knobs of the identification pipeline.

    ``curv_window`` and ``mp_window`` default to 3 cycles. ``cac_window``
    is an optional second subsequence length: when set, segmentation runs
    on a matrix profile computed with that window instead of ``mp_window``.
    ``exclusion_radius`` is the REA masking half-width in cycles and also
    the width of the edge band excluded from boundary selection.
    """

    sg_window: int = 21
    sg_order: int = 3
    curv_window: int = 3
    mp_window: int = 3
    cac_window: Optional[int] = None
    exclusion_radius: int = 15
    eol_threshold: float = 0.8
    gamma: float = 10.0
    max_iter: int = 1000
    gbrt: GBRTHyper = field(default_factory=GBRTHyper)
    seed: int = 42

    def with_overrides(self, **kwargs) -> "PipelineParams":
        return replace(self, **kwargs)


DEFAULT_PARAMS = PipelineParams()
