"""Early-cycle knee-onset prediction from discharge-curve features.

The feature set is six numbers per cell: min, variance, skewness, and
kurtosis of the capacity difference between two early discharge voltage
curves (cycle 10 and the budget cycle, interpolated onto a common voltage
grid), the discharge capacity at cycle 2, and the difference between the
maximum capacity within the budget window and the cycle-2 capacity.

The regressor is stagewise least-squares boosting over depth-limited
regression trees with axis-aligned splits and leaf means. Training is
fully deterministic: split ties go to the lower feature index, then the
lower threshold.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .config import GBRTHyper
from .errors import (
    EmptyTrainingSet,
    FeatureCountMismatch,
    InvalidDischargeCurve,
    LengthMismatch,
    MissingColumn,
    MissingCycle,
    NonFiniteFeature,
    NoVoltageOverlap,
    ZeroTrueValue,
)

CYCLE_DETAIL_HEADER = ("cycle", "voltage_v", "discharge_capacity_ah")
FEATURE_NAMES = ("min_dq", "var_dq", "skew_dq", "kurt_dq", "q2", "q_max_minus_2")

# Knee-onset grading thresholds in cycles: early < 150, late > 270.
CLASS_EDGES = (150.0, 270.0)


@dataclass(frozen=True)
class CycleRecord:
    """One cycle's discharge curve: capacity vs strictly decreasing voltage."""

    cycle: int
    voltage_v: np.ndarray
    q_ah: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.voltage_v, dtype=np.float64)
        q = np.asarray(self.q_ah, dtype=np.float64)
        object.__setattr__(self, "voltage_v", v)
        object.__setattr__(self, "q_ah", q)
        if v.shape != q.shape:
            raise LengthMismatch(
                f"cycle {self.cycle}: {len(v)} voltages vs {len(q)} capacities"
            )
        if len(v) < 2:
            raise InvalidDischargeCurve(f"cycle {self.cycle}: need >= 2 samples")
        if np.any(np.diff(v) >= 0):
            raise InvalidDischargeCurve(
                f"cycle {self.cycle}: voltage must be strictly decreasing"
            )
        if np.any(np.diff(q) < -1e-12):
            raise InvalidDischargeCurve(
                f"cycle {self.cycle}: discharge capacity must be nondecreasing"
            )

    @property
    def total_capacity_ah(self) -> float:
        return float(self.q_ah[-1])


@dataclass(frozen=True)
class FeatureVector:
    min_dq: float
    var_dq: float
    skew_dq: float
    kurt_dq: float
    q2: float
    q_max_minus_2: float

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise NonFiniteFeature(f"non-finite feature in {vals!r}")
        if self.var_dq < 0:
            raise NonFiniteFeature(f"negative variance {self.var_dq!r}")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.min_dq, self.var_dq, self.skew_dq, self.kurt_dq, self.q2,
             self.q_max_minus_2]
        )


def load_cycle_detail_csv(path) -> Dict[int, CycleRecord]:
    """Read a ``cycle,voltage_v,discharge_capacity_ah`` CSV, grouped by cycle."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(h.strip() for h in next(reader))
        except StopIteration:
            raise MissingColumn(f"{path.name}: empty file") from None
        if header != CYCLE_DETAIL_HEADER:
            raise MissingColumn(
                f"{path.name}: expected header {','.join(CYCLE_DETAIL_HEADER)!r},"
                f" got {','.join(header)!r}"
            )
        groups: Dict[int, list] = {}
        last_cycle = None
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            cyc = int(float(row[0]))
            if cyc != last_cycle and cyc in groups:
                raise MissingColumn(
                    f"{path.name}: rows for cycle {cyc} are not contiguous"
                )
            groups.setdefault(cyc, []).append((float(row[1]), float(row[2])))
            last_cycle = cyc
    records = {}
    for cyc, rows in groups.items():
        v, q = zip(*rows)
        records[cyc] = CycleRecord(cycle=cyc, voltage_v=np.array(v), q_ah=np.array(q))
    return records


def delta_q(
    records: Dict[int, CycleRecord],
    early: int = 10,
    late: int = 30,
    grid_points: int = 1000,
) -> np.ndarray:
    """Q(V) difference (late - early) on a uniform grid over the overlap."""
    for cyc in (early, late):
        if cyc not in records:
            raise MissingCycle(f"cycle {cyc} not present")
    r_e, r_l = records[early], records[late]
    lo = max(r_e.voltage_v.min(), r_l.voltage_v.min())
    hi = min(r_e.voltage_v.max(), r_l.voltage_v.max())
    if lo >= hi:
        raise NoVoltageOverlap(
            f"cycles {early} and {late} share no voltage range ({lo:.3f} >= {hi:.3f})"
        )
    grid = np.linspace(lo, hi, grid_points)
    q_e = np.interp(grid, r_e.voltage_v[::-1], r_e.q_ah[::-1])
    q_l = np.interp(grid, r_l.voltage_v[::-1], r_l.q_ah[::-1])
    return q_l - q_e


def _moments(x: np.ndarray) -> Tuple[float, float, float]:
    """Population variance, skewness, and non-excess kurtosis.

    A constant input has zero variance; skewness and kurtosis are zero by
    convention in that case.
    """
    mu = float(np.mean(x))
    dev = x - mu
    m2 = float(np.mean(dev * dev))
    if math.sqrt(m2) < 1e-12 * max(1.0, abs(mu)):
        return m2, 0.0, 0.0
    m3 = float(np.mean(dev**3))
    m4 = float(np.mean(dev**4))
    return m2, m3 / m2**1.5, m4 / m2**2


def extract_features(
    records: Dict[int, CycleRecord], budget: int = 30, grid_points: int = 1000
) -> FeatureVector:
    """Six-number feature vector from the first ``budget`` cycles."""
    if budget < 11:
        raise MissingCycle(f"budget {budget} < 11: capacity-difference anchor needs cycle 10")
    if 2 not in records:
        raise MissingCycle("cycle 2 not present")
    dq = delta_q(records, early=10, late=budget, grid_points=grid_points)
    var, skew, kurt = _moments(dq)
    q2 = records[2].total_capacity_ah
    q_max = max(
        rec.total_capacity_ah for cyc, rec in records.items() if cyc <= budget
    )
    return FeatureVector(
        min_dq=float(np.min(dq)),
        var_dq=var,
        skew_dq=skew,
        kurt_dq=kurt,
        q2=q2,
        q_max_minus_2=q_max - q2,
    )


def onset_class(label: float) -> int:
    if label < CLASS_EDGES[0]:
        return 0
    if label <= CLASS_EDGES[1]:
        return 1
    return 2


def stratified_split(
    onset_labels: Sequence[float], train_frac: float = 0.8, seed: int = 0
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-class random split with rounding toward the training set.

    Classes are the knee-onset grades (< 150, 150-270, > 270 cycles). A
    class with a single member goes to training.
    """
    labels = np.asarray(onset_labels, dtype=np.float64)
    if len(labels) < 1:
        raise EmptyTrainingSet("no samples to split")
    rng = np.random.default_rng(seed)
    train, test = [], []
    classes = np.array([onset_class(v) for v in labels])
    for cls in sorted(set(classes)):
        idx = np.nonzero(classes == cls)[0]
        perm = rng.permutation(len(idx))
        n_train = math.ceil(train_frac * len(idx))
        train.extend(idx[perm[:n_train]])
        test.extend(idx[perm[n_train:]])
    return np.array(sorted(train), dtype=np.int64), np.array(sorted(test), dtype=np.int64)


# --- boosted trees ----------------------------------------------------------

@dataclass(frozen=True)
class TreeNode:
    """Flat tree node; feature == -1 marks a leaf."""

    feature: int
    threshold: float
    left: int
    right: int
    value: float


@dataclass(frozen=True)
class GBRTModel:
    init_value: float
    learning_rate: float
    n_features: int
    trees: List[List[TreeNode]]
    train_rmse: List[float] = field(default_factory=list, repr=False)

    def to_json(self) -> str:
        return json.dumps(
            {
                "init_value": self.init_value,
                "learning_rate": self.learning_rate,
                "n_features": self.n_features,
                "trees": [
                    [
                        {
                            "feature": n.feature,
                            "threshold": n.threshold,
                            "left": n.left,
                            "right": n.right,
                            "value": n.value,
                        }
                        for n in tree
                    ]
                    for tree in self.trees
                ],
            },
            indent=2,
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "GBRTModel":
        obj = json.loads(text)
        trees = [
            [
                TreeNode(
                    feature=int(n["feature"]),
                    threshold=float(n["threshold"]),
                    left=int(n["left"]),
                    right=int(n["right"]),
                    value=float(n["value"]),
                )
                for n in tree
            ]
            for tree in obj["trees"]
        ]
        return GBRTModel(
            init_value=float(obj["init_value"]),
            learning_rate=float(obj["learning_rate"]),
            n_features=int(obj["n_features"]),
            trees=trees,
        )


def _best_split(X, r, idx, min_leaf):
    """Greedy variance-reduction split over node samples ``idx``.

    Returns (feature, threshold, sse) or None. Ties break toward the lower
    feature index, then the lower threshold (strict improvement required).
    """
    best = None
    r_node = r[idx]
    n = len(idx)
    for f in range(X.shape[1]):
        order = np.argsort(X[idx, f], kind="stable")
        v = X[idx[order], f]
        rs = r_node[order]
        c1 = np.cumsum(rs)
        c2 = np.cumsum(rs * rs)
        tot1, tot2 = c1[-1], c2[-1]
        for k in range(min_leaf - 1, n - min_leaf):
            if v[k] == v[k + 1]:
                continue
            nl = k + 1
            nr = n - nl
            sse = (c2[k] - c1[k] ** 2 / nl) + (
                (tot2 - c2[k]) - (tot1 - c1[k]) ** 2 / nr
            )
            if best is None or sse < best[2]:
                best = (f, (v[k] + v[k + 1]) / 2.0, sse)
    return best


def _fit_tree(X, r, idx, max_depth, min_leaf) -> List[TreeNode]:
    nodes: List[TreeNode] = []

    def build(sample_idx, depth) -> int:
        pos = len(nodes)
        nodes.append(TreeNode(-1, 0.0, -1, -1, float(np.mean(r[sample_idx]))))
        if depth >= max_depth or len(sample_idx) < 2 * min_leaf:
            return pos
        split = _best_split(X, r, sample_idx, min_leaf)
        if split is None:
            return pos
        f, thr, _ = split
        mask = X[sample_idx, f] <= thr
        left = build(sample_idx[mask], depth + 1)
        right = build(sample_idx[~mask], depth + 1)
        nodes[pos] = TreeNode(f, thr, left, right, 0.0)
        return pos

    build(idx, 0)
    return nodes


def _tree_predict(nodes: List[TreeNode], X) -> np.ndarray:
    out = np.empty(len(X))
    for i, row in enumerate(X):
        pos = 0
        while nodes[pos].feature >= 0:
            node = nodes[pos]
            pos = node.left if row[node.feature] <= node.threshold else node.right
        out[i] = nodes[pos].value
    return out


def gbrt_train(X, y, hyper: GBRTHyper = GBRTHyper()) -> GBRTModel:
    """Stagewise least-squares boosting; each tree fits current residuals."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise LengthMismatch(f"X has {len(X)} rows but y has {len(y)} entries")
    if len(y) < 2:
        raise EmptyTrainingSet(f"need at least 2 training samples, got {len(y)}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFiniteFeature("training data contains non-finite values")

    init = float(np.mean(y))
    pred = np.full(len(y), init)
    idx = np.arange(len(y))
    trees: List[List[TreeNode]] = []
    rmse = [float(np.sqrt(np.mean((y - pred) ** 2)))]
    for _ in range(hyper.n_trees):
        residual = y - pred
        tree = _fit_tree(X, residual, idx, hyper.max_depth, hyper.min_leaf)
        pred = pred + hyper.learning_rate * _tree_predict(tree, X)
        trees.append(tree)
        rmse.append(float(np.sqrt(np.mean((y - pred) ** 2))))
    return GBRTModel(
        init_value=init,
        learning_rate=hyper.learning_rate,
        n_features=X.shape[1],
        trees=trees,
        train_rmse=rmse,
    )


def gbrt_predict(model: GBRTModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise FeatureCountMismatch(
            f"model expects {model.n_features} features, got {X.shape[1] if X.ndim == 2 else 'non-matrix'}"
        )
    out = np.full(len(X), model.init_value)
    for tree in model.trees:
        out = out + model.learning_rate * _tree_predict(tree, X)
    return out


def evaluate(y, y_hat) -> Dict[str, float]:
    """RMSE in cycles and MAPE in percent."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape or len(y) < 1:
        raise LengthMismatch(f"{y.shape} vs {y_hat.shape}")
    if np.any(y == 0.0):
        raise ZeroTrueValue("MAPE undefined: a true value is zero")
    rmse = float(np.sqrt(np.mean((y - y_hat) ** 2)))
    mape = float(np.mean(np.abs((y - y_hat) / y)) * 100.0)
    return {"rmse": rmse, "mape": mape}


def sensitivity_sweep(
    cells: List[Dict[int, CycleRecord]],
    labels: Sequence[float],
    budgets: Sequence[int] = range(15, 36),
    repeats: int = 5,
    seed: int = 42,
    hyper: GBRTHyper = GBRTHyper(),
    train_frac: float = 0.8,
) -> List[Dict[str, float]]:
    """Mean test RMSE/MAPE per cycle budget over repeated stratified splits.

    The capacity-difference late anchor and the maximum-capacity window both
    follow the budget. Split r of a budget uses seed ``seed + r``, so the
    whole table is deterministic.
    """
    if len(cells) != len(labels):
        raise LengthMismatch(f"{len(cells)} cells vs {len(labels)} labels")
    y = np.asarray(labels, dtype=np.float64)
    table = []
    for budget in budgets:
        X = np.vstack([extract_features(rec, budget=budget).as_array() for rec in cells])
        rmses, mapes = [], []
        for r in range(repeats):
            train_idx, test_idx = stratified_split(y, train_frac, seed=seed + r)
            if len(test_idx) == 0:
                raise EmptyTrainingSet("stratified split produced an empty test set")
            model = gbrt_train(X[train_idx], y[train_idx], hyper)
            scores = evaluate(y[test_idx], gbrt_predict(model, X[test_idx]))
            rmses.append(scores["rmse"])
            mapes.append(scores["mape"])
        table.append(
            {
                "budget": float(budget),
                "mean_rmse": float(np.mean(rmses)),
                "mean_mape": float(np.mean(mapes)),
            }
        )
    return table
