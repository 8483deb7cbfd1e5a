"""ROC curves of recovered networks against a ground-truth tree.

Every score follows one convention: lower means stronger evidence for an
edge. p-values and e-values both satisfy it, so an edge is predicted when
``score < t`` and the curve is traced by sweeping ``t`` upward.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .classical import EdgeScores
from .exceptions import UndefinedRateError
from .simulate import TreeNetwork


def _trapezoid(x: NDArray[np.float64], y: NDArray[np.float64]) -> float:
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2))


@dataclass(frozen=True)
class RocCurve:
    fpr: NDArray[np.float64]
    tpr: NDArray[np.float64]
    auc: float
    meta: Mapping[str, Any] = field(default_factory=dict)

    def to_csv(self) -> str:
        return _points_csv(self.fpr, self.tpr)

    def to_json(self) -> str:
        return json.dumps({"auc": self.auc, "meta": dict(self.meta)}, indent=1, sort_keys=True) + "\n"


@dataclass(frozen=True)
class AveragedRoc:
    fpr_grid: NDArray[np.float64]
    mean_tpr: NDArray[np.float64]
    mean_auc: float
    curve_count: int

    @property
    def curve_auc(self) -> float:
        """Area under the averaged curve (as opposed to the mean of the areas)."""
        return _trapezoid(self.fpr_grid, self.mean_tpr)

    def to_csv(self) -> str:
        return _points_csv(self.fpr_grid, self.mean_tpr)

    def to_json(self) -> str:
        payload = {"mean_auc": self.mean_auc, "curve_auc": self.curve_auc, "curve_count": self.curve_count}
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def _points_csv(fpr, tpr) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fpr", "tpr"])
    for f, t in zip(fpr, tpr):
        writer.writerow([repr(float(f)), repr(float(t))])
    return buf.getvalue()


def read_points_csv(text: str) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return (np.array([float(r["fpr"]) for r in rows]), np.array([float(r["tpr"]) for r in rows]))


def roc_from_labels(scores: ArrayLike, labels: ArrayLike, meta: Mapping[str, Any] | None = None) -> RocCurve:
    """ROC of binary ``labels`` ranked by ascending ``scores``; tied scores form one step."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=bool).ravel()
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedRateError(f"need positives and negatives, got {n_pos} and {n_neg}")
    order = np.argsort(s, kind="stable")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    fp = np.cumsum(~y)
    last_of_group = np.append(s[1:] != s[:-1], True)
    fpr = np.concatenate([[0.0], fp[last_of_group] / n_neg])
    tpr = np.concatenate([[0.0], tp[last_of_group] / n_pos])
    return RocCurve(fpr, tpr, _trapezoid(fpr, tpr), dict(meta or {}))


def roc_from_scores(
    scores: EdgeScores, truth: TreeNetwork, meta: Mapping[str, Any] | None = None
) -> RocCurve:
    """ROC over all unordered pairs: tree edges are the positives."""
    if scores.p != truth.p:
        raise ValueError(f"scores have p={scores.p}, truth has p={truth.p}")
    iu = np.triu_indices(scores.p, 1)
    return roc_from_labels(scores.score[iu], truth.adjacency[iu], meta)


def interpolate_tpr(curve: RocCurve, grid: ArrayLike) -> NDArray[np.float64]:
    """TPR at each grid FPR, linear between curve points.

    On a vertical segment the top of the segment is used.
    """
    grid = np.asarray(grid, dtype=np.float64)
    fpr, tpr = curve.fpr, curve.tpr
    k = np.searchsorted(fpr, grid, side="right") - 1
    k = np.clip(k, 0, fpr.size - 1)
    nxt = np.minimum(k + 1, fpr.size - 1)
    span = fpr[nxt] - fpr[k]
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(span > 0, (grid - fpr[k]) / span, 0.0)
    return tpr[k] + frac * (tpr[nxt] - tpr[k])


def average_roc(curves: Sequence[RocCurve], grid_size: int = 101) -> AveragedRoc:
    """Vertical average on a fixed FPR grid; ``mean_auc`` averages the member AUCs."""
    if not curves:
        raise ValueError("need at least one curve")
    grid = np.linspace(0.0, 1.0, grid_size)
    tprs = np.array([interpolate_tpr(c, grid) for c in curves])
    mean_tpr = np.maximum.accumulate(tprs.mean(axis=0))
    mean_auc = float(np.mean([c.auc for c in curves]))
    return AveragedRoc(grid, mean_tpr, mean_auc, len(curves))


def _mean_se(values: Sequence[float]) -> tuple[float, float | None]:
    # a single value has no standard error; None keeps the JSON output valid
    arr = np.asarray(values, dtype=np.float64)
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else None
    return float(arr.mean()), se


def compare_engines(results: Mapping[str, Sequence[RocCurve]]) -> dict[str, Any]:
    """Mean AUC per engine and pairwise differences.

    Differences are paired by ``meta["seed"]`` when both engines cover the same
    seeds; otherwise the standard error is that of two independent means.
    """
    engines: dict[str, Any] = {}
    for name, curves in results.items():
        if not curves:
            raise ValueError(f"engine {name!r} has no curves")
        mean, se = _mean_se([c.auc for c in curves])
        engines[name] = {"mean_auc": mean, "se": se, "count": len(curves)}

    differences = []
    for a, b in itertools.combinations(sorted(results), 2):
        ca, cb = results[a], results[b]
        seeds_a = [c.meta.get("seed") for c in ca]
        seeds_b = [c.meta.get("seed") for c in cb]
        paired = (
            None not in seeds_a
            and len(set(seeds_a)) == len(seeds_a)
            and sorted(seeds_a, key=repr) == sorted(seeds_b, key=repr)
        )
        if paired:
            by_seed = {c.meta["seed"]: c.auc for c in cb}
            diffs = [c.auc - by_seed[c.meta["seed"]] for c in ca]
            diff, se = _mean_se(diffs)
        else:
            diff = engines[a]["mean_auc"] - engines[b]["mean_auc"]
            se_a, se_b = engines[a]["se"], engines[b]["se"]
            se = None if se_a is None or se_b is None else math.hypot(se_a, se_b)
        differences.append({"a": a, "b": b, "difference": diff, "se": se, "paired": paired})
    return {"engines": engines, "differences": differences}
