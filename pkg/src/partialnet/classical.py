"""Classical edge tests: Fisher z-transform of partial correlations.

An edge ``(i, j)`` is declared when the two-sided p-value of

    sqrt(n - |Y| - 3) * |atanh(rho_ij.Y)|

under a standard normal reference falls below ``alpha``. That is the same
decision as comparing the statistic with ``Phi^-1(1 - alpha/2)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import ndtr

from .exceptions import BoundaryError, SampleTooSmallError, SingularMatrixError
from .partial import partial_corr_inverse
from .stats import Dataset, sample_correlation

Mode = Literal["full", "local"]
ScoreKind = Literal["classical-p", "bayesian-e"]


@dataclass(frozen=True)
class EdgeScores:
    """Per-pair estimates and significance scores; lower score means stronger edge.

    ``marginal_significant`` is only set by local mode: whether the pair's
    plain correlation was itself significant when the neighborhoods were chosen.
    """

    rho: NDArray[np.float64]
    score: NDArray[np.float64]
    conditioning_size: NDArray[np.int64]
    kind: ScoreKind
    marginal_significant: NDArray[np.bool_] | None = field(default=None, compare=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=np.float64)
        score = np.array(self.score, dtype=np.float64)
        size = np.array(self.conditioning_size, dtype=np.int64)
        p = rho.shape[0]
        if rho.shape != (p, p) or score.shape != (p, p) or size.shape != (p, p):
            raise ValueError("rho, score and conditioning_size must be p x p")
        off = ~np.eye(p, dtype=bool)
        if not (np.array_equal(rho, rho.T) and np.array_equal(score, score.T)):
            raise ValueError("rho and score must be symmetric")
        if np.any((score[off] < 0) | (score[off] > 1)):
            raise ValueError("scores must lie in [0, 1]")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "score", score)
        object.__setattr__(self, "conditioning_size", size)

    @property
    def p(self) -> int:
        return self.rho.shape[0]

    def pairs(self):
        """Yield ``(i, j, rho, score, conditioning_size)`` for ``i < j``."""
        p = self.p
        for i in range(p):
            for j in range(i + 1, p):
                yield i, j, self.rho[i, j], self.score[i, j], int(self.conditioning_size[i, j])

    def adjacency(self, threshold: float) -> NDArray[np.bool_]:
        adj = self.score < threshold
        np.fill_diagonal(adj, False)
        return adj

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["i", "j", "rho", "score", "conditioning_size"])
        for i, j, rho, score, size in self.pairs():
            writer.writerow([i, j, repr(float(rho)), repr(float(score)), size])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: ScoreKind) -> "EdgeScores":
        rows = list(csv.DictReader(io.StringIO(text)))
        m = len(rows)
        p = int(round((1 + math.sqrt(1 + 8 * m)) / 2))
        if p * (p - 1) // 2 != m:
            raise ValueError(f"{m} rows is not p(p-1)/2 for any p")
        rho, score = np.eye(p), np.zeros((p, p))
        size = np.zeros((p, p), dtype=np.int64)
        for row in rows:
            i, j = int(row["i"]), int(row["j"])
            rho[i, j] = rho[j, i] = float(row["rho"])
            score[i, j] = score[j, i] = float(row["score"])
            size[i, j] = size[j, i] = int(row["conditioning_size"])
        return cls(rho, score, size, kind)

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def fisher_z(rho: float) -> float:
    if not abs(rho) < 1:
        raise BoundaryError(f"Fisher z is infinite at rho={rho}")
    return math.atanh(rho)


def _dof(n: int, y_size) -> NDArray[np.float64]:
    dof = n - np.asarray(y_size) - 3
    if np.any(dof < 1):
        raise SampleTooSmallError(
            f"n - |Y| - 3 must be >= 1 (n={n}, largest |Y|={int(np.max(y_size))})"
        )
    return dof.astype(np.float64)


def edge_p_value(rho: float, n: int, y_size: int) -> float:
    """Two-sided p-value of the Fisher z test of zero partial correlation."""
    dof = _dof(n, y_size)
    stat = math.sqrt(dof) * abs(fisher_z(rho))
    return float(min(1.0, 2.0 * ndtr(-stat)))


def p_values(rho: ArrayLike, n: int, y_size: ArrayLike) -> NDArray[np.float64]:
    """Vectorized :func:`edge_p_value`; ``|rho| >= 1`` gives a p-value of 0."""
    rho = np.asarray(rho, dtype=np.float64)
    dof = _dof(n, y_size)
    with np.errstate(divide="ignore"):
        z = np.arctanh(np.clip(np.abs(rho), 0.0, 1.0))
    return np.minimum(1.0, 2.0 * ndtr(-np.sqrt(dof) * z))


def full_scores(data: Dataset) -> EdgeScores:
    """Classical scores with every remaining variable in the conditioning set."""
    p = data.p
    try:
        rho = partial_corr_inverse(sample_correlation(data))
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"sample correlation is singular (n={data.n}, p={p}); use mode='local'"
        ) from exc
    size = np.full((p, p), p - 2, dtype=np.int64)
    np.fill_diagonal(size, 0)
    score = p_values(rho, data.n, p - 2)
    np.fill_diagonal(score, 0.0)
    return EdgeScores(rho, score, size, "classical-p")


def classical_network(
    data: Dataset,
    alpha: float = 0.05,
    mode: Mode = "full",
    *,
    neighborhood_alpha: float = 0.05,
    cap: int | None = None,
) -> tuple[EdgeScores, NDArray[np.bool_]]:
    """Test every pair and threshold the p-values at ``alpha``.

    ``mode="local"`` conditions each pair on its selected neighborhood
    (see :mod:`partialnet.local`) and works when ``n < p``.
    """
    if mode == "full":
        scores = full_scores(data)
    elif mode == "local":
        from .local import local_scores

        scores = local_scores(data, "classical", alpha=neighborhood_alpha, cap=cap)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return scores, scores.adjacency(alpha)
