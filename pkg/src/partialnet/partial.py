"""Partial correlation of a variable pair given a conditioning set.

Three routes are provided and agree to rounding error:

* :func:`partial_corr_regression` correlates least-squares residuals;
* :func:`partial_corr_inverse` normalizes the inverse correlation matrix;
* :func:`partial_corr_schur` normalizes a 2x2 Schur complement of the covariance.

The inverse route takes a *correlation* matrix and the Schur route a
*covariance* matrix; :func:`~partialnet.stats.cov_to_corr` converts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import CollinearityError, DegenerateError
from .stats import Dataset, conditional_block, invert_spd

#: Rounding slack tolerated beyond |rho| = 1 before clamping turns into an error.
RHO_SLACK = 1e-12
_RANK_RTOL = 1e-10

Method = Literal["regression", "inverse", "partial-covariance"]


@dataclass(frozen=True)
class PartialCorrEstimate:
    i: int
    j: int
    conditioning: tuple[int, ...]
    rho: float
    method: Method

    def __post_init__(self):
        if self.i == self.j or self.i in self.conditioning or self.j in self.conditioning:
            raise ValueError("pair indices must differ and lie outside the conditioning set")


def clamp_rho(rho):
    """Clamp rounding overshoot past +-1; raise if it exceeds ``RHO_SLACK``."""
    arr = np.asarray(rho, dtype=np.float64)
    if np.any(np.abs(arr) > 1 + RHO_SLACK) or np.any(np.isnan(arr)):
        raise DegenerateError(f"partial correlation out of range: {arr}")
    out = np.clip(arr, -1.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _check_pair(p: int, i: int, j: int, y: Sequence[int]) -> tuple[int, ...]:
    y = tuple(int(k) for k in y)
    if not (0 <= i < p and 0 <= j < p) or any(not 0 <= k < p for k in y):
        raise IndexError(f"index out of range for p={p}")
    if i == j or i in y or j in y or len(set(y)) != len(y):
        raise ValueError("pair indices must differ and lie outside a duplicate-free conditioning set")
    return y


def partial_corr_regression(data: Dataset, i: int, j: int, y: Sequence[int]) -> PartialCorrEstimate:
    """Correlation between the residuals of columns ``i`` and ``j`` regressed on ``[1, y]``."""
    y = _check_pair(data.p, i, j, y)
    x = data.values
    n = data.n
    if n <= len(y) + 2:
        raise CollinearityError(f"n={n} too small for {len(y)} conditioning columns")
    design = np.column_stack([np.ones(n), x[:, list(y)]])
    norms = np.linalg.norm(design, axis=0)
    if np.any(norms == 0):
        raise CollinearityError(f"conditioning columns {list(y)} include an all-zero column")
    q, r = np.linalg.qr(design / norms)
    if np.abs(np.diag(r)).min() <= _RANK_RTOL:
        raise CollinearityError(f"conditioning columns {list(y)} are collinear")
    targets = x[:, [i, j]]
    resid = targets - q @ (q.T @ targets)
    ss = np.einsum("ij,ij->j", resid, resid)
    centered = targets - targets.mean(0)
    total = np.einsum("ij,ij->j", centered, centered)
    if np.any((total == 0) | (ss <= 1e-20 * total)):
        raise DegenerateError(f"zero residual variance for pair ({i}, {j})")
    rho = clamp_rho(resid[:, 0] @ resid[:, 1] / np.sqrt(ss[0] * ss[1]))
    return PartialCorrEstimate(i, j, y, rho, "regression")


def precision_to_partial(precision: ArrayLike) -> NDArray[np.float64]:
    """``-P_ij / sqrt(P_ii P_jj)`` off the diagonal, ones on it."""
    prec = np.asarray(precision, dtype=np.float64)
    d = np.diag(prec)
    if np.any(d <= 0):
        raise DegenerateError("precision matrix has a non-positive diagonal entry")
    s = 1.0 / np.sqrt(d)
    out = -prec * s[:, None] * s[None, :]
    out = (out + out.T) / 2
    np.fill_diagonal(out, 1.0)
    return clamp_rho(out)


def partial_corr_inverse(corr: ArrayLike) -> NDArray[np.float64]:
    """Full-order partial correlations of every pair from ``corr^-1``.

    Raises :class:`~partialnet.exceptions.SingularMatrixError` when ``corr``
    is singular, which is always the case for fewer observations than variables.
    """
    return precision_to_partial(invert_spd(corr))


def partial_corr_schur(cov: ArrayLike, i: int, j: int, y: Sequence[int]) -> PartialCorrEstimate:
    cov = np.asarray(cov, dtype=np.float64)
    y = _check_pair(cov.shape[0], i, j, y)
    s = conditional_block(cov, [i, j], y)
    return PartialCorrEstimate(i, j, y, schur_to_rho(s), "partial-covariance")


def schur_to_rho(s: ArrayLike) -> float:
    s = np.asarray(s, dtype=np.float64)
    if s[0, 0] <= 0 or s[1, 1] <= 0:
        raise DegenerateError("non-positive partial variance")
    return clamp_rho(s[0, 1] / np.sqrt(s[0, 0] * s[1, 1]))


def all_pairs_regression(data: Dataset) -> NDArray[np.float64]:
    """Full-order partial correlation matrix by the regression route, pair by pair."""
    p = data.p
    out = np.eye(p)
    for i in range(p):
        for j in range(i + 1, p):
            rest = [k for k in range(p) if k != i and k != j]
            out[i, j] = out[j, i] = partial_corr_regression(data, i, j, rest).rho
    return out


def all_pairs_schur(cov: ArrayLike) -> NDArray[np.float64]:
    """Full-order partial correlation matrix by the Schur route, pair by pair."""
    cov = np.asarray(cov, dtype=np.float64)
    p = cov.shape[0]
    out = np.eye(p)
    for i in range(p):
        for j in range(i + 1, p):
            rest = [k for k in range(p) if k != i and k != j]
            out[i, j] = out[j, i] = partial_corr_schur(cov, i, j, rest).rho
    return out
