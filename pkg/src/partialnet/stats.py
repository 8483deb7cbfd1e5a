"""Dense symmetric-matrix primitives, sample statistics and dataset I/O.

Matrices are plain ``numpy`` arrays. Anything called a symmetric matrix here
is a square ``float64`` array with ``m == m.T``; functions that produce one
symmetrize their output so the invariant holds exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import solve_triangular

from .exceptions import DatasetError, DegenerateColumnError, SingularMatrixError

#: Cholesky pivots below this fraction of the largest diagonal entry count as singular.
SINGULAR_PIVOT_RTOL = 1e-12

Denominator = Literal["n", "n-1"]


@dataclass(frozen=True)
class Dataset:
    """An ``n x p`` observation matrix with one label per column."""

    values: NDArray[np.float64]
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DatasetError(f"expected a 2-d observation matrix, got shape {values.shape}")
        n, p = values.shape
        if n < 2 or p < 2:
            raise DatasetError(f"need n >= 2 and p >= 2, got n={n}, p={p}")
        if not np.all(np.isfinite(values)):
            raise DatasetError("observation matrix contains non-finite entries")
        names = tuple(self.names) if self.names else default_names(p)
        if len(names) != p:
            raise DatasetError(f"{len(names)} names for {p} columns")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def subset(self, columns: Sequence[int]) -> "Dataset":
        """Dataset restricted to ``columns``, in the given order."""
        idx = list(columns)
        return Dataset(self.values[:, idx], tuple(self.names[k] for k in idx))


def default_names(p: int) -> tuple[str, ...]:
    return tuple(f"X{k + 1}" for k in range(p))


def _as_values(data: Dataset | ArrayLike) -> NDArray[np.float64]:
    if isinstance(data, Dataset):
        return data.values
    return np.asarray(data, dtype=np.float64)


def sample_mean(data: Dataset) -> NDArray[np.float64]:
    return _as_values(data).mean(axis=0)


def scatter_matrix(data: Dataset | ArrayLike) -> NDArray[np.float64]:
    """Centered cross-product matrix ``sum (x - xbar)(x - xbar)^T``."""
    x = _as_values(data)
    centered = x - x.mean(axis=0)
    s = centered.T @ centered
    return (s + s.T) / 2


def sample_covariance(data: Dataset, denominator: Denominator = "n-1") -> NDArray[np.float64]:
    """Sample covariance with ML (``"n"``) or unbiased (``"n-1"``) normalization."""
    x = _as_values(data)
    n = x.shape[0]
    if n < 2:
        raise DatasetError(f"covariance needs n >= 2, got n={n}")
    if denominator == "n":
        d = n
    elif denominator == "n-1":
        d = n - 1
    else:
        raise ValueError(f"denominator must be 'n' or 'n-1', got {denominator!r}")
    return scatter_matrix(x) / d


def cov_to_corr(cov: ArrayLike, names: Sequence[str] | None = None) -> NDArray[np.float64]:
    """Normalize a covariance matrix to unit diagonal: ``D^-1/2 cov D^-1/2``."""
    cov = np.asarray(cov, dtype=np.float64)
    d = np.diag(cov)
    bad = np.flatnonzero(d <= 0)
    if bad.size:
        k = int(bad[0])
        raise DegenerateColumnError(names[k] if names is not None else f"#{k}")
    s = 1.0 / np.sqrt(d)
    corr = cov * s[:, None] * s[None, :]
    corr = np.clip((corr + corr.T) / 2, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def sample_correlation(data: Dataset) -> NDArray[np.float64]:
    names = data.names if isinstance(data, Dataset) else None
    return cov_to_corr(sample_covariance(data, "n"), names)


def cholesky(m: ArrayLike) -> NDArray[np.float64]:
    """Lower Cholesky factor, rejecting matrices that are singular to working precision.

    Raises
    ------
    SingularMatrixError
        If factorization fails or any squared pivot falls below
        ``SINGULAR_PIVOT_RTOL`` times the largest diagonal entry.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.size and np.max(np.abs(m - m.T)) > 1e-8 * max(np.max(np.abs(m)), 1.0):
        raise ValueError("matrix is not symmetric")
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("matrix is not positive definite") from exc
    scale = np.max(np.diag(m)) if m.size else 0.0
    pivots = np.diag(chol) ** 2
    if m.size and (scale <= 0 or np.min(pivots) < SINGULAR_PIVOT_RTOL * scale):
        raise SingularMatrixError(
            f"matrix is singular to working precision (min pivot {np.min(pivots):.3g})"
        )
    return chol


def is_spd(m: ArrayLike) -> bool:
    try:
        cholesky(m)
    except SingularMatrixError:
        return False
    return True


def invert_spd(m: ArrayLike) -> NDArray[np.float64]:
    """Inverse of a symmetric positive definite matrix through its Cholesky factor."""
    chol = cholesky(m)
    linv = solve_triangular(chol, np.eye(chol.shape[0]), lower=True)
    inv = linv.T @ linv
    return (inv + inv.T) / 2


def schur_complement(m: ArrayLike, block: Sequence[int]) -> NDArray[np.float64]:
    """Partial covariance of ``block`` given every other index.

    Returns ``m[A, A] - m[A, B] m[B, B]^-1 m[B, A]`` where ``B`` is the
    complement of ``A = block``. An empty complement returns ``m[A, A]``.
    """
    m = np.asarray(m, dtype=np.float64)
    a = list(block)
    a_set = set(a)
    if len(a_set) != len(a):
        raise ValueError("block indices must be distinct")
    b = [k for k in range(m.shape[0]) if k not in a_set]
    return conditional_block(m, a, b)


def conditional_block(m: ArrayLike, a: Sequence[int], b: Sequence[int]) -> NDArray[np.float64]:
    """``m[A, A] - m[A, B] m[B, B]^-1 m[B, A]`` for explicit index lists ``a`` and ``b``.

    Indices outside ``a`` and ``b`` are marginalized out (ignored).
    """
    m = np.asarray(m, dtype=np.float64)
    a = list(a)
    b = list(b)
    m_aa = m[np.ix_(a, a)]
    if not b:
        return m_aa.copy()
    try:
        chol = cholesky(m[np.ix_(b, b)])
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"conditioning block is singular: {exc}") from exc
    w = solve_triangular(chol, m[np.ix_(b, a)], lower=True)
    s = m_aa - w.T @ w
    return (s + s.T) / 2


def read_dataset_csv(path: str | Path) -> Dataset:
    """Read a dataset CSV: a header row of variable names, then one row per observation."""
    with open(path, newline="") as fh:
        return _parse_dataset(fh, str(path))


def parse_dataset_csv(text: str) -> Dataset:
    return _parse_dataset(io.StringIO(text), "<string>")


def _parse_dataset(fh, source: str) -> Dataset:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError(f"{source}: empty file") from None
    names = tuple(h.strip() for h in header)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(names):
            raise DatasetError(f"{source}:{lineno}: expected {len(names)} fields, got {len(row)}")
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            raise DatasetError(f"{source}:{lineno}: missing or non-numeric value") from None
    return Dataset(np.array(rows, dtype=np.float64).reshape(len(rows), len(names)), names)


def format_dataset_csv(data: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(data.names)
    for row in data.values:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_dataset_csv(data: Dataset, path: str | Path) -> None:
    Path(path).write_text(format_dataset_csv(data))
