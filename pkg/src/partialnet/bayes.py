"""Bayesian edge tests under a Normal-Inverse-Wishart model.

The covariance prior is elicited from an independent pilot sample, updated
with the study sample by conjugacy, and the posterior of each partial
correlation is explored by Monte Carlo. The 2x2 Schur complement of a pair
given its conditioning set is the inverse of a 2x2 block of a precision
matrix, so draws are taken on the Wishart (precision) side and need no
inversion. A Gaussian kernel density of the draws gives the FBST e-value
of ``rho = 0``.

Parameterization: ``Sigma ~ IW(k, Psi)`` means ``Sigma^-1 ~ Wishart(k, Psi^-1)``,
so ``E[Sigma] = Psi / (k - p - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .classical import EdgeScores, Mode
from .exceptions import DegenerateError, ElicitationError, SingularMatrixError
from .partial import _check_pair, clamp_rho, precision_to_partial
from .stats import Dataset, cholesky, invert_spd, is_spd, sample_covariance, scatter_matrix

DEFAULT_DRAWS = 1000
DEFAULT_GRID = 512
_MAX_REDRAWS = 10


@dataclass(frozen=True)
class NiwParams:
    """Hyperparameters ``(k, psi, lam, v)`` of ``Sigma ~ IW(k, psi)``, ``mu | Sigma ~ N(lam, Sigma / v)``."""

    k: float
    psi: NDArray[np.float64]
    lam: NDArray[np.float64]
    v: float

    def __post_init__(self):
        psi = np.array(self.psi, dtype=np.float64)
        lam = np.array(self.lam, dtype=np.float64)
        p = psi.shape[0]
        if psi.shape != (p, p) or lam.shape != (p,):
            raise ValueError("psi must be p x p and lam length p")
        if not self.k > p - 1:
            raise ValueError(f"k={self.k} must exceed p - 1 = {p - 1}")
        if not self.v > 0:
            raise ValueError("v must be positive")
        if not np.array_equal(psi, psi.T) or not is_spd(psi):
            raise ValueError("psi must be symmetric positive definite")
        psi.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "lam", lam)

    @property
    def p(self) -> int:
        return self.psi.shape[0]

    def marginal(self, idx: Sequence[int]) -> "NiwParams":
        """Parameters of the sub-vector ``idx``: ``Sigma[idx, idx] ~ IW(k - p + q, psi[idx, idx])``."""
        idx = list(idx)
        q = len(idx)
        return NiwParams(self.k - self.p + q, self.psi[np.ix_(idx, idx)], self.lam[idx], self.v)


class IWMoments(NamedTuple):
    mean: NDArray[np.float64]
    var_diag: NDArray[np.float64]
    var_offdiag: NDArray[np.float64]


@dataclass(frozen=True)
class DensityGrid:
    points: NDArray[np.float64]
    heights: NDArray[np.float64]
    bandwidth: float

    @property
    def width(self) -> float:
        return float(self.points[1] - self.points[0])

    def integral(self) -> float:
        """Left-rectangle rule over the grid cells."""
        return float(self.heights[:-1].sum() * self.width)


@dataclass(frozen=True)
class EValueReport:
    i: int
    j: int
    samples: NDArray[np.float64]
    density: DensityGrid
    f0: float
    e_value: float


def elicit_prior(pilot: Dataset, *, ridge: bool = False) -> NiwParams:
    """Prior centred on the pilot's ML covariance with the smallest ``k`` giving a finite mean.

    ``k = p + 3`` and ``psi = (k - p - 1) * Cov(pilot) = 2 * Cov(pilot)``, so
    ``E[Sigma]`` equals the pilot covariance. ``lam`` is the pilot mean, ``v = 1``.
    With ``ridge=True`` a non-SPD pilot covariance gets ``1e-6 * mean(diag)``
    added to its diagonal instead of raising.
    """
    p = pilot.p
    cov = sample_covariance(pilot, "n")
    if not is_spd(cov):
        if not ridge:
            raise ElicitationError(
                f"pilot covariance is not positive definite (n={pilot.n}, p={p}); "
                "pass ridge=True or use local mode"
            )
        cov = cov + 1e-6 * np.mean(np.diag(cov)) * np.eye(p)
        if not is_spd(cov):
            raise ElicitationError("pilot covariance is not positive definite even after ridge")
    k = p + 3.0
    return NiwParams(k, (k - p - 1) * cov, pilot.values.mean(axis=0), 1.0)


def iw_moments(params: NiwParams) -> IWMoments:
    """Closed-form mean and element variances of ``Sigma ~ IW(k, psi)``.

    Entries that do not exist (mean needs ``k - p > 1``, variances ``k - p > 3``)
    come back as ``inf``.
    """
    p, psi = params.p, params.psi
    d = params.k - p
    if d > 1:
        mean = psi / (d - 1)
    else:
        mean = np.full((p, p), np.inf)
    if d > 3:
        q = np.diag(psi)
        var_diag = 2 * q**2 / ((d - 1) ** 2 * (d - 3))
        var_off = (np.outer(q, q) + (d + 1) / (d - 1) * psi**2) / (d * (d - 1) * (d - 3))
    else:
        var_diag = np.full(p, np.inf)
        var_off = np.full((p, p), np.inf)
    return IWMoments(mean, var_diag, var_off)


def posterior_update(prior: NiwParams, study: Dataset | ArrayLike) -> NiwParams:
    """Conjugate NIW update. ``study`` may be a raw ``(n, p)`` array, including ``n = 0``."""
    x = study.values if isinstance(study, Dataset) else np.asarray(study, dtype=np.float64)
    x = x.reshape(-1, prior.p)
    n = x.shape[0]
    if n == 0:
        return prior
    xbar = x.mean(axis=0)
    v_post = prior.v + n
    diff = xbar - prior.lam
    psi = prior.psi + scatter_matrix(x) + (prior.v * n / v_post) * np.outer(diff, diff)
    psi = (psi + psi.T) / 2
    lam = (prior.v * prior.lam + n * xbar) / v_post
    return NiwParams(prior.k + n, psi, lam, v_post)


def _bartlett(p: int, k: float, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Lower-triangular Bartlett factors ``A`` with ``A A^T ~ Wishart(k, I)``."""
    a = np.tril(rng.standard_normal((count, p, p)), -1)
    diag = np.sqrt(rng.chisquare(k - np.arange(p), size=(count, p)))
    idx = np.arange(p)
    a[:, idx, idx] = diag
    return a


def sample_precision(params: NiwParams, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """``count`` draws of ``Sigma^-1 ~ Wishart(k, psi^-1)``, shape ``(count, p, p)``."""
    p = params.p
    g = np.linalg.inv(cholesky(params.psi))  # g^T g = psi^-1
    b = np.swapaxes(_bartlett(p, params.k, count, rng), 1, 2) @ g
    omega = np.swapaxes(b, 1, 2) @ b
    return (omega + np.swapaxes(omega, 1, 2)) / 2


def sample_iw(params: NiwParams, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """``count`` draws of ``Sigma ~ IW(k, psi)`` via Bartlett, shape ``(count, p, p)``.

    Each draw is ``L (A A^T)^-1 L^T`` with ``L`` the Cholesky factor of ``psi``.
    """
    p = params.p
    chol = cholesky(params.psi)
    a_inv = np.linalg.inv(_bartlett(p, params.k, count, rng))
    u = chol @ np.swapaxes(a_inv, 1, 2)
    sigma = u @ np.swapaxes(u, 1, 2)
    return (sigma + np.swapaxes(sigma, 1, 2)) / 2


def _pair_precision_rho(params: NiwParams, count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """``-w01 / sqrt(w00 w11)`` for ``count`` precision draws; NaN where degenerate.

    Only columns 0 and 1 of ``M = A^T G`` are formed, where ``M^T M`` is a draw
    of ``Sigma^-1``, so no per-draw inversion is needed.
    """
    g = np.linalg.inv(cholesky(params.psi))
    m = np.swapaxes(_bartlett(params.p, params.k, count, rng), 1, 2) @ g[:, :2]
    w00 = np.einsum("kr,kr->k", m[:, :, 0], m[:, :, 0])
    w11 = np.einsum("kr,kr->k", m[:, :, 1], m[:, :, 1])
    w01 = np.einsum("kr,kr->k", m[:, :, 0], m[:, :, 1])
    with np.errstate(all="ignore"):
        rho = -w01 / np.sqrt(w00 * w11)
    rho[~np.isfinite(rho) | (np.abs(rho) > 1 + 1e-12)] = np.nan
    return rho


def sample_partial_rho(
    posterior: NiwParams,
    i: int,
    j: int,
    y: Sequence[int],
    count: int = DEFAULT_DRAWS,
    rng: np.random.Generator | None = None,
) -> NDArray[np.float64]:
    """Posterior draws of the partial correlation of ``(i, j)`` given ``y``.

    The marginal of ``Sigma`` on ``{i, j} | y`` is again inverse-Wishart. The
    pair's partial covariance given ``y`` is the inverse of the 2x2 block of
    that marginal's precision, so each draw is read off a Wishart precision
    draw. Degenerate draws are redrawn up to ten times before giving up.
    """
    rng = np.random.default_rng() if rng is None else rng
    y = _check_pair(posterior.p, i, j, y)
    sub = posterior.marginal([i, j, *y])
    out = np.full(count, np.nan)
    pending = np.arange(count)
    for _ in range(1 + _MAX_REDRAWS):
        out[pending] = _pair_precision_rho(sub, pending.size, rng)
        pending = np.flatnonzero(np.isnan(out))
        if pending.size == 0:
            return clamp_rho(out)
    raise DegenerateError(f"pair ({i}, {j}): {pending.size} draws stayed degenerate after redraws")


def sample_full_partial_rho(
    posterior: NiwParams, count: int = DEFAULT_DRAWS, rng: np.random.Generator | None = None
) -> NDArray[np.float64]:
    """Posterior draws of every full-order partial correlation, shape ``(count, p, p)``.

    The Schur complement of a pair given all other variables is the inverse of
    the pair's 2x2 block of ``Sigma^-1``, so the draws are taken on the
    precision scale directly and shared by all pairs.
    """
    rng = np.random.default_rng() if rng is None else rng
    omega = sample_precision(posterior, count, rng)
    d = np.sqrt(np.einsum("kii->ki", omega))
    rho = -omega / (d[:, :, None] * d[:, None, :])
    idx = np.arange(posterior.p)
    rho[:, idx, idx] = 1.0
    return clamp_rho(rho)


def silverman_bandwidth(samples: ArrayLike) -> float:
    x = np.asarray(samples, dtype=np.float64)
    sd = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    lo = min(sd, (q75 - q25) / 1.34)
    if lo <= 0:
        lo = sd or abs(x[0]) or 1.0
    return 0.9 * lo * x.size ** (-0.2)


def kde(samples: ArrayLike, grid_size: int = DEFAULT_GRID) -> DensityGrid:
    """Gaussian kernel density on ``grid_size`` points spanning ``[min - 3h, max + 3h]``.

    Same scheme as R's ``density()`` defaults: Silverman bandwidth, linear
    binning onto a padded power-of-two grid extending ``4h`` past the output
    span, circular FFT convolution with the kernel, then linear interpolation
    onto the output grid. Negative rounding residue is clipped to zero.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 2 or np.ptp(x) == 0:
        raise DegenerateError("kernel density needs at least two distinct samples")
    h = silverman_bandwidth(x)
    start, stop = x.min() - 3 * h, x.max() + 3 * h
    lo, up = start - 4 * h, stop + 4 * h
    m = 1 << max(9, int(np.ceil(np.log2(grid_size))))
    delta = (up - lo) / (m - 1)

    pos = (x - lo) / delta
    left = np.floor(pos).astype(np.int64)
    frac = pos - left
    binned = np.zeros(2 * m)
    np.add.at(binned, left, 1.0 - frac)
    np.add.at(binned, left + 1, frac)
    binned /= x.size

    offsets = np.arange(2 * m) * delta
    offsets[m + 1 :] -= 2 * m * delta  # wrap to negative lags
    kernel = np.exp(-0.5 * (offsets / h) ** 2) / (h * np.sqrt(2 * np.pi))
    conv = np.fft.irfft(np.fft.rfft(binned) * np.fft.rfft(kernel), 2 * m)
    dens = np.maximum(conv[:m], 0.0)

    grid = np.linspace(start, stop, grid_size)
    heights = np.interp(grid, lo + np.arange(m) * delta, dens)
    return DensityGrid(grid, heights, float(h))


def fbst_e_value(density: DensityGrid, null_point: float = 0.0) -> float:
    """FBST evidence for the sharp hypothesis ``theta = null_point``.

    The null is clamped into the grid span. The tangent set is every grid cell
    whose left-node height exceeds the density at the null; the e-value is one
    minus its rectangle-rule mass. Small values are evidence against the null.
    """
    pts, hts = density.points, density.heights
    x0 = min(max(null_point, pts[0]), pts[-1])
    f0 = float(np.interp(x0, pts, hts))
    cells = hts[:-1]
    mass = cells[cells > f0].sum() * density.width
    return float(min(1.0, max(0.0, 1.0 - mass)))


def e_value_report(
    samples: ArrayLike, i: int = 0, j: int = 1, null_point: float = 0.0, grid_size: int = DEFAULT_GRID
) -> EValueReport:
    samples = np.asarray(samples, dtype=np.float64)
    density = kde(samples, grid_size)
    x0 = min(max(null_point, density.points[0]), density.points[-1])
    f0 = float(np.interp(x0, density.points, density.heights))
    return EValueReport(i, j, samples, density, f0, fbst_e_value(density, null_point))


def pair_e_value(samples: NDArray[np.float64], grid_size: int) -> float:
    if np.ptp(samples) == 0:
        # every draw identical: all mass at one point
        return 1.0 if samples[0] == 0 else 0.0
    return fbst_e_value(kde(samples, grid_size))


def full_scores(
    pilot: Dataset,
    study: Dataset,
    rng: np.random.Generator,
    *,
    draws: int = DEFAULT_DRAWS,
    grid_size: int = DEFAULT_GRID,
    ridge: bool = False,
) -> EdgeScores:
    """Bayesian scores with every remaining variable in the conditioning set."""
    if pilot.p != study.p:
        raise ValueError(f"pilot has p={pilot.p}, study has p={study.p}")
    p = study.p
    posterior = posterior_update(elicit_prior(pilot, ridge=ridge), study)
    try:
        rho = precision_to_partial(invert_spd(posterior.psi))
    except SingularMatrixError as exc:  # pragma: no cover - psi is SPD by construction
        raise DegenerateError("posterior scale matrix is singular") from exc
    draws_rho = sample_full_partial_rho(posterior, draws, rng)
    score = np.zeros((p, p))
    for i in range(p):
        for j in range(i + 1, p):
            score[i, j] = score[j, i] = pair_e_value(draws_rho[:, i, j], grid_size)
    size = np.full((p, p), p - 2, dtype=np.int64)
    np.fill_diagonal(size, 0)
    return EdgeScores(rho, score, size, "bayesian-e")


def bayesian_network(
    pilot: Dataset,
    study: Dataset,
    threshold: float = 0.05,
    mode: Mode = "full",
    rng: np.random.Generator | None = None,
    *,
    draws: int = DEFAULT_DRAWS,
    grid_size: int = DEFAULT_GRID,
    ridge: bool = False,
    neighborhood_alpha: float = 0.05,
    cap: int | None = None,
) -> tuple[EdgeScores, NDArray[np.bool_]]:
    """Score every pair by its FBST e-value and declare edges where ``e < threshold``.

    ``rho`` holds point estimates from the posterior mean of ``Sigma``.
    """
    rng = np.random.default_rng() if rng is None else rng
    if mode == "full":
        scores = full_scores(pilot, study, rng, draws=draws, grid_size=grid_size, ridge=ridge)
    elif mode == "local":
        from .local import local_scores

        scores = local_scores(
            study,
            "bayesian",
            alpha=neighborhood_alpha,
            cap=cap,
            pilot=pilot,
            rng=rng,
            draws=draws,
            grid_size=grid_size,
            ridge=ridge,
        )
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return scores, scores.adjacency(threshold)
