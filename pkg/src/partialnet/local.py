"""Local partial correlation: condition each pair on a small, data-chosen neighborhood.

The neighborhood of ``(i, j)`` is every other variable whose plain correlation
with ``i`` or with ``j`` is significant (Fisher z test with an empty
conditioning set). Candidates are ranked by ``max(|r_ik|, |r_jk|)``, ties
going to the lower index. When there are more candidates than observations,
or more variables than observations overall, only the top ``n // 10`` are
kept. The size is always capped at ``n - 4`` so that the classical test keeps
at least one degree of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import bayes
from .classical import EdgeScores, p_values
from .exceptions import PartialNetError, SampleTooSmallError
from .partial import partial_corr_schur, schur_to_rho
from .stats import Dataset, conditional_block, sample_correlation

Engine = Literal["classical", "bayesian"]

MIN_OBSERVATIONS = 6


@dataclass(frozen=True)
class NeighborhoodSpec:
    i: int
    j: int
    neighbors: tuple[int, ...]
    cap: int

    def __post_init__(self):
        if self.i in self.neighbors or self.j in self.neighbors:
            raise ValueError("neighborhood must exclude the pair itself")
        if len(self.neighbors) > self.cap:
            raise ValueError("neighborhood larger than its cap")


def size_limit(n_candidates: int, n: int, p: int, cap: int | None = None) -> int:
    """Largest conditioning set allowed for a pair with ``n_candidates`` candidates.

    Without ``cap`` the reduction to ``n // 10`` kicks in when the candidates
    or the ``p`` variables outnumber the ``n`` observations; an explicit
    ``cap`` is a hard maximum.
    """
    if cap is None:
        limit = min(n // 10, n_candidates) if (n_candidates > n or p > n) else n_candidates
    else:
        limit = min(cap, n_candidates)
    return max(0, min(limit, n - 4))


def _significance(corr: NDArray[np.float64], n: int, alpha: float) -> NDArray[np.bool_]:
    if n < 4:
        return np.zeros(corr.shape, dtype=bool)
    sig = p_values(corr, n, 0) < alpha
    np.fill_diagonal(sig, False)
    return sig


def _select(
    absr: NDArray[np.float64], sig: NDArray[np.bool_], i: int, j: int, n: int, cap: int | None
) -> NeighborhoodSpec:
    mask = sig[i] | sig[j]
    mask[[i, j]] = False
    cand = np.flatnonzero(mask)
    limit = size_limit(cand.size, n, absr.shape[0], cap)
    relevance = np.maximum(absr[i, cand], absr[j, cand])
    # lexsort: last key is primary -> descending relevance, then ascending index
    order = cand[np.lexsort((cand, -relevance))]
    return NeighborhoodSpec(i, j, tuple(int(k) for k in order[:limit]), limit)


def select_neighborhood(
    corr: ArrayLike, i: int, j: int, n: int, alpha: float = 0.05, cap: int | None = None
) -> NeighborhoodSpec:
    """Conditioning set for the pair ``(i, j)`` from a correlation matrix of ``n`` observations."""
    corr = np.asarray(corr, dtype=np.float64)
    p = corr.shape[0]
    if i == j or not (0 <= i < p and 0 <= j < p):
        raise ValueError(f"invalid pair ({i}, {j}) for p={p}")
    return _select(np.abs(corr), _significance(corr, n, alpha), i, j, n, cap)


def neighborhoods(
    corr: ArrayLike, n: int, alpha: float = 0.05, cap: int | None = None
) -> dict[tuple[int, int], NeighborhoodSpec]:
    """:func:`select_neighborhood` for every pair ``i < j``."""
    corr = np.asarray(corr, dtype=np.float64)
    absr, sig = np.abs(corr), _significance(corr, n, alpha)
    p = corr.shape[0]
    return {(i, j): _select(absr, sig, i, j, n, cap) for i in range(p) for j in range(i + 1, p)}


def local_scores(
    data: Dataset,
    engine: Engine = "classical",
    *,
    alpha: float = 0.05,
    cap: int | None = None,
    pilot: Dataset | None = None,
    rng: np.random.Generator | None = None,
    draws: int = bayes.DEFAULT_DRAWS,
    grid_size: int = bayes.DEFAULT_GRID,
    ridge: bool = False,
) -> EdgeScores:
    """Score every pair on its neighborhood with the classical or Bayesian engine.

    ``alpha`` is the marginal-significance level used to build neighborhoods.
    The Bayesian engine needs ``pilot`` and elicits a separate prior on each
    pair's sub-block ``{i, j} | neighbors``; each pair draws from its own
    stream keyed by ``(seed, i, j)`` with ``seed`` taken once from ``rng``.
    """
    n, p = data.n, data.p
    if n < MIN_OBSERVATIONS:
        raise SampleTooSmallError(f"local mode needs n >= {MIN_OBSERVATIONS}, got n={n}")
    if engine == "bayesian":
        if pilot is None:
            raise ValueError("the Bayesian engine needs a pilot sample")
        if pilot.p != p:
            raise ValueError(f"pilot has p={pilot.p}, study has p={p}")
        rng = np.random.default_rng() if rng is None else rng
        base_seed = int(rng.integers(2**63))
    elif engine != "classical":
        raise ValueError(f"unknown engine {engine!r}")

    corr = sample_correlation(data)
    sig = _significance(corr, n, alpha)
    absr = np.abs(corr)
    rho = np.eye(p)
    score = np.zeros((p, p))
    size = np.zeros((p, p), dtype=np.int64)
    for i in range(p):
        for j in range(i + 1, p):
            spec = _select(absr, sig, i, j, n, cap)
            y = list(spec.neighbors)
            try:
                if engine == "classical":
                    r = partial_corr_schur(corr, i, j, y).rho
                else:
                    r, e = _bayes_pair(pilot, data, i, j, y, base_seed, draws, grid_size, ridge)
                    score[i, j] = score[j, i] = e
            except PartialNetError as exc:
                raise type(exc)(f"pair ({i}, {j}) given {y}: {exc}") from exc
            rho[i, j] = rho[j, i] = r
            size[i, j] = size[j, i] = len(y)
    if engine == "classical":
        score = p_values(rho, n, size)
        np.fill_diagonal(score, 0.0)
        kind = "classical-p"
    else:
        kind = "bayesian-e"
    return EdgeScores(rho, score, size, kind, marginal_significant=sig)


def _bayes_pair(pilot, study, i, j, y, base_seed, draws, grid_size, ridge) -> tuple[float, float]:
    idx = [i, j, *y]
    prior = bayes.elicit_prior(pilot.subset(idx), ridge=ridge)
    posterior = bayes.posterior_update(prior, study.subset(idx))
    cond = list(range(2, len(idx)))
    rho = schur_to_rho(conditional_block(posterior.psi, [0, 1], cond))
    rng = np.random.default_rng([base_seed, i, j])
    samples = bayes.sample_partial_rho(posterior, 0, 1, cond, draws, rng)
    return rho, bayes.pair_e_value(samples, grid_size)
