"""Ground-truth tree networks and Gaussian data generated over them.

Topologies grow generation by generation from a single root. Each vertex of
the generation being expanded draws ``ceil(LogNormal(mu, sigma))`` children;
the last generation is truncated so that exactly ``p`` vertices are placed.
Vertex indices follow breadth-first order, so every parent precedes its
children. Each non-root vertex ``j`` is ``coeff[j] * parent + noise``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .stats import Dataset, default_names

_MAX_REDRAWS = 1000


@dataclass(frozen=True)
class SimConfig:
    p: int
    n: int
    offspring_log_mean: float = 1.0
    offspring_log_sd: float = 1.0
    coeff_low: float = 0.7
    coeff_high: float = 2.0
    positive_sign_prob: float = 2.0 / 3.0
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not 0 < self.coeff_low < self.coeff_high:
            raise ValueError("need 0 < coeff_low < coeff_high")
        if not 0 < self.positive_sign_prob < 1:
            raise ValueError("positive_sign_prob must lie in (0, 1)")
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")
        if self.offspring_log_sd < 0:
            raise ValueError("offspring_log_sd must be non-negative")


@dataclass(frozen=True)
class TreeNetwork:
    """Rooted tree on vertices ``0..p-1``; vertex 0 is the root.

    ``parent[0]`` is ``-1`` and ``coeff[0]`` is ``0.0``; both are placeholders.
    """

    parent: NDArray[np.int64]
    coeff: NDArray[np.float64]
    adjacency: NDArray[np.bool_] = field(init=False, repr=False)

    def __post_init__(self):
        parent = np.array(self.parent, dtype=np.int64)
        coeff = np.array(self.coeff, dtype=np.float64)
        p = parent.shape[0]
        if p < 2 or coeff.shape != (p,):
            raise ValueError("parent and coeff must be length-p vectors with p >= 2")
        if parent[0] != -1:
            raise ValueError("vertex 0 must be the root")
        # parents precede children, which also rules out cycles
        if np.any(parent[1:] < 0) or np.any(parent[1:] >= np.arange(1, p)):
            raise ValueError("every non-root vertex needs a parent with a smaller index")
        adjacency = np.zeros((p, p), dtype=bool)
        child = np.arange(1, p)
        adjacency[child, parent[1:]] = True
        adjacency[parent[1:], child] = True
        for arr in (parent, coeff, adjacency):
            arr.setflags(write=False)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "adjacency", adjacency)

    @property
    def p(self) -> int:
        return self.parent.shape[0]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(int(self.parent[j]), j) for j in range(1, self.p)]

    def depth(self) -> NDArray[np.int64]:
        d = np.zeros(self.p, dtype=np.int64)
        for j in range(1, self.p):
            d[j] = d[self.parent[j]] + 1
        return d

    def covariance(self, noise_sd: float = 1.0) -> NDArray[np.float64]:
        """Exact covariance of the generative model (root variance 1)."""
        # X = B X + e  =>  X = (I - B)^-1 e
        p = self.p
        b = np.zeros((p, p))
        b[np.arange(1, p), self.parent[1:]] = self.coeff[1:]
        noise = np.full(p, noise_sd**2)
        noise[0] = 1.0
        t = np.linalg.inv(np.eye(p) - b)
        return t @ np.diag(noise) @ t.T

    def to_json(self) -> str:
        payload = {
            "p": self.p,
            "parents": [None] + [int(v) for v in self.parent[1:]],
            "coeffs": [None] + [float(v) for v in self.coeff[1:]],
        }
        return json.dumps(payload, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TreeNetwork":
        payload = json.loads(text)
        parents = [-1 if v is None else int(v) for v in payload["parents"]]
        coeffs = [0.0 if v is None else float(v) for v in payload["coeffs"]]
        tree = cls(np.array(parents), np.array(coeffs))
        if tree.p != int(payload["p"]):
            raise ValueError(f"declared p={payload['p']} but {tree.p} parents listed")
        return tree


def _draw_offspring(config: SimConfig, rng: np.random.Generator, size: int) -> NDArray[np.int64]:
    draws = rng.lognormal(config.offspring_log_mean, config.offspring_log_sd, size=size)
    return np.ceil(draws).astype(np.int64)


def generate_topology(config: SimConfig, rng: np.random.Generator) -> TreeNetwork:
    """Grow a random tree with ``config.p`` vertices and draw its edge coefficients."""
    p = config.p
    parent = [-1]
    generation = [0]
    while len(parent) < p:
        for _ in range(_MAX_REDRAWS):
            counts = _draw_offspring(config, rng, len(generation))
            # the generation as a whole must leave at least one descendant
            if counts.sum() >= 1:
                break
        else:  # pragma: no cover - only reachable with absurd lognormal parameters
            counts = np.ones(len(generation), dtype=np.int64)
        nxt = []
        for vertex, count in zip(generation, counts):
            take = min(int(count), p - len(parent))
            for _ in range(take):
                nxt.append(len(parent))
                parent.append(vertex)
            if len(parent) == p:
                break
        generation = nxt

    m = p - 1
    magnitude = rng.uniform(config.coeff_low, config.coeff_high, size=m)
    sign = np.where(rng.random(m) < config.positive_sign_prob, 1.0, -1.0)
    coeff = np.concatenate([[0.0], sign * magnitude])
    return TreeNetwork(np.array(parent), coeff)


def generate_data(tree: TreeNetwork, config: SimConfig, rng: np.random.Generator) -> Dataset:
    """Draw ``config.n`` observations from the linear model over ``tree``."""
    if tree.p != config.p:
        raise ValueError(f"tree has p={tree.p}, config has p={config.p}")
    n, p = config.n, config.p
    x = np.empty((n, p))
    x[:, 0] = rng.standard_normal(n)
    noise = rng.standard_normal((n, p - 1)) * config.noise_sd
    for j in range(1, p):
        x[:, j] = tree.coeff[j] * x[:, tree.parent[j]] + noise[:, j - 1]
    return Dataset(x, default_names(p))


def generate_pair(
    config: SimConfig, rng: np.random.Generator
) -> tuple[TreeNetwork, Dataset, Dataset]:
    """One tree with two independent samples: ``(tree, pilot, study)``."""
    topo_rng, pilot_rng, study_rng = rng.spawn(3)
    tree = generate_topology(config, topo_rng)
    return tree, generate_data(tree, config, pilot_rng), generate_data(tree, config, study_rng)


def simulate(config: SimConfig) -> tuple[TreeNetwork, Dataset, Dataset]:
    """:func:`generate_pair` driven by ``config.seed``."""
    return generate_pair(config, np.random.default_rng(config.seed))


def write_tree_json(tree: TreeNetwork, path: str | Path) -> None:
    Path(path).write_text(tree.to_json())


def read_tree_json(path: str | Path) -> TreeNetwork:
    return TreeNetwork.from_json(Path(path).read_text())
