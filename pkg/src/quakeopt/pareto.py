"""Pareto dominance, strength/density fitness, archive, selection and DE variation.

All objectives are minimised.  Fitness is "smaller is better": a raw fitness
of zero means nothing in the pool dominates the solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .seismic import normalize

__all__ = [
    "DENSITY_EPS",
    "Solution",
    "Fitness",
    "ParetoArchive",
    "dominates",
    "dominance_matrix",
    "fitness_assignment",
    "context_fitness",
    "update_archive",
    "nondominated_filter",
    "selection_probabilities",
    "selection",
    "de_mutant",
    "de_trials",
    "de_select",
]

DENSITY_EPS = 1e-12


@dataclass
class Solution:
    """A point in decision space together with its cached evaluation.

    ``violations`` holds ``(h1, h2, h3, penalty)``.
    """

    id: int
    position: np.ndarray
    objectives: np.ndarray
    violations: np.ndarray = field(default_factory=lambda: np.zeros(4))
    raw_fitness: float = 0.0
    density: float = 0.0
    fitness: float = 0.0

    @property
    def feasible(self) -> bool:
        return bool(np.all(self.violations[:3] == 0.0))


def dominates(a, b) -> bool:
    """True when ``a`` is no worse than ``b`` everywhere and better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def dominance_matrix(objectives) -> np.ndarray:
    """``D[a, b]`` is True when row ``a`` dominates row ``b``."""
    obj = np.asarray(objectives, dtype=float)
    return _dominance_block(obj, obj)


def _dominance_block(a, b) -> np.ndarray:
    le = np.ones((len(a), len(b)), dtype=bool)
    eq = np.ones((len(a), len(b)), dtype=bool)
    for j in range(a.shape[1]):
        ca, cb = a[:, j, None], b[None, :, j]
        le &= ca <= cb
        eq &= ca == cb
    return le & ~eq


class Fitness(NamedTuple):
    strength: np.ndarray
    raw: np.ndarray
    density: np.ndarray
    fitness: np.ndarray


def fitness_assignment(objectives, penalties=None, k: int | None = None) -> Fitness:
    """Strength-Pareto fitness of every row of ``objectives``.

    strength
        number of pool members the solution dominates.
    raw
        sum of the strengths of its dominators, plus the constraint penalty.
    density
        ``1 / d_k`` with ``d_k`` the objective-space distance to the k-th
        nearest other member; ``k`` defaults to ``round(sqrt(n))``.  A zero
        distance is replaced by ``DENSITY_EPS``.
    """
    obj = np.asarray(objectives, dtype=float)
    if obj.ndim != 2 or obj.shape[0] == 0:
        raise ValueError("fitness assignment needs a nonempty (n, d) objective array")
    dom = dominance_matrix(obj)
    strength = dom.sum(axis=1)
    raw = (dom * strength[:, None]).sum(axis=0).astype(float)
    if penalties is not None:
        raw = raw + np.asarray(penalties, dtype=float)

    density = _density(obj, k)
    return Fitness(strength, raw, density, raw + density)


def _density(obj, k):
    n = obj.shape[0]
    if k is None:
        k = max(1, int(round(math.sqrt(n))))
    k = min(k, n - 1)
    if k == 0:
        return np.ones(n)
    dist, _ = cKDTree(obj).query(obj, k=k + 1)
    dk = dist[:, k]
    return 1.0 / np.where(dk > 0, dk, DENSITY_EPS)


def context_fitness(group, penalties, archive) -> Fitness:
    """:func:`fitness_assignment` of ``group + archive`` without the archive block.

    ``archive`` rows must be mutually non-dominated (as in a
    :class:`ParetoArchive`), which lets the archive-vs-archive comparisons be
    skipped.  Archive members carry no penalty.  Results cover the
    concatenated pool, group rows first.
    """
    g = np.asarray(group, dtype=float)
    a = np.asarray(archive, dtype=float).reshape(-1, g.shape[1])
    d_gg = _dominance_block(g, g)
    d_ga = _dominance_block(g, a)
    d_ag = _dominance_block(a, g)
    s_g = d_gg.sum(axis=1) + d_ga.sum(axis=1)
    s_a = d_ag.sum(axis=1)
    raw_g = (d_gg * s_g[:, None]).sum(axis=0) + (d_ag * s_a[:, None]).sum(axis=0)
    raw_a = (d_ga * s_g[:, None]).sum(axis=0)
    strength = np.concatenate([s_g, s_a])
    raw = np.concatenate([raw_g + np.asarray(penalties, dtype=float), raw_a]).astype(float)
    density = _density(np.vstack([g, a]), None)
    return Fitness(strength, raw, density, raw + density)


def nondominated_filter(objectives) -> np.ndarray:
    """Brute-force O(n^2) indices of the non-dominated rows; exact duplicates keep the first."""
    obj = np.asarray(objectives, dtype=float)
    idx = np.arange(len(obj))
    keep = []
    for i, o in enumerate(obj):
        le = np.all(obj <= o, axis=1)
        dominated = np.any(le & np.any(obj < o, axis=1))
        earlier_copy = np.any(le & np.all(obj == o, axis=1) & (idx < i))
        if not (dominated or earlier_copy):
            keep.append(i)
    return np.array(keep, dtype=int)


class ParetoArchive:
    """Set of mutually non-dominated solutions.

    Insertion rejects anything dominated by, or equal in objectives to, a
    current member and evicts every member the newcomer dominates.
    """

    def __init__(self, members=None):
        self.members: list[Solution] = []
        self._obj = np.empty((0, 0))
        if members:
            self.update(members)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def objectives(self) -> np.ndarray:
        if not self.members:
            return np.empty((0, 0))
        return self._obj

    def insert(self, candidate: Solution) -> bool:
        o = np.asarray(candidate.objectives, dtype=float)
        if self.members:
            obj = self._obj
            le = np.all(obj <= o, axis=1)
            if np.any(le):  # some member is no worse everywhere: dominated or equal
                return False
            evict = np.all(o <= obj, axis=1)
            if np.any(evict):
                keep = ~evict
                self.members = [m for m, kp in zip(self.members, keep) if kp]
                obj = obj[keep]
            self.members.append(candidate)
            self._obj = np.vstack([obj, o])
        else:
            self.members.append(candidate)
            self._obj = o[None, :].copy()
        return True

    def update(self, candidates) -> bool:
        """Insert candidates in order; return True if the archive changed."""
        changed = False
        for c in candidates:
            changed |= self.insert(c)
        return changed


def update_archive(archive: ParetoArchive, candidates) -> ParetoArchive:
    out = ParetoArchive(list(archive.members))
    out.update(candidates)
    return out


def selection_probabilities(fitness, mode: str = "inverted") -> np.ndarray:
    """Selection probabilities from fitness values.

    ``"inverted"`` weights each solution by ``1 / (1 + f)`` so better
    (smaller) fitness is preferred; ``"literal"`` weights by ``f`` itself.
    """
    f = np.asarray(fitness, dtype=float)
    if mode == "inverted":
        w = 1.0 / (1.0 + f)
    elif mode == "literal":
        w = f.copy()
        if not np.any(w > 0):
            w = np.ones_like(f)
    else:
        raise ValueError(f"unknown selection mode {mode!r}")
    return w / w.sum()


def selection(fitness, p: int, rng: np.random.Generator, mode: str = "inverted") -> np.ndarray:
    """Draw ``p`` distinct indices with fitness-based probabilities."""
    f = np.asarray(fitness, dtype=float)
    if p > f.size:
        raise ValueError(f"cannot select {p} from a pool of {f.size}")
    probs = selection_probabilities(f, mode)
    if np.count_nonzero(probs) < p:
        probs = (probs + 1e-12) / (probs + 1e-12).sum()
    return rng.choice(f.size, size=p, replace=False, p=probs)


def de_mutant(pool, a: int, b: int, c: int, scale: float) -> np.ndarray:
    """``pool[a] + scale * (pool[b] - pool[c])``."""
    pool = np.asarray(pool, dtype=float)
    return pool[a] + scale * (pool[b] - pool[c])


def de_trials(targets, target_index, pool, scale: float, p_cross: float, low, up, rng) -> np.ndarray:
    """Differential-evolution trial vectors.

    For each target the mutant is ``pool[a] + scale * (pool[b] - pool[c])``
    with ``a, b, c`` distinct and different from the target's own index in
    ``pool`` (use -1 when it has none).  Binomial crossover takes the mutant
    coordinate when ``U(0, 1) < p_cross`` and always at one forced index.
    Trials are wrapped into ``[low, up)``.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    pool = np.asarray(pool, dtype=float)
    n, dim = pool.shape
    if n < 4:
        raise ValueError(f"differential evolution needs a pool of at least 4, got {n}")
    trials = np.empty_like(targets)
    for t, (x, own) in enumerate(zip(targets, target_index)):
        candidates = np.delete(np.arange(n), own) if 0 <= own < n else np.arange(n)
        a, b, c = rng.choice(candidates, size=3, replace=False)
        mutant = de_mutant(pool, a, b, c, scale)
        cross = rng.uniform(size=dim) < p_cross
        cross[rng.integers(dim)] = True
        trials[t] = np.where(cross, mutant, x)
    return normalize(trials, low, up)


def de_select(target_fitness, trial_fitness) -> np.ndarray:
    """Mask of targets replaced by their trial (trial fitness no worse)."""
    return np.asarray(trial_fitness, dtype=float) <= np.asarray(target_fitness, dtype=float)
