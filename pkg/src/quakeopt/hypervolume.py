"""Exact two-objective hypervolume (S-metric) for minimisation problems."""

from __future__ import annotations

import numpy as np

__all__ = ["hypervolume_2d", "contribution", "contributions", "nondominated_2d"]


def _validate(front, ref):
    pts = np.asarray(front, dtype=float).reshape(-1, 2)
    ref = np.asarray(ref, dtype=float)
    if ref.shape != (2,):
        raise ValueError(f"reference point must have two coordinates, got shape {ref.shape}")
    bad = np.flatnonzero(np.any(pts > ref, axis=1))
    if bad.size:
        p = pts[bad[0]]
        raise ValueError(
            f"reference point {tuple(ref.tolist())} is not dominated by front point "
            f"{bad[0]} {tuple(p.tolist())}"
        )
    return pts, ref


def nondominated_2d(points) -> np.ndarray:
    """Indices of the non-dominated points, ordered by increasing first objective.

    Duplicate vectors keep their first occurrence only.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    order = np.lexsort((np.arange(len(pts)), pts[:, 1], pts[:, 0]))
    keep = []
    best_f2 = np.inf
    for i in order:
        if pts[i, 1] < best_f2:
            keep.append(i)
            best_f2 = pts[i, 1]
    return np.array(keep, dtype=int)


def hypervolume_2d(front, ref) -> float:
    """Area dominated by ``front`` and bounded by ``ref``.

    Sweeps the non-dominated points in order of the first objective and sums
    the rectangular slabs between consecutive points.
    """
    pts, ref = _validate(front, ref)
    if len(pts) == 0:
        return 0.0
    nd = pts[nondominated_2d(pts)]
    f1_next = np.append(nd[1:, 0], ref[0])
    return float(np.sum((f1_next - nd[:, 0]) * (ref[1] - nd[:, 1])))


def contributions(front, ref) -> np.ndarray:
    """Exclusive hypervolume of every point (zero for dominated or duplicate points).

    For a sorted non-dominated front the contribution of point ``i`` is
    ``(f1[i+1] - f1[i]) * (f2[i-1] - f2[i])``, with the reference point
    standing in for the missing neighbour at either end.
    """
    pts, ref = _validate(front, ref)
    out = np.zeros(len(pts))
    if len(pts) == 0:
        return out
    idx = nondominated_2d(pts)
    nd = pts[idx]
    f1_next = np.append(nd[1:, 0], ref[0])
    f2_prev = np.insert(nd[:-1, 1], 0, ref[1])
    out[idx] = (f1_next - nd[:, 0]) * (f2_prev - nd[:, 1])
    # a duplicated vector removes nothing when one copy is dropped
    _, inverse, counts = np.unique(pts, axis=0, return_inverse=True, return_counts=True)
    out[counts[inverse.ravel()] > 1] = 0.0
    return out


def contribution(front, index: int, ref) -> float:
    return float(contributions(front, ref)[index])
