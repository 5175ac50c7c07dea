"""Magnitude statistics over optimizer traces.

Histograms of location magnitudes, Gutenberg-Richter fits
``log10(n) = a - b * M`` and Poisson aggregation checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

__all__ = [
    "MagnitudeHistogram",
    "GrFit",
    "PoissonReport",
    "magnitude_histogram",
    "gutenberg_richter_fit",
    "poisson_aggregate_check",
    "trace_report",
]


@dataclass(frozen=True)
class MagnitudeHistogram:
    """Counts of magnitudes in ``m`` contiguous ranges.

    Attributes
    ----------
    edges : ndarray, shape (m + 1,)
    counts : ndarray of int, shape (m,)
    q : int
        Total count, always ``counts.sum()``.
    """

    edges: np.ndarray
    counts: np.ndarray
    q: int

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def m(self) -> int:
        return int(self.counts.size)

    @classmethod
    def from_counts(cls, midpoints, counts) -> "MagnitudeHistogram":
        """Build a histogram from bin midpoints and counts.

        Edges sit halfway between neighbouring midpoints; the outer edges
        mirror the first and last half-gaps.  Counts may be non-integer
        (for instance exact model values).
        """
        mid = np.asarray(midpoints, dtype=float)
        counts = np.asarray(counts, dtype=float)
        if mid.ndim != 1 or mid.shape != counts.shape or mid.size < 1:
            raise ValueError("midpoints and counts must be 1-D arrays of equal, nonzero length")
        if mid.size > 1 and np.any(np.diff(mid) <= 0):
            raise ValueError("midpoints must be strictly increasing")
        if np.any(counts < 0):
            raise ValueError("counts must be >= 0")
        half = np.diff(mid) / 2 if mid.size > 1 else np.array([0.5])
        inner = mid[:-1] + half[: mid.size - 1]
        edges = np.concatenate([[mid[0] - half[0]], inner, [mid[-1] + half[-1]]])
        return cls(edges, counts, counts.sum())


@dataclass(frozen=True)
class GrFit:
    a: float
    b: float
    residual: float

    def predict(self, magnitudes) -> np.ndarray:
        """Fitted counts ``10 ** (a - b * M)``."""
        return 10.0 ** (self.a - self.b * np.asarray(magnitudes, dtype=float))


@dataclass(frozen=True)
class PoissonReport:
    lambda_q: float
    iterations: int
    samples_per_iteration: int
    mean: float
    variance: float
    ratio: float
    ks_statistic: float
    ks_pvalue: float
    gaussian_at_1pct: bool

    def to_dict(self) -> dict:
        return {k: (v if not isinstance(v, np.generic) else v.item()) for k, v in self.__dict__.items()}


def magnitude_histogram(magnitudes, m: int) -> MagnitudeHistogram:
    """Equal-width histogram of ``magnitudes`` over ``[min, max]`` with ``m`` bins."""
    mags = np.asarray(magnitudes, dtype=float).ravel()
    if mags.size == 0:
        raise ValueError("magnitude list is empty")
    if m < 2:
        raise ValueError(f"need at least 2 magnitude ranges, got {m}")
    if not np.all(np.isfinite(mags)):
        raise ValueError("magnitudes must be finite")
    counts, edges = np.histogram(mags, bins=m)
    return MagnitudeHistogram(edges, counts, int(counts.sum()))


def gutenberg_richter_fit(hist: MagnitudeHistogram, log_magnitudes: bool = False) -> GrFit:
    """Least-squares fit of ``log10(n_i) = a - b * M_i`` over positive bins.

    ``M_i`` is the bin midpoint, or ``log10`` of it when ``log_magnitudes``
    is set.  Empty bins are skipped because their logarithm is undefined.
    """
    mid = hist.midpoints
    counts = np.asarray(hist.counts, dtype=float)
    keep = counts > 0
    if log_magnitudes:
        keep &= mid > 0
    if np.count_nonzero(keep) < 2:
        raise ValueError("a Gutenberg-Richter fit needs at least 2 bins with positive counts")
    x = np.log10(mid[keep]) if log_magnitudes else mid[keep]
    y = np.log10(counts[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sum((y - (intercept + slope * x)) ** 2))
    return GrFit(float(intercept), float(-slope), resid)


def poisson_aggregate_check(lambdas, samples_per_iteration: int, iterations: int,
                            rng: np.random.Generator) -> PoissonReport:
    """Sample totals of independent Poisson counts and compare with theory.

    Each iteration draws ``samples_per_iteration`` totals, each the sum of one
    Poisson(lambda_i) draw per component.  Theory says the total is
    Poisson(lambda(q)) with ``lambda(q) = sum(lambda_i)``, so mean and
    variance agree, and for large ``lambda(q)`` it is close to
    N(lambda(q), lambda(q)).  The Gaussian check is a Kolmogorov-Smirnov
    test against that normal.
    """
    lam = np.asarray(lambdas, dtype=float).ravel()
    if lam.size == 0 or np.any(~(lam > 0)):
        raise ValueError("every lambda_i must be > 0")
    if iterations < 100:
        raise ValueError(f"iterations must be >= 100, got {iterations}")
    if samples_per_iteration < 1:
        raise ValueError("samples_per_iteration must be >= 1")
    lambda_q = float(np.sum(lam))
    n = iterations * samples_per_iteration
    totals = rng.poisson(lam, size=(n, lam.size)).sum(axis=1).astype(float)
    mean = float(totals.mean())
    var = float(totals.var(ddof=1))
    ks = stats.kstest(totals, "norm", args=(lambda_q, np.sqrt(lambda_q)))
    return PoissonReport(
        lambda_q=lambda_q,
        iterations=iterations,
        samples_per_iteration=samples_per_iteration,
        mean=mean,
        variance=var,
        ratio=mean / var if var > 0 else float("inf"),
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        gaussian_at_1pct=bool(ks.pvalue > 0.01),
    )


def trace_report(magnitudes, m: int = 20, *, gr_fit: bool = True, poisson_check: bool = True,
                 iterations: int = 1000, log_magnitudes: bool = False,
                 rng: np.random.Generator | None = None) -> dict:
    """Histogram, GR fit and Poisson check of a magnitude trace, as plain data.

    The Poisson check uses the fitted GR values as the component means, so
    ``lambda(q)`` is the model estimate of the total location count.
    """
    hist = magnitude_histogram(magnitudes, m)
    out = {
        "histogram": {
            "edges": hist.edges.tolist(),
            "counts": [int(c) for c in hist.counts],
            "q": hist.q,
        }
    }
    fit = None
    if gr_fit or poisson_check:
        fit = gutenberg_richter_fit(hist, log_magnitudes=log_magnitudes)
    if gr_fit:
        out["gr_fit"] = {
            "a": fit.a,
            "b": fit.b,
            "residual": fit.residual,
            "log_magnitudes": log_magnitudes,
        }
    if poisson_check:
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.log10(hist.midpoints) if log_magnitudes else hist.midpoints
            lam = fit.predict(x)
        lam = lam[lam > 0]
        rng = rng if rng is not None else np.random.default_rng(0)
        out["poisson_check"] = poisson_aggregate_check(lam, 1, iterations, rng).to_dict()
    return out
