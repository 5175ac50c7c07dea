"""Seismic operators: dispersion, power/magnitude, radius and epicenter moves.

Positions are plain float vectors; every random draw goes through an explicit
:class:`numpy.random.Generator`.  Fitness values are "smaller is better"
(strength + density), so the dispersion operator hands more locations to
epicenters with lower fitness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "SeismicParams",
    "DegenerateGeometryError",
    "Dispersion",
    "PhiMean",
    "make_rng",
    "dispersion_counts",
    "ellipse_distance",
    "seismic_power",
    "magnitude_from_power",
    "peak_power",
    "control_magnitude",
    "cumulative_magnitudes",
    "relevance_radius",
    "range_identifier",
    "poisson_step_fraction",
    "spawn_epicenter",
    "hypocentral_dimensions",
    "hypocentral_displace",
    "poisson_location",
    "normalize_coordinate",
    "normalize",
]


class DegenerateGeometryError(ValueError):
    """Reference geometry makes the range identifier undefined."""


@dataclass(frozen=True)
class SeismicParams:
    """Tunables of the seismic operators.

    Attributes
    ----------
    m : float
        Total location budget shared out by the dispersion operator.
    vartheta : float
        Residual added to every fitness gap so no share is zero.
    b0, b1, sigma_lnP : float
        Power-law coefficients linking magnitude, distance and power.
    ellipse_a, ellipse_b : float
        Ellipse semi-axes.  Only ``ellipse_a`` enters the distance formula.
    chi, Q1, Q2 : float
        Relevance radius ``chi * 10**(Q1 * 2 * mean_magnitude - Q2)``.
    d_min, d_max : int
        Clamp for the integer number of locations per epicenter.
    lambda_loc : float
        Poisson mean of the multiplicative location factor.
    n_ref : int
        Size of the reference pool handed to epicenter spawning.
    """

    m: float = 50.0
    vartheta: float = 1e-3
    b0: float = 1.0
    b1: float = 1.0
    sigma_lnP: float = 0.0
    ellipse_a: float = 1.0
    ellipse_b: float = 1.0
    chi: float = 1.0
    Q1: float = 0.414
    Q2: float = 1.696
    d_min: int = 1
    d_max: int = 50
    lambda_loc: float = 1.0
    n_ref: int = 32

    def __post_init__(self):
        if not self.vartheta > 0:
            raise ValueError(f"vartheta must be > 0, got {self.vartheta}")
        if self.b1 == 0:
            raise ValueError("b1 must be nonzero")
        if self.d_min < 1:
            raise ValueError(f"d_min must be >= 1, got {self.d_min}")
        if self.d_max < self.d_min:
            raise ValueError(f"d_max ({self.d_max}) must be >= d_min ({self.d_min})")
        if not self.chi > 0:
            raise ValueError(f"chi must be > 0, got {self.chi}")
        if not self.lambda_loc > 0:
            raise ValueError(f"lambda_loc must be > 0, got {self.lambda_loc}")
        if self.n_ref < 2:
            raise ValueError(f"n_ref must be >= 2, got {self.n_ref}")


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, *stream)``.

    Streams with different ids never share state, so per-epicenter work can
    be scheduled in any order without changing results.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(s) for s in stream)))


# ---------------------------------------------------------------------------
# dispersion and magnitudes
# ---------------------------------------------------------------------------


class Dispersion(NamedTuple):
    raw: np.ndarray
    counts: np.ndarray
    q: int


def dispersion_counts(fitness, params: SeismicParams) -> Dispersion:
    """Number of locations per epicenter.

    ``raw_i = m * (max_f - f_i + vartheta) / sum_k (max_f - f_k + vartheta)``;
    integer counts are ``raw`` rounded and clamped to ``[d_min, d_max]``.
    """
    f = np.asarray(fitness, dtype=float)
    if f.size == 0:
        raise ValueError("population is empty")
    gaps = (f.max() - f) + params.vartheta
    raw = params.m * gaps / gaps.sum()
    counts = np.clip(np.rint(raw), params.d_min, params.d_max).astype(int)
    return Dispersion(raw, counts, int(counts.sum()))


def ellipse_distance(params: SeismicParams, angle_tangent: float) -> float:
    """Radius of the ellipse in the direction whose slope is ``angle_tangent``."""
    # (1 + t^2) / (a^-2 + t^2) written in cos/sin form so large t cannot overflow
    theta = math.atan(angle_tangent)
    c2 = math.cos(theta) ** 2
    return 1.0 / math.sqrt(c2 / params.ellipse_a ** 2 + (1.0 - c2))


def seismic_power(dist, magnitude, params: SeismicParams):
    """``(magnitude / dist) ** b1 * b0 * exp(sigma_lnP)``; vectorised."""
    dist = np.asarray(dist, dtype=float)
    if np.any(dist <= 0):
        raise ValueError("distance must be > 0")
    out = (np.asarray(magnitude, dtype=float) / dist) ** params.b1 * params.b0 * math.exp(params.sigma_lnP)
    return float(out) if out.ndim == 0 else out


def magnitude_from_power(power, dist, params: SeismicParams):
    """Inverse of :func:`seismic_power` in the magnitude argument."""
    dist = np.asarray(dist, dtype=float)
    if np.any(dist <= 0):
        raise ValueError("distance must be > 0")
    if not params.b0 > 0:
        raise ValueError("b0 must be > 0")
    scaled = np.asarray(power, dtype=float) / (params.b0 * math.exp(params.sigma_lnP))
    out = scaled ** (1.0 / params.b1) * dist
    return float(out) if out.ndim == 0 else out


def peak_power(powers) -> tuple[np.ndarray, np.ndarray, int]:
    """Peak power per epicenter and the strongest epicenter overall.

    ``powers`` is a sequence of 1-D arrays, one per epicenter, holding the
    power at each of its locations.  Returns ``(p_star, peak_location_index,
    strongest_epicenter)``; ties go to the lowest index.
    """
    p_star = np.empty(len(powers))
    where = np.empty(len(powers), dtype=int)
    for i, p in enumerate(powers):
        p = np.asarray(p, dtype=float)
        if p.size == 0:
            raise ValueError(f"epicenter {i} has no locations")
        where[i] = int(np.argmax(p))
        p_star[i] = p[where[i]]
    return p_star, where, int(np.argmax(p_star))


def control_magnitude(magnitudes_at_peak) -> float:
    return float(np.sum(magnitudes_at_peak))


def cumulative_magnitudes(fitness, magnitudes_at_peak, params: SeismicParams) -> np.ndarray:
    """Share of the total peak magnitude given to each epicenter.

    The gap is measured from the lowest fitness in the population, so worse
    epicenters (higher fitness) get a wider displacement range.
    """
    f = np.asarray(fitness, dtype=float)
    if f.size == 0:
        raise ValueError("population is empty")
    mags = np.asarray(magnitudes_at_peak, dtype=float)
    if not np.all(np.isfinite(mags)):
        raise ValueError("magnitudes must be finite")
    gaps = (f - f.min()) + params.vartheta
    return control_magnitude(mags) * gaps / gaps.sum()


def relevance_radius(magnitudes_at_peak, params: SeismicParams) -> float:
    mags = np.asarray(magnitudes_at_peak, dtype=float)
    if mags.size == 0:
        raise ValueError("no magnitudes")
    return params.chi * 10.0 ** (params.Q1 * (2.0 * float(mags.mean())) - params.Q2)


# ---------------------------------------------------------------------------
# epicenter spawning
# ---------------------------------------------------------------------------


def range_identifier(e_i, r_k, r_l, weights) -> float:
    """Poisson range identifier of an epicenter and two reference points.

    ``weights = (c_ik, c_kl)``: the weighting coefficient between the
    epicenter and ``r_k`` and between ``r_k`` and ``r_l``.  The angle is the
    one at ``r_k`` between the lines to ``e_i`` and to ``r_l``.

    Raises
    ------
    DegenerateGeometryError
        Coincident points or ``|cos theta| < 1e-9``.
    """
    c_ik, c_kl = weights
    if not (c_ik > 0 and c_kl > 0):
        raise ValueError("weights must be > 0")
    e_i, r_k, r_l = (np.asarray(v, dtype=float) for v in (e_i, r_k, r_l))
    d_ek = float(np.linalg.norm(e_i - r_k))
    d_kl = float(np.linalg.norm(r_k - r_l))
    d_el = float(np.linalg.norm(e_i - r_l))
    if d_ek == 0.0 or d_kl == 0.0 or d_el == 0.0:
        raise DegenerateGeometryError("coincident points")
    cos_t = (d_ek**2 + d_kl**2 - d_el**2) / (2.0 * d_ek * d_kl)
    cos_t = min(1.0, max(-1.0, cos_t))
    if abs(cos_t) < 1e-9:
        raise DegenerateGeometryError("right angle between reference lines")
    return (d_ek * c_kl) / (cos_t * d_kl * c_ik)


def _poisson_logpmf(k: int, lam: float) -> float:
    return k * math.log(lam) - lam - math.lgamma(k + 1)


def poisson_step_fraction(phi: float, lam: float) -> float:
    """``pmf(round(phi); lam) / pmf(mode; lam)``, a value in ``[0, 1]``.

    Far in the tail the ratio underflows to 0, which means no step.
    """
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    k = max(0, int(round(phi)))
    mode = math.floor(lam)
    return min(1.0, math.exp(_poisson_logpmf(k, lam) - _poisson_logpmf(mode, lam)))


class PhiMean:
    """Running mean of range-identifier values within one generation."""

    def __init__(self):
        self.total = 0.0
        self.count = 0

    def update(self, phi: float) -> float:
        self.total += phi
        self.count += 1
        return self.total / self.count


def _ball_sample(center, radius, rng, n):
    d = center.size
    direction = rng.normal(size=(n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(n, 1)) ** (1.0 / d)
    return center + r * direction


def spawn_epicenter(
    e_i,
    references,
    params: SeismicParams,
    rng: np.random.Generator,
    *,
    magnitude: float,
    radius: float,
    low,
    up,
    phi_mean: PhiMean | None = None,
    max_tries: int = 8,
) -> np.ndarray:
    """New epicenter drawn from the Poisson range identifier.

    Only references within ``radius`` of ``e_i`` are used; when fewer than
    two qualify, two points are sampled uniformly from the ball instead.
    For a random pair ``(r_k, r_l)`` the weights are seismic powers at the
    pairwise distances with the mean peak ``magnitude``.  The step length is
    ``radius * poisson_step_fraction(phi, lam)`` with ``lam`` the running
    mean of ``phi``; the direction points at the power-weighted midpoint of
    the pair.  The result is wrapped into ``[low, up)``.
    """
    e_i = np.asarray(e_i, dtype=float)
    refs = np.asarray(references, dtype=float)
    if refs.ndim != 2 or refs.shape[0] < 2:
        raise ValueError("need at least two reference points")
    if phi_mean is None:
        phi_mean = PhiMean()

    dist = np.linalg.norm(refs - e_i, axis=1)
    inside = refs[(dist <= radius) & (dist > 0)]
    if inside.shape[0] < 2:
        if not radius > 0:
            raise ValueError("fewer than two references and zero radius")
        inside = _ball_sample(e_i, radius, rng, 2)

    for _ in range(max_tries):
        k, l = rng.choice(inside.shape[0], size=2, replace=False)
        r_k, r_l = inside[k], inside[l]
        d_ek = float(np.linalg.norm(e_i - r_k))
        d_kl = float(np.linalg.norm(r_k - r_l))
        d_el = float(np.linalg.norm(e_i - r_l))
        if min(d_ek, d_kl, d_el) == 0.0:
            continue
        c_ek = seismic_power(d_ek, magnitude, params)
        c_kl = seismic_power(d_kl, magnitude, params)
        try:
            phi = range_identifier(e_i, r_k, r_l, (c_ek, c_kl))
        except DegenerateGeometryError:
            continue
        if phi <= 0:
            continue
        lam = phi_mean.update(phi)
        step = radius * poisson_step_fraction(phi, lam)
        c_el = seismic_power(d_el, magnitude, params)
        target = (c_ek * r_k + c_el * r_l) / (c_ek + c_el)
        heading = target - e_i
        norm = float(np.linalg.norm(heading))
        if norm == 0.0:
            break
        return normalize(e_i + step * heading / norm, low, up)
    return normalize(e_i, low, up)


# ---------------------------------------------------------------------------
# diversity operators
# ---------------------------------------------------------------------------


def hypocentral_dimensions(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``Y ~ U{1..dim}`` and return ``Y`` distinct dimension indices."""
    y = int(rng.integers(1, dim + 1))
    return rng.choice(dim, size=y, replace=False)


def hypocentral_displace(position, k: int, c_val: float, mag_k: float, rng: np.random.Generator) -> float:
    """``sqrt((x_k / mag_k)**2 + u**2)`` with ``u ~ U(-c_val, c_val)``."""
    if not mag_k > 0:
        raise ValueError(f"magnitude must be > 0, got {mag_k}")
    if c_val < 0:
        raise ValueError(f"displacement range must be >= 0, got {c_val}")
    u = rng.uniform(-c_val, c_val)
    return math.hypot(position[k] / mag_k, u)


def poisson_location(x_k: float, params: SeismicParams, rng: np.random.Generator, low: float, up: float) -> float:
    """``x_k * w`` with ``w ~ Poisson(lambda_loc)``, wrapped into ``[low, up)``."""
    w = int(rng.poisson(params.lambda_loc))
    return normalize_coordinate(x_k * w, low, up)


def normalize_coordinate(v: float, low: float, up: float) -> float:
    """Wrap ``v`` into ``[low, up)`` with a Euclidean modulus."""
    if not up > low:
        raise ValueError(f"upper bound {up} must exceed lower bound {low}")
    v, low, up = float(v), float(low), float(up)
    out = (v - low) % (up - low) + low
    # float modulus of a tiny negative number can land exactly on up
    return low if out >= up else out


def normalize(v, low, up) -> np.ndarray:
    """Vectorised :func:`normalize_coordinate`."""
    v = np.asarray(v, dtype=float)
    low = np.asarray(low, dtype=float)
    up = np.asarray(up, dtype=float)
    out = np.mod(v - low, up - low) + low
    return np.where(out >= up, low, out) * np.ones_like(v)
