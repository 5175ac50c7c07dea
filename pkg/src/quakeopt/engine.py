"""The generation loop: seismic exploration, Pareto archive and DE refinement."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import problem
from .hypervolume import hypervolume_2d, nondominated_2d
from .pareto import (
    ParetoArchive,
    Solution,
    de_select,
    de_trials,
    context_fitness,
    selection,
    selection_probabilities,
)
from .seismic import (
    PhiMean,
    SeismicParams,
    cumulative_magnitudes,
    dispersion_counts,
    ellipse_distance,
    hypocentral_dimensions,
    hypocentral_displace,
    magnitude_from_power,
    make_rng,
    normalize,
    peak_power,
    poisson_location,
    relevance_radius,
    spawn_epicenter,
)

__all__ = ["DEFAULTS", "EngineConfig", "RunReport", "run_optimizer", "location_power", "location_magnitudes"]

# Every engine default in one place.  None of these values is prescribed by
# the underlying method; they are working defaults for unit-box instances.
DEFAULTS = {
    "population_size": 50,
    "max_generations": 300,
    "p_cross": 0.9,
    "vartheta_de": 0.5,
    "m": 50.0,
    "vartheta": 1e-3,
    "d_min": 1,
    "d_max": 50,
    "stall_gens": 50,
    "n_objectives": 3,
    "selection": "inverted",
}


@dataclass
class EngineConfig:
    population_size: int = DEFAULTS["population_size"]
    max_generations: int = DEFAULTS["max_generations"]
    p: int | None = None
    p_cross: float = DEFAULTS["p_cross"]
    vartheta_de: float = DEFAULTS["vartheta_de"]
    seed: int = 0
    n_objectives: int = DEFAULTS["n_objectives"]
    stall_gens: int = DEFAULTS["stall_gens"]
    selection: str = DEFAULTS["selection"]
    hv_ref: tuple[float, float] | None = None
    seismic: SeismicParams = field(default_factory=SeismicParams)

    def __post_init__(self):
        if isinstance(self.seismic, dict):
            self.seismic = SeismicParams(**self.seismic)
        if self.p is None:
            self.p = self.population_size
        if self.population_size < 4:
            raise ValueError(f"population_size must be >= 4, got {self.population_size}")
        if not 1 <= self.p <= self.population_size:
            raise ValueError(f"p must lie in [1, population_size], got {self.p}")
        if not 0.0 < self.p_cross < 1.0:
            raise ValueError(f"p_cross must lie in (0, 1), got {self.p_cross}")
        if not self.vartheta_de > 0:
            raise ValueError(f"vartheta_de must be > 0, got {self.vartheta_de}")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if self.n_objectives not in (2, 3):
            raise ValueError(f"n_objectives must be 2 or 3, got {self.n_objectives}")
        if self.selection not in ("inverted", "literal"):
            raise ValueError(f"selection must be 'inverted' or 'literal', got {self.selection!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        data = dict(data)
        if data.get("hv_ref") is not None:
            data["hv_ref"] = tuple(float(v) for v in data["hv_ref"])
        if isinstance(data.get("seismic"), dict):
            fields = SeismicParams.__dataclass_fields__
            bad = set(data["seismic"]) - set(fields)
            if bad:
                raise ValueError(f"unknown seismic key(s): {', '.join(sorted(bad))}")
            data["seismic"] = SeismicParams(**data["seismic"])
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["hv_ref"] = list(self.hv_ref) if self.hv_ref is not None else None
        return out


@dataclass
class RunReport:
    archive: list[Solution]
    best: Solution | None
    best_trajectory: list[float]
    hypervolume_trajectory: list[float]
    magnitude_trace: list[list[float]]
    locations_per_generation: list[int]
    hv_ref: tuple[float, float]
    generations: int
    stop_reason: str
    wall_time: float
    seed: int
    config: EngineConfig
    diagnostics: dict = field(default_factory=dict)


def location_power(fitness) -> np.ndarray:
    """Seismic power released at each location: ``1 / (1 + fitness)``.

    Better locations (smaller fitness) carry more power; the value lies in
    ``(0, 1]``.
    """
    return 1.0 / (1.0 + np.asarray(fitness, dtype=float))


def location_magnitudes(fitness, dist, params: SeismicParams) -> np.ndarray:
    """Magnitude of each location from its power and effective distance.

    Inverts the power law: at a fixed power, distant locations get larger
    magnitudes; at a fixed distance, poorer locations get smaller ones.
    """
    return np.atleast_1d(magnitude_from_power(location_power(fitness), dist, params))


class _Evaluator:
    """Batch objective evaluation with sequential solution ids."""

    def __init__(self, spec: problem.NetworkSpec, n_objectives: int):
        self.spec = spec
        self.n_objectives = n_objectives
        self.next_id = 0

    def __call__(self, positions) -> list[Solution]:
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        if positions.shape[0] == 0:
            return []
        obj, viol = problem.evaluate_batch(self.spec, self.spec.expand(positions))
        if self.n_objectives == 2:
            obj = np.stack([obj[:, 0], obj[:, 1] + obj[:, 2]], axis=1)
        out = []
        for x, o, v in zip(positions, obj, viol):
            out.append(Solution(self.next_id, x.copy(), o, v))
            self.next_id += 1
        return out


def _assign(group: list[Solution], archive: ParetoArchive) -> np.ndarray:
    """Fitness of ``group`` evaluated in the context of the archive."""
    ids = {s.id for s in group}
    extra = [m for m in archive.members if m.id not in ids]
    pool = group + extra
    obj = np.array([s.objectives for s in group])
    pen = np.array([s.violations[3] for s in group])
    arc = np.array([s.objectives for s in extra]).reshape(-1, obj.shape[1])
    fit = context_fitness(obj, pen, arc)
    for s, r, d, f in zip(pool, fit.raw, fit.density, fit.fitness):
        s.raw_fitness, s.density, s.fitness = float(r), float(d), float(f)
    return fit.fitness[: len(group)]


def _hv_reference(spec: problem.NetworkSpec) -> tuple[float, float]:
    top = spec.B_up.reshape(spec.N, spec.T)
    f1 = float(problem.cost_f1(spec, top))
    f2 = float(problem.cost_f2(spec, top))
    return (1.1 * f1 + 1e-9, 1.1 * f2 + 1e-9)


def _cost_pair(sol: Solution, spec, n_objectives: int) -> tuple[float, float]:
    if n_objectives == 3:
        return float(sol.objectives[1]), float(sol.objectives[2])
    X = spec.expand(sol.position)
    return float(problem.cost_f1(spec, X)), float(problem.cost_f2(spec, X))


def _archive_hypervolume(archive, spec, n_objectives, ref) -> float:
    if not len(archive):
        return 0.0
    pts = np.array([_cost_pair(s, spec, n_objectives) for s in archive])
    pts = np.minimum(pts, ref)
    return hypervolume_2d(pts[nondominated_2d(pts)], ref)


def _make_locations(epicenter, n_loc, c_val, mag, params, low, up, rng) -> np.ndarray:
    dim = epicenter.size
    out = np.empty((n_loc, dim))
    for j in range(n_loc):
        loc = epicenter.copy()
        for k in hypocentral_dimensions(dim, rng):
            loc[k] = hypocentral_displace(loc, k, c_val, mag, rng)
        loc = normalize(loc, low, up)
        for k in hypocentral_dimensions(dim, rng):
            loc[k] = poisson_location(loc[k], params, rng, low[k], up[k])
        out[j] = loc
    return out


def _effective_distance(epicenter, locations, params) -> np.ndarray:
    delta = locations - epicenter
    dist = np.linalg.norm(delta, axis=1)
    if delta.shape[1] >= 2:
        radii = np.array([
            ellipse_distance(params, d[1] / d[0] if d[0] != 0 else math.inf) for d in delta
        ])
        dist = dist / radii
    return np.maximum(dist, 1e-12)


def run_optimizer(spec: problem.NetworkSpec, config: EngineConfig) -> RunReport:
    """Run the seismic multiobjective optimizer on ``spec``.

    Each generation:

    1. locations are scattered around every epicenter (count from the
       dispersion operator; coordinates by hypocentral displacement followed
       by Poisson randomisation);
    2. location powers give each epicenter's peak magnitude, the control
       magnitude and the cumulative magnitudes used by the next generation;
    3. feasible epicenters and locations enter the archive;
    4. every epicenter spawns a Poisson epicenter from nearby references;
    5. ``p`` epicenters are selected, refined by differential evolution, and
       the population is refilled with the best candidate plus ``p - 1``
       fitness-sampled ones.

    The run stops after ``max_generations`` or when the archive has not
    changed for ``stall_gens`` generations.
    """
    t0 = time.perf_counter()
    sp = config.seismic
    active = spec.active_dims
    low, up = spec.B_low[active], spec.B_up[active]
    dim = active.size
    P = config.population_size
    evaluate = _Evaluator(spec, config.n_objectives)
    ref = config.hv_ref if config.hv_ref is not None else _hv_reference(spec)

    rng0 = make_rng(config.seed, 0)
    pop = evaluate(rng0.uniform(low, up, size=(P, dim)))
    archive = ParetoArchive()
    archive.update(s for s in pop if s.feasible)

    prev_c = np.full(P, 0.1 * float(np.mean(up - low)))
    prev_mag = np.ones(P)
    best_traj: list[float] = []
    hv_traj: list[float] = []
    mag_trace: list[list[float]] = []
    q_trace: list[int] = []
    best_so_far = math.inf
    stall = 0
    stop_reason = "max_generations"
    gen = 0

    for gen in range(1, config.max_generations + 1):
        grng = make_rng(config.seed, gen, P)
        changed = False

        # step 1: dispersion and locations
        fit_pop = _assign(pop, archive)
        disp = dispersion_counts(fit_pop, sp)
        erngs = [make_rng(config.seed, gen, i) for i in range(P)]
        loc_pos = [
            _make_locations(e.position, int(n), prev_c[i], prev_mag[i], sp, low, up, erngs[i])
            for i, (e, n) in enumerate(zip(pop, disp.counts))
        ]
        locs = evaluate(np.vstack(loc_pos))
        q_trace.append(len(locs))

        # steps 2-3: powers, peak magnitudes
        _assign(pop + locs, archive)
        loc_pow = location_power([s.fitness for s in locs])
        dists = [_effective_distance(e.position, block, sp) for e, block in zip(pop, loc_pos)]
        loc_mag = location_magnitudes([s.fitness for s in locs], np.concatenate(dists), sp)
        mag_trace.append([float(m) for m in loc_mag])
        bounds = np.cumsum([0] + [len(b) for b in loc_pos])
        powers = [loc_pow[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
        p_star, where, _ = peak_power(powers)
        peak_d = np.array([d[w] for d, w in zip(dists, where)])
        mags = np.atleast_1d(magnitude_from_power(p_star, peak_d, sp))

        # step 4: cumulative magnitudes and archive
        prev_c = cumulative_magnitudes(fit_pop, mags, sp)
        prev_mag = mags
        changed |= archive.update(s for s in pop + locs if s.feasible)

        # epicenter spawning
        radius = relevance_radius(mags, sp)
        ref_pool = np.vstack(loc_pos + [m.position[None, :] for m in archive])
        if ref_pool.shape[0] > sp.n_ref:
            ref_pool = ref_pool[grng.choice(ref_pool.shape[0], sp.n_ref, replace=False)]
        phi_mean = PhiMean()
        spawned_pos = np.array([
            spawn_epicenter(
                e.position, ref_pool, sp, erngs[i],
                magnitude=float(mags.mean()), radius=radius, low=low, up=up, phi_mean=phi_mean,
            )
            for i, e in enumerate(pop)
        ])
        spawned = evaluate(spawned_pos)
        changed |= archive.update(s for s in spawned if s.feasible)

        # step 5: selection and differential evolution
        fit_pop = _assign(pop, archive)
        chosen = selection(fit_pop, config.p, grng, config.selection)
        trial_pos = de_trials(
            np.array([pop[i].position for i in chosen]), chosen,
            np.array([s.position for s in pop]), config.vartheta_de, config.p_cross, low, up, grng,
        )
        trials = evaluate(trial_pos)
        targets = [pop[i] for i in chosen]
        fit = _assign(targets + trials, archive)
        wins = de_select(fit[: len(targets)], fit[len(targets):])
        winners = [t if w else s for s, t, w in zip(targets, trials, wins)]
        changed |= archive.update(t for t, w in zip(trials, wins) if w and t.feasible)

        # refill the selected slots with the best candidate plus p - 1 sampled ones
        keep_idx = sorted(set(range(P)) - set(int(i) for i in chosen))
        kept = [pop[i] for i in keep_idx]
        kept_ids = {s.id for s in kept}
        seen = set(kept_ids)
        candidates = []
        elite = archive.members
        if len(elite) > P:
            elite = [elite[i] for i in np.sort(grng.choice(len(elite), P, replace=False))]
        for s in winners + spawned + locs + elite:
            if s.id not in seen:
                seen.add(s.id)
                candidates.append(s)
        cfit = _assign(candidates, archive)
        best = int(np.argmin(cfit))
        rest = np.delete(np.arange(len(candidates)), best)
        probs = selection_probabilities(cfit[rest], config.selection)
        n_more = min(config.p - 1, rest.size)
        picked = rest[grng.choice(rest.size, size=n_more, replace=False, p=probs)] if n_more else []
        refill = [candidates[best]] + [candidates[i] for i in picked]
        pop = kept + refill
        while len(pop) < P:  # tiny candidate pools only
            pop.append(pop[len(pop) % len(kept + refill)])

        # bookkeeping
        if len(archive):
            current = float(min(m.objectives[0] for m in archive))
        else:
            current = float(min(s.objectives[0] + s.violations[3] for s in pop))
        best_so_far = min(best_so_far, current)
        best_traj.append(best_so_far)
        hv_traj.append(_archive_hypervolume(archive, spec, config.n_objectives, ref))
        stall = 0 if changed else stall + 1
        if stall >= config.stall_gens:
            stop_reason = "stagnation"
            break

    members = list(archive.members)
    best_sol = min(members, key=lambda s: s.objectives[0]) if members else None
    diagnostics = {}
    if best_sol is not None:
        X = spec.expand(best_sol.position)
        diagnostics = problem.class_diagnostics(spec, X, problem.classify_nodes(spec))
        diagnostics["G"] = float(problem.main_objective(spec, X))
    return RunReport(
        archive=members,
        best=best_sol,
        best_trajectory=best_traj,
        hypervolume_trajectory=hv_traj,
        magnitude_trace=mag_trace,
        locations_per_generation=q_trace,
        hv_ref=tuple(ref),
        generations=gen,
        stop_reason=stop_reason,
        wall_time=time.perf_counter() - t0,
        seed=config.seed,
        config=config,
        diagnostics=diagnostics,
    )
