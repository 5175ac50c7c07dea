"""The eleven acceptance criteria, each at its stated tolerance.

Every test records one line per criterion; the lines are repeated in a
summary section at the end of the pytest run.
"""

import itertools
import time

import numpy as np
import pytest

from quakeopt import problem
from quakeopt.analysis import MagnitudeHistogram, gutenberg_richter_fit, magnitude_histogram, poisson_aggregate_check
from quakeopt.cli import main as cli_main
from quakeopt.engine import EngineConfig, run_optimizer
from quakeopt.hypervolume import hypervolume_2d
from quakeopt.pareto import ParetoArchive, Solution, dominance_matrix, fitness_assignment, nondominated_filter
from quakeopt.seismic import (
    SeismicParams,
    control_magnitude,
    cumulative_magnitudes,
    dispersion_counts,
    hypocentral_displace,
    magnitude_from_power,
    make_rng,
    normalize,
    normalize_coordinate,
    poisson_location,
    relevance_radius,
    seismic_power,
    spawn_epicenter,
)

from conftest import record

N_SEEDS = 10


@pytest.fixture(scope="module")
def reference():
    return problem.reference_instance()


@pytest.fixture(scope="module")
def grid_optimum(reference):
    levels = np.linspace(0.0, 1.0, 21)
    grid = np.array(list(itertools.product(levels, repeat=4)))
    obj, viol = problem.evaluate_batch(reference, reference.expand(grid))
    penalised = obj[:, 0] + viol[:, 3]
    return float(penalised.min())


@pytest.fixture(scope="module")
def reference_runs(reference):
    return [run_optimizer(reference, EngineConfig(seed=s)) for s in range(N_SEEDS)]


def test_criterion_01_normalisation():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_d = worst_c = 0.0
    for _ in range(1000):
        n = int(rng.integers(4, 65))
        p = SeismicParams(vartheta=float(10 ** rng.uniform(-6, 0)))
        fit = rng.uniform(0, 100, size=n) * rng.choice([1e-3, 1, 1e3])
        d = dispersion_counts(fit, p)
        worst_d = max(worst_d, abs(d.raw.sum() - p.m) / p.m)
        mags = rng.uniform(0.01, 10, size=n)
        total = control_magnitude(mags)
        worst_c = max(worst_c, abs(cumulative_magnitudes(fit, mags, p).sum() - total) / total)
    elapsed = time.perf_counter() - t0
    ok = worst_d <= 1e-9 and worst_c <= 1e-9 and elapsed < 5
    record(1, ok, f"max rel err D {worst_d:.1e}, C {worst_c:.1e}, {elapsed:.2f} s")
    assert ok


def test_criterion_02_power_magnitude_inverse():
    rng = np.random.default_rng(2)
    n = 100_000
    d = rng.uniform(1e-6, 10, n)
    M = rng.uniform(1e-3, 10, n)
    b0 = rng.uniform(0.1, 10, n)
    b1 = rng.uniform(0.5, 3, n)
    sig = rng.uniform(-2, 2, n)
    worst = 0.0
    for i in range(n):
        p = SeismicParams(b0=b0[i], b1=b1[i], sigma_lnP=sig[i])
        back = magnitude_from_power(seismic_power(d[i], M[i], p), d[i], p)
        worst = max(worst, abs(back - M[i]) / M[i])
    ok = worst < 1e-12
    record(2, ok, f"max rel roundtrip err {worst:.2e} over {n} draws")
    assert ok


def test_criterion_03_radius_constants():
    p = SeismicParams(chi=1.0)
    r = relevance_radius([2.05], p)
    expected = 10 ** (0.414 * 4.1 - 1.696)
    ok = (p.Q1, p.Q2) == (0.414, 1.696) and abs(r - expected) <= 1e-9 and abs(r - 1.00323) < 5e-6
    record(3, ok, f"r = {r:.12f} (closed form {expected:.12f})")
    assert ok


def test_criterion_04_archive_correctness():
    rng = np.random.default_rng(4)
    streams = [rng.integers(0, 12, size=(200, d)).astype(float) for d in (2, 3) for _ in range(100)]
    mismatches = 0
    t0 = time.perf_counter()
    archives = []
    for obj in streams:
        arc = ParetoArchive()
        for i, o in enumerate(obj):
            arc.insert(Solution(i, np.zeros(1), o))
        archives.append(sorted(m.id for m in arc))
    elapsed = time.perf_counter() - t0
    for obj, ids in zip(streams, archives):
        mismatches += ids != nondominated_filter(obj).tolist()
    ok = mismatches == 0 and elapsed < 10
    record(4, ok, f"{len(streams)} streams, {mismatches} mismatches, archive time {elapsed:.2f} s")
    assert ok


def test_criterion_05_fitness_semantics():
    rng = np.random.default_rng(5)
    bad = 0
    for _ in range(300):
        n, d = int(rng.integers(2, 60)), int(rng.integers(2, 4))
        obj = rng.integers(0, 6, size=(n, d)).astype(float)
        pen = np.where(rng.uniform(size=n) < 0.3, rng.uniform(0.01, 3, size=n), 0.0)
        raw = fitness_assignment(obj, pen).raw
        nd_feasible = ~dominance_matrix(obj).any(axis=0) & (pen == 0)
        bad += not (np.all(raw[nd_feasible] == 0.0) and np.all(raw[~nd_feasible] > 0))
    ok = bad == 0
    record(5, ok, f"300 pools, {bad} with alpha != 0 on a feasible non-dominated member (or = 0 elsewhere)")
    assert ok


def test_criterion_06a_hypervolume_monte_carlo():
    rng = np.random.default_rng(6)
    ref = np.array([1.0, 1.0])
    worst = 0.0
    for _ in range(100):
        pts = rng.uniform(0, 1, size=(10, 2))
        hv = hypervolume_2d(pts, ref)
        s = rng.uniform(0, 1, size=(1_000_000, 2))
        covered = np.zeros(len(s), dtype=bool)
        for p in pts:
            covered |= (s[:, 0] >= p[0]) & (s[:, 1] >= p[1])
        worst = max(worst, abs(hv - covered.mean()) / covered.mean())
    ok = worst < 0.01
    record(6, ok, f"sweep vs 1e6-sample Monte Carlo on 100 fronts: max rel diff {worst:.2e}")
    assert ok


def test_criterion_06b_staircase_literal_value():
    hv = hypervolume_2d([(1, 3), (2, 2), (3, 1)], (4, 4))
    ok = hv == 8.0
    record(6, ok, f"staircase {{(1,3),(2,2),(3,1)}} ref (4,4): {hv!r}, criterion states 8 "
                  "(exact area is 6 = 3 + 2 + 1; see decisions ledger)")
    assert ok


def test_criterion_07_end_to_end(reference, grid_optimum, reference_runs):
    rows = []
    for rep in reference_runs:
        b = rep.best
        pen = float(b.objectives[0] + b.violations[3])
        h_zero = bool(np.all(b.violations[:3] == 0))
        within = pen <= grid_optimum + 0.05 * abs(grid_optimum)
        rows.append((pen, h_zero, within, rep.wall_time))
    bests = np.array([r[0] for r in rows])
    med = float(np.median(bests))
    n_ok = sum(r[1] and r[2] and r[3] < 60 for r in rows)
    ok = (med <= grid_optimum + 0.05 * abs(grid_optimum)
          and all(r[1] for r in rows) and max(r[3] for r in rows) < 60 and n_ok * 2 > len(rows))
    record(7, ok, f"grid optimum {grid_optimum:.5f}, median best {med:.5f} "
                  f"({100 * (med - grid_optimum) / abs(grid_optimum):+.2f}%), "
                  f"{n_ok}/{len(rows)} seeds pass, max run {max(r[3] for r in rows):.1f} s")
    assert ok


def test_criterion_08_gutenberg_richter(reference_runs):
    M = np.arange(1.0, 11.0)
    fit = gutenberg_richter_fit(MagnitudeHistogram.from_counts(M, 10 ** (10 - M)))
    exact = abs(fit.a - 10) <= 1e-6 and abs(fit.b - 1) <= 1e-6
    slopes = []
    for rep in reference_runs:
        mags = np.concatenate([np.asarray(g) for g in rep.magnitude_trace])
        slopes.append(gutenberg_richter_fit(magnitude_histogram(mags, 20)).b)
    ok = exact and min(slopes) > 0
    record(8, ok, f"exact fit a={fit.a:.9f} b={fit.b:.9f}; trace slopes b in "
                  f"[{min(slopes):.3f}, {max(slopes):.3f}] over {len(slopes)} runs")
    assert ok


def test_criterion_09_poisson():
    rep = poisson_aggregate_check([100.0], 1, 1000, np.random.default_rng(9))
    parts = poisson_aggregate_check([12.5, 30.0, 57.5], 1, 1000, np.random.default_rng(10))
    ok = 0.85 <= rep.ratio <= 1.15 and parts.lambda_q == 100.0 and rep.lambda_q == 100.0
    record(9, ok, f"mean/variance {rep.ratio:.4f} at lambda(q)=100, 1000 iterations; "
                  f"additivity 12.5+30+57.5 -> {parts.lambda_q!r}")
    assert ok


def test_criterion_10_determinism(tmp_path):
    spec = tmp_path / "ref.json"
    assert cli_main(["generate", "--reference", "--out", str(spec)]) == 0
    outs = {}
    for name, seed in (("a", 11), ("b", 11), ("c", 12)):
        assert cli_main(["optimize", "--spec", str(spec), "--seed", str(seed), "--out", str(tmp_path / name)]) == 0
        outs[name] = (tmp_path / name / "archive.csv").read_bytes()
    ok = outs["a"] == outs["b"] and outs["a"] != outs["c"]
    record(10, ok, f"same seed identical: {outs['a'] == outs['b']}, different seed differs: {outs['a'] != outs['c']}")
    assert ok


def test_criterion_11_bounds_safety():
    rng = make_rng(11)
    p = SeismicParams()
    violations = calls = 0

    def bad(x, low, up):
        return bool(np.any((x < low) | (x >= up)))

    # spawn: 100k calls
    for _ in range(100_000):
        dim = int(rng.integers(1, 6))
        low = rng.uniform(0, 5, dim)
        up = low + 10 ** rng.uniform(-3, 2, dim)
        e = rng.uniform(low, up)
        refs = rng.uniform(low - (up - low), up + (up - low), size=(int(rng.integers(2, 8)), dim))
        x = spawn_epicenter(e, refs, p, rng, magnitude=float(rng.uniform(0.01, 5)),
                            radius=float(10 ** rng.uniform(-3, 1)), low=low, up=up)
        violations += bad(x, low, up)
        calls += 1
    # hypocentral displacement followed by normalisation, and Poisson locations
    lows = rng.uniform(0, 5, 800_000)
    ups = lows + 10 ** rng.uniform(-6, 3, 800_000)
    xs = rng.uniform(-1e6, 1e6, 800_000) * 10 ** rng.uniform(-8, 0, 800_000)
    for i in range(400_000):
        v = hypocentral_displace([xs[i]], 0, float(ups[i] - lows[i]) * 3, 10 ** rng.uniform(-3, 3), rng)
        violations += bad(normalize_coordinate(v, lows[i], ups[i]), lows[i], ups[i])
        calls += 1
    for i in range(400_000, 800_000):
        violations += bad(poisson_location(xs[i], p, rng, lows[i], ups[i]), lows[i], ups[i])
        calls += 1
    # vectorised normalisation: 100k calls on batches
    for _ in range(100_000):
        low = rng.uniform(0, 5, 4)
        up = low + 10 ** rng.uniform(-6, 3, 4)
        with np.errstate(over="ignore", invalid="ignore"):
            v = rng.normal(0, 10 ** rng.uniform(-300, 300), 4) * rng.choice([1, -1e-300, 1e300], 4)
        v = np.where(np.isfinite(v), v, 0.0)
        violations += bad(normalize(v, low, up), low, up)
        calls += 1
    ok = violations == 0 and calls == 1_000_000
    record(11, ok, f"{calls} calls, {violations} coordinates outside [B_low, B_up)")
    assert ok
