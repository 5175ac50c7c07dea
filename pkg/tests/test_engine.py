import numpy as np
import pytest

from quakeopt import problem
from quakeopt.engine import EngineConfig, location_magnitudes, location_power, run_optimizer
from quakeopt.pareto import dominance_matrix
from quakeopt.reporting import archive_csv
from quakeopt.seismic import SeismicParams


@pytest.fixture(scope="module")
def spec():
    return problem.reference_instance()


@pytest.fixture(scope="module")
def short_run(spec):
    return run_optimizer(spec, EngineConfig(seed=1, max_generations=25))


def test_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(population_size=3)
    with pytest.raises(ValueError):
        EngineConfig(p_cross=1.0)
    with pytest.raises(ValueError):
        EngineConfig(selection="greedy")
    with pytest.raises(ValueError):
        EngineConfig.from_dict({"populaton_size": 10})
    cfg = EngineConfig.from_dict({"population_size": 10, "seismic": {"m": 20.0}})
    assert cfg.p == 10 and cfg.seismic.m == 20.0
    assert EngineConfig.from_dict(cfg.to_dict()) == cfg


def test_location_magnitude_inverts_power():
    f = np.array([0.0, 1.0, 3.0])
    d = np.array([0.5, 0.5, 2.0])
    assert location_power(f).tolist() == [1.0, 0.5, 0.25]
    assert np.allclose(location_magnitudes(f, d, SeismicParams()), [0.5, 0.25, 0.5])


def test_archive_is_nondominated_and_feasible(short_run):
    obj = np.array([s.objectives for s in short_run.archive])
    assert not dominance_matrix(obj).any()
    assert all(s.feasible for s in short_run.archive)


def test_best_is_non_increasing(short_run):
    traj = np.array(short_run.best_trajectory)
    assert len(traj) == short_run.generations
    assert np.all(np.diff(traj) <= 0)


def test_positions_in_bounds(short_run, spec):
    pos = np.array([s.position for s in short_run.archive])
    low, up = spec.B_low[spec.active], spec.B_up[spec.active]
    assert np.all((pos >= low) & (pos < up))


def test_hypervolume_trajectory_recorded(short_run):
    hv = short_run.hypervolume_trajectory
    assert len(hv) == short_run.generations and min(hv) >= 0


def test_same_seed_same_archive_bytes(spec, short_run):
    again = run_optimizer(spec, EngineConfig(seed=1, max_generations=25))
    assert archive_csv(spec, again.archive) == archive_csv(spec, short_run.archive)


def test_different_seed_different_archive(spec, short_run):
    other = run_optimizer(spec, EngineConfig(seed=2, max_generations=25))
    assert archive_csv(spec, other.archive) != archive_csv(spec, short_run.archive)


def test_stagnation_stop(spec):
    rep = run_optimizer(spec, EngineConfig(seed=0, max_generations=400, stall_gens=1))
    assert rep.stop_reason == "stagnation"
    assert rep.generations < 400


@pytest.mark.parametrize("kw", [{"n_objectives": 2}, {"selection": "literal"}, {"p": 10}])
def test_variants_run(spec, kw):
    rep = run_optimizer(spec, EngineConfig(seed=3, max_generations=5, **kw))
    assert rep.generations == 5
    assert rep.best is not None


def test_full_dimensional_instance():
    spec = problem.generate_network_spec(3, 2, seed=5)
    rep = run_optimizer(spec, EngineConfig(seed=0, max_generations=5, population_size=12))
    assert rep.magnitude_trace and all(len(m) > 0 for m in rep.magnitude_trace)


def test_config_round_trips_through_dict():
    cfg = EngineConfig(max_generations=7, seismic=SeismicParams(m=20.0, d_max=10))
    back = EngineConfig.from_dict(cfg.to_dict())
    assert back == cfg
    with pytest.raises(ValueError):
        EngineConfig.from_dict({"seismic": {"nope": 1}})
