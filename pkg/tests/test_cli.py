import json

import pytest

from quakeopt import problem
from quakeopt.cli import main


@pytest.fixture
def ref_spec(tmp_path):
    path = tmp_path / "ref.json"
    assert main(["generate", "--reference", "--out", str(path)]) == 0
    return path


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["generate", "--nodes", "4", "--types", "2", "--seed", "7", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    spec = problem.load_network_spec(a)
    assert (spec.N, spec.T) == (4, 2)


def test_missing_spec_exit_code(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["optimize", "--spec", str(missing), "--out", str(tmp_path / "r")]) == 2
    assert str(missing) in capsys.readouterr().err
    assert not (tmp_path / "r").exists()


def test_invalid_spec_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["optimize", "--spec", str(bad), "--out", str(tmp_path / "r")]) == 1
    assert "bad.json" in capsys.readouterr().err


def test_optimize_outputs(ref_spec, tmp_path):
    out = tmp_path / "run"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"population_size": 20, "max_generations": 8}))
    assert main(["optimize", "--spec", str(ref_spec), "--config", str(cfg), "--seed", "4",
                 "--selection", "literal", "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {"manifest.json", "archive.csv", "run.json", "magnitudes.csv"}
    header = (out / "archive.csv").read_text().splitlines()[0].split(",")
    assert header == ["solution_id"] + [f"x_{k}" for k in range(8)] + ["G", "F1", "F2", "h1", "h2", "h3", "penalty"]
    run = json.loads((out / "run.json").read_text())
    assert run["seed"] == 4 and run["config"]["selection"] == "literal"
    assert len(run["hypervolume_per_generation"]) == run["generations"] == 8
    assert json.loads((out / "manifest.json").read_text())["seed"] == 4


def test_optimize_same_seed_same_bytes(ref_spec, tmp_path):
    outs = []
    for name, seed in (("a", 5), ("b", 5), ("c", 6)):
        out = tmp_path / name
        assert main(["optimize", "--spec", str(ref_spec), "--seed", str(seed), "--generations", "10",
                     "--out", str(out)]) == 0
        outs.append((out / "archive.csv").read_bytes())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


def test_analyze_reports(ref_spec, tmp_path):
    out = tmp_path / "run"
    assert main(["optimize", "--spec", str(ref_spec), "--generations", "10", "--out", str(out)]) == 0
    assert main(["analyze", str(out)]) == 0
    rep = json.loads((out / "analysis.json").read_text())
    assert set(rep) == {"histogram", "gr_fit", "poisson_check"}
    assert rep["gr_fit"]["b"] > 0
    rows = (out / "histogram.csv").read_text().splitlines()
    assert rows[0] == "bin,count,fitted" and len(rows) == 21


def test_analyze_gr_on_exact_data(tmp_path):
    # counts 10**(6 - M) at M = 1..6; six equal bins over [1, 6] put M = i + 1
    # in bin i with midpoint 17/12 + 5i/6, so log10(n) = 6.7 - 1.2 * midpoint
    lines = ["generation,magnitude"]
    for m in range(1, 7):
        lines += [f"1,{float(m)}"] * 10 ** (6 - m)
    (tmp_path / "magnitudes.csv").write_text("\n".join(lines) + "\n")
    assert main(["analyze", str(tmp_path), "--gr-fit", "--bins", "6"]) == 0
    rep = json.loads((tmp_path / "analysis.json").read_text())
    assert "poisson_check" not in rep
    assert rep["gr_fit"]["b"] == pytest.approx(1.2, abs=1e-6)
    assert rep["gr_fit"]["a"] == pytest.approx(6.7, abs=1e-6)


def test_analyze_empty_trace_leaves_nothing(tmp_path, capsys):
    (tmp_path / "magnitudes.csv").write_text("generation,magnitude\n")
    assert main(["analyze", str(tmp_path)]) == 1
    assert "empty" in capsys.readouterr().err
    assert sorted(p.name for p in tmp_path.iterdir()) == ["magnitudes.csv"]


def test_analyze_missing_trace(tmp_path):
    assert main(["analyze", str(tmp_path)]) == 2


def test_hypervolume_command(tmp_path, capsys):
    front = tmp_path / "f.csv"
    front.write_text("f1,f2\n1,3\n2,2\n3,1\n")
    out = tmp_path / "hv.json"
    assert main(["hypervolume", str(front), "--ref", "4", "4", "--out", str(out)]) == 0
    assert "hypervolume 6.0" in capsys.readouterr().out
    data = json.loads(out.read_text())
    assert data["hypervolume"] == 6.0 and data["contributions"] == [1.0, 1.0, 1.0]

    single = tmp_path / "s.csv"
    single.write_text("1,1\n")
    assert main(["hypervolume", str(single), "--ref", "2", "2"]) == 0
    assert "hypervolume 1.0" in capsys.readouterr().out


def test_hypervolume_errors(tmp_path, capsys):
    front = tmp_path / "f.csv"
    front.write_text("1,3\n2,2\n3,1\n")
    assert main(["hypervolume", str(front), "--ref", "2.5", "4"]) == 1
    assert "(3.0, 1.0)" in capsys.readouterr().err
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3\n")
    assert main(["hypervolume", str(bad), "--ref", "4", "4"]) == 1
