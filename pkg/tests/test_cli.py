import json

import pytest

from qproject.cli import main


def run(capsys, *args):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def one_dim(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"n": 1, "m": 2, "Q": [2], "c": [-2], "A": [1, -1], "b": [1, 1]}))
    return path


def test_gen_lower_bound(tmp_path, capsys):
    code, _, _ = run(capsys, "gen", "--family", "lower_bound", "--n", 6, "--k", 1, "--out", tmp_path / "d")
    assert code == 0
    names = sorted(p.name for p in (tmp_path / "d").iterdir())
    assert names == ["instance_0000.json", "instance_0001.json", "instance_0002.json", "instance_0003.json",
                     "manifest.json"]


def test_solve_identity(one_dim, capsys):
    code, out, _ = run(capsys, "solve", "--instance", one_dim, "--P", "identity", "--gamma", 0)
    assert code == 0
    d = json.loads(out)
    assert d["value"] == -1 and d["y"] == [1.0] and d["active"] == []
    assert set(d["kkt_residuals"]) == {"stationarity", "primal", "dual", "complementarity"}


def test_solve_default_gamma_reports_interval(one_dim, capsys):
    code, out, _ = run(capsys, "solve", "--instance", one_dim)
    d = json.loads(out)
    lo, hi = d["value_interval"]
    assert d["gamma"] == 1e-6 and hi == d["value"] and hi - lo == pytest.approx(1e-6 / 2)
    assert lo <= -1 <= hi + 1e-12


def test_help_exits_zero(capsys):
    code, out, _ = run(capsys, "train", "--help")
    assert code == 0 and "usage" in out


def test_usage_errors(capsys, one_dim):
    assert run(capsys)[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "solve", "--iters", "x")[0] == 1
    assert run(capsys, "solve")[0] == 1
    code, _, err = run(capsys, "solve", "--instance", one_dim, "--P", "banana")
    assert code == 1 and err.count("\n") >= 1


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 1, "m": 1, "c": [1], "A": [1], "b": [1]}')
    code, _, err = run(capsys, "solve", "--instance", bad)
    assert code == 2 and "'Q'" in err
    code, _, _ = run(capsys, "solve", "--instance", tmp_path / "missing.json")
    assert code == 2
    neg = tmp_path / "neg.json"
    neg.write_text(json.dumps({"n": 1, "m": 2, "Q": [1], "c": [1], "A": [1, -1], "b": [-1, 1]}))
    assert run(capsys, "train", "--instance", neg)[0] == 2


def test_solver_failure(tmp_path, capsys):
    lp = tmp_path / "lp.json"
    lp.write_text(json.dumps({"n": 1, "m": 2, "Q": [0], "c": [1], "A": [1, -1], "b": [1, 1]}))
    # zero curvature with gamma 0: strict convexity is refused
    code, _, err = run(capsys, "solve", "--instance", lp, "--gamma", 0)
    assert code == 3 and "perturb" in err


def test_train_and_eval(tmp_path, capsys):
    d = tmp_path / "data"
    run(capsys, "gen", "--family", "random_pd", "--n", 3, "--m", 7, "--count", 3, "--out", d)
    code, _, _ = run(capsys, "train", "--instance", d, "--k", 2, "--iters", 3, "--out", tmp_path / "rep.json")
    assert code == 0
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert len(rep["trace"]) == 4 and rep["shape"] == [3, 2]
    code, out, _ = run(capsys, "eval", "--instance", d, "--P", f"file:{tmp_path / 'rep.json'}")
    assert code == 0
    assert json.loads(out)["mean_loss"] == pytest.approx(rep["trace"][-1][1])


def test_train_net_and_eval(tmp_path, capsys):
    d = tmp_path / "data"
    run(capsys, "gen", "--family", "random_pd", "--n", 2, "--m", 5, "--count", 2, "--out", d)
    code, _, _ = run(capsys, "train-net", "--instance", d, "--widths", "4", "--iters", 2, "--out", tmp_path / "net")
    assert code == 0
    code, out, _ = run(capsys, "eval", "--instance", d, "--net", tmp_path / "net" / "net.json")
    assert code == 0
    report = json.loads((tmp_path / "net" / "report.json").read_text())
    assert json.loads(out)["mean_loss"] == pytest.approx(report["trace"][-1][1])


def test_override_flag(tmp_path, capsys):
    d = tmp_path / "data"
    code, _, _ = run(capsys, "gen", "--n", 2, "--set", "count=3", "--out", d)
    assert code == 0 and len(json.loads((d / "manifest.json").read_text())["instances"]) == 3
    assert run(capsys, "gen", "--n", 2, "--set", "nope=1", "--out", d)[0] == 1


def test_bench_outputs(tmp_path, capsys):
    d = tmp_path / "data"
    run(capsys, "gen", "--family", "random_pd", "--n", 3, "--m", 7, "--count", 3, "--out", d)
    code, out, _ = run(capsys, "bench", "--instance", d, "--ks", "1,2", "--iters", 2, "--out", tmp_path / "b")
    assert code == 0
    assert (tmp_path / "b" / "bench.csv").read_text() == out
    assert json.loads((tmp_path / "b" / "bench.json").read_text())["split"] == [3, 3]
    assert not [p for p in (tmp_path / "b").iterdir() if p.name.startswith(".")]
