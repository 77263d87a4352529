import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_measure
from mixpost import io as mio
from mixpost.cli import main
from mixpost.ot_exact import mixture_wasserstein_sq
from mixpost.sliced import sliced_distance

FAST = ["--iters", "30", "--burn-in", "20", "--K", "8"]
EVAL_FAST = ["--eval-L", "10", "--resolution", "10"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """simulate -> fit -> summarize -> evaluate, once for the module."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["simulate", "--out", str(root / "sim"), "--n", "40", "--seed", "2"]) == 0
    assert main(["fit", "--data", str(root / "sim" / "data.csv"), "--out", str(root / "fit"), "--seed", "2", *FAST]) == 0
    assert main(["summarize", "--draws", str(root / "fit" / "draws.jsonl"), "--data", str(root / "sim" / "data.csv"),
                 "--out", str(root / "sum"), "--L", "15", "--refresh-iters", "2"]) == 0
    assert main(["evaluate", "--draws", str(root / "fit" / "draws.jsonl"), "--data", str(root / "sim" / "data.csv"),
                 "--summaries", str(root / "sum"), "--out", str(root / "eval"),
                 "--truth", str(root / "sim" / "truth.json"), "--truth-labels", str(root / "sim" / "labels.csv"),
                 *EVAL_FAST]) == 0
    return root


def test_outputs_exist(workdir):
    for rel in ["sim/data.csv", "sim/truth.json", "sim/labels.csv", "fit/draws.jsonl", "fit/run.json",
                "sum/summary_mix_sw.json", "sum/labels_binder.csv", "eval/clustering.csv", "eval/density.csv",
                "eval/mixing_measure.csv", "eval/grid_Mix-SW.csv", "eval/grid_truth.csv"]:
        assert (workdir / rel).is_file(), rel


def test_provenance_everywhere(workdir):
    run = mio.read_json(workdir / "fit" / "run.json")
    h, seed = run["meta"]["config_hash"], run["meta"]["seed"]
    assert seed == 2 and len(h) == 16
    first = json.loads((workdir / "fit" / "draws.jsonl").read_text().splitlines()[0])
    assert first["meta"]["config_hash"] == h
    for rel in ["sim/data.csv", "eval/clustering.csv", "eval/density.csv"]:
        text = (workdir / rel).read_text()
        assert "# config_hash=" in text and "# seed=2" in text
    summ = mio.read_json(workdir / "sum" / "summary_vi.json")
    assert summ["meta"]["seed"] == 2 and summ["meta"]["config"]["refresh_iters"] == 2


def test_seventeen_digits(workdir):
    lines = [l for l in (workdir / "eval" / "density.csv").read_text().splitlines() if not l.startswith("#")]
    for row in lines[1:]:
        for field in row.split(",")[1:]:
            x = float(field)
            assert mio.fmt(x) == field


def test_fit_inherits_to_summarize(workdir):
    # summarize reads the prior and truncation from the draws metadata
    summ = mio.read_json(workdir / "sum" / "summary_binder.json")
    assert summ["meta"]["config"]["K"] == 8
    assert len(summ["refreshed_measures"]) == 2
    assert len(summ["refreshed_measures"][0]["weights"]) == 8


def test_fit_deterministic(workdir, tmp_path):
    data = str(workdir / "sim" / "data.csv")
    assert main(["fit", "--data", data, "--out", str(tmp_path / "a"), "--seed", "2", *FAST]) == 0
    assert (tmp_path / "a" / "draws.jsonl").read_bytes() == (workdir / "fit" / "draws.jsonl").read_bytes()


def test_evaluate_deterministic(workdir, tmp_path):
    args = ["evaluate", "--draws", str(workdir / "fit" / "draws.jsonl"), "--data", str(workdir / "sim" / "data.csv"),
            "--summaries", str(workdir / "sum"), "--out", str(tmp_path), "--no-grids",
            "--truth", str(workdir / "sim" / "truth.json"), "--truth-labels", str(workdir / "sim" / "labels.csv"),
            *EVAL_FAST]
    assert main(args) == 0
    for name in ("clustering", "density", "mixing_measure"):
        assert (tmp_path / f"{name}.csv").read_bytes() == (workdir / "eval" / f"{name}.csv").read_bytes()
    assert not (tmp_path / "grid_truth.csv").exists()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 12, "seed": 5}))
    assert main(["simulate", "--out", str(tmp_path / "a"), "--config", str(cfg)]) == 0
    assert mio.read_data_csv(tmp_path / "a" / "data.csv").shape == (12, 2)
    assert main(["simulate", "--out", str(tmp_path / "b"), "--config", str(cfg), "--n", "7"]) == 0
    X = mio.read_data_csv(tmp_path / "b" / "data.csv")
    assert X.shape == (7, 2)
    assert "# seed=5" in (tmp_path / "b" / "data.csv").read_text()


def test_distances(tmp_path, rng, capsys):
    G1, G2 = random_measure(rng, 2, 2), random_measure(rng, 3, 2)
    mio.write_measure(tmp_path / "a.json", G1)
    mio.write_measure(tmp_path / "b.json", G2)
    assert main(["distances", str(tmp_path / "a.json"), str(tmp_path / "b.json"), "--L", "50", "--seed", "4",
                 "--prune-floor", "0"]) == 0
    out = json.loads(capsys.readouterr().out)
    for kind in ("vectorized", "mix_sw", "smix_w"):
        est = sliced_distance(kind, 2.0, 50, 4, G1, G2)
        assert out["distances"][kind]["value_pth_power"] == est.value
    assert out["distances"]["mixture_wasserstein"]["squared"] == pytest.approx(mixture_wasserstein_sq(G1, G2))
    assert "config_hash" in out["meta"]


@pytest.mark.parametrize("argv", [
    ["simulate", "--out", "{t}/x", "--n", "0"],
    ["fit", "--data", "{t}/missing.csv", "--out", "{t}/x"],
    ["fit", "--data", "{t}/bad.csv", "--out", "{t}/x"],
    ["simulate", "--out", "{t}/x", "--config", "{t}/bad.json"],
    ["simulate", "--out", "{t}/x", "--config", "{t}/unknown.json"],
    ["distances", "{t}/a.json", "{t}/c.json"],
    ["summarize", "--draws", "{t}/empty.jsonl", "--data", "old_faithful", "--out", "{t}/x"],
])
def test_validation_errors_exit_2(tmp_path, rng, argv, capsys):
    (tmp_path / "bad.csv").write_text("y1,y2\n1,2\n3,oops\n")
    (tmp_path / "bad.json").write_text("{")
    (tmp_path / "unknown.json").write_text('{"bogus": 1}')
    (tmp_path / "empty.jsonl").write_text("")
    mio.write_measure(tmp_path / "a.json", random_measure(rng, 2, 2))
    mio.write_measure(tmp_path / "c.json", random_measure(rng, 2, 3))
    assert main([a.format(t=tmp_path) for a in argv]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_csv_names_line(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("y1,y2\n1,2\n3,oops\n")
    assert main(["fit", "--data", str(tmp_path / "bad.csv"), "--out", str(tmp_path / "x")]) == 2
    assert "line 3" in capsys.readouterr().err


def test_summarize_row_mismatch(workdir, tmp_path):
    assert main(["summarize", "--draws", str(workdir / "fit" / "draws.jsonl"), "--data", "old_faithful",
                 "--out", str(tmp_path)]) == 2


def test_runtime_error_exit_1(tmp_path, monkeypatch):
    import mixpost.cli as cli

    def boom(args):
        raise np.linalg.LinAlgError("not positive definite")

    monkeypatch.setitem(cli.COMMANDS, "simulate", boom)
    assert main(["simulate", "--out", str(tmp_path)]) == 1

    def boom2(args):
        raise RuntimeError("unexpected")

    monkeypatch.setitem(cli.COMMANDS, "simulate", boom2)
    assert main(["simulate", "--out", str(tmp_path)]) == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "mixpost", "simulate", "--out", str(tmp_path), "--n", "5"],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "mixpost", "simulate", "--out", str(tmp_path), "--n", "-3"],
                       capture_output=True, text=True)
    assert r.returncode == 2
