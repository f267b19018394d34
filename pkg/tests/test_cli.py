import numpy as np
import pytest

from relfeat import cli
from relfeat.errors import ConvergenceError
from relfeat.io import load_dataset, read_features, read_results

from synthetic import write_linqs


@pytest.fixture(scope="module")
def raw(tmp_path_factory):
    d = tmp_path_factory.mktemp("raw")
    return write_linqs(d, sizes=(40, 30, 20), n_edges=200, n_words=60, per_doc=6, n_isolated=2, seed=9)


@pytest.fixture
def ingested(raw, tmp_path):
    content, cites = raw
    assert cli.main(["ingest", "--content", str(content), "--cites", str(cites), "--name", "toy",
                     "--out", str(tmp_path / "ds")]) == 0
    return tmp_path / "ds"


def test_ingest_summary(raw, tmp_path, capsys):
    content, cites = raw
    assert cli.main(["ingest", "--content", str(content), "--cites", str(cites), "--out", str(tmp_path / "d")]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("synth: 92 nodes,") and "3 classes, 60 attributes" in line
    assert load_dataset(tmp_path / "d").n == 92


def test_ingest_edgelist(tmp_path):
    (tmp_path / "e.txt").write_text("0 1\n1 2 2.5\n", encoding="utf-8")
    (tmp_path / "l.txt").write_text("0 a\n2 b\n", encoding="utf-8")
    assert cli.main(["ingest", "--edgelist", str(tmp_path / "e.txt"), "--labels", str(tmp_path / "l.txt"),
                     "--n", "4", "--out", str(tmp_path / "d")]) == 0
    ds = load_dataset(tmp_path / "d")
    assert ds.n == 4
    assert ds.labels.classes == ("a", "b")


def test_end_to_end_train_and_eval(ingested, tmp_path, capsys):
    feats = tmp_path / "f.txt"
    assert cli.main(["features", "--dataset", str(ingested), "--recipe", "ncc[1,2]", "--ratio", "0.5",
                     "--out", str(feats)]) == 0
    X, y = read_features(feats)
    assert X.n_cols == 6 and X.n_rows == 92
    marks = (tmp_path / "f.txt.split").read_text().split()
    assert marks.count("train") + marks.count("test") == sum(v is not None for v in y)
    assert cli.main(["train", "--features", str(feats), "--grid", "--out", str(tmp_path / "m.txt")]) == 0
    assert cli.main(["eval", "--model", str(tmp_path / "m.txt"), "--features", str(feats)]) == 0
    out = capsys.readouterr().out
    acc = float(out.split("accuracy ")[1].split()[0])
    assert 0.0 <= acc <= 1.0
    assert f"on {marks.count('test')} rows" in out


def test_feature_overrides(ingested, tmp_path):
    out = tmp_path / "r.txt"
    assert cli.main(["features", "--dataset", str(ingested), "--recipe", "rwr", "--r", "0.5", "--eps", "0",
                     "--out", str(out)]) == 0
    X, _ = read_features(out)
    assert X.n_cols == 92
    assert cli.main(["features", "--dataset", str(ingested), "--recipe", "ids", "--labeled-only",
                     "--distances", "1", "--out", str(out)]) == 0
    X, _ = read_features(out)
    assert [b.name for b in X.blocks] == ["ids-labeled-d1"]
    assert not (tmp_path / "r.txt.split").exists()


def test_experiment_and_summarize(ingested, raw, tmp_path):
    content, cites = raw
    (tmp_path / "cfg.txt").write_text(
        f"recipes = majority, ncc[1]\nratios = 0.3, 0.6\nrepetitions = 2\ngrid = 1\n"
        f"content = {content}\ncites = {cites}\nname = toy\n",
        encoding="utf-8",
    )
    res = tmp_path / "res.csv"
    assert cli.main(["experiment", "--config", str(tmp_path / "cfg.txt"), "--out", str(res), "--jobs", "1"]) == 0
    recs = read_results(res)
    assert len(recs) == 8
    assert cli.main(["summarize", "--in", str(res), "--out", str(tmp_path / "s.tsv"),
                     "--plot-spec", str(tmp_path / "p.json")]) == 0
    lines = (tmp_path / "s.tsv").read_text().splitlines()
    assert len(lines) == 1 + 4
    assert (tmp_path / "p.json").exists()


def test_exit_code_invalid_input(tmp_path, capsys):
    assert cli.main(["features", "--dataset", str(tmp_path / "missing"), "--recipe", "ncc",
                     "--out", str(tmp_path / "x")]) == cli.EXIT_INPUT
    assert "error:" in capsys.readouterr().err


def test_exit_code_bad_recipe(ingested, tmp_path):
    assert cli.main(["features", "--dataset", str(ingested), "--recipe", "ncc[0]",
                     "--out", str(tmp_path / "x")]) == cli.EXIT_INPUT
    assert cli.main(["features", "--dataset", str(ingested), "--recipe", "wvrn",
                     "--out", str(tmp_path / "x")]) == cli.EXIT_INPUT


def test_exit_code_convergence(ingested, tmp_path, monkeypatch):
    feats = tmp_path / "f.txt"
    assert cli.main(["features", "--dataset", str(ingested), "--recipe", "ncc[1]", "--out", str(feats)]) == 0

    def stuck(*args, **kwargs):
        raise ConvergenceError("solver stalled", residual=np.inf)

    monkeypatch.setattr(cli, "train_logreg_ova", stuck)
    assert cli.main(["train", "--features", str(feats), "--C", "1", "--out", str(tmp_path / "m")]) == cli.EXIT_CONVERGENCE
