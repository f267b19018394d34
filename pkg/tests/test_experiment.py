import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relfeat.errors import InputError
from relfeat.graph import UNKNOWN, LabelAssignment, remove_singletons
from relfeat.io import ResultRecord, parse_linqs, write_results
from relfeat.experiment import (
    ExperimentConfig,
    FeatureBuilder,
    class_balanced_split,
    parse_recipe,
    read_config,
    run_experiment,
    summarize,
    write_plot_spec,
    write_summary,
)
from relfeat.experiment.recipe import format_recipe, recipe_model

from synthetic import CORA_CLASS_SIZES, write_linqs


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    d = tmp_path_factory.mktemp("small")
    content, cites = write_linqs(d, sizes=(90, 60, 45), n_edges=420, n_words=150, per_doc=8, n_isolated=4, seed=3)
    return parse_linqs(content, cites, name="small"), content, cites


def labels_of(sizes):
    return LabelAssignment(tuple(f"c{k}" for k in range(len(sizes))), np.repeat(np.arange(len(sizes)), sizes))


def test_split_examples():
    s = class_balanced_split(labels_of([5, 5]), 0.2, seed=0)
    assert len(s.train) == 2
    assert sorted(np.asarray(labels_of([5, 5]).y)[s.train].tolist()) == [0, 1]
    s = class_balanced_split(labels_of([4, 4]), 0.5, seed=1)
    assert len(s.train) == 4 and len(s.test) == 4
    assert not set(s.train) & set(s.test)
    assert sorted(np.concatenate([s.train, s.test]).tolist()) == list(range(8))


def test_split_counts_for_cora_class_sizes():
    s = class_balanced_split(labels_of(CORA_CLASS_SIZES), 0.1, seed=0)
    expected = sum(int(np.floor(0.1 * n + 0.5)) for n in CORA_CLASS_SIZES)
    assert len(s.train) == expected
    assert abs(len(s.train) - 271) <= 7


@given(st.lists(st.integers(1, 40), min_size=1, max_size=6), st.sampled_from([round(0.1 * k, 1) for k in range(1, 10)]),
       st.integers(0, 2**31))
@settings(max_examples=100, deadline=None)
def test_split_invariants(sizes, ratio, seed):
    labels = labels_of(sizes)
    s = class_balanced_split(labels, ratio, seed)
    assert not set(s.train.tolist()) & set(s.test.tolist())
    assert len(s.train) + len(s.test) == labels.n
    counts = np.bincount(labels.y[s.train], minlength=len(sizes))
    for n_c, k in zip(sizes, counts):
        if n_c >= 2:
            assert 1 <= k <= n_c - 1
            assert np.floor(ratio * n_c) - 1 <= k <= np.ceil(ratio * n_c) + 1
        else:
            assert k == 1
    again = class_balanced_split(labels, ratio, seed)
    assert np.array_equal(again.train, s.train)


def test_split_skips_unlabelled_nodes():
    labels = LabelAssignment(("a", "b"), [0, 0, 1, 1, UNKNOWN])
    s = class_balanced_split(labels, 0.5, 0)
    assert 4 not in s.train and 4 not in s.test


def test_split_rejects_bad_ratio():
    with pytest.raises(InputError):
        class_balanced_split(labels_of([3, 3]), 1.0, 0)


def test_recipe_parsing():
    assert format_recipe(parse_recipe("bow + neighbor-ids[1,2]")) == "bow+ids[1,2]"
    assert format_recipe(parse_recipe("ncc")) == "ncc[1,2,3]"
    assert format_recipe(parse_recipe("rwr")) == "rwr[0.9,0.0001]"
    assert format_recipe(parse_recipe("rwr[0.5,0]")) == "rwr[0.5,0]"
    assert recipe_model(parse_recipe("wvrn")) == "wvrn"
    assert recipe_model(parse_recipe("clusters[2,8]")) == "logreg"
    for bad in ["", "foo", "ncc[0]", "ncc[1,1]", "rwr[1.5]", "bow[1]", "bow+wvrn", "clusters[1]"]:
        with pytest.raises(InputError):
            parse_recipe(bad)


def test_feature_builder_column_arithmetic(small):
    ds = small[0]
    b = FeatureBuilder(ds)
    X = b.build(parse_recipe("bow+ncc[1,2,3]"))
    assert X.n_cols == ds.attributes.n_cols + 3 * ds.labels.n_classes
    assert [blk.name for blk in X.blocks] == ["bow", "ncc-d1", "ncc-d2", "ncc-d3"]


@pytest.mark.parametrize("recipe", ["ncc[1,2,3]", "ncp[1,2]", "ids-labeled[1,2]", "bow+ncc[1]"])
def test_test_labels_do_not_leak(small, recipe):
    ds = small[0]
    split = class_balanced_split(ds.labels, 0.3, seed=2)
    before = FeatureBuilder(ds).build(parse_recipe(recipe), split.train)
    y = ds.labels.y.copy()
    y[split.test] = (y[split.test] + 1) % ds.labels.n_classes
    ds.labels = LabelAssignment(ds.labels.classes, y)
    try:
        after = FeatureBuilder(ds).build(parse_recipe(recipe), split.train)
    finally:
        y[split.test] = (y[split.test] - 1) % ds.labels.n_classes
        ds.labels = LabelAssignment(ds.labels.classes, y)
    assert before == after


def test_record_cardinality_and_order(small):
    cfg = ExperimentConfig(["ncc[1]"], [0.3, 0.7], repetitions=3, base_seed=5, grid=[1.0])
    recs = run_experiment(cfg, small[0])
    assert len(recs) == 6
    assert [(r.ratio, r.seed) for r in recs] == [(0.3, 5), (0.3, 6), (0.3, 7), (0.7, 5), (0.7, 6), (0.7, 7)]
    assert all(r.recipe == "ncc[1]" and r.dataset == "small" for r in recs)


def test_majority_matches_class_prior(small):
    ds = small[0]
    recs = run_experiment(ExperimentConfig(["majority"], [0.5], repetitions=3), ds)
    _, labels, _ = remove_singletons(ds.graph, ds.labels)
    for r in recs:
        s = class_balanced_split(labels, 0.5, r.seed)
        top = np.bincount(labels.y[s.train]).argmax()
        assert r.accuracy == np.mean(labels.y[s.test] == top)
        assert r.accuracy == pytest.approx(np.bincount(labels.y).max() / labels.n, abs=0.03)


def test_singletons_removed_before_splits(small):
    ds = small[0]
    assert ds.graph.degrees().min() == 0
    recs = run_experiment(ExperimentConfig(["wvrn"], [0.5], repetitions=1), ds)
    assert len(recs) == 1


def test_csv_is_byte_identical(small, tmp_path):
    cfg = ExperimentConfig(["ncc[1,2]", "wvrn"], [0.2, 0.6], repetitions=2, grid=[0.1, 1.0])
    for name in ("a.csv", "b.csv"):
        write_results(run_experiment(cfg, small[0]), tmp_path / name)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_parallel_cells_match_serial(small):
    serial = ExperimentConfig(["ncc[1]", "clusters[2,4]"], [0.4], repetitions=2, grid=[1.0])
    parallel = ExperimentConfig(["ncc[1]", "clusters[2,4]"], [0.4], repetitions=2, grid=[1.0], jobs=2)
    assert run_experiment(serial, small[0]) == run_experiment(parallel, small[0])


def test_errors_carry_context(small):
    cfg = ExperimentConfig(["ncc[1]"], [0.5], repetitions=1, grid=[1.0])
    ds = small[0]
    keep = ds.labels.y.copy()
    ds.labels = LabelAssignment(ds.labels.classes + ("ghost",), keep)
    try:
        with pytest.raises(InputError, match=r"ncc\[1\], ratio 0.5, seed 0"):
            run_experiment(cfg, ds)
    finally:
        ds.labels = LabelAssignment(ds.labels.classes[:-1], keep)


def test_config_validation():
    with pytest.raises(InputError):
        ExperimentConfig([])
    with pytest.raises(InputError):
        ExperimentConfig(["ncc"], ratios=[0.15])
    with pytest.raises(InputError):
        ExperimentConfig(["ncc"], repetitions=0)
    with pytest.raises(InputError):
        ExperimentConfig(["nope"])


def test_read_config(tmp_path):
    (tmp_path / "cfg.txt").write_text(
        "# sweep\n"
        "recipes = ncc[1,2,3], bow+ids[1,2], wvrn\n"
        "ratios = 0.1, 0.5\n"
        "repetitions = 4\n"
        "base-seed = 7\n"
        "grid = 0.1, 1\n"
        "content = data/cora.content\n"
        "cites = /abs/cora.cites\n"
        "name = cora\n",
        encoding="utf-8",
    )
    cfg = read_config(tmp_path / "cfg.txt")
    assert cfg.recipes == ["ncc[1,2,3]", "bow+ids[1,2]", "wvrn"]
    assert cfg.ratios == [0.1, 0.5]
    assert (cfg.repetitions, cfg.base_seed, cfg.grid, cfg.folds) == (4, 7, [0.1, 1.0], 3)
    assert cfg.content == str(tmp_path / "data/cora.content")
    assert cfg.cites == "/abs/cora.cites"


@pytest.mark.parametrize("body", ["recipes = ncc\nfoo = 1\n", "ratios = 0.1\n", "recipes = ncc\nrepetitions = many\n",
                                  "recipes ncc\n"])
def test_read_config_errors(tmp_path, body):
    (tmp_path / "c.txt").write_text(body, encoding="utf-8")
    with pytest.raises(InputError):
        read_config(tmp_path / "c.txt")


def test_summarize_examples(tmp_path):
    one = summarize([ResultRecord("d", "r", 0.5, 0, 0.8)])
    assert (one[0].mean, one[0].std, one[0].n) == (0.8, 0.0, 1)
    two = summarize([ResultRecord("d", "r", 0.5, s, 0.7) for s in range(2)])
    assert two[0].std == 0.0
    three = summarize([ResultRecord("d", "r", 0.5, s, a) for s, a in enumerate([0.5, 0.6, 0.7])])
    assert three[0].mean == pytest.approx(0.6)
    rows = summarize([ResultRecord("d", "b", 0.2, 0, 0.5), ResultRecord("d", "a", 0.2, 0, 0.4)])
    assert [r.recipe for r in rows] == ["a", "b"]
    write_summary(three, tmp_path / "s.tsv")
    assert (tmp_path / "s.tsv").read_text().splitlines() == ["dataset\trecipe\tratio\tn\tmean\tstd",
                                                            "d\tr\t0.5\t3\t0.600000\t0.081650"]
    write_plot_spec(three, tmp_path / "p.json")
    spec = json.loads((tmp_path / "p.json").read_text())
    assert spec["data"]["values"][0]["mean"] == pytest.approx(0.6)
    assert spec["spec"]["encoding"]["x"]["field"] == "ratio"


def paired_means(ds, recipes, ratio, reps=4):
    cfg = ExperimentConfig(recipes, [ratio], repetitions=reps)
    recs = run_experiment(cfg, ds)
    out = {}
    for r in recs:
        out.setdefault(r.recipe, []).append(r.accuracy)
    return {k: float(np.mean(v)) for k, v in out.items()}


@pytest.mark.slow
def test_direction_of_effect_on_synthetic_citations(small):
    """Smoke version of the indirect-neighbour and combination effects on a homophilous graph."""
    ds = small[0]
    low = paired_means(ds, ["ncc[1]", "ncc[1,2,3]", "majority"], 0.1)
    assert low["ncc[1,2,3]"] > low["ncc[1]"]
    assert low["ncc[1,2,3]"] > low["majority"] + 0.15
    mid = paired_means(ds, ["bow", "ncc[1,2,3]", "bow+ncc[1,2,3]"], 0.5)
    assert mid["bow+ncc[1,2,3]"] >= max(mid["bow"], mid["ncc[1,2,3]"]) - 0.005
