"""Experiment protocol: repeated class-balanced splits over a ratio sweep."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from relfeat.errors import ConvergenceError, InputError
from relfeat.graph import remove_singletons
from relfeat.io import Dataset, ResultRecord, load_dataset, parse_linqs
from relfeat.learn import (
    C_GRID,
    grid_search_C,
    majority_baseline,
    micro_accuracy,
    predict,
    train_logreg_ova,
    wvrn_relaxation_labeling,
    WvrnParams,
)
from relfeat.experiment.recipe import FeatureBuilder, format_recipe, parse_recipe, recipe_model, split_top_level
from relfeat.experiment.split import class_balanced_split

logger = logging.getLogger(__name__)

RATIOS = tuple(round(0.1 * k, 1) for k in range(1, 10))


@dataclass
class ExperimentConfig:
    recipes: list[str]
    ratios: list[float] = field(default_factory=lambda: list(RATIOS))
    repetitions: int = 10
    base_seed: int = 0
    grid: list[float] = field(default_factory=lambda: list(C_GRID))
    folds: int = 3
    cluster_seed: int = 0
    jobs: int = 1
    name: str = ""
    content: str | None = None
    cites: str | None = None
    dataset_dir: str | None = None

    def __post_init__(self):
        if not self.recipes:
            raise InputError("config needs at least one recipe")
        for r in self.recipes:
            parse_recipe(r)
        self.ratios = [float(r) for r in self.ratios]
        for r in self.ratios:
            if abs(r * 10 - round(r * 10)) > 1e-9 or not 1 <= round(r * 10) <= 9:
                raise InputError(f"ratio {r} not in 0.1, 0.2, ..., 0.9")
        if self.repetitions < 1:
            raise InputError("repetitions must be >= 1")
        if self.folds < 2:
            raise InputError("folds must be >= 2")
        if self.jobs < 1:
            raise InputError("jobs must be >= 1")

    def load(self) -> Dataset:
        if self.dataset_dir:
            ds = load_dataset(self.dataset_dir)
        elif self.content and self.cites:
            ds = parse_linqs(self.content, self.cites, name=self.name or None)
        else:
            raise InputError("config must name either dataset_dir or content + cites")
        if self.name:
            ds.name = self.name
        return ds


_LIST_KEYS = {"recipes", "ratios", "grid"}
_INT_KEYS = {"repetitions", "base_seed", "folds", "cluster_seed", "jobs"}


def read_config(path) -> ExperimentConfig:
    """Flat ``key = value`` file; lists are comma-separated, '#' comments.

    Relative dataset paths resolve against the config file's directory.
    """
    path = Path(path)
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            try:
                if key in _LIST_KEYS:
                    items = split_top_level(value)
                    values[key] = items if key == "recipes" else [float(v) for v in items]
                elif key in _INT_KEYS:
                    values[key] = int(value)
                elif key in ("content", "cites", "dataset_dir"):
                    p = Path(value)
                    values[key] = str(p if p.is_absolute() else path.parent / p)
                elif key == "name":
                    values[key] = value
                else:
                    raise InputError(f"{path}:{lineno}: unknown key {key!r}")
            except ValueError:
                raise InputError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    if "recipes" not in values:
        raise InputError(f"{path}: missing 'recipes'")
    return ExperimentConfig(**values)


def evaluate_split(builder: FeatureBuilder, recipe: str, split, grid, folds) -> float:
    ds = builder.dataset
    terms = parse_recipe(recipe)
    model = recipe_model(terms)
    y = ds.labels.y
    truth = y[split.test]
    if model == "majority":
        pred = majority_baseline(y[split.train]).predict(len(split.test))
    elif model == "wvrn":
        scores = wvrn_relaxation_labeling(builder.graph, ds.labels, split.train, WvrnParams())
        pred = np.argmax(scores[split.test], axis=1)
    else:
        X = builder.build(terms, split.train).X
        Xtr, ytr = X[split.train], y[split.train]
        C = grid_search_C(Xtr, ytr, grid, folds, seed=split.seed)
        fitted = train_logreg_ova(Xtr, ytr, C, classes=np.arange(ds.labels.n_classes))
        pred = predict(fitted, X[split.test])
    return micro_accuracy(pred, truth)


# per-process state for cell evaluation; set once per worker
_STATE: dict = {}


def _init_worker(builder: FeatureBuilder, grid, folds) -> None:
    _STATE.update(builder=builder, grid=grid, folds=folds)


def _run_cell(cell) -> ResultRecord:
    recipe, ratio, seed = cell
    builder = _STATE["builder"]
    canonical = format_recipe(parse_recipe(recipe))
    start = time.perf_counter()
    try:
        split = class_balanced_split(builder.dataset.labels, ratio, seed)
        acc = evaluate_split(builder, recipe, split, _STATE["grid"], _STATE["folds"])
    except (InputError, ConvergenceError) as e:
        raise type(e)(f"{canonical}, ratio {ratio}, seed {seed}: {e}") from e
    logger.info("%s %s ratio=%.1f seed=%d acc=%.4f", builder.dataset.name, canonical, ratio, seed, acc)
    return ResultRecord(builder.dataset.name, canonical, ratio, seed, acc, time.perf_counter() - start)


def run_experiment(config: ExperimentConfig, dataset: Dataset | None = None) -> list[ResultRecord]:
    """Every (recipe, ratio, repetition) cell, sorted by recipe, ratio, seed.

    Singletons are removed once up front. Repetition ``t`` uses seed
    ``base_seed + t`` for its split, so all recipes see the same splits.
    With ``config.jobs > 1`` cells run in worker processes; each cell is
    deterministic, so the records do not depend on scheduling.
    """
    ds = dataset if dataset is not None else config.load()
    graph, labels, keep = remove_singletons(ds.graph, ds.labels)
    if graph.n != ds.n:
        logger.info("removed %d singleton(s)", ds.n - graph.n)
        ds = ds.take(np.flatnonzero(keep >= 0))
    builder = FeatureBuilder(ds, cluster_seed=config.cluster_seed)
    for recipe in config.recipes:
        builder.warm(parse_recipe(recipe))
    cells = [(recipe, ratio, config.base_seed + t)
             for recipe in config.recipes for ratio in config.ratios for t in range(config.repetitions)]
    state = (builder, list(config.grid), config.folds)
    if config.jobs == 1 or len(cells) == 1:
        _init_worker(*state)
        records = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(config.jobs, initializer=_init_worker, initargs=state) as pool:
            records = list(pool.map(_run_cell, cells))
    records.sort(key=lambda r: (r.recipe, r.ratio, r.seed))
    return records


@dataclass(frozen=True)
class SummaryRow:
    dataset: str
    recipe: str
    ratio: float
    n: int
    mean: float
    std: float


def summarize(records: Sequence[ResultRecord]) -> list[SummaryRow]:
    """Mean and population standard deviation per (dataset, recipe, ratio)."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.dataset, r.recipe, r.ratio), []).append(r.accuracy)
    rows = []
    for (dataset, recipe, ratio), accs in sorted(groups.items()):
        a = np.asarray(accs)
        rows.append(SummaryRow(dataset, recipe, ratio, len(a), float(a.mean()), float(a.std())))
    return rows


def write_summary(rows: Sequence[SummaryRow], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("dataset\trecipe\tratio\tn\tmean\tstd\n")
        for r in rows:
            fh.write(f"{r.dataset}\t{r.recipe}\t{r.ratio:g}\t{r.n}\t{r.mean:.6f}\t{r.std:.6f}\n")


def plot_spec(rows: Sequence[SummaryRow]) -> dict:
    """Accuracy-vs-ratio line chart as a Vega-Lite spec with inline data."""
    return {
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "data": {"values": [r.__dict__ for r in rows]},
        "facet": {"field": "dataset", "type": "nominal"},
        "spec": {
            "mark": {"type": "line", "point": True},
            "encoding": {
                "x": {"field": "ratio", "type": "quantitative", "title": "labelled fraction"},
                "y": {"field": "mean", "type": "quantitative", "title": "micro accuracy"},
                "color": {"field": "recipe", "type": "nominal"},
            },
        },
    }


def write_plot_spec(rows: Sequence[SummaryRow], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plot_spec(rows), fh, indent=2)
        fh.write("\n")
