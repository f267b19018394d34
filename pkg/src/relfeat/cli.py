"""Command line interface.

Exit status is 0 on success, 2 for invalid input and 3 when an iterative
solver fails to converge.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from relfeat.errors import ConvergenceError, InputError
from relfeat.experiment.harness import read_config, run_experiment, summarize, write_plot_spec, write_summary
from relfeat.experiment.recipe import FeatureBuilder, Term, format_recipe, parse_recipe, recipe_model
from relfeat.experiment.split import class_balanced_split
from relfeat.featmat import SparseFeatureMatrix
from relfeat.graph import UNKNOWN, LabelAssignment
from relfeat.io import (
    Dataset,
    load_dataset,
    parse_edgelist,
    parse_linqs,
    read_features,
    read_model,
    read_results,
    save_dataset,
    write_features,
    write_model,
    write_results,
)
from relfeat.learn import grid_search_C, micro_accuracy, predict, train_logreg_ova

EXIT_INPUT = 2
EXIT_CONVERGENCE = 3

logger = logging.getLogger("relfeat")


def split_path(features_path) -> Path:
    return Path(str(features_path) + ".split")


def _read_split(features_path, n: int):
    p = split_path(features_path)
    if not p.exists():
        return None
    marks = p.read_text(encoding="utf-8").split()
    if len(marks) != n:
        raise InputError(f"{p} has {len(marks)} entries for {n} rows")
    return np.asarray(marks)


def cmd_ingest(args) -> None:
    if args.edgelist:
        graph = parse_edgelist(args.edgelist, args.n or 0)
        names = [None] * graph.n
        if args.labels:
            with open(args.labels, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    parts = line.split()
                    if not parts:
                        continue
                    if len(parts) != 2:
                        raise InputError(f"{args.labels}:{lineno}: expected '<node index> <class>'")
                    i = int(parts[0])
                    if not 0 <= i < graph.n:
                        raise InputError(f"{args.labels}:{lineno}: node {i} outside the graph")
                    names[i] = None if parts[1] == "?" else parts[1]
        ds = Dataset(
            args.name or Path(args.edgelist).stem,
            [graph],
            SparseFeatureMatrix.empty(graph.n),
            LabelAssignment.from_names(names),
            [str(i) for i in range(graph.n)],
        )
    else:
        if not (args.content and args.cites):
            raise InputError("ingest needs --content and --cites, or --edgelist")
        ds = parse_linqs(args.content, args.cites, name=args.name)
    save_dataset(ds, args.out)
    g = ds.graph
    print(f"{ds.name}: {ds.n} nodes, {g.n_edges} links, {ds.labels.n_classes} classes, "
          f"{ds.attributes.n_cols} attributes, avg degree {g.average_degree():.4f}")


def _override(terms, args):
    out = []
    for t in terms:
        fam, a = t.family, t.args
        if args.labeled_only and fam == "ids":
            fam = "ids-labeled"
        if args.distances and fam in ("ids", "ids-labeled", "ncc", "ncp"):
            a = tuple(int(d) for d in args.distances.split(","))
        if fam == "rwr":
            r, eps = a
            a = (args.r if args.r is not None else r, args.eps if args.eps is not None else eps)
        out.append(Term(fam, a))
    return tuple(out)


def cmd_features(args) -> None:
    ds = load_dataset(args.dataset)
    terms = parse_recipe(args.recipe)
    if recipe_model(terms) != "logreg":
        raise InputError(f"{args.recipe} is a model, not a feature recipe")
    terms = _override(terms, args)
    train = None
    if args.ratio is not None:
        split = class_balanced_split(ds.labels, args.ratio, args.seed)
        train = split.train
    builder = FeatureBuilder(ds, cluster_seed=args.seed)
    feats = builder.build(terms, train)
    y = [None if v == UNKNOWN else int(v) for v in ds.labels.y]
    write_features(feats, y, args.out)
    sp_path = split_path(args.out)
    if train is not None:
        marks = np.full(ds.n, "-", dtype=object)
        marks[split.test] = "test"
        marks[split.train] = "train"
        sp_path.write_text("\n".join(marks) + "\n", encoding="utf-8")
    elif sp_path.exists():
        sp_path.unlink()
    print(f"{format_recipe(terms)}: {feats.n_rows} rows x {feats.n_cols} columns, {feats.X.nnz} non-zeros")


def _labeled_rows(y, marks, side):
    rows = [i for i, v in enumerate(y) if v is not None]
    if marks is not None:
        rows = [i for i in rows if marks[i] == side]
    return np.asarray(rows, dtype=np.int64)


def cmd_train(args) -> None:
    X, y = read_features(args.features)
    rows = _labeled_rows(y, _read_split(args.features, X.n_rows), "train")
    if rows.size == 0:
        raise InputError("no labelled training rows")
    Xtr = X.X[rows]
    ytr = np.asarray([y[i] for i in rows])
    if args.grid:
        C = grid_search_C(Xtr, ytr, folds=args.folds, seed=args.seed)
    else:
        C = args.C
    model = train_logreg_ova(Xtr, ytr, C)
    write_model(model, args.out)
    print(f"trained on {len(rows)} rows, C={C:g}")


def cmd_eval(args) -> None:
    model = read_model(args.model)
    X, y = read_features(args.features)
    rows = _labeled_rows(y, _read_split(args.features, X.n_rows), "test")
    if rows.size == 0:
        raise InputError("no labelled evaluation rows")
    pred = predict(model, X.X[rows])
    acc = micro_accuracy(pred, np.asarray([y[i] for i in rows]))
    print(f"accuracy {acc:.6f} on {len(rows)} rows")


def cmd_experiment(args) -> None:
    config = read_config(args.config)
    if args.jobs is not None:
        config.jobs = args.jobs
        config.__post_init__()
    records = run_experiment(config)
    write_results(records, args.out, timing=args.timing)
    if args.summary:
        write_summary(summarize(records), args.summary)
    print(f"wrote {len(records)} records to {args.out}")


def cmd_summarize(args) -> None:
    rows = summarize(read_results(getattr(args, "in")))
    write_summary(rows, args.out)
    if args.plot_spec:
        write_plot_spec(rows, args.plot_spec)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relfeat", description="Graph-based relational features for node classification.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="convert raw data into a dataset directory")
    s.add_argument("--content")
    s.add_argument("--cites")
    s.add_argument("--edgelist")
    s.add_argument("--labels", help="with --edgelist: '<node index> <class>' lines")
    s.add_argument("--n", type=int, help="with --edgelist: minimum node count")
    s.add_argument("--name")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("features", help="write a feature file for a recipe")
    s.add_argument("--dataset", required=True)
    s.add_argument("--recipe", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--labeled-only", action="store_true", help="restrict neighbour-id columns to labelled nodes")
    s.add_argument("--r", type=float)
    s.add_argument("--eps", type=float)
    s.add_argument("--distances")
    s.add_argument("--ratio", type=float, help="hide test labels using a class-balanced split")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("train", help="fit one-vs-rest logistic regression")
    s.add_argument("--features", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--C", type=float)
    g.add_argument("--grid", action="store_true")
    s.add_argument("--folds", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="score a model on a feature file")
    s.add_argument("--model", required=True)
    s.add_argument("--features", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("experiment", help="run a configured ratio sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--timing", action="store_true", help="add a wall-clock seconds column")
    s.add_argument("--jobs", type=int, help="worker processes (overrides the config)")
    s.add_argument("--summary")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("summarize", help="mean/std table from a results CSV")
    s.add_argument("--in", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--plot-spec")
    s.set_defaults(func=cmd_summarize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConvergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
