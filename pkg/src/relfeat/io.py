"""Readers and writers for datasets, feature files, models and results."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import astuple, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import quote, unquote

import numpy as np
import scipy.sparse as sp

from relfeat.errors import FormatError, InputError, ParseError
from relfeat.featmat import Block, SparseFeatureMatrix
from relfeat.graph import UNKNOWN, LabelAssignment, RelationGraph, build_graph

logger = logging.getLogger(__name__)

MISSING = "?"


@dataclass(eq=False)
class Dataset:
    name: str
    graphs: list[RelationGraph]
    attributes: SparseFeatureMatrix
    labels: LabelAssignment
    node_ids: list[str]
    dropped_edges: int = 0

    def __post_init__(self):
        n = len(self.node_ids)
        if len(set(self.node_ids)) != n:
            raise InputError("node ids must be unique")
        if self.labels.n != n or self.attributes.n_rows != n or any(g.n != n for g in self.graphs):
            raise InputError("dataset components disagree on the node count")

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def graph(self) -> RelationGraph:
        return self.graphs[0]

    def take(self, nodes: Sequence[int]) -> "Dataset":
        nodes = np.asarray(nodes, dtype=np.int64)
        return Dataset(
            self.name,
            [g.subgraph(nodes) for g in self.graphs],
            self.attributes.take_rows(nodes),
            self.labels.take(nodes),
            [self.node_ids[i] for i in nodes],
        )


def _format_value(v: float) -> str:
    return format(float(v), ".17g")


# --- LINQS citation data --------------------------------------------------------


def parse_linqs(content_path, cites_path, name: str | None = None) -> Dataset:
    """Read a LINQS ``.content``/``.cites`` pair (Cora, CiteSeer).

    Citations are undirected and collapse to a single unit-weight edge.
    Citations naming unknown papers, and self-citations, are skipped.
    """
    content_path, cites_path = Path(content_path), Path(cites_path)
    ids: list[str] = []
    names: list[str] = []
    rows, cols = [], []
    n_words = None
    with open(content_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ParseError("expected '<id> <flags...> <label>'", lineno, content_path)
            flags = parts[1:-1]
            if n_words is None:
                n_words = len(flags)
            elif len(flags) != n_words:
                raise ParseError(f"expected {n_words} word flags, found {len(flags)}", lineno, content_path)
            r = len(ids)
            for k, f in enumerate(flags):
                if f in ("1", "1.0"):
                    rows.append(r)
                    cols.append(k)
                elif f not in ("0", "0.0"):
                    raise ParseError(f"word flag {f!r} is not 0/1", lineno, content_path)
            ids.append(parts[0])
            names.append(parts[-1])
    index = {}
    for k, pid in enumerate(ids):
        if pid in index:
            raise ParseError(f"duplicate paper id {pid!r}", None, content_path)
        index[pid] = k
    n = len(ids)
    n_words = n_words or 0
    bow = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n_words))

    pairs = set()
    dangling = loops = 0
    with open(cites_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ParseError("expected '<cited id> <citing id>'", lineno, cites_path)
            a, b = index.get(parts[0]), index.get(parts[1])
            if a is None or b is None:
                dangling += 1
                continue
            if a == b:
                loops += 1
                continue
            pairs.add((min(a, b), max(a, b)))
    if dangling:
        logger.warning("%s: skipped %d citation(s) naming unknown papers", cites_path, dangling)
    if loops:
        logger.warning("%s: skipped %d self-citation(s)", cites_path, loops)
    graph = build_graph(sorted(pairs), n)
    labels = LabelAssignment.from_names(names)
    return Dataset(
        name or content_path.stem,
        [graph],
        SparseFeatureMatrix.single(bow, "bow"),
        labels,
        ids,
        dropped_edges=dangling,
    )


def parse_edgelist(path, n_hint: int = 0) -> RelationGraph:
    """Whitespace-separated ``i j [weight]`` lines; '#' starts a comment.

    The node count is ``max(n_hint, largest index + 1)``.
    """
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ParseError("expected 'i j [weight]'", lineno, path)
            try:
                i, j = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise ParseError(f"non-numeric field in {line!r}", lineno, path) from None
            if i < 0 or j < 0:
                raise ParseError("node indices must be non-negative", lineno, path)
            edges.append((i, j, w))
    n = max([n_hint] + [max(i, j) + 1 for i, j, _ in edges])
    return build_graph(edges, n)


def write_edgelist(graph: RelationGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={graph.n}\n")
        for i, j, w in graph.edge_list():
            fh.write(f"{i}\t{j}\t{_format_value(w)}\n")


# --- feature files ------------------------------------------------------------


def format_feature_row(cols: Iterable[int], vals: Iterable[float], label) -> str:
    head = MISSING if label is None else str(label)
    return " ".join([head] + [f"{c}:{_format_value(v)}" for c, v in zip(cols, vals)])


def write_features(X: SparseFeatureMatrix, y: Sequence | None, path) -> None:
    """Text feature file: a header line, then ``<label|?> col:value ...``."""
    if y is not None and len(y) != X.n_rows:
        raise InputError(f"{len(y)} labels for {X.n_rows} rows")
    blocks = ",".join(f"{b.name}:{b.start}:{b.end}" for b in X.blocks)
    M = X.X
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#cols={X.n_cols} #blocks={blocks}\n")
        for i in range(X.n_rows):
            lo, hi = M.indptr[i], M.indptr[i + 1]
            label = None
            if y is not None and y[i] is not None and y[i] != UNKNOWN:
                label = y[i]
            fh.write(format_feature_row(M.indices[lo:hi], M.data[lo:hi], label))
            fh.write("\n")


def _parse_header(line: str, path):
    fields_ = dict(tok.split("=", 1) for tok in line[1:].replace(" #", " ").split() if "=" in tok)
    if "cols" not in fields_:
        raise FormatError("header must declare #cols=<int>", 1, path)
    try:
        n_cols = int(fields_["cols"])
    except ValueError:
        raise FormatError("#cols is not an integer", 1, path) from None
    blocks = []
    spec = fields_.get("blocks", "")
    for item in filter(None, spec.split(",")):
        try:
            name, start, end = item.rsplit(":", 2)
            blocks.append(Block(name, int(start), int(end)))
        except ValueError:
            raise FormatError(f"bad block entry {item!r}", 1, path) from None
    return n_cols, tuple(blocks)


def read_features(path):
    """Inverse of :func:`write_features`; returns ``(X, y)`` with ``None`` for '?'."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("#cols="):
            raise FormatError("missing '#cols=' header", 1, path)
        n_cols, blocks = _parse_header(header, path)
        indptr, indices, data, y = [0], [], [], []
        for lineno, line in enumerate(fh, 2):
            parts = line.split()
            if not parts:
                continue
            head = parts[0]
            if head == MISSING:
                y.append(None)
            else:
                try:
                    y.append(int(head))
                except ValueError:
                    raise FormatError(f"label {head!r} is not an integer or '?'", lineno, path) from None
            prev = -1
            for tok in parts[1:]:
                try:
                    c, v = tok.split(":", 1)
                    c, v = int(c), float(v)
                except ValueError:
                    raise FormatError(f"bad entry {tok!r}", lineno, path) from None
                if not 0 <= c < n_cols:
                    raise FormatError(f"column {c} outside declared range [0, {n_cols})", lineno, path)
                if c <= prev:
                    raise FormatError("columns must be strictly ascending", lineno, path)
                prev = c
                indices.append(c)
                data.append(v)
            indptr.append(len(indices))
    M = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(y), n_cols),
    )
    try:
        X = SparseFeatureMatrix(M, blocks)
    except InputError as e:
        raise FormatError(str(e), None, path) from None
    return X, y


# --- models ----------------------------------------------------------------------


def write_model(model, path) -> None:
    """Header with classes, column count and C; then one line per class:
    ``<class> <intercept> col:value ...`` over the non-zero weights."""
    classes = ",".join(quote(str(c), safe="") for c in model.classes)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#classes={classes} #cols={model.n_features} #C={_format_value(model.C)}\n")
        for k, cls in enumerate(model.classes):
            nz = np.flatnonzero(model.coef[k])
            fh.write(f"{quote(str(cls), safe='')} {_format_value(model.intercept[k])} ")
            fh.write(" ".join(f"{c}:{_format_value(model.coef[k, c])}" for c in nz))
            fh.write("\n")


def read_model(path):
    from relfeat.learn.logreg import LinearModel

    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        meta = dict(tok.lstrip("#").split("=", 1) for tok in header if "=" in tok)
        try:
            raw = [unquote(c) for c in meta["classes"].split(",")]
            n_cols = int(meta["cols"])
            C = float(meta["C"])
        except (KeyError, ValueError):
            raise FormatError("model header needs #classes, #cols and #C", 1, path) from None
        classes = tuple(int(c) if c.lstrip("-").isdigit() else c for c in raw)
        coef = np.zeros((len(classes), n_cols))
        intercept = np.zeros(len(classes))
        seen = 0
        for lineno, line in enumerate(fh, 2):
            parts = line.split()
            if not parts:
                continue
            if seen >= len(classes) or unquote(parts[0]) != raw[seen]:
                raise FormatError("class lines out of order", lineno, path)
            try:
                intercept[seen] = float(parts[1])
                for tok in parts[2:]:
                    c, v = tok.split(":", 1)
                    c = int(c)
                    if not 0 <= c < n_cols:
                        raise FormatError(f"column {c} outside [0, {n_cols})", lineno, path)
                    coef[seen, c] = float(v)
            except (IndexError, ValueError):
                raise FormatError("malformed weight line", lineno, path) from None
            seen += 1
    if seen != len(classes):
        raise FormatError(f"expected {len(classes)} class lines, found {seen}", None, path)
    return LinearModel(classes, coef, intercept, C)


# --- cluster assignments -------------------------------------------------------------


def read_assignment(path, n: int | None = None) -> np.ndarray:
    """One cluster id per line, e.g. a METIS ``.part`` file."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(int(line))
            except ValueError:
                raise ParseError(f"cluster id {line!r} is not an integer", lineno, path) from None
    a = np.asarray(out, dtype=np.int64)
    if n is not None and len(a) != n:
        raise InputError(f"{path}: {len(a)} assignments for {n} nodes")
    if a.size and a.min() < 0:
        raise InputError(f"{path}: negative cluster id")
    return a


# --- dataset directories -------------------------------------------------------------


def save_dataset(ds: Dataset, directory) -> None:
    """Write ``nodes.tsv``, ``classes.txt``, ``attributes.txt`` and one
    ``graph<k>.tsv`` edge list per relation."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "classes.txt", "w", encoding="utf-8") as fh:
        fh.write(f"# {ds.name}\n")
        for c in ds.labels.classes:
            fh.write(f"{c}\n")
    with open(d / "nodes.tsv", "w", encoding="utf-8") as fh:
        for pid, y in zip(ds.node_ids, ds.labels.y):
            fh.write(f"{pid}\t{MISSING if y == UNKNOWN else int(y)}\n")
    write_features(ds.attributes, None, d / "attributes.txt")
    for k, g in enumerate(ds.graphs):
        write_edgelist(g, d / f"graph{k}.tsv")


def load_dataset(directory) -> Dataset:
    d = Path(directory)
    if not d.is_dir():
        raise InputError(f"{d} is not a dataset directory")
    name = d.name
    classes = []
    with open(d / "classes.txt", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                name = line[1:].strip() or name
            elif line:
                classes.append(line)
    ids, ys = [], []
    with open(d / "nodes.tsv", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise ParseError("expected '<id>\\t<class index|?>'", lineno, d / "nodes.tsv")
            ids.append(parts[0])
            try:
                ys.append(UNKNOWN if parts[1] == MISSING else int(parts[1]))
            except ValueError:
                raise ParseError(f"bad class index {parts[1]!r}", lineno, d / "nodes.tsv") from None
    n = len(ids)
    attrs_path = d / "attributes.txt"
    attrs = read_features(attrs_path)[0] if attrs_path.exists() else SparseFeatureMatrix.empty(n)
    graphs = []
    k = 0
    while (d / f"graph{k}.tsv").exists():
        graphs.append(parse_edgelist(d / f"graph{k}.tsv", n))
        k += 1
    if not graphs:
        raise InputError(f"{d} holds no graph0.tsv")
    return Dataset(name, graphs, attrs, LabelAssignment(tuple(classes), np.asarray(ys)), ids)


# --- results ------------------------------------------------------------------------


@dataclass
class ResultRecord:
    dataset: str
    recipe: str
    ratio: float
    seed: int
    accuracy: float
    seconds: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise InputError(f"accuracy {self.accuracy} outside [0, 1]")


RESULT_FIELDS = [f.name for f in fields(ResultRecord)]


def write_results(records: Iterable[ResultRecord], path, timing: bool = False) -> None:
    """Append records to a CSV file, writing the header only for a new file.

    Wall-clock seconds are left out unless ``timing`` is set, so repeated
    runs of the same configuration produce identical bytes.
    """
    cols = RESULT_FIELDS if timing else RESULT_FIELDS[:-1]
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    if not fresh:
        with open(path, encoding="utf-8", newline="") as fh:
            existing = next(csv.reader(fh), [])
        if existing != cols:
            raise InputError(f"{path} has columns {existing}, expected {cols}")
    with open(path, "a", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fresh:
            w.writerow(cols)
        for r in records:
            row = astuple(r)[: len(cols)]
            # repr is the shortest string that reads back to the same float
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        fh.flush()
        os.fsync(fh.fileno())


def read_results(path) -> list[ResultRecord]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), 2):
            try:
                out.append(
                    ResultRecord(
                        row["dataset"],
                        row["recipe"],
                        float(row["ratio"]),
                        int(row["seed"]),
                        float(row["accuracy"]),
                        float(row.get("seconds") or 0.0),
                    )
                )
            except (KeyError, ValueError) as e:
                raise ParseError(f"bad result row: {e}", lineno, path) from None
    return out
