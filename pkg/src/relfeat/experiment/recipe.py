"""Feature recipes: which relational feature families to build, and how.

A recipe is a ``+``-joined list of terms, each a family name with optional
bracketed arguments::

    bow                     attribute (bag-of-words) features
    ids[1,2,3]              neighbour-id indicators for the given distances
    ids-labeled[1,2,3]      same, restricted to training-labelled columns
    ncc[1,2,3]              neighbour class counts
    ncp[1,2,3]              neighbour class probabilities
    rwr[0.9]  rwr[0.9,0]    random walk similarity (restart, threshold)
    clusters                memberships for c = 2, 4, ..., 2**floor(log2 n)
    clusters[8,64]          memberships for the listed c only

``neighbor-ids`` is accepted as an alias of ``ids``. The whole recipe may
instead be ``majority`` or ``wvrn`` to select a non-feature model.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from relfeat.errors import InputError
from relfeat.featmat import SparseFeatureMatrix, concat_blocks
from relfeat.graph import build_label_matrix
from relfeat.io import Dataset
from relfeat.neighborhood import compute_shells, ncc_features, ncp_features, neighbor_id_features
from relfeat.partition import cluster_partitions, membership_features, partition
from relfeat.rwr import DEFAULT_EPS, DEFAULT_RESTART, rwr_features, rwr_steady_state, transition_matrix

FAMILIES = {"bow", "ids", "ids-labeled", "ncc", "ncp", "rwr", "clusters"}
ALIASES = {"neighbor-ids": "ids", "neighbor-ids-labeled": "ids-labeled"}
MODELS = {"majority", "wvrn"}
LABEL_DEPENDENT = {"ncc", "ncp", "ids-labeled"}

_TERM = re.compile(r"^\s*([a-z][a-z-]*)\s*(?:\[([^\]]*)\])?\s*$")


@dataclass(frozen=True)
class Term:
    family: str
    args: tuple = ()

    def __str__(self) -> str:
        if not self.args:
            return self.family
        return f"{self.family}[{','.join(_fmt(a) for a in self.args)}]"


def _fmt(a) -> str:
    return str(a) if isinstance(a, int) else format(a, "g")


def split_top_level(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside square brackets."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [s.strip() for s in out if s.strip()]


def parse_recipe(text: str) -> tuple[Term, ...]:
    text = text.strip()
    if text in MODELS:
        return (Term(text),)
    terms = []
    for raw in split_top_level(text, "+"):
        m = _TERM.match(raw)
        if not m:
            raise InputError(f"cannot parse recipe term {raw!r}")
        family = ALIASES.get(m.group(1), m.group(1))
        if family not in FAMILIES:
            raise InputError(f"unknown feature family {m.group(1)!r}")
        args = [a.strip() for a in (m.group(2) or "").split(",") if a.strip()]
        terms.append(Term(family, _check_args(family, args)))
    if not terms:
        raise InputError("empty recipe")
    return tuple(terms)


def _check_args(family: str, args: list[str]) -> tuple:
    try:
        if family == "bow":
            if args:
                raise InputError("bow takes no arguments")
            return ()
        if family in ("ids", "ids-labeled", "ncc", "ncp"):
            ds = tuple(int(a) for a in args) or (1, 2, 3)
            if any(d < 1 for d in ds) or len(set(ds)) != len(ds):
                raise InputError(f"{family}: distances must be distinct and >= 1")
            return ds
        if family == "rwr":
            if len(args) > 2:
                raise InputError("rwr takes at most (restart, threshold)")
            r = float(args[0]) if args else DEFAULT_RESTART
            eps = float(args[1]) if len(args) > 1 else DEFAULT_EPS
            if not 0 < r < 1 or eps < 0:
                raise InputError("rwr needs 0 < restart < 1 and threshold >= 0")
            return (r, eps)
        if family == "clusters":
            cs = tuple(int(a) for a in args)
            if any(c < 2 for c in cs):
                raise InputError("cluster counts must be >= 2")
            return cs
    except ValueError:
        raise InputError(f"bad arguments for {family}: {args}") from None
    raise InputError(f"unknown family {family}")


def recipe_model(terms: Sequence[Term]) -> str:
    if len(terms) == 1 and terms[0].family in MODELS:
        return terms[0].family
    return "logreg"


def format_recipe(terms: Sequence[Term]) -> str:
    return "+".join(str(t) for t in terms)


class FeatureBuilder:
    """Builds recipe features for one dataset.

    Label-independent blocks (neighbour ids, random walks, clusterings) are
    cached; label-dependent ones are rebuilt from the training labels of
    each split.
    """

    def __init__(self, dataset: Dataset, cluster_seed: int = 0, relation: int = 0):
        self.dataset = dataset
        self.graph = dataset.graphs[relation]
        self.cluster_seed = cluster_seed
        self._shells = None
        self._cache: dict = {}

    def shells(self, d_max: int):
        if self._shells is None or self._shells.d_max < d_max:
            self._shells = compute_shells(self.graph, d_max)
        return self._shells

    def _static(self, term: Term) -> SparseFeatureMatrix:
        key = term
        if key not in self._cache:
            if term.family == "bow":
                feats = self.dataset.attributes
            elif term.family == "ids":
                feats = neighbor_id_features(self.shells(max(term.args)), term.args)
            elif term.family == "rwr":
                r, eps = term.args
                steady = rwr_steady_state(transition_matrix(self.graph), r)
                feats = rwr_features(steady, eps, name=f"rwr-{_fmt(r)}")
            elif term.family == "clusters":
                if term.args:
                    parts = [partition(self.graph, c, self.cluster_seed) for c in term.args]
                else:
                    parts = list(cluster_partitions(self.graph, self.cluster_seed).partitions)
                feats = membership_features(parts)
            else:
                raise AssertionError(term.family)
            self._cache[key] = feats
        return self._cache[key]

    def warm(self, terms: Sequence[Term]) -> None:
        """Precompute the split-independent parts of ``terms``."""
        for term in terms:
            if term.family in LABEL_DEPENDENT:
                self.shells(max(term.args))
            elif term.family not in MODELS:
                self._static(term)

    def build(self, terms: Sequence[Term], train: np.ndarray | None = None) -> SparseFeatureMatrix:
        """Feature matrix over all nodes.

        ``train`` lists the nodes whose labels may be used; ``None`` means
        every labelled node.
        """
        labels = self.dataset.labels
        if train is None:
            train = labels.known()
        parts = []
        L = None
        for term in terms:
            if term.family in MODELS:
                raise InputError(f"{term.family} is a model, not a feature family")
            if term.family in LABEL_DEPENDENT:
                shells = self.shells(max(term.args))
                if term.family == "ids-labeled":
                    parts.append(neighbor_id_features(shells, term.args, column_mask=train, name="ids-labeled"))
                    continue
                if L is None:
                    L = build_label_matrix(labels, train)
                fn = ncc_features if term.family == "ncc" else ncp_features
                parts.append(fn(shells, L, term.args))
            else:
                parts.append(self._static(term))
        return concat_blocks(parts)
