import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from relfeat.errors import InputError
from relfeat.graph import (
    UNKNOWN,
    LabelAssignment,
    build_graph,
    build_label_matrix,
    from_adjacency,
    remove_singletons,
)


@st.composite
def edge_lists(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pair = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.sampled_from([0.5, 1.0, 2.0, 3.25]))
    return n, draw(st.lists(pair, max_size=3 * n))


def dense_oracle(edges, n):
    A = np.zeros((n, n))
    for i, j, w in edges:
        if i != j:
            A[i, j] += w
            A[j, i] += w
    return A


def test_single_edge_is_symmetric():
    g = build_graph([(0, 1, 1)], 2)
    assert g.neighbors(0) == [(1, 1.0)]
    assert g.neighbors(1) == [(0, 1.0)]


def test_empty_edge_list():
    g = build_graph([], 3)
    assert g.n == 3
    assert g.n_edges == 0
    assert list(g.degrees()) == [0, 0, 0]
    assert g.neighbors(2) == []


def test_reverse_duplicates_merge_by_sum():
    g = build_graph([(0, 1, 1), (1, 0, 1)], 2)
    assert g.n_edges == 1
    assert g.neighbors(0) == [(1, 2.0)]


def test_self_loops_dropped_and_counted(caplog):
    g = build_graph([(0, 0, 1), (0, 1, 1), (2, 2, 4)], 3)
    assert g.dropped_self_loops == 2
    assert g.n_edges == 1
    assert "self-loop" in caplog.text


@pytest.mark.parametrize("edge", [(0, 3), (-1, 0), (0, 1, 0.0), (0, 1, -2.0), (0, 1, float("nan"))])
def test_bad_edges_rejected(edge):
    with pytest.raises(InputError):
        build_graph([edge], 3)


def test_k3_degrees():
    g = build_graph([(0, 1), (1, 2), (0, 2)], 3)
    assert g.degree(0) == 2
    assert g.average_degree() == pytest.approx(2.0)


def test_degree_out_of_range():
    g = build_graph([(0, 1)], 2)
    with pytest.raises(InputError):
        g.degree(2)


def test_from_adjacency_rejects_asymmetric():
    with pytest.raises(InputError):
        from_adjacency(sp.csr_matrix(np.array([[0, 1.0], [0, 0]])))


@given(edge_lists())
@settings(max_examples=150, deadline=None)
def test_matches_dense_accumulation(case):
    n, edges = case
    g = build_graph(edges, n)
    assert np.array_equal(g.adj.toarray(), dense_oracle(edges, n))


@given(edge_lists())
@settings(max_examples=150, deadline=None)
def test_structural_invariants(case):
    n, edges = case
    g = build_graph(edges, n)
    A = g.adj
    assert (A != A.T).nnz == 0
    assert not A.diagonal().any()
    assert (A.data > 0).all()
    for i in range(n):
        idx = g.neighbor_indices(i)
        assert np.all(np.diff(idx) > 0)
    assert g.degrees().sum() == 2 * g.n_edges


@given(edge_lists())
@settings(max_examples=100, deadline=None)
def test_edge_list_round_trip(case):
    n, edges = case
    g = build_graph(edges, n)
    assert build_graph(g.edge_list(), n) == g


def test_remove_singletons_path_plus_isolated():
    g = build_graph([(0, 1)], 3)
    labels = LabelAssignment(("A", "B"), [0, 1, 0])
    g2, l2, index_map = remove_singletons(g, labels)
    assert g2.n == 2
    assert list(index_map) == [0, 1, -1]
    assert list(l2.y) == [0, 1]


def test_remove_singletons_keeps_k3():
    g = build_graph([(0, 1), (1, 2), (0, 2)], 3)
    g2, _, index_map = remove_singletons(g)
    assert g2 == g
    assert list(index_map) == [0, 1, 2]


@given(edge_lists())
@settings(max_examples=100, deadline=None)
def test_remove_singletons_idempotent(case):
    n, edges = case
    g1, _, m1 = remove_singletons(build_graph(edges, n))
    g2, _, m2 = remove_singletons(g1)
    assert g2 == g1
    assert list(m2) == list(range(g1.n))
    assert g1.n == 0 or g1.degrees().min() >= 1
    kept = m1[m1 >= 0]
    assert len(set(kept.tolist())) == len(kept)


def test_label_matrix_examples():
    labels = LabelAssignment(("A", "B"), [0, UNKNOWN, UNKNOWN, 1])
    L = build_label_matrix(labels, [0, 3]).toarray()
    assert L.tolist() == [[1, 0], [0, 0], [0, 0], [0, 1]]
    assert build_label_matrix(labels, []).nnz == 0

    labels = LabelAssignment(("A", "B"), [0, 0, 1])
    L = build_label_matrix(labels, {0, 2}).toarray()
    assert L.tolist() == [[1, 0], [0, 0], [0, 1]]


def test_label_matrix_rejects_unknown_visible():
    labels = LabelAssignment(("A", "B"), [0, UNKNOWN])
    with pytest.raises(InputError):
        build_label_matrix(labels, [1])


@given(st.lists(st.integers(-1, 3), min_size=1, max_size=30), st.data())
@settings(max_examples=100, deadline=None)
def test_label_matrix_row_sums(y, data):
    labels = LabelAssignment(("a", "b", "c", "d"), y)
    known = labels.known().tolist()
    mask = data.draw(st.sets(st.sampled_from(known))) if known else set()
    L = build_label_matrix(labels, mask)
    sums = np.asarray(L.sum(axis=1)).ravel()
    assert set(sums.tolist()) <= {0.0, 1.0}
    assert L.sum() == len(mask)


def test_label_assignment_from_names():
    labels = LabelAssignment.from_names(["b", None, "a"])
    assert labels.classes == ("a", "b")
    assert list(labels.y) == [1, UNKNOWN, 0]
    assert list(labels.class_counts()) == [1, 1]
