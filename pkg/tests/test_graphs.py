import numpy as np
import pytest
from hypothesis import given, strategies as st

from supermajority.graphs import (Boundary, GraphError, GraphFamily, build_graph, edge_count,
                                  expected_degrees)


def test_empty_has_no_edges():
    assert edge_count(build_graph("empty", 5)) == 0
    assert edge_count(build_graph("empty", 10)) == 0


def test_wheel_five_has_four_rim_edges_and_four_spokes():
    g = build_graph("wheel", 5)
    assert edge_count(g) == 8
    spokes = {tuple(e) for e in g.edges if 0 in e}
    assert spokes == {(0, 1), (0, 2), (0, 3), (0, 4)}


def test_lattice_three_by_three():
    g = build_graph("lattice", 9)
    assert g.side == 3
    assert edge_count(g) == 2 * 3 * 2


@pytest.mark.parametrize("family,n,expected", [("complete", 5, 10), ("ring", 7, 7), ("chain", 7, 6),
                                               ("star", 7, 6)])
def test_edge_counts(family, n, expected):
    assert edge_count(build_graph(family, n)) == expected


@pytest.mark.parametrize("family,n", [("wheel", 3), ("ring", 2), ("lattice", 10), ("chain", 1), ("empty", 0)])
def test_size_violations(family, n):
    with pytest.raises(GraphError):
        build_graph(family, n)


def test_boundary_only_on_lattice():
    with pytest.raises(GraphError):
        build_graph("ring", 9, "plus")


def test_clamp_mask_is_outer_ring():
    g = build_graph("lattice", 16, "minus")
    grid = g.clamp.reshape(4, 4)
    assert np.all(grid[1:3, 1:3] == 0)
    assert np.count_nonzero(grid) == 12
    assert set(grid[grid != 0]) == {-1}
    assert not build_graph("lattice", 16).has_clamp


@given(family=st.sampled_from([f for f in GraphFamily if f is not GraphFamily.LATTICE]),
       n=st.integers(4, 40))
def test_degree_sequences_match_closed_form(family, n):
    g = build_graph(family, n)
    assert np.array_equal(g.degrees(), expected_degrees(family, n))
    if g.hub is not None:
        assert g.hub == 0


@given(side=st.integers(2, 9))
def test_lattice_degrees_and_edges(side):
    g = build_graph("lattice", side * side)
    assert edge_count(g) == 2 * side * (side - 1)
    assert np.array_equal(g.degrees(), expected_degrees("lattice", side * side))
    assert g.degrees().reshape(side, side)[1:-1, 1:-1].tolist() == [[4] * (side - 2)] * (side - 2)


@given(family=st.sampled_from(list(GraphFamily)), side=st.integers(2, 6))
def test_build_is_deterministic_and_valid(family, side):
    n = side * side
    a, b = build_graph(family, n), build_graph(family, n)
    assert np.array_equal(a.edges, b.edges)
    if a.num_edges:
        assert np.all(a.edges[:, 0] < a.edges[:, 1])
        assert len({tuple(e) for e in a.edges}) == a.num_edges


def test_csr_neighbours():
    g = build_graph("wheel", 6)
    indptr, indices = g.adjacency_csr()
    assert sorted(indices[indptr[0]:indptr[1]]) == [1, 2, 3, 4, 5]
    assert sorted(indices[indptr[1]:indptr[2]]) == [0, 2, 5]
    assert Boundary("free") is Boundary.FREE
