import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csach.graph import (
    INF,
    Arc,
    Graph,
    GraphFormatError,
    all_pairs_oracle,
    dijkstra_sssp,
    dump_dimacs,
    gen_random_graph,
    load_dimacs,
)
from csach.rng import SplitMix64

from conftest import DIAMOND_DIMACS


def brute_force(graph: Graph, s: int, t: int) -> float:
    """Shortest simple-path length by enumeration."""
    best = 0.0 if s == t else INF
    out = {}
    for a in graph.arcs:
        out.setdefault(a.source, []).append(a)
    stack = [(s, 0.0, {s})]
    while stack:
        v, d, seen = stack.pop()
        for a in out.get(v, []):
            if a.target in seen:
                continue
            if a.target == t:
                best = min(best, d + a.weight)
            else:
                stack.append((a.target, d + a.weight, seen | {a.target}))
    return best


def test_splitmix64_reference_stream():
    r = SplitMix64(0)
    assert [r.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_dimacs_single_arc():
    g = load_dimacs("p sp 2 1\na 1 2 7\n")
    assert g.node_count == 2
    assert g.arcs == (Arc(0, 1, 7.0),)


def test_dimacs_duplicates_collapse_to_minimum():
    g = load_dimacs("p sp 3 2\na 1 2 5\na 1 2 3\n")
    assert g.arcs == (Arc(0, 1, 3.0),)


def test_dimacs_self_loop_dropped_and_comments_skipped():
    g = load_dimacs("c hello\np sp 2 2\nc mid\na 1 1 4\na 2 1 1\n")
    assert g.arcs == (Arc(1, 0, 1.0),)


@pytest.mark.parametrize("text, line", [
    ("a 1 2 5\n", 1),
    ("p sp 2 1\na 1 3 5\n", 2),
    ("p sp 2 1\na 1 2 -1\n", 2),
    ("p sp 2 1\n\na 1 2\n", 3),
    ("p sp 2 1\nx 1 2 3\n", 2),
    ("p sp 2 1\np sp 2 1\n", 2),
    ("p sp two 1\n", 1),
])
def test_dimacs_errors_carry_line_numbers(text, line):
    with pytest.raises(GraphFormatError) as e:
        load_dimacs(text)
    assert e.value.lineno == line
    assert f"line {line}" in str(e.value)


def test_arc_before_header_message():
    with pytest.raises(GraphFormatError, match="before problem line"):
        load_dimacs("a 1 2 5\n")


def test_from_arcs_rejects_negative_weight():
    with pytest.raises(ValueError):
        Graph.from_arcs(2, [(0, 1, -0.5)])


def test_zero_weights_allowed():
    g = Graph.from_arcs(3, [(0, 1, 0.0), (1, 2, 0.0)])
    assert dijkstra_sssp(g, 0).dist == [0.0, 0.0, 0.0]


def test_adjacency_consistent(diamond):
    for v in range(diamond.node_count):
        assert all(diamond.arcs[i].source == v for i in diamond.out_adjacency[v])
        assert all(diamond.arcs[i].target == v for i in diamond.in_adjacency[v])
    assert sorted(i for lst in diamond.out_adjacency for i in lst) == list(range(5))


def test_gen_two_nodes_two_arcs():
    g = gen_random_graph(2, 2, seed=0, w_max=1)
    assert sorted(g.arcs) == [Arc(0, 1, 1.0), Arc(1, 0, 1.0)]


def test_gen_deterministic():
    a = gen_random_graph(50, 300, seed=7, w_max=100)
    b = gen_random_graph(50, 300, seed=7, w_max=100)
    assert a == b
    assert len({(x.source, x.target) for x in a.arcs}) == 300
    assert all(1 <= x.weight <= 100 and x.weight.is_integer() for x in a.arcs)
    assert all(x.source != x.target for x in a.arcs)


def test_gen_seed_changes_instance():
    assert gen_random_graph(50, 300, 7) != gen_random_graph(50, 300, 8)


def test_gen_infeasible():
    with pytest.raises(ValueError, match="infeasible"):
        gen_random_graph(3, 7, seed=0)


def test_gen_complete_graph_uses_every_pair():
    g = gen_random_graph(6, 30, seed=3)
    assert {(a.source, a.target) for a in g.arcs} == {
        (u, v) for u in range(6) for v in range(6) if u != v}


def test_dijkstra_diamond(diamond):
    dm = dijkstra_sssp(diamond, 0)
    assert dm.dist[3] == pytest.approx(2.5, abs=1e-9)
    assert dm.dist == [0.0, 1.5, 0.5, 2.5]
    assert [a.target for a in dm.path_to(diamond, 3)] == [2, 3]


def test_dijkstra_matches_brute_force_diamond(diamond):
    for s, t in itertools.product(range(4), repeat=2):
        assert dijkstra_sssp(diamond, s).dist[t] == brute_force(diamond, s, t)


def test_dijkstra_unreachable():
    g = Graph.from_arcs(2, [(0, 1, 7.0)])
    dm = dijkstra_sssp(g, 1)
    assert dm.dist[0] == INF and math.isinf(dm.dist[0])
    with pytest.raises(ValueError):
        dm.path_to(g, 0)


def test_dijkstra_bad_source(diamond):
    with pytest.raises(IndexError):
        dijkstra_sssp(diamond, 4)


def test_dijkstra_restricted(diamond):
    dm = dijkstra_sssp(diamond, 0, restrict=lambda a: a.weight >= 1)
    assert dm.dist == [0.0, 2.0, INF, 3.0]


def test_oracle_diamond(diamond):
    m = all_pairs_oracle(diamond)
    assert m[0].tolist() == [0, 1.5, 0.5, 2.5]
    assert np.all(np.diag(m) == 0)


def test_oracle_empty_graph():
    m = all_pairs_oracle(Graph.from_arcs(3, []))
    assert np.all(np.isinf(m[~np.eye(3, dtype=bool)]))


def test_oracle_cap():
    with pytest.raises(ValueError, match="capped"):
        all_pairs_oracle(Graph.from_arcs(5, []), cap=4)


graphs = st.builds(
    lambda n, m_frac, seed: gen_random_graph(n, int(m_frac * n * (n - 1)), seed, w_max=20),
    st.integers(2, 12), st.floats(0, 1), st.integers(0, 2**32),
)


@settings(max_examples=60, deadline=None)
@given(graphs, st.data())
def test_triangle_and_witness_properties(g, data):
    s = data.draw(st.integers(0, g.node_count - 1))
    dm = dijkstra_sssp(g, s)
    assert dm.dist[s] == 0
    for a in g.arcs:
        if dm.dist[a.source] < INF:
            assert dm.dist[a.target] <= dm.dist[a.source] + a.weight
    for v in range(g.node_count):
        if dm.dist[v] < INF:
            path = dm.path_to(g, v)
            assert (path[0].source if path else v) == s
            assert sum(a.weight for a in path) == pytest.approx(dm.dist[v], abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(graphs)
def test_oracle_transposition_symmetry(g):
    assert np.array_equal(all_pairs_oracle(g.transposed()), all_pairs_oracle(g).T)


@settings(max_examples=40, deadline=None)
@given(graphs)
def test_dimacs_round_trip(g):
    again = load_dimacs(dump_dimacs(g))
    assert again.arc_set() == g.arc_set()
    assert again.node_count == g.node_count


def test_dimacs_round_trip_fractional():
    g = load_dimacs(DIAMOND_DIMACS)
    assert load_dimacs(dump_dimacs(g)) == g
