"""Stable graph structure, canonical forms, automorphisms, enumeration.

The brute-force oracles here work at the half-edge permutation level and by
exhaustive structure generation, independent of the color-refinement and
BFS-degeneration code paths they check.
"""

import itertools
import json

import pytest
from hypothesis import given, settings, strategies as st

from tautcalc.graphs import (
    GraphError,
    StableGraph,
    enumerate_stable_graphs,
    graph_from_json,
    graph_to_json,
    one_edge_degenerations,
    trivial_graph,
)


# -- fixtures ----------------------------------------------------------

def loop_graph(g):
    # genus g+1: one vertex of genus g carrying a self-loop
    return StableGraph((g,), (), ((0, 0),))


PHI_SPEC = StableGraph((0, 2), (0, 1, 1), ((0, 1), (0, 1)))
PHI_PAPER = StableGraph((0, 2), (0, 0, 1), ((0, 1), (0, 1)))
PHI_HAT = StableGraph((1, 0, 1), (0, 1, 2), ((0, 1), (1, 2), (2, 2)))
BOUQUET2 = StableGraph((0,), (), ((0, 0), (0, 0)))
TRIPLE_11 = StableGraph((1, 1), (), ((0, 1), (0, 1), (0, 1)))
QUAD_10 = StableGraph((0, 1), (), ((0, 1), (0, 1), (0, 1), (0, 1)))
TRIANGLE_111 = StableGraph((1, 1, 1), (), ((0, 1), (0, 2), (1, 2)))


# -- construction and genus --------------------------------------------

def test_genus_examples():
    assert StableGraph((3,), (), ()).genus() == 3
    assert BOUQUET2.genus() == 2
    assert StableGraph((1, 1), (), ((0, 1), (0, 1))).genus() == 3


def test_validation_errors():
    with pytest.raises(GraphError):
        StableGraph((0,), (0,), ())  # 2g-2+n = -1
    with pytest.raises(GraphError):
        StableGraph((1, 1), (), ())  # disconnected
    with pytest.raises(GraphError):
        StableGraph((1,), (1,), ())  # leg off the end
    with pytest.raises(GraphError):
        StableGraph((1, 1), (), ((1, 0),))  # stored u > v
    with pytest.raises(GraphError):
        StableGraph((-1,), (0, 0, 0), ())
    with pytest.raises(GraphError):
        trivial_graph(0, 2)


def test_slots_order():
    g = PHI_SPEC
    assert g.slots(0) == [("leg", 1), ("he", 0, 0), ("he", 1, 0)]
    assert g.slots(1) == [("leg", 2), ("leg", 3), ("he", 0, 1), ("he", 1, 1)]
    assert g.valence(0) == 3 and g.valence(1) == 4


# -- automorphism orders ------------------------------------------------

@pytest.mark.parametrize("graph,order", [
    (PHI_SPEC, 2),
    (PHI_PAPER, 2),
    (PHI_HAT, 2),
    (StableGraph((2,), (0, 0, 0), ()), 1),
    (loop_graph(1), 2),
    (BOUQUET2, 8),
    (TRIPLE_11, 12),
    (QUAD_10, 24),
    (TRIANGLE_111, 6),
])
def test_aut_orders(graph, order):
    assert graph.aut_order() == order


def brute_aut_order(graph):
    """Count (vertex perm, half-edge bijection) pairs preserving genus,
    leg markings, incidence, and the edge pairing."""
    V = graph.num_vertices
    hes = [(e, s) for e in range(graph.num_edges) for s in (0, 1)]
    vertex_of = {(e, s): graph.edges[e][s] for e, s in hes}

    def partner(h):
        return (h[0], 1 - h[1])

    total = 0
    for perm in itertools.permutations(range(V)):
        if any(graph.genera[perm[v]] != graph.genera[v] for v in range(V)):
            continue
        if any(perm[v] != v for v in graph.legs):
            continue
        for sigma in itertools.permutations(hes):
            phi = dict(zip(hes, sigma))
            ok = all(vertex_of[phi[h]] == perm[vertex_of[h]] for h in hes)
            ok = ok and all(phi[partner(h)] == partner(phi[h]) for h in hes)
            if ok:
                total += 1
    return total


@pytest.mark.parametrize("graph", [
    loop_graph(1), BOUQUET2, PHI_SPEC, PHI_PAPER, PHI_HAT,
    TRIPLE_11, TRIANGLE_111,
    StableGraph((1, 1), (), ((0, 1), (0, 1))),
    StableGraph((1, 0), (1,), ((0, 1), (1, 1))),
])
def test_aut_order_matches_bruteforce(graph):
    # oracle restricted to graphs with at most 6 half-edges
    assert graph.num_edges <= 3
    assert graph.aut_order() == brute_aut_order(graph)


def test_all_isomorphisms_structure():
    for graph in (BOUQUET2, TRIPLE_11, PHI_HAT, TRIANGLE_111):
        isos = graph.all_isomorphisms(graph)
        assert len(isos) == graph.aut_order()
        seen = set()
        for perm, hemap in isos:
            key = (perm, tuple(sorted(hemap.items())))
            assert key not in seen
            seen.add(key)
            for (e, s), (f, t) in hemap.items():
                assert perm[graph.edges[e][s]] == graph.edges[f][t]
                assert hemap[(e, 1 - s)] == (f, 1 - t)
            for v in graph.legs:
                assert perm[v] == v


def test_all_isomorphisms_between_relabelings():
    g = StableGraph((1, 0, 2), (1, 1, 2), ((0, 1), (1, 2), (0, 2)))
    h, _ = g.relabel((2, 0, 1))
    isos = g.all_isomorphisms(h)
    assert len(isos) == g.aut_order()
    for perm, hemap in isos:
        for (e, s), (f, t) in hemap.items():
            assert perm[g.edges[e][s]] == h.edges[f][t]
        for m, v in enumerate(g.legs):
            assert perm[v] == h.legs[m]
    assert g.all_isomorphisms(loop_graph(2)) == []


# -- canonical form -----------------------------------------------------

POOL = None


def graph_pool():
    global POOL
    if POOL is None:
        POOL = []
        for g, n in ((0, 4), (0, 5), (1, 1), (1, 2), (2, 0), (2, 1)):
            POOL.extend(enumerate_stable_graphs(g, n))
    return POOL


@settings(max_examples=120, deadline=None)
@given(st.data())
def test_canonicalize_relabeling_invariant(data):
    pool = graph_pool()
    graph = data.draw(st.sampled_from(pool))
    V = graph.num_vertices
    perm = tuple(data.draw(st.permutations(range(V))))
    relabeled, _ = graph.relabel(perm)
    assert relabeled.canonical().encode() == graph.canonical().encode()
    assert relabeled.aut_order() == graph.aut_order()


def test_canonicalize_idempotent():
    for graph in graph_pool():
        canon = graph.canonical()
        assert canon.canonical().encode() == canon.encode()
        assert canon.is_canonical()


# -- enumeration --------------------------------------------------------

def brute_enumerate(g, n):
    """Exhaustive generation: all vertex counts, genus labels, edge
    multisets, and leg placements, deduplicated by canonical form."""
    found = {}
    for V in range(1, 2 * g - 2 + n + 1):
        pairs = [(u, v) for u in range(V) for v in range(u, V)]
        for E in range(V - 1, 3 * g - 3 + n + 1):
            gsum = g - (E - V + 1)
            if gsum < 0:
                continue
            for genera in itertools.product(range(g + 1), repeat=V):
                if sum(genera) != gsum:
                    continue
                for edges in itertools.combinations_with_replacement(pairs, E):
                    for legs in itertools.product(range(V), repeat=n):
                        try:
                            graph = StableGraph(genera, legs, edges)
                        except GraphError:
                            continue
                        canon = graph.canonical()
                        found[canon.encode()] = canon
    return set(found)


@pytest.mark.parametrize("g,n,count", [
    (0, 3, 1),
    (0, 4, 4),
    (1, 1, 2),
    (1, 2, 5),
    (2, 0, 7),
])
def test_enumeration_counts(g, n, count):
    graphs = enumerate_stable_graphs(g, n)
    assert len(graphs) == count
    assert len({gr.encode() for gr in graphs}) == count
    for gr in graphs:
        assert gr.genus() == g and gr.num_legs == n
        assert gr.is_canonical()


@pytest.mark.parametrize("g,n", [(0, 4), (0, 5), (1, 1), (1, 2), (1, 3), (2, 0), (2, 1)])
def test_enumeration_matches_bruteforce(g, n):
    assert {gr.encode() for gr in enumerate_stable_graphs(g, n)} == brute_enumerate(g, n)


def test_enumeration_max_edges():
    full = enumerate_stable_graphs(2, 0)
    capped = enumerate_stable_graphs(2, 0, max_edges=1)
    assert {gr.encode() for gr in capped} == {
        gr.encode() for gr in full if gr.num_edges <= 1}
    with pytest.raises(GraphError):
        enumerate_stable_graphs(0, 2)


def test_degenerations_are_one_step():
    for raw in one_edge_degenerations(trivial_graph(2, 1)):
        assert raw.genus() == 2
        assert raw.num_edges == 1


# -- surgeries ----------------------------------------------------------

def test_contract_single_edge():
    double = StableGraph((1, 1), (), ((0, 1), (0, 1)))
    got, vmap, emap = double.contract_edges([0])
    assert got.encode() == StableGraph((2,), (), ((0, 0),)).encode()
    assert vmap == [0, 0]
    assert emap[(1, 0)][0] == 0


def test_contract_loop_bumps_genus():
    got, _, _ = loop_graph(1).contract_edges([0])
    assert got.encode() == StableGraph((2,), (), ()).encode()


def test_contract_parallel_cycle_bumps_genus():
    double = StableGraph((1, 1), (), ((0, 1), (0, 1)))
    got, _, _ = double.contract_edges([0, 1])
    assert got.encode() == StableGraph((3,), (), ()).encode()


def test_full_contraction_recovers_trivial_graph():
    for graph in enumerate_stable_graphs(2, 1):
        got, _, emap = graph.contract_edges(range(graph.num_edges))
        assert got.encode() == trivial_graph(2, 1).encode()
        assert emap == {}


def test_insert_identity_is_isomorphic():
    for graph in enumerate_stable_graphs(1, 2):
        for v in range(graph.num_vertices):
            inner = trivial_graph(graph.genera[v], graph.valence(v))
            got, _, _, _ = graph.insert_at_vertex(v, inner)
            assert got.is_isomorphic(graph)


def test_insert_preserves_genus_and_counts():
    outer = StableGraph((1, 1), (0,), ((0, 1),))
    # vertex 0 carries a leg and an edge slot, so inner needs genus 1, 2 legs
    inner = StableGraph((0,), (0, 0), ((0, 0),))
    got, outer_map, inner_map, targets = outer.insert_at_vertex(0, inner)
    assert got.genus() == 2
    assert got.num_edges == outer.num_edges + inner.num_edges
    # outer edge endpoints now sit on inner's vertex
    e, s = outer_map[(0, 0)]
    assert got.edges[e][s] == 1  # inner vertex appended after remaining outer vertex
    assert targets[1] == ("leg", 1)
    assert targets[2][0] == "he"


def test_insert_mismatch_errors():
    outer = StableGraph((1, 1), (0,), ((0, 1),))
    with pytest.raises(GraphError):
        outer.insert_at_vertex(0, trivial_graph(2, 2))
    with pytest.raises(GraphError):
        outer.insert_at_vertex(0, trivial_graph(1, 3))


def test_glue_legs():
    base = trivial_graph(1, 2)
    got, marking_map, new_edge = base.glue_legs(1, 2)
    assert got.encode() == loop_graph(1).encode()
    assert got.genus() == base.genus() + 1
    assert got.h1() == base.h1() + 1
    assert marking_map == {}
    assert new_edge == 0
    three = trivial_graph(0, 4)
    got2, mmap2, _ = three.glue_legs(1, 3)
    assert got2.num_legs == 2
    assert mmap2 == {2: 1, 4: 2}
    with pytest.raises(GraphError):
        base.glue_legs(1, 1)


# -- serialization ------------------------------------------------------

def test_json_roundtrip():
    for graph in graph_pool()[:20]:
        payload = graph_to_json(graph)
        text = json.dumps(payload)
        back = graph_from_json(json.loads(text))
        assert back.encode() == graph.encode()


def test_encoding_bytes_is_iso_invariant():
    g = PHI_SPEC
    h, _ = g.relabel((1, 0))
    assert g.encoding_bytes() == h.encoding_bytes()
    assert isinstance(g.encoding_bytes(), bytes)
