"""The constructive colourer: palette bounds, extension, constrained recolouring."""

import pytest
from hypothesis import given, settings, strategies as st

from avdcolour.colouring import (
    PartialEdgeColouring,
    colouring_from_json,
    colouring_to_json,
    extend_to_original,
    recolour_selected,
    shared_colour_property,
    vizing_colour,
)
from avdcolour.errors import InvariantError
from avdcolour.graphs import (
    Graph,
    MultiGraph,
    classify,
    contract_pendant_pairs,
    gen_random_graph,
)
from helpers import (
    assert_proper_on_universe,
    complete,
    contraction_gadget,
    cycle,
    doubled_multigraph,
    star,
)


def test_odd_cycle_needs_and_gets_three():
    col = vizing_colour(MultiGraph.from_graph(cycle(5)))
    assert_proper_on_universe(col)
    assert col.is_total()
    assert col.max_colour() == 3


def test_k4_within_four_colours():
    col = vizing_colour(MultiGraph.from_graph(complete(4)))
    assert_proper_on_universe(col)
    assert col.max_colour() <= 4


def test_double_edge_with_pendants():
    # two vertices joined twice, one pendant each: delta=3, multiplicity 2
    mg = MultiGraph(4, [(0, 1), (0, 1), (0, 2), (1, 3)])
    col = vizing_colour(mg)
    assert_proper_on_universe(col)
    assert col.is_total()
    assert col.max_colour() <= 5
    # the two parallel copies must differ
    assert col.colour_of[0] != col.colour_of[1]


def test_vizing_deterministic():
    mg = doubled_multigraph(gen_random_graph(40, 8, seed=3), seed=4)
    assert vizing_colour(mg).colour_of == vizing_colour(mg).colour_of


@pytest.mark.parametrize("seed", range(20))
def test_simple_graphs_within_delta_plus_one(seed):
    g = gen_random_graph(60, 3 + seed % 10, seed=seed)
    col = vizing_colour(MultiGraph.from_graph(g))
    assert_proper_on_universe(col)
    assert col.is_total()
    assert col.max_colour() <= g.delta + 1


@pytest.mark.parametrize("seed", range(10))
def test_multigraphs_within_delta_plus_two(seed):
    mg = doubled_multigraph(gen_random_graph(50, 3 + seed % 9, seed=seed), seed=seed + 100)
    col = vizing_colour(mg)
    assert_proper_on_universe(col)
    assert col.is_total()
    assert col.max_colour() <= mg.delta + 2


@given(st.integers(min_value=3, max_value=9), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=40, deadline=None)
def test_complete_graphs_any_size(n, seed):
    # vary edge insertion order via a relabelling to shake the fan logic
    import random

    rng = random.Random(seed)
    relabel = list(range(n))
    rng.shuffle(relabel)
    g = Graph(n, [(relabel[u], relabel[v]) for u, v in complete(n).edges()])
    col = vizing_colour(MultiGraph.from_graph(g))
    assert_proper_on_universe(col)
    assert col.is_total()
    assert col.max_colour() <= g.delta + 1


def test_identity_extension_without_contraction():
    g = cycle(6)
    gp = contract_pendant_pairs(g, classify(g, 0.1))
    cp = vizing_colour(gp)
    ext = extend_to_original(g, gp, cp)
    assert ext.is_total()
    assert [ext.pair_colour(e) for e in g.edges()] == [
        cp.colour_of[eid] for eid in range(gp.m)
    ]


def test_extension_on_contraction_gadget():
    g = contraction_gadget()
    prof = classify(g, 0.1)
    gp = contract_pendant_pairs(g, prof)
    ext = extend_to_original(g, gp, vizing_colour(gp))
    assert ext.is_total()
    assert_proper_on_universe(ext)
    assert ext.palette == g.delta + 2
    assert ext.max_colour() <= g.delta + 2
    assert shared_colour_property(g, gp, ext) == []


def test_extension_picks_smallest_free_colour():
    # contracted pair of degree-2 vertices hanging off two degree-10 hubs
    edges = [(2, 3), (2, 0), (3, 1)]
    edges += [(0, k) for k in range(4, 13)] + [(1, k) for k in range(13, 22)]
    g = Graph(22, edges)
    prof = classify(g, 0.1)
    gp = contract_pendant_pairs(g, prof)
    assert gp.merged == {2: (2, 3)}
    ext = extend_to_original(g, gp, vizing_colour(gp))
    used = ext.vertex_colours(2) | ext.vertex_colours(3)
    alpha = ext.pair_colour((2, 3))
    assert alpha == min(set(range(1, ext.palette + 1)) - (used - {alpha}))
    assert shared_colour_property(g, gp, ext) == []


def test_recolour_selected_empty_is_identity():
    g = cycle(6)
    base = extend_to_original(g, contract_pendant_pairs(g, classify(g, 0.1)),
                              vizing_colour(contract_pendant_pairs(g, classify(g, 0.1))))
    out = recolour_selected(g, [], base, q=13)
    assert out.colour_of == base.colour_of
    assert out.palette == g.delta + 13 + 6


def test_recolour_selected_matching_gets_first_fresh_colour():
    g = complete(6)
    base = PartialEdgeColouring.for_graph(g, g.delta + 2)
    for eid, c in enumerate(vizing_colour(MultiGraph.from_graph(g)).colour_of):
        base.set_colour(eid, c)
    out = recolour_selected(g, [(0, 1), (2, 3), (4, 5)], base, q=13)
    fresh = g.delta + 3
    assert {out.pair_colour(e) for e in [(0, 1), (2, 3), (4, 5)]} == {fresh}
    untouched = [e for e in g.edges() if e not in {(0, 1), (2, 3), (4, 5)}]
    assert all(out.pair_colour(e) == base.pair_colour(e) for e in untouched)


def test_recolour_selected_bounded_degree_budget():
    q = 4
    g = star(q + 2)  # selected set of max degree q+2 at the hub
    base = PartialEdgeColouring.for_graph(g, g.delta + 2)
    for eid in range(g.m):
        base.set_colour(eid, eid + 1)
    out = recolour_selected(g, list(g.edges()), base, q=q)
    assert_proper_on_universe(out)
    for e in g.edges():
        assert g.delta + 3 <= out.pair_colour(e) <= g.delta + q + 5


def test_recolour_selected_rejects_excess_degree():
    q = 2
    g = star(q + 3)
    base = PartialEdgeColouring.for_graph(g, g.delta + 2)
    with pytest.raises(InvariantError, match="degree"):
        recolour_selected(g, list(g.edges()), base, q=q)


def test_colouring_json_round_trip():
    g = contraction_gadget()
    gp = contract_pendant_pairs(g, classify(g, 0.1))
    ext = extend_to_original(g, gp, vizing_colour(gp))
    text = colouring_to_json(ext)
    back = colouring_from_json(text, g)
    assert back == ext
    assert colouring_to_json(back) == text


def test_set_colour_rejects_clash():
    g = Graph(3, [(0, 1), (1, 2)])
    col = PartialEdgeColouring.for_graph(g, 3)
    col.set_colour(0, 1)
    with pytest.raises(InvariantError):
        col.set_colour(1, 1)
    # and the failed write must not corrupt state
    assert col.colour_of[1] == 0
    col.set_colour(1, 2)
    assert sorted(col.vertex_colours(1)) == [1, 2]
