import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from avdcolour.errors import GraphFormatError, RegimeError
from avdcolour.graphs import (
    Graph,
    MultiGraph,
    classify,
    contract_pendant_pairs,
    contractible_edges,
    dump_edge_list,
    fragile_edges,
    gen_random_graph,
    graph_from_json,
    graph_to_json,
    load_graph,
)
from helpers import contraction_gadget, cycle, star


def test_load_path_on_three_vertices():
    g = load_graph("0 1\n1 2")
    assert g.n == 3
    assert g.delta == 2
    assert list(g.edges()) == [(0, 1), (1, 2)]


def test_load_rejects_duplicate_edge():
    with pytest.raises(GraphFormatError, match="duplicate"):
        load_graph("0 1\n0 1")


def test_load_rejects_loop():
    with pytest.raises(GraphFormatError, match="loop"):
        load_graph("2 2")


def test_load_comments_and_blank_lines():
    g = load_graph("# header\n0 1\n\n1 2  # trailing\n")
    assert g.m == 2


def test_load_inconsistent_n():
    with pytest.raises(GraphFormatError, match="inconsistent"):
        load_graph("0 5", n=3)


def test_load_explicit_n_allows_isolated_vertices():
    g = load_graph("0 1", n=4)
    assert g.n == 4
    assert g.degree(3) == 0


def test_load_five_cycle_degrees():
    g = load_graph("0 1\n1 2\n2 3\n3 4\n4 0")
    assert all(g.degree(u) == 2 for u in range(5))


def test_edge_list_round_trip():
    g = cycle(7)
    assert load_graph(dump_edge_list(g)) == g


def test_json_round_trip():
    g = star(6)
    assert graph_from_json(graph_to_json(g)) == g
    assert '"delta":6' in graph_to_json(g)


def test_classify_threshold_delta_100():
    g = star(100)
    prof = classify(g, 0.1)
    assert prof.d == 40
    assert prof.is_big(0)
    assert prof.is_small(1)


def test_classify_threshold_is_exact_despite_float_eps():
    # ceil((1/2 - 0.1) * 100) must be 40, not 41 from one-ulp float noise
    g = star(100)
    assert classify(g, 0.1).d == 40
    assert classify(g, "0.1").d == 40
    assert classify(g, Fraction(1, 10)).d == 40


def test_classify_delta_50_boundary_degrees():
    # hub of degree 50; one vertex of degree 20 (big), one of degree 19 (small)
    edges = [(0, k) for k in range(1, 51)]
    edges += [(51, k) for k in range(1, 21)]
    edges += [(52, k) for k in range(21, 40)]
    g = Graph(53, edges)
    assert g.delta == 50
    prof = classify(g, 0.1)
    assert prof.d == 20
    assert prof.is_big(51) and g.degree(51) == 20
    assert prof.is_small(52) and g.degree(52) == 19


def test_classify_eps_out_of_range():
    with pytest.raises(RegimeError):
        classify(cycle(5), 0.6)
    with pytest.raises(RegimeError):
        classify(cycle(5), 0)


def test_classify_isolated_edge_theory_vs_practical():
    g = Graph(8, [(0, 1)] + [(2, k) for k in range(3, 8)])
    with pytest.raises(RegimeError, match="isolated"):
        classify(g, 0.1, "theory")
    prof = classify(g, 0.1, "practical")
    assert not prof.regime_ok
    assert any("isolated" in w for w in prof.warnings)


def test_classify_theory_rejects_large_threshold():
    # delta=3, eps=0.1 gives d=2 and 2d >= delta
    g = star(3)
    with pytest.raises(RegimeError, match="regime"):
        classify(g, 0.1, "theory")
    assert not classify(g, 0.1, "practical").regime_ok


def test_contraction_gadget_doubles_edges():
    g = contraction_gadget()
    prof = classify(g, 0.1)
    gp = contract_pendant_pairs(g, prof)
    assert gp.merged == {2: (2, 3)}
    assert gp.multiplicity(0, 2) == 2
    assert gp.multiplicity(1, 2) == 2
    assert gp.degree(2) == g.degree(2) + g.degree(3) - 2
    assert gp.degree(3) == 0
    assert gp.delta <= g.delta
    assert gp.max_multiplicity == 2


def test_contraction_origin_map_covers_all_uncontracted_edges():
    g = contraction_gadget()
    gp = contract_pendant_pairs(g, classify(g, 0.1))
    assert gp.origin is not None
    originals = sorted(gp.origin)
    expected = sorted(e for e in g.edges() if e != (2, 3))
    assert originals == expected


def test_no_contraction_when_all_big():
    g = cycle(5)
    prof = classify(g, 0.1)  # d=1, every degree-2 vertex is big
    assert prof.small == frozenset()
    gp = contract_pendant_pairs(g, prof)
    assert gp.merged == {}
    assert gp.m == g.m


def test_star_has_no_contractible_edge():
    g = star(10)
    prof = classify(g, 0.1)
    assert contractible_edges(g, prof) == []


def test_fragile_gadget():
    edges = [(0, 1)]
    edges += [(0, a) for a in (2, 3, 4)] + [(1, a) for a in (5, 6, 7)]
    nxt = 8
    for hub in (2, 3, 4, 5, 6, 7):
        edges += [(hub, k) for k in range(nxt, nxt + 12)]
        nxt += 12
    g = Graph(nxt, edges)
    prof = classify(g, 0.1)
    assert g.degree(0) == g.degree(1) == 4
    fr = fragile_edges(g, prof, q=13)
    assert fr.edges == frozenset({(0, 1)})
    assert fr.is_matching
    assert fr.partner[0] == 1 and fr.partner[1] == 0
    assert (1, 0) in fr


def test_fragile_rejects_degree_above_q_plus_three():
    # endpoints of degree q+4 = 5 at q=1
    edges = [(0, 1)]
    edges += [(0, a) for a in (2, 3, 4, 5)] + [(1, a) for a in (6, 7, 8, 9)]
    nxt = 10
    for hub in range(2, 10):
        edges += [(hub, k) for k in range(nxt, nxt + 12)]
        nxt += 12
    g = Graph(nxt, edges)
    prof = classify(g, 0.1)
    assert fragile_edges(g, prof, q=1).edges == frozenset()
    assert fragile_edges(g, prof, q=2).edges == frozenset({(0, 1)})


def test_fragile_rejects_small_side_neighbour():
    # same gadget but hub 2 is replaced by a small vertex
    edges = [(0, 1), (0, 2), (0, 3), (0, 4), (1, 5), (1, 6), (1, 7)]
    nxt = 8
    for hub in (3, 4, 5, 6, 7):
        edges += [(hub, k) for k in range(nxt, nxt + 12)]
        nxt += 12
    g = Graph(nxt, edges)
    prof = classify(g, 0.1)
    assert prof.is_small(2)
    assert (0, 1) not in fragile_edges(g, prof, q=13)


def test_generator_deterministic():
    a = gen_random_graph(200, 60, seed=7)
    b = gen_random_graph(200, 60, seed=7)
    assert a == b
    assert a != gen_random_graph(200, 60, seed=8)


def test_generator_degree_window():
    for seed in range(5):
        g = gen_random_graph(200, 60, seed=seed)
        assert math.ceil(0.8 * 60) <= g.delta <= 60
        assert g.isolated_edges() == []


def test_generator_near_regular():
    for seed in (1, 2):
        g = gen_random_graph(120, 30, seed=seed, model="near-regular")
        assert 24 <= g.delta <= 30
        assert g.isolated_edges() == []
        degrees = sorted(g.degree(u) for u in range(g.n))
        assert degrees[0] >= 20  # near-regular: nobody far below target


def test_generator_infeasible_target():
    with pytest.raises(RegimeError):
        gen_random_graph(10, 12, seed=0)
    with pytest.raises(RegimeError):
        gen_random_graph(10, 1, seed=0)


@st.composite
def random_graphs(draw):
    n = draw(st.integers(min_value=6, max_value=40))
    target = draw(st.integers(min_value=3, max_value=min(n - 1, 12)))
    seed = draw(st.integers(min_value=0, max_value=10**6))
    model = draw(st.sampled_from(["gnp-capped", "near-regular"]))
    return gen_random_graph(n, target, seed=seed, model=model)


@given(random_graphs())
@settings(max_examples=60, deadline=None)
def test_adjacency_symmetric(g):
    for u in range(g.n):
        for v in g.neighbours(u):
            assert u in g.neighbours(v)
            assert g.has_edge(u, v) and g.has_edge(v, u)


@given(random_graphs(), st.sampled_from(["0.05", "0.1", "0.2"]))
@settings(max_examples=60, deadline=None)
def test_contraction_properties(g, eps):
    prof = classify(g, eps, "practical")
    pairs = contractible_edges(g, prof)
    touched = set()
    for u, v in pairs:
        assert prof.is_small(u) and prof.is_small(v)
        assert g.degree(u) + g.degree(v) < g.delta
        assert u not in touched and v not in touched  # matching
        touched.update((u, v))
    gp = contract_pendant_pairs(g, prof)
    assert gp.delta <= g.delta
    assert gp.max_multiplicity <= 2
    assert gp.m == g.m - len(pairs)
    for rep, (u, v) in gp.merged.items():
        assert rep == u == min(u, v)
        assert gp.degree(rep) == g.degree(u) + g.degree(v) - 2
