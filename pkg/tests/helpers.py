"""Shared graph builders for the test suite."""

from __future__ import annotations

import random

from avdcolour.colouring import PartialEdgeColouring, UNCOLOURED
from avdcolour.graphs import Graph, MultiGraph


def cycle(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def complete(n: int) -> Graph:
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star(leaves: int) -> Graph:
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def doubled_multigraph(graph: Graph, seed: int, fraction: float = 0.3) -> MultiGraph:
    """Copy a simple graph, duplicating a random subset of its edges."""
    rng = random.Random(seed)
    edges = list(graph.edges())
    for e in list(edges):
        if rng.random() < fraction:
            edges.append(e)
    return MultiGraph(graph.n, edges)


def assert_proper_on_universe(col: PartialEdgeColouring) -> None:
    """Properness scan that does not trust the colouring's own bookkeeping."""
    seen: dict[int, set[int]] = {}
    for eid, (u, v) in enumerate(col.edges):
        c = col.colour_of[eid]
        if c == UNCOLOURED:
            continue
        for w in (u, v):
            bucket = seen.setdefault(w, set())
            assert c not in bucket, f"colour {c} repeated at vertex {w}"
            bucket.add(c)


def contraction_gadget() -> Graph:
    """Two degree-10 hubs both adjacent to a contractible small pair."""
    edges = [(2, 3), (2, 0), (2, 1), (3, 0), (3, 1)]
    edges += [(0, k) for k in range(4, 12)]
    edges += [(1, k) for k in range(12, 20)]
    return Graph(20, edges)
