"""Ground-truth verification: properness, the distinguishing property, brute-force minima.

Everything here is deliberately simple and independent of the constructive
pipeline so it can serve as an oracle for it. The distinguishing predicate is
implemented twice in different styles; tests cross-check the two on random
corpora.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations, product
from typing import Iterator

from .errors import AVDError
from .colouring import PartialEdgeColouring, UNCOLOURED
from .graphs import Edge, Graph

Offence = tuple[int, int, tuple[int, ...], tuple[int, ...]]
ColouringLike = "PartialEdgeColouring | dict[Edge, int]"


@dataclass(frozen=True)
class VerificationReport:
    proper: bool
    avd: bool
    palette_used: int
    offending: tuple[Offence, ...] = ()

    @property
    def ok(self) -> bool:
        return self.proper and self.avd


def _colour_map(graph: Graph, col) -> dict[Edge, int]:
    """Normalize a colouring (object or raw edge->colour dict) to a total map.

    Accepting raw dicts matters: improper colourings can only exist in raw
    form (the colouring class rejects clashes on write), yet the verifier
    must be able to report them when they arrive from an untrusted file.
    """
    expected = tuple(graph.edges())
    if isinstance(col, PartialEdgeColouring):
        if col.edges != expected:
            raise AVDError("colouring edge universe does not match the graph")
        raw = dict(zip(col.edges, col.colour_of))
    else:
        raw = {(min(u, v), max(u, v)): c for (u, v), c in col.items()}
    out: dict[Edge, int] = {}
    for e in expected:
        c = raw.get(e, UNCOLOURED)
        if c == UNCOLOURED:
            raise AVDError(f"edge {e} is uncoloured; verify needs a total colouring")
        if c < 0:
            raise AVDError(f"edge {e} carries negative colour {c}")
        out[e] = c
    extra = set(raw) - set(expected)
    if extra:
        raise AVDError(f"colouring mentions non-edges, e.g. {sorted(extra)[0]}")
    return out


def verify(graph: Graph, col) -> VerificationReport:
    """Exact properness + distinguishing check of a total colouring."""
    cmap = _colour_map(graph, col)
    sets: list[set[int]] = [set() for _ in range(graph.n)]
    clashes: list[Edge] = []
    for (u, v), c in cmap.items():
        for w in (u, v):
            if c in sets[w]:
                clashes.append((u, v))
                break
        sets[u].add(c)
        sets[v].add(c)
    proper = not clashes
    offending: list[Offence] = []
    for u, v in clashes:
        offending.append((u, v, tuple(sorted(sets[u])), tuple(sorted(sets[v]))))
    distinct = True
    if proper:
        for u, v in graph.edges():
            if sets[u] == sets[v]:
                distinct = False
                offending.append((u, v, tuple(sorted(sets[u])), tuple(sorted(sets[v]))))
    return VerificationReport(
        proper=proper,
        avd=proper and distinct,
        palette_used=max(cmap.values(), default=0),
        offending=tuple(offending),
    )


def avd_violations_alt(graph: Graph, col) -> list[Edge]:
    """Second opinion on the distinguishing predicate, written set-free.

    Recomputes each vertex's incident colours as a deduplicated sorted tuple
    straight from the edge list and compares tuples. Properness is neither
    assumed nor checked here.
    """
    cmap = _colour_map(graph, col)
    signature: dict[int, tuple[int, ...]] = {}
    for u in range(graph.n):
        incident = (cmap[(min(u, w), max(u, w))] for w in graph.neighbours(u))
        signature[u] = tuple(sorted(set(incident)))
    return [(u, v) for u, v in graph.edges() if signature[u] == signature[v]]


def brute_force_chromatic_index(graph: Graph, max_colours: int | None = None) -> int | None:
    """Minimal number of colours in any proper edge colouring, by backtracking."""
    return _brute_force(graph, max_colours, require_distinct=False)


def brute_force_avd_index(graph: Graph, max_colours: int | None = None) -> int | None:
    """Minimal palette of a proper, adjacent-vertex-distinguishing edge colouring.

    Exponential search; meant for graphs of ~20 edges or fewer. Returns None
    when no palette up to ``max_colours`` (default: the edge count, which
    always suffices) works. Isolated edges are rejected: the two endpoints of
    a lone edge see identical colour sets under every colouring.
    """
    if graph.isolated_edges():
        raise AVDError("graph has an isolated edge; no colouring can distinguish it")
    return _brute_force(graph, max_colours, require_distinct=True)


def _brute_force(graph: Graph, max_colours: int | None, require_distinct: bool) -> int | None:
    edges = list(graph.edges())
    if not edges:
        return 0
    if max_colours is None:
        max_colours = len(edges)
    lo = graph.delta
    for k in range(max(lo, 1), max_colours + 1):
        if _search(graph, edges, k, require_distinct):
            return k
    return None


def _search(graph: Graph, edges: list[Edge], k: int, require_distinct: bool) -> bool:
    m = len(edges)
    assigned: dict[Edge, int] = {}
    used: list[set[int]] = [set() for _ in range(graph.n)]
    remaining = [graph.degree(u) for u in range(graph.n)]

    def distinct_ok() -> bool:
        for u, v in edges:
            if used[u] == used[v]:
                return False
        return True

    def place(i: int, top: int) -> bool:
        # "top" caps the first use of each new colour class, killing the k!
        # colour-permutation symmetry.
        if i == m:
            return not require_distinct or distinct_ok()
        u, v = edges[i]
        for c in range(1, min(top + 1, k) + 1):
            if c in used[u] or c in used[v]:
                continue
            used[u].add(c)
            used[v].add(c)
            assigned[edges[i]] = c
            if place(i + 1, max(top, c)):
                return True
            used[u].remove(c)
            used[v].remove(c)
        return False

    return place(0, 0)


def _adjacency_masks(n: int, edges: tuple[Edge, ...]) -> list[int]:
    masks = [0] * n
    for u, v in edges:
        masks[u] |= 1 << v
        masks[v] |= 1 << u
    return masks


def _is_connected(n: int, masks: list[int]) -> bool:
    seen = 1
    frontier = 1
    while frontier:
        nxt = 0
        u = 0
        f = frontier
        while f:
            if f & 1:
                nxt |= masks[u]
            f >>= 1
            u += 1
        frontier = nxt & ~seen
        seen |= nxt
    return seen == (1 << n) - 1


def _canonical_form(n: int, edges: tuple[Edge, ...]) -> tuple:
    """Minimal upper-triangle adjacency bitmask over degree-respecting relabellings."""
    masks = _adjacency_masks(n, edges)
    degs = [bin(mk).count("1") for mk in masks]
    classes: dict[int, list[int]] = {}
    for u in range(n):
        classes.setdefault(degs[u], []).append(u)
    # only permutations keeping vertices of equal degree together can yield
    # the minimum, since positions are compared degree-major first
    ordered_degrees = sorted(classes, reverse=True)
    pair_index = {p: i for i, p in enumerate(combinations(range(n), 2))}
    best: int | None = None
    for arrangement in product(*(permutations(classes[deg]) for deg in ordered_degrees)):
        relabel: dict[int, int] = {}
        pos = 0
        for group in arrangement:
            for u in group:
                relabel[u] = pos
                pos += 1
        word = 0
        for u, v in edges:
            a, b = relabel[u], relabel[v]
            word |= 1 << pair_index[(min(a, b), max(a, b))]
        if best is None or word < best:
            best = word
    return (tuple(sorted(degs, reverse=True)), best)


def enumerate_connected_graphs(n: int) -> Iterator[Graph]:
    """All connected graphs on exactly n vertices, one per isomorphism class."""
    pairs = list(combinations(range(n), 2))
    seen: set[tuple] = set()
    for mask in range(1, 1 << len(pairs)):
        edges = tuple(p for i, p in enumerate(pairs) if mask >> i & 1)
        if len(edges) < n - 1:
            continue
        masks = _adjacency_masks(n, edges)
        if any(mk == 0 for mk in masks) or not _is_connected(n, masks):
            continue
        form = _canonical_form(n, edges)
        if form in seen:
            continue
        seen.add(form)
        yield Graph(n, edges)


@dataclass(frozen=True)
class SweepReport:
    n_max: int
    graphs_checked: int
    within_delta_plus_two: int
    exceptions: tuple[dict, ...]

    @property
    def ok(self) -> bool:
        return self.graphs_checked == self.within_delta_plus_two + len(self.exceptions)


def conjecture_sweep(n_max: int) -> SweepReport:
    """Check every small connected graph against the delta+2 palette conjecture.

    Enumerates connected graphs on 3..n_max vertices (a lone edge is excluded
    by the no-isolated-edge hypothesis) and brute-forces each minimal
    distinguishing palette. Graphs needing more than delta+2 colours land in
    ``exceptions``; on these sizes that should be the 5-cycle alone.
    """
    if n_max > 7:
        raise AVDError("sweep beyond 7 vertices is not tractable for this oracle")
    checked = 0
    good = 0
    exceptions: list[dict] = []
    for n in range(3, n_max + 1):
        for graph in enumerate_connected_graphs(n):
            checked += 1
            index = brute_force_avd_index(graph)
            if index is not None and index <= graph.delta + 2:
                good += 1
            else:
                exceptions.append(
                    {
                        "n": n,
                        "edges": list(graph.edges()),
                        "delta": graph.delta,
                        "avd_index": index,
                    }
                )
    return SweepReport(
        n_max=n_max,
        graphs_checked=checked,
        within_delta_plus_two=good,
        exceptions=tuple(exceptions),
    )
