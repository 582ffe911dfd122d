"""Constructive proper edge colouring and the contraction/extension steps.

The colourer is the fan-and-chain method behind the Vizing/Shannon bounds:
colour edges one at a time; when an edge has no colour free at both ends,
grow a fan of coloured edges around one endpoint until it can either be
"folded" (a cascade of recolourings that frees a colour for the first edge)
or "reduced" (swap a two-coloured alternating chain, then fold). With
k = min(delta + mu, floor(3*delta/2)) colours one of the two moves is always
available, so every edge gets coloured — at most delta+1 colours on a simple
graph and delta+2 at multiplicity 2.

Every choice point (fold colour, chain colours, fan anchor, candidate order)
takes the smallest admissible value, so colourings are reproducible.
"""

from __future__ import annotations

import hashlib
import json
from typing import Iterable, Sequence

from .errors import AVDError, GraphFormatError, InvariantError
from .graphs import Edge, Graph, MultiGraph, _norm_edge

UNCOLOURED = 0


class PartialEdgeColouring:
    """Mutable proper edge colouring over a fixed edge universe.

    Edges are addressed by their position in ``edges``; colour 0 means
    "not yet coloured". Assignments are properness-checked on write, so a
    clash raises immediately at the faulty call site instead of surfacing
    later in a verification sweep.
    """

    __slots__ = ("n", "edges", "palette", "colour_of", "at", "index")

    def __init__(self, n: int, edges: Sequence[Edge], palette: int):
        self.n = n
        self.edges: tuple[Edge, ...] = tuple(_norm_edge(u, v) for u, v in edges)
        self.palette = palette
        self.colour_of: list[int] = [UNCOLOURED] * len(self.edges)
        # at[u] maps colour -> id of the incident edge carrying it
        self.at: list[dict[int, int]] = [{} for _ in range(n)]
        index: dict[Edge, int] = {}
        duplicates = False
        for eid, e in enumerate(self.edges):
            if e in index:
                duplicates = True
            index[e] = eid
        self.index: dict[Edge, int] | None = None if duplicates else index

    @classmethod
    def for_graph(cls, graph: Graph, palette: int) -> "PartialEdgeColouring":
        return cls(graph.n, list(graph.edges()), palette)

    @classmethod
    def for_multigraph(cls, mg: MultiGraph, palette: int) -> "PartialEdgeColouring":
        return cls(mg.n, mg.edge_list, palette)

    def colour(self, eid: int) -> int:
        return self.colour_of[eid]

    def pair_id(self, e: Edge) -> int:
        if self.index is None:
            raise AVDError("edge universe has parallel edges; address by id")
        try:
            return self.index[_norm_edge(*e)]
        except KeyError:
            raise KeyError(f"edge {e} not in colouring universe") from None

    def pair_colour(self, e: Edge) -> int:
        return self.colour_of[self.pair_id(e)]

    def set_colour(self, eid: int, c: int) -> None:
        if c != UNCOLOURED and not (1 <= c <= self.palette):
            raise ValueError(f"colour {c} outside palette [1, {self.palette}]")
        u, v = self.edges[eid]
        old = self.colour_of[eid]
        if old != UNCOLOURED:
            del self.at[u][old]
            del self.at[v][old]
        if c != UNCOLOURED:
            if c in self.at[u] or c in self.at[v]:
                self.colour_of[eid] = UNCOLOURED
                raise InvariantError(
                    f"colour {c} already present at an endpoint of edge {self.edges[eid]}"
                )
            self.at[u][c] = eid
            self.at[v][c] = eid
        self.colour_of[eid] = c

    def set_pair(self, e: Edge, c: int) -> None:
        self.set_colour(self.pair_id(e), c)

    def vertex_colours(self, u: int) -> set[int]:
        """The colour set S(u) of edges currently coloured at u."""
        return set(self.at[u])

    def with_colour(self, u: int, c: int) -> int | None:
        return self.at[u].get(c)

    def missing(self, u: int) -> set[int]:
        return {c for c in range(1, self.palette + 1) if c not in self.at[u]}

    def degree_coloured(self, u: int) -> int:
        return len(self.at[u])

    def is_total(self) -> bool:
        return UNCOLOURED not in self.colour_of

    def max_colour(self) -> int:
        return max(self.colour_of, default=0)

    def copy(self, palette: int | None = None) -> "PartialEdgeColouring":
        out = self.__class__.__new__(self.__class__)
        out.n = self.n
        out.edges = self.edges
        out.palette = self.palette if palette is None else palette
        if out.palette < self.max_colour():
            raise ValueError("cannot shrink palette below a colour in use")
        out.colour_of = list(self.colour_of)
        out.at = [dict(d) for d in self.at]
        out.index = self.index
        return out

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, PartialEdgeColouring)
            and self.n == other.n
            and self.edges == other.edges
            and self.colour_of == other.colour_of
            and self.palette == other.palette
        )

    def __repr__(self) -> str:
        done = sum(1 for c in self.colour_of if c != UNCOLOURED)
        return (
            f"PartialEdgeColouring({done}/{len(self.edges)} edges, "
            f"palette={self.palette}, max={self.max_colour()})"
        )


def _vertex_set_digest(col: PartialEdgeColouring) -> str:
    payload = json.dumps(
        [sorted(col.at[u]) for u in range(col.n)], separators=(",", ":")
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def colouring_to_json(col: PartialEdgeColouring) -> str:
    """Serialize as {"palette", "colours": {"u-v": c}, "vertex_sets_sha256"}."""
    if col.index is None:
        raise AVDError("JSON export requires a simple edge universe")
    colours = {
        f"{u}-{v}": col.colour_of[eid]
        for eid, (u, v) in enumerate(col.edges)
        if col.colour_of[eid] != UNCOLOURED
    }
    payload = {
        "palette": col.palette,
        "colours": colours,
        "vertex_sets_sha256": _vertex_set_digest(col),
    }
    return json.dumps(payload, separators=(",", ":"), sort_keys=True)


def colouring_from_json(text: str, graph: Graph) -> PartialEdgeColouring:
    try:
        payload = json.loads(text)
        palette = int(payload["palette"])
        items = [
            (tuple(int(x) for x in key.split("-")), int(c))
            for key, c in payload["colours"].items()
        ]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"bad colouring JSON: {exc}") from exc
    col = PartialEdgeColouring.for_graph(graph, palette)
    for (u, v), c in items:
        col.set_pair((u, v), c)
    return col


class _FanSolver:
    """Colours every edge of one edge universe within k colours."""

    def __init__(self, n: int, edges: Sequence[Edge], incident: Sequence[Sequence[int]], k: int):
        self.col = PartialEdgeColouring(n, edges, palette=k)
        self.incident = incident

    def run(self) -> PartialEdgeColouring:
        col = self.col
        for eid in range(len(col.edges)):
            u, v = col.edges[eid]
            both = col.missing(u) & col.missing(v)
            if both:
                col.set_colour(eid, min(both))
            else:
                self._fan(eid)
        return col

    def _other(self, eid: int, x: int) -> int:
        a, b = self.col.edges[eid]
        return b if x == a else a

    def _fan(self, e0: int) -> None:
        col = self.col
        u, v = col.edges[e0]
        # anchor at the endpoint of lower degree (ties to the lower id, since
        # edges are stored (min, max)); either choice is sound
        x = u if len(self.incident[u]) <= len(self.incident[v]) else v
        fan = [e0]
        rim = [self._other(e0, x)]
        in_fan = {e0}
        candidates = [e for e in sorted(self.incident[x]) if col.colour_of[e] != UNCOLOURED]
        rim_missing = set(col.missing(rim[0]))
        while True:
            nxt = None
            for e in candidates:
                if e not in in_fan and col.colour_of[e] in rim_missing:
                    nxt = e
                    break
            if nxt is None:
                # impossible within the k-colour budget (counting argument on
                # the missing-sets of the distinct rim vertices)
                raise InvariantError("fan ran out of extension edges")
            fan.append(nxt)
            in_fan.add(nxt)
            y = self._other(nxt, x)
            rim.append(y)
            rim_missing |= col.missing(y)
            if col.missing(x) & col.missing(y):
                self._fold(x, fan, rim)
                return
            idx = self._reducible(rim)
            if idx is not None:
                self._reduce(x, fan, rim, idx)
                return

    def _fold(self, x: int, fan: list[int], rim: list[int]) -> None:
        # Recolour the last fan edge with a colour free at both its ends; its
        # old colour is free at an earlier rim vertex (that is the fan
        # property), so the truncated fan is foldable again. The cascade ends
        # by colouring the original uncoloured edge.
        col = self.col
        while True:
            free = col.missing(x) & col.missing(rim[-1])
            if not free:
                raise InvariantError("fold invoked on a non-foldable fan")
            old = col.colour_of[fan[-1]]
            col.set_colour(fan[-1], min(free))
            if len(fan) == 1:
                return
            idx = None
            for i, y in enumerate(rim[:-1]):
                if old not in col.at[y]:
                    idx = i
                    break
            if idx is None:
                raise InvariantError("fold lost the fan property")
            del fan[idx + 1:]
            del rim[idx + 1:]

    def _reducible(self, rim: list[int]) -> int | None:
        col = self.col
        yn = rim[-1]
        miss_n = col.missing(yn)
        for i, y in enumerate(rim[:-1]):
            if y != yn and (miss_n & col.missing(y)):
                return i
        return None

    def _reduce(self, x: int, fan: list[int], rim: list[int], i: int) -> None:
        # Some colour a is missing at both rim[i] and the last rim vertex,
        # and some colour b is missing at the anchor. Swapping the a/b
        # alternating chain from whichever of the two rim vertices does NOT
        # reach the anchor (at most one can: the anchor has a single a-edge)
        # makes b free at that rim vertex, and the fan folds there.
        col = self.col
        yi, yn = rim[i], rim[-1]
        a = min(col.missing(yi) & col.missing(yn))
        b = min(col.missing(x))
        if self._chain_swap(yi, a, b, x):
            del fan[i + 1:]
            del rim[i + 1:]
        elif not self._chain_swap(yn, a, b, x):
            raise InvariantError("both alternating chains reached the fan anchor")
        self._fold(x, fan, rim)

    def _chain_swap(self, y: int, a: int, b: int, x: int) -> bool:
        """Swap colours on the maximal a/b chain from y unless it ends at x."""
        col = self.col
        chain: list[int] = []
        z, want = y, b
        while want in col.at[z]:
            e = col.at[z][want]
            chain.append(e)
            z = self._other(e, z)
            want = a if want == b else b
        if z == x:
            return False
        swapped = [a if col.colour_of[e] == b else b for e in chain]
        for e in chain:
            col.set_colour(e, UNCOLOURED)
        for e, c in zip(chain, swapped):
            col.set_colour(e, c)
        return True


def vizing_colour(mg: MultiGraph) -> PartialEdgeColouring:
    """Properly colour every edge of a multigraph (multiplicity <= 2).

    Uses min(delta + mu, floor(3*delta/2)) colours, which is at most delta+1
    for simple inputs and delta+2 at multiplicity 2.
    """
    mu = mg.max_multiplicity
    if mu > 2:
        raise GraphFormatError(f"edge multiplicity {mu} exceeds 2")
    delta = mg.delta
    k = min(delta + mu, (3 * delta) // 2) if mg.m else 0
    solver = _FanSolver(mg.n, mg.edge_list, mg.incident, max(k, 1) if mg.m else 0)
    return solver.run()


def extend_to_original(
    graph: Graph, gprime: MultiGraph, cprime: PartialEdgeColouring
) -> PartialEdgeColouring:
    """Pull a colouring of the contracted multigraph back to the input graph.

    Each multigraph edge hands its colour to the original edge it came from;
    each contracted pair uv then takes the smallest colour free at both u and
    v (one exists: both endpoints have degree below the small-vertex
    threshold, which leaves room inside a delta+2 palette). After this step
    the two endpoints of a contracted edge share exactly that one colour,
    because all their other edges meet at the merged vertex and are pairwise
    distinct there.
    """
    if gprime.origin is None:
        raise AVDError("multigraph carries no origin map; nothing to extend")
    palette = graph.delta + 2
    col = PartialEdgeColouring.for_graph(graph, palette)
    for eid, (u, v) in enumerate(gprime.origin):
        col.set_pair((u, v), cprime.colour_of[eid])
    for rep in sorted(gprime.merged):
        u, v = gprime.merged[rep]
        free = col.missing(u) & col.missing(v)
        if not free:
            raise InvariantError(
                f"no colour free at both endpoints of contracted edge ({u}, {v})"
            )
        col.set_pair((u, v), min(free))
    return col


def shared_colour_property(
    graph: Graph, gprime: MultiGraph, col: PartialEdgeColouring
) -> list[Edge]:
    """Contracted edges uv violating S(u) ∩ S(v) = {colour(uv)}; empty when sound."""
    bad: list[Edge] = []
    for rep in sorted(gprime.merged):
        u, v = gprime.merged[rep]
        expect = {col.pair_colour((u, v))}
        if col.vertex_colours(u) & col.vertex_colours(v) != expect:
            bad.append((u, v))
    return bad


def recolour_selected(
    graph: Graph,
    selected: Iterable[Edge],
    base: PartialEdgeColouring,
    q: int,
) -> PartialEdgeColouring:
    """Recolour a degree-bounded edge set with fresh colours above the base palette.

    The selected edges (max degree at most q+2 among themselves) are wiped
    and recoloured within [delta+3, delta+q+5]; everything else is untouched.
    The result's palette is widened to delta+q+6 — the full budget of the
    later phases. Fresh colours cannot clash with old ones, so properness of
    the union is properness of the parts.
    """
    delta = graph.delta
    sel = sorted({_norm_edge(u, v) for u, v in selected})
    for u, v in sel:
        if not graph.has_edge(u, v):
            raise GraphFormatError(f"selected edge ({u}, {v}) not in graph")
    degree: dict[int, int] = {}
    for u, v in sel:
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
    max_deg = max(degree.values(), default=0)
    if max_deg > q + 2:
        raise InvariantError(
            f"selected subgraph has degree {max_deg} > q+2 = {q + 2}"
        )
    out = base.copy(palette=delta + q + 6)
    if not sel:
        return out
    incident: dict[int, list[int]] = {}
    for eid, (u, v) in enumerate(sel):
        incident.setdefault(u, []).append(eid)
        incident.setdefault(v, []).append(eid)
    k = min(max_deg + 1, max((3 * max_deg) // 2, 1))
    inc = [incident.get(u, ()) for u in range(graph.n)]
    sub = _FanSolver(graph.n, sel, inc, k).run()
    if sub.max_colour() > q + 3:
        raise InvariantError("selected-edge recolouring exceeded q+3 colours")
    for u, v in sel:
        out.set_pair((u, v), UNCOLOURED)
    for eid, (u, v) in enumerate(sel):
        out.set_pair((u, v), delta + 2 + sub.colour_of[eid])
    return out
