"""Graph structures, degree classification, contraction and generators.

Vertices are integers 0..n-1 and every neighbour list is kept sorted
ascending; that index order doubles as the fixed vertex ordering used by the
randomized phases, so identical inputs always walk identical orders.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import GraphFormatError, RegimeError

log = logging.getLogger(__name__)

Edge = tuple[int, int]


def _norm_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class Graph:
    """Immutable simple undirected graph on vertices 0..n-1."""

    __slots__ = ("n", "adj", "_adjsets", "m")

    def __init__(self, n: int, edges: Iterable[Edge]):
        if n < 0:
            raise GraphFormatError(f"vertex count must be non-negative, got {n}")
        seen: set[Edge] = set()
        adjsets: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphFormatError(f"loop at vertex {u}")
            e = _norm_edge(u, v)
            if e in seen:
                raise GraphFormatError(f"duplicate edge {e}")
            seen.add(e)
            adjsets[u].add(v)
            adjsets[v].add(u)
        self.n = n
        self.m = len(seen)
        self.adj: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(s)) for s in adjsets
        )
        self._adjsets: tuple[frozenset[int], ...] = tuple(
            frozenset(s) for s in adjsets
        )

    def degree(self, u: int) -> int:
        return len(self.adj[u])

    def neighbours(self, u: int) -> tuple[int, ...]:
        return self.adj[u]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adjsets[u]

    @property
    def delta(self) -> int:
        return max((len(a) for a in self.adj), default=0)

    def edges(self) -> Iterator[Edge]:
        """Yield edges (u, v) with u < v in lexicographic order."""
        for u in range(self.n):
            for v in self.adj[u]:
                if u < v:
                    yield (u, v)

    def isolated_edges(self) -> list[Edge]:
        """Edges whose component is a single edge (both endpoints degree 1)."""
        return [
            (u, v) for u, v in self.edges()
            if self.degree(u) == 1 and self.degree(v) == 1
        ]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.adj == other.adj

    def __hash__(self) -> int:
        return hash((self.n, self.adj))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, delta={self.delta})"


class MultiGraph:
    """Undirected multigraph with edge multiplicity capped at 2.

    Edges are addressed by integer id (their position in ``edge_list``), so
    the two copies of a doubled edge stay distinguishable — the edge colourer
    needs that. When produced by :func:`contract_pendant_pairs`, ``origin``
    maps each edge id back to the endpoints of the originating edge of the
    input graph, and ``merged`` records contracted pairs keyed by their
    surviving representative.
    """

    __slots__ = ("n", "edge_list", "incident", "origin", "merged")

    def __init__(
        self,
        n: int,
        edges: Sequence[Edge],
        origin: Sequence[Edge] | None = None,
        merged: dict[int, Edge] | None = None,
    ):
        if origin is not None and len(origin) != len(edges):
            raise GraphFormatError("origin map length does not match edge count")
        mult: dict[Edge, int] = {}
        incident: list[list[int]] = [[] for _ in range(n)]
        edge_list: list[Edge] = []
        for eid, (u, v) in enumerate(edges):
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphFormatError(f"loop at vertex {u}")
            e = _norm_edge(u, v)
            mult[e] = mult.get(e, 0) + 1
            if mult[e] > 2:
                raise GraphFormatError(f"edge {e} has multiplicity > 2")
            edge_list.append(e)
            incident[u].append(eid)
            incident[v].append(eid)
        self.n = n
        self.edge_list: tuple[Edge, ...] = tuple(edge_list)
        self.incident: tuple[tuple[int, ...], ...] = tuple(
            tuple(ids) for ids in incident
        )
        self.origin: tuple[Edge, ...] | None = tuple(origin) if origin else None
        self.merged: dict[int, Edge] = dict(merged) if merged else {}

    @property
    def m(self) -> int:
        return len(self.edge_list)

    def degree(self, u: int) -> int:
        return len(self.incident[u])

    @property
    def delta(self) -> int:
        return max((len(ids) for ids in self.incident), default=0)

    def endpoints(self, eid: int) -> Edge:
        return self.edge_list[eid]

    def other_end(self, eid: int, u: int) -> int:
        a, b = self.edge_list[eid]
        if u == a:
            return b
        if u == b:
            return a
        raise ValueError(f"vertex {u} is not an endpoint of edge {eid}")

    def multiplicity(self, u: int, v: int) -> int:
        e = _norm_edge(u, v)
        return sum(1 for f in self.edge_list if f == e)

    @property
    def max_multiplicity(self) -> int:
        mult: dict[Edge, int] = {}
        for e in self.edge_list:
            mult[e] = mult.get(e, 0) + 1
        return max(mult.values(), default=0)

    @classmethod
    def from_graph(cls, graph: Graph) -> "MultiGraph":
        edges = list(graph.edges())
        return cls(graph.n, edges, origin=edges)

    def __repr__(self) -> str:
        return f"MultiGraph(n={self.n}, m={self.m}, delta={self.delta})"


@dataclass(frozen=True)
class DegreeProfile:
    """Partition of the vertices into small (degree < d) and big (the rest)."""

    delta: int
    eps: Fraction
    d: int
    small: frozenset[int]
    big: frozenset[int]
    mode: str = "practical"
    regime_ok: bool = True
    warnings: tuple[str, ...] = ()

    def is_small(self, u: int) -> bool:
        return u in self.small

    def is_big(self, u: int) -> bool:
        return u in self.big


@dataclass(frozen=True)
class FragileSet:
    """The fragile edges of a graph, plus their matching structure.

    ``partner`` maps each endpoint of a fragile edge to the other endpoint;
    it is only populated when the edges do form a matching (always the case
    once d > q+3, since any third vertex touching two fragile edges would
    have to be simultaneously big and of degree <= q+3).
    """

    edges: frozenset[Edge]
    is_matching: bool
    partner: dict[int, int] = field(default_factory=dict)

    def __contains__(self, e: Edge) -> bool:
        return _norm_edge(*e) in self.edges


def _as_eps(eps: float | str | Fraction) -> Fraction:
    # Floats are routed through their decimal repr so eps=0.1 means exactly
    # 1/10: the ceiling in d is sensitive to one-ulp noise (0.4*100 rounds to
    # 40.000000000000006, which would misclassify every degree-40 vertex).
    if isinstance(eps, Fraction):
        return eps
    if isinstance(eps, int):
        return Fraction(eps)
    return Fraction(str(eps))


def classify(graph: Graph, eps: float | str | Fraction, mode: str = "practical") -> DegreeProfile:
    """Split vertices into small/big around the threshold d = ceil((1/2-eps)*delta).

    Theory mode enforces the hypotheses the termination analysis needs
    (0 < eps < 1/2 with d < delta/2, and no isolated edge); practical mode
    records violations as warnings and carries on.
    """
    if mode not in ("theory", "practical"):
        raise ValueError(f"unknown mode {mode!r}")
    eps = _as_eps(eps)
    if not (0 < eps < Fraction(1, 2)):
        raise RegimeError(f"eps must lie strictly between 0 and 1/2, got {eps}")
    delta = graph.delta
    d = math.ceil((Fraction(1, 2) - eps) * delta)
    warnings: list[str] = []
    regime_ok = True
    if 2 * d >= delta:
        msg = f"threshold d={d} is not below delta/2={delta}/2; outside the analysed regime"
        if mode == "theory":
            raise RegimeError(msg)
        warnings.append(msg)
        regime_ok = False
    isolated = graph.isolated_edges()
    if isolated:
        msg = f"graph has {len(isolated)} isolated edge(s), e.g. {isolated[0]}"
        if mode == "theory":
            raise RegimeError(msg)
        warnings.append(msg)
        regime_ok = False
    small = frozenset(u for u in range(graph.n) if graph.degree(u) < d)
    big = frozenset(range(graph.n)) - small
    if warnings:
        log.warning("classify: %s", "; ".join(warnings))
    return DegreeProfile(
        delta=delta, eps=eps, d=d, small=small, big=big,
        mode=mode, regime_ok=regime_ok, warnings=tuple(warnings),
    )


def contractible_edges(graph: Graph, profile: DegreeProfile) -> list[Edge]:
    """Edges joining two small vertices, neither having another small neighbour.

    Equivalently, the isolated edges of the subgraph induced on the small
    vertices. The "no other small neighbour" clause makes the result a
    matching automatically.
    """
    out: list[Edge] = []
    for u, v in graph.edges():
        if not (profile.is_small(u) and profile.is_small(v)):
            continue
        if any(w != v and profile.is_small(w) for w in graph.neighbours(u)):
            continue
        if any(w != u and profile.is_small(w) for w in graph.neighbours(v)):
            continue
        out.append((u, v))
    return out


def contract_pendant_pairs(graph: Graph, profile: DegreeProfile) -> MultiGraph:
    """Contract each small-small edge whose endpoints have no other small neighbour.

    The lower endpoint survives as the merged representative and absorbs the
    partner's remaining edges; the partner keeps its id but becomes isolated.
    Doubled edges appear exactly when some third vertex was adjacent to both
    endpoints (such a vertex is necessarily big, so multiplicity never
    exceeds 2). ``origin`` on the result maps each multigraph edge back to
    the original endpoints, and ``merged`` records representative -> pair.
    """
    pairs = contractible_edges(graph, profile)
    rep: dict[int, int] = {}
    merged: dict[int, Edge] = {}
    for u, v in pairs:
        rep[v] = u
        merged[u] = (u, v)
    edges: list[Edge] = []
    origin: list[Edge] = []
    for u, v in graph.edges():
        if (u, v) in merged.values():
            continue
        mu, mv = rep.get(u, u), rep.get(v, v)
        if mu == mv:
            raise GraphFormatError(
                f"contraction produced a loop at {mu}; contracted pairs must form a matching"
            )
        edges.append(_norm_edge(mu, mv))
        origin.append((u, v))
    gprime = MultiGraph(graph.n, edges, origin=origin, merged=merged)
    if gprime.delta > graph.delta:
        raise RegimeError(
            f"contracted multigraph degree {gprime.delta} exceeds delta={graph.delta}; "
            "threshold d is too large for contraction to be safe"
        )
    return gprime


def fragile_edges(graph: Graph, profile: DegreeProfile, q: int) -> FragileSet:
    """Edges uv with d(u)=d(v) <= q+3 whose every other neighbour is big."""
    if q < 1:
        raise ValueError(f"q must be at least 1, got {q}")
    found: list[Edge] = []
    for u, v in graph.edges():
        du, dv = graph.degree(u), graph.degree(v)
        if du != dv or du > q + 3:
            continue
        if any(w != v and profile.is_small(w) for w in graph.neighbours(u)):
            continue
        if any(w != u and profile.is_small(w) for w in graph.neighbours(v)):
            continue
        found.append((u, v))
    touched: set[int] = set()
    is_matching = True
    for u, v in found:
        if u in touched or v in touched:
            is_matching = False
            break
        touched.update((u, v))
    partner: dict[int, int] = {}
    if is_matching:
        for u, v in found:
            partner[u] = v
            partner[v] = u
    else:
        log.warning("fragile edges do not form a matching (degenerate regime d <= q+3)")
    return FragileSet(edges=frozenset(found), is_matching=is_matching, partner=partner)


def load_graph(text: str, n: int | None = None) -> Graph:
    """Parse an edge-list ("u v" per line, '#' comments, blank lines ignored).

    When ``n`` is omitted the vertex count is one more than the largest index
    mentioned; passing it explicitly allows trailing isolated vertices and
    turns any out-of-range index into an error.
    """
    edges: list[Edge] = []
    max_seen = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise GraphFormatError(f"line {lineno}: non-integer vertex in {raw!r}") from exc
        if u < 0 or v < 0:
            raise GraphFormatError(f"line {lineno}: negative vertex index in {raw!r}")
        edges.append((u, v))
        max_seen = max(max_seen, u, v)
    if n is None:
        n = max_seen + 1
    elif max_seen >= n:
        raise GraphFormatError(
            f"vertex index {max_seen} inconsistent with declared n={n}"
        )
    return Graph(n, edges)


def dump_edge_list(graph: Graph) -> str:
    lines = [f"# n={graph.n} m={graph.m} delta={graph.delta}"]
    lines.extend(f"{u} {v}" for u, v in graph.edges())
    return "\n".join(lines) + "\n"


def graph_to_json(graph: Graph) -> str:
    payload = {
        "n": graph.n,
        "edges": [list(e) for e in graph.edges()],
        "delta": graph.delta,
    }
    return json.dumps(payload, separators=(",", ":"), sort_keys=True)


def graph_from_json(text: str) -> Graph:
    try:
        payload = json.loads(text)
        return Graph(int(payload["n"]), [tuple(e) for e in payload["edges"]])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GraphFormatError):
            raise
        raise GraphFormatError(f"bad graph JSON: {exc}") from exc


def _ceil_frac(num: int, den: int) -> int:
    return -((-num) // den)


def gen_random_graph(
    n: int, target_delta: int, seed: int, model: str = "gnp-capped"
) -> Graph:
    """Seeded random graph with max degree in [0.8*target_delta, target_delta].

    Two models: "gnp-capped" draws each pair independently then trims
    over-degree vertices; "near-regular" overlays Hamiltonian-cycle-shaped
    2-factors (plus one matching if the target is odd). Both are
    post-processed the same way — isolated edges removed, and the maximum
    degree boosted back above the floor if trimming undershot — and both are
    deterministic functions of (n, target_delta, seed).
    """
    if n < 3:
        raise RegimeError(f"need n >= 3, got n={n}")
    if not (2 <= target_delta < n):
        raise RegimeError(
            f"target_delta must satisfy 2 <= target_delta < n, got {target_delta} (n={n})"
        )
    if model not in ("gnp-capped", "near-regular"):
        raise ValueError(f"unknown model {model!r}")
    rng = random.Random(seed)
    edges: set[Edge] = set()
    deg = [0] * n

    def add(u: int, v: int) -> None:
        e = _norm_edge(u, v)
        if u != v and e not in edges:
            edges.add(e)
            deg[u] += 1
            deg[v] += 1

    def remove(e: Edge) -> None:
        edges.remove(e)
        deg[e[0]] -= 1
        deg[e[1]] -= 1

    if model == "gnp-capped":
        p = min(1.0, 0.9 * target_delta / (n - 1))
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < p:
                    add(u, v)
    else:
        perm = list(range(n))

        def shuffled() -> list[int]:
            for i in range(n - 1, 0, -1):
                j = rng.randrange(i + 1)
                perm[i], perm[j] = perm[j], perm[i]
            return perm

        for _ in range(target_delta // 2):
            cyc = shuffled()
            for i in range(n):
                add(cyc[i], cyc[(i + 1) % n])
        if target_delta % 2:
            mat = shuffled()
            for i in range(0, n - 1, 2):
                add(mat[i], mat[i + 1])

    # Trim over-degree vertices (only the gnp model can overshoot), largest
    # neighbour first so the trim is reproducible.
    for u in range(n):
        while deg[u] > target_delta:
            v = max(w for w in range(n) if _norm_edge(u, w) in edges and w != u)
            remove(_norm_edge(u, v))

    for u, v in sorted(edges):
        if deg[u] == 1 and deg[v] == 1:
            remove((u, v))

    floor = _ceil_frac(4 * target_delta, 5)
    if max(deg, default=0) < floor:
        hub = deg.index(max(deg))
        for w in range(n):
            if deg[hub] >= floor:
                break
            if w != hub and deg[w] < target_delta and _norm_edge(hub, w) not in edges:
                add(hub, w)
        if deg[hub] < floor:
            raise RegimeError(
                f"generator could not reach max degree {floor} with n={n}, "
                f"target_delta={target_delta}"
            )

    graph = Graph(n, sorted(edges))
    if not (floor <= graph.delta <= target_delta):
        raise RegimeError(
            f"generated max degree {graph.delta} outside [{floor}, {target_delta}]"
        )
    return graph
