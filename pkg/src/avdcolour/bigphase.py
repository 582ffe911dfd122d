"""Randomised pair selection around big vertices.

Each big vertex ``u`` must end up holding a *pair*: a 2-element subset of its
candidate neighbourhood (the ``d`` smallest-index neighbours).  Edges from a
vertex to the members of its pair are *selected* and are recoloured out of
the way during finalisation, which is what eventually separates the colour
sets of adjacent big vertices of equal degree.

Pairs are chosen one vertex at a time, uniformly from the admissible pairs
(truncated to the first ``s`` of them in theory mode).  A choice can create
one of five conflict patterns — an overloaded picked vertex, a doubly
engaged fragile edge, or two bad edges linked in one of three ways — in
which case the participating vertices are reset and selected again later.
The loop maintains the invariants checked by :func:`check_invariants`;
``run_big_phase`` records every decision in an :class:`ExecutionTrace` so a
run can be replayed, audited, or losslessly encoded.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

from .colouring import PartialEdgeColouring, UNCOLOURED, recolour_selected
from .errors import InvariantError, RegimeError, StepCapExceeded
from .graphs import DegreeProfile, FragileSet, Graph, fragile_edges

Edge = tuple[int, int]
Pair = tuple[int, int]

RESET_SIZES = {2: 2, 3: 3, 4: 4, 5: 5}  # type 1 resets q+1 vertices


def sampling_window(d: int, q: int) -> int:
    """Size s = C(d-q, 2) - 3d of the truncated sampling pool (theory mode)."""
    return math.comb(max(d - q, 0), 2) - 3 * d


@dataclass(frozen=True)
class BadEventRecord:
    """One detected conflict: which pattern, where, and who got reset."""

    type: int
    step: int
    witness: tuple[int, ...]
    resets: tuple[int, ...]


@dataclass(frozen=True)
class StepRecord:
    step: int
    u: int
    r: int
    pair: Pair
    event: BadEventRecord | None = None


@dataclass
class ExecutionTrace:
    """Complete decision record of one selection run."""

    q: int
    mode: str
    seed: int | None
    steps: list[StepRecord] = field(default_factory=list)
    completed: bool = False

    @property
    def events(self) -> list[BadEventRecord]:
        return [rec.event for rec in self.steps if rec.event is not None]

    def event_counts(self) -> dict[int, int]:
        counts = {t: 0 for t in (1, 2, 3, 4, 5)}
        for ev in self.events:
            counts[ev.type] += 1
        return counts


class SelectionState:
    """Mutable assignment of pairs to big vertices.

    ``pair_of[u]`` is the sorted pair currently held by big ``u`` (``None``
    while unset), ``pickers[v]`` the set of big vertices whose pair contains
    ``v``, and ``pending`` the big vertices still without a pair.  The two
    structures are kept mutually consistent by :meth:`assign` and
    :meth:`reset`; everything else in this module reads them.
    """

    __slots__ = (
        "graph", "profile", "q", "mode", "s", "candidates", "pair_of",
        "pickers", "pending", "fragile", "_fragile_sorted", "_bignbrs",
        "_bad_candidates", "_big_near",
    )

    def __init__(self, graph: Graph, profile: DegreeProfile, q: int,
                 mode: str | None = None):
        if mode is None:
            mode = profile.mode
        if mode not in ("theory", "practical"):
            raise ValueError(f"unknown mode {mode!r}")
        self.graph = graph
        self.profile = profile
        self.q = q
        self.mode = mode
        self.s = sampling_window(profile.d, q)
        d = profile.d
        self.candidates: dict[int, tuple[int, ...]] = {
            u: graph.neighbours(u)[:d] for u in sorted(profile.big)
        }
        self.pair_of: dict[int, Pair | None] = {u: None for u in self.candidates}
        self.pickers: list[set[int]] = [set() for _ in range(graph.n)]
        self.pending: set[int] = set(self.candidates)
        self.fragile: FragileSet = fragile_edges(graph, profile, q)
        self._fragile_sorted: tuple[Edge, ...] = tuple(sorted(self.fragile.edges))
        self._bignbrs: tuple[frozenset[int], ...] = tuple(
            frozenset(w for w in graph.neighbours(v) if profile.is_big(w))
            for v in range(graph.n)
        )
        # Edges that could ever become bad: both endpoints big, equal degree.
        # _big_near[i] holds every big vertex whose pair-state affects whether
        # candidate i is finished (the endpoints and their big neighbours).
        cands: list[Edge] = []
        near: list[frozenset[int]] = []
        for u, v in graph.edges():
            if profile.is_big(u) and profile.is_big(v) \
                    and graph.degree(u) == graph.degree(v):
                cands.append((u, v))
                near.append(self._bignbrs[u] | self._bignbrs[v] | {u, v})
        self._bad_candidates: tuple[Edge, ...] = tuple(cands)
        self._big_near: tuple[frozenset[int], ...] = tuple(near)

    def first_pending(self) -> int:
        return min(self.pending)

    def uplus(self, u: int) -> tuple[int, ...]:
        """Members of u's pair, or () while unset (or for small vertices)."""
        pair = self.pair_of.get(u)
        return pair if pair is not None else ()

    def uminus(self, v: int) -> frozenset[int]:
        """Big vertices whose current pair contains v."""
        return frozenset(self.pickers[v])

    def assign(self, u: int, pair: Pair) -> None:
        if u not in self.pending:
            raise InvariantError(f"vertex {u} is not awaiting a pair")
        a, b = sorted(pair)
        if a == b or a not in self.candidates[u] or b not in self.candidates[u]:
            raise InvariantError(
                f"pair {pair} is not a 2-subset of the candidates of {u}"
            )
        self.pair_of[u] = (a, b)
        self.pickers[a].add(u)
        self.pickers[b].add(u)
        self.pending.discard(u)

    def reset(self, vertices: tuple[int, ...]) -> None:
        for w in vertices:
            pair = self.pair_of.get(w)
            if pair is None:
                raise InvariantError(f"reset of {w} which holds no pair")
            for m in pair:
                self.pickers[m].discard(w)
            self.pair_of[w] = None
            self.pending.add(w)

    def selected_edges(self) -> list[Edge]:
        """Edges between a big vertex and its pair members, ascending."""
        out: set[Edge] = set()
        for u, pair in self.pair_of.items():
            if pair is None:
                continue
            for m in pair:
                out.add((u, m) if u < m else (m, u))
        return sorted(out)

    def is_selected(self, u: int, v: int) -> bool:
        return v in self.uplus(u) or u in self.uplus(v)


def residual_colours(state: SelectionState, colouring: PartialEdgeColouring,
                     u: int) -> set[int]:
    """Colours at u after discarding edges to pair members and pickers."""
    skip = set(state.uplus(u)) | state.pickers[u]
    g = state.graph
    return {
        colouring.pair_colour((u, y)) for y in g.neighbours(u) if y not in skip
    }


def _residual_size(state: SelectionState, u: int) -> int:
    # pair members and pickers are disjoint subsets of N(u), so the size of
    # the residual set is pure arithmetic; used to short-circuit comparisons.
    return (state.graph.degree(u)
            - len(state.uplus(u)) - len(state.pickers[u]))


def _finished(state: SelectionState, u: int, v: int) -> bool:
    pend = state.pending
    if u in pend or v in pend:
        return False
    return pend.isdisjoint(state._bignbrs[u]) and pend.isdisjoint(state._bignbrs[v])


def bad_edge_test(state: SelectionState, colouring: PartialEdgeColouring,
                  u: int, v: int) -> bool:
    """Is uv currently bad: big endpoints of equal degree, every big vertex
    around both already holding a pair, and equal residual colour sets."""
    g = state.graph
    if not g.has_edge(u, v):
        raise InvariantError(f"bad_edge_test on a non-edge ({u}, {v})")
    prof = state.profile
    if not (prof.is_big(u) and prof.is_big(v)):
        return False
    if g.degree(u) != g.degree(v):
        return False
    if not _finished(state, u, v):
        return False
    if _residual_size(state, u) != _residual_size(state, v):
        return False
    return residual_colours(state, colouring, u) == residual_colours(state, colouring, v)


def current_bad_edges(state: SelectionState,
                      colouring: PartialEdgeColouring) -> list[Edge]:
    """All bad edges under the current pair assignment, ascending order."""
    out: list[Edge] = []
    pend = state.pending
    res_cache: dict[int, set[int]] = {}
    for (u, v), near in zip(state._bad_candidates, state._big_near):
        if not pend.isdisjoint(near):
            continue
        if _residual_size(state, u) != _residual_size(state, v):
            continue
        ru = res_cache.get(u)
        if ru is None:
            ru = res_cache[u] = residual_colours(state, colouring, u)
        rv = res_cache.get(v)
        if rv is None:
            rv = res_cache[v] = residual_colours(state, colouring, v)
        if ru == rv:
            out.append((u, v))
    return out


def admissible_pairs(state: SelectionState, colouring: PartialEdgeColouring,
                     u: int) -> list[Pair]:
    """Pairs {v, w} of candidates of u that u may select, in ascending order.

    A pair is ruled out when one member's edge from u is already selected
    the other way, when both members span a fragile edge, or when adopting
    it would turn an edge at u into a bad edge.
    """
    g = state.graph
    cand = [v for v in state.candidates[u] if u not in state.uplus(v)]
    fragile = state.fragile

    # Edges at u that could become bad once u's own pair lands: the far
    # endpoint is big with equal degree and everything around both endpoints
    # except u itself is settled.  Their residual sets don't depend on which
    # pair u adopts (only membership of the far endpoint in the pair does),
    # so compute them once.
    pend_wo_u = state.pending - {u}
    du = g.degree(u)
    potentials: list[tuple[int, int, set[int]]] = []
    if pend_wo_u.isdisjoint(state._bignbrs[u]):
        for x in g.neighbours(u):
            if x not in state.candidates or g.degree(x) != du:
                continue
            if state.pair_of[x] is None:
                continue
            if not pend_wo_u.isdisjoint(state._bignbrs[x]):
                continue
            potentials.append((x, _residual_size(state, x),
                               residual_colours(state, colouring, x)))

    base_su = {
        colouring.pair_colour((u, y))
        for y in g.neighbours(u) if y not in state.pickers[u]
    }
    base_size = len(base_su)

    out: list[Pair] = []
    for i in range(len(cand)):
        v = cand[i]
        cv = colouring.pair_colour((u, v))
        for j in range(i + 1, len(cand)):
            w = cand[j]
            if (v, w) in fragile:
                continue
            if potentials:
                cw = colouring.pair_colour((u, w))
                su: set[int] | None = None
                bad = False
                for x, sx_size, sx in potentials:
                    in_pair = x == v or x == w
                    if sx_size - (1 if in_pair else 0) != base_size - 2:
                        continue
                    if su is None:
                        su = base_su - {cv, cw}
                    sxx = sx - {colouring.pair_colour((u, x))} if in_pair else sx
                    if su == sxx:
                        bad = True
                        break
                if bad:
                    continue
            out.append((v, w))
    return out


def _orientations(e: Edge) -> tuple[tuple[int, int], tuple[int, int]]:
    return ((e[0], e[1]), (e[1], e[0]))


def detect_bad_event(state: SelectionState, colouring: PartialEdgeColouring,
                     u: int, step: int) -> BadEventRecord | None:
    """Check the five conflict patterns, in order, after u received a pair.

    Returns the first matching pattern with its lexicographically smallest
    witness tuple, or None.  Only the first pattern that matches is
    reported, so a single selection never triggers two events.
    """
    g = state.graph
    q = state.q

    # 1: some picked vertex now has q+1 pickers.
    for v in g.neighbours(u):
        if len(state.pickers[v]) == q + 1:
            resets = tuple(sorted(state.pickers[v]))
            return BadEventRecord(1, step, (v,), resets)

    # 2: both endpoints of a fragile edge have pickers, u among them.  In
    # degenerate regimes (d <= q+3) an endpoint may itself be a picker of
    # the other side, and it is a valid reset target like any other.
    pair_u = state.uplus(u)
    best2: tuple[int, int, int] | None = None
    for a, b in state._fragile_sorted:
        for v, w in _orientations((a, b)):
            if v not in pair_u:
                continue  # u must be a picker of v
            for x in sorted(state.pickers[w]):
                if x != u:
                    tup = (v, w, x)
                    if best2 is None or tup < best2:
                        best2 = tup
                    break
    if best2 is not None:
        v, w, x = best2
        return BadEventRecord(2, step, best2, tuple(sorted({u, x})))

    bad = current_bad_edges(state, colouring)
    if len(bad) < 2:
        return None

    # 3: two bad edges sharing a vertex, u adjacent to the far or shared one.
    best3: tuple[int, int, int] | None = None
    for e in bad:
        for f in bad:
            if e == f:
                continue
            shared = set(e) & set(f)
            if len(shared) != 1:
                continue
            w = shared.pop()
            v = e[0] if e[1] == w else e[1]
            x = f[0] if f[1] == w else f[1]
            if g.has_edge(u, v) or g.has_edge(u, w):
                tup = (v, w, x)
                if best3 is None or tup < best3:
                    best3 = tup
    if best3 is not None:
        v, w, x = best3
        return BadEventRecord(3, step, best3, tuple(sorted({u, v, x})))

    # 4: two disjoint bad edges bridged by a selection w -> x.
    best4: tuple[int, int, int, int] | None = None
    for e in bad:
        for f in bad:
            if e == f or set(e) & set(f):
                continue
            for v, w in _orientations(e):
                for x, y in _orientations(f):
                    if x not in state.uplus(w):
                        continue
                    if g.has_edge(u, v) or g.has_edge(u, w) \
                            or g.has_edge(u, x) or g.has_edge(u, y):
                        tup = (v, w, x, y)
                        if best4 is None or tup < best4:
                            best4 = tup
    if best4 is not None:
        v, w, x, y = best4
        return BadEventRecord(4, step, best4, tuple(sorted({u, v, w, y})))

    # 5: two disjoint bad edges whose inner endpoints picked a common vertex.
    best5: tuple[int, int, int, int, int] | None = None
    for e in bad:
        for f in bad:
            if e == f or set(e) & set(f):
                continue
            for v, w in _orientations(e):
                if not (g.has_edge(u, v) or g.has_edge(u, w)):
                    continue
                for x, y in _orientations(f):
                    common = set(state.uplus(w)) & set(state.uplus(x))
                    for z in sorted(common):
                        if z in (v, w, x, y):
                            continue
                        tup = (v, w, x, y, z)
                        if best5 is None or tup < best5:
                            best5 = tup
                        break
    if best5 is not None:
        v, w, x, y, z = best5
        return BadEventRecord(5, step, best5, tuple(sorted({u, v, w, x, y})))
    return None


@dataclass(frozen=True)
class InvariantReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_invariants(state: SelectionState,
                     colouring: PartialEdgeColouring) -> InvariantReport:
    """Verify the five structural invariants of a selection state.

    (1) nobody has more than q pickers; (2) no fragile edge is engaged on
    both sides; (3) the bad edges form a matching; (4) the closed pair
    neighbourhoods of endpoints of distinct bad edges are disjoint; and, in
    theory mode only, (5) every pending big vertex still has at least s
    admissible pairs.
    """
    q = state.q
    out: list[str] = []
    for v in range(state.graph.n):
        if len(state.pickers[v]) > q:
            out.append(
                f"(1) vertex {v} has {len(state.pickers[v])} pickers (limit {q})"
            )
    for a, b in state._fragile_sorted:
        if state.pickers[a] and state.pickers[b]:
            out.append(f"(2) fragile edge ({a}, {b}) is engaged on both sides")
    bad = current_bad_edges(state, colouring)
    seen: set[int] = set()
    for a, b in bad:
        if a in seen or b in seen:
            out.append(f"(3) bad edge ({a}, {b}) overlaps another bad edge")
        seen.update((a, b))
    for i in range(len(bad)):
        for j in range(i + 1, len(bad)):
            if set(bad[i]) & set(bad[j]):
                continue
            for a in bad[i]:
                ball_a = {a, *state.uplus(a)}
                for b in bad[j]:
                    hit = ball_a & {b, *state.uplus(b)}
                    if hit:
                        out.append(
                            f"(4) bad edges {bad[i]} and {bad[j]} share {sorted(hit)}"
                        )
    if state.mode == "theory":
        for u in sorted(state.pending):
            have = len(admissible_pairs(state, colouring, u))
            if have < state.s:
                out.append(
                    f"(5) pending vertex {u} has {have} admissible pairs, needs {state.s}"
                )
    return InvariantReport(tuple(out))


def run_big_phase(graph: Graph, profile: DegreeProfile,
                  colouring: PartialEdgeColouring, q: int = 13,
                  seed: int | None = 0, mode: str | None = None,
                  step_cap: int = 10 ** 6, assert_invariants: bool = False,
                  choices: list[int] | None = None,
                  ) -> tuple[SelectionState, ExecutionTrace]:
    """Drive the selection loop until every big vertex holds a pair.

    The colouring must already be total and proper on ``graph``.  ``choices``
    replaces the random stream with a fixed rank sequence (used for replay);
    otherwise ranks come from ``random.Random(seed)``.  In theory mode the
    pool is truncated to the first ``s`` admissible pairs and it is an
    invariant violation for fewer to exist; in practical mode the whole
    admissible list is used and running dry raises RegimeError.
    """
    state = SelectionState(graph, profile, q, mode)
    trace = ExecutionTrace(q=q, mode=state.mode, seed=seed)
    if state.mode == "theory" and state.s <= 0:
        raise RegimeError(
            f"sampling window s={state.s} is not positive (d={profile.d}, q={q})"
        )
    rng = random.Random(seed)
    replay = iter(choices) if choices is not None else None
    step = 0
    while state.pending:
        if step >= step_cap:
            raise StepCapExceeded("big", step_cap)
        step += 1
        if assert_invariants:
            report = check_invariants(state, colouring)
            if not report.ok:
                raise InvariantError(
                    f"big step {step}: " + "; ".join(report.violations)
                )
        u = state.first_pending()
        pool = admissible_pairs(state, colouring, u)
        if state.mode == "theory":
            if len(pool) < state.s:
                raise InvariantError(
                    f"vertex {u} has {len(pool)} admissible pairs, needs s={state.s}"
                )
            pool = pool[: state.s]
        elif not pool:
            raise RegimeError(
                f"vertex {u} has no admissible pair; a different seed may succeed"
            )
        if replay is not None:
            try:
                r = next(replay)
            except StopIteration:
                raise InvariantError("replay choices exhausted before completion")
            if not 0 <= r < len(pool):
                raise InvariantError(
                    f"replay rank {r} outside pool of {len(pool)} at step {step}"
                )
        else:
            r = rng.randrange(len(pool))
        pair = pool[r]
        state.assign(u, pair)
        event = detect_bad_event(state, colouring, u, step)
        if event is not None:
            expected = q + 1 if event.type == 1 else RESET_SIZES[event.type]
            if len(event.resets) != expected:
                raise InvariantError(
                    f"type {event.type} event reset {len(event.resets)} vertices, "
                    f"expected {expected}"
                )
            if u not in event.resets:
                raise InvariantError(
                    f"type {event.type} event does not reset the current vertex {u}"
                )
            state.reset(event.resets)
        trace.steps.append(StepRecord(step, u, r, pair, event))
    if assert_invariants:
        report = check_invariants(state, colouring)
        if not report.ok:
            raise InvariantError("at termination: " + "; ".join(report.violations))
    trace.completed = True
    return state, trace


def finalize_big(graph: Graph, state: SelectionState,
                 base: PartialEdgeColouring, q: int) -> PartialEdgeColouring:
    """Recolour selected edges above the base palette and cap marked edges.

    Selected edges move into [delta+3, delta+q+5].  Each bad edge surviving
    at termination donates one *marked* edge — from its smaller endpoint to
    the least pair member that is not the other endpoint — which gets the
    dedicated top colour delta+q+6.  The marked edges form a matching, so
    the single top colour suffices.
    """
    if state.pending:
        raise InvariantError("cannot finalise: some big vertices hold no pair")
    out = recolour_selected(graph, state.selected_edges(), base, q)
    marked: list[Edge] = []
    for a, b in current_bad_edges(state, base):
        lo, hi = (a, b) if a < b else (b, a)
        eligible = [w for w in state.uplus(lo) if w != hi]
        if not eligible:
            raise InvariantError(
                f"bad edge ({lo}, {hi}): no pair member of {lo} to mark"
            )
        marked.append((lo, min(eligible)) if lo < min(eligible)
                      else (min(eligible), lo))
    touched: set[int] = set()
    for a, b in marked:
        if a in touched or b in touched:
            raise InvariantError("marked edges do not form a matching")
        touched.update((a, b))
    top = graph.delta + q + 6
    for e in marked:
        out.set_pair(e, UNCOLOURED)
    for e in marked:
        out.set_pair(e, top)
    return out


def trace_to_jsonl(trace: ExecutionTrace) -> str:
    """One JSON object per selection step: {step, u, r, pair, event?}."""
    lines = []
    for rec in trace.steps:
        obj: dict = {"step": rec.step, "u": rec.u, "r": rec.r,
                     "pair": list(rec.pair)}
        if rec.event is not None:
            obj["event"] = {
                "type": rec.event.type,
                "witnesses": list(rec.event.witness),
                "resets": list(rec.event.resets),
            }
        lines.append(json.dumps(obj))
    return "\n".join(lines) + ("\n" if lines else "")
