"""Randomised recolouring of edges between low-degree vertices.

After the selection phase, colour-set clashes can only survive on edges
joining two small vertices that are not an isolated pair.  This pass
uncolours exactly those edges and recolours them one at a time, sampling
each colour from a narrow window so the run leaves a short, losslessly
decodable record (see the codec module).

The crucial notion is a *dangerous* neighbour: w is dangerous for u while
colouring the edge uv if w is small, deg(w) = deg(u), every edge at w is
coloured, and S(w) = S(u) + {i} for a single colour i.  The definition
forces u to have uv as its only uncoloured edge, so giving uv the colour i
would recreate a clash on uw.  With exactly one dangerous neighbour the
colour i is simply removed from the choices; with two or more we cannot
afford the removals, so the clash is allowed to happen and is repaired by
uncolouring two edges, which the run records as one *conflict*.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .colouring import UNCOLOURED, PartialEdgeColouring
from .errors import InvariantError, RegimeError, StepCapExceeded
from .graphs import DegreeProfile, Edge, Graph, _norm_edge, contractible_edges


def colour_window(profile: DegreeProfile) -> int:
    """Size of the random window: ceil(2 * eps * delta)."""
    return math.ceil(2 * profile.eps * profile.delta)


def small_core(graph: Graph, profile: DegreeProfile) -> tuple[int, ...]:
    """Small vertices that are not an endpoint of an isolated small pair."""
    excluded = {v for e in contractible_edges(graph, profile) for v in e}
    return tuple(v for v in sorted(profile.small) if v not in excluded)


def core_edge_order(graph: Graph, profile: DegreeProfile) -> tuple[Edge, ...]:
    """The fixed processing order: sorted edges with both ends in the core."""
    core = set(small_core(graph, profile))
    return tuple(e for e in graph.edges() if e[0] in core and e[1] in core)


def dangerous_for(
    graph: Graph,
    colouring: PartialEdgeColouring,
    u: int,
    other: int,
    small: frozenset[int] | set[int],
) -> list[tuple[int, int]]:
    """All (w, colour) pairs where w is dangerous for u on the edge u-other.

    Sorted by w.  The S(w) = S(u) + {i} condition can only hold when u is
    missing exactly the colour of the edge being processed, so callers need
    no separate completeness test on u.
    """
    su = colouring.vertex_colours(u)
    du = len(graph.neighbours(u))
    out: list[tuple[int, int]] = []
    for w in graph.neighbours(u):
        if w == other or w not in small:
            continue
        if len(graph.neighbours(w)) != du:
            continue
        if colouring.degree_coloured(w) != du:
            continue  # w still has uncoloured edges
        sw = colouring.vertex_colours(w)
        if len(sw) == len(su) + 1 and su < sw:
            (i,) = sw - su
            out.append((w, i))
    return out


@dataclass(frozen=True)
class SmallEventRecord:
    """One dangerous-colour hit and the two uncolourings that repair it."""

    step: int
    anchor: int  # endpoint of the processed edge whose danger was realised
    witness: int  # the dangerous neighbour w
    partner: Edge  # cyclic successor of (anchor, w) among anchor's core edges
    colours: tuple[int, int]  # colours removed from (processed edge, partner)


@dataclass(frozen=True)
class SmallStepRecord:
    step: int
    edge: Edge
    r: int
    colour: int
    event: SmallEventRecord | None = None


@dataclass
class SmallTrace:
    """Everything observable about one recolouring run."""

    s: int
    mode: str
    seed: int | None
    order: tuple[Edge, ...]
    steps: list[SmallStepRecord] = field(default_factory=list)
    completed: bool = False

    @property
    def events(self) -> list[SmallEventRecord]:
        return [rec.event for rec in self.steps if rec.event is not None]

    def event_count(self) -> int:
        return len(self.events)


def _incident_in_order(order: tuple[Edge, ...], v: int, skip: Edge) -> list[Edge]:
    return [e for e in order if v in e and e != skip]


def run_small_phase(
    graph: Graph,
    profile: DegreeProfile,
    colouring: PartialEdgeColouring,
    q: int = 13,
    seed: int = 0,
    mode: str | None = None,
    step_cap: int = 10**6,
    assert_invariants: bool = False,
    choices: list[int] | None = None,
) -> tuple[PartialEdgeColouring, SmallTrace]:
    """Recolour all core small-small edges; returns (colouring, trace).

    The input colouring is modified in place and also returned.  ``choices``
    replays a recorded run instead of drawing from the seeded generator; the
    two are interchangeable because a trace stores every drawn index.
    """
    mode = mode or profile.mode
    if mode not in ("theory", "practical"):
        raise ValueError(f"unknown mode {mode!r}")
    palette = profile.delta + q + 6
    if colouring.palette < palette:
        raise RegimeError(
            f"palette {colouring.palette} smaller than required {palette}"
        )
    s = colour_window(profile)
    small = frozenset(profile.small)
    order = core_edge_order(graph, profile)
    trace = SmallTrace(s=s, mode=mode, seed=None if choices is not None else seed,
                       order=order)
    rng = random.Random(seed)
    replay = iter(choices) if choices is not None else None

    for e in order:
        colouring.set_pair(e, UNCOLOURED)

    coloured = {e: False for e in order}
    step = 0
    while not all(coloured.values()):
        step += 1
        if step > step_cap:
            raise StepCapExceeded("small", step_cap)
        edge = next(e for e in order if not coloured[e])
        u, v = edge

        danger_u = dangerous_for(graph, colouring, u, v, small)
        danger_v = dangerous_for(graph, colouring, v, u, small)
        banned = set()
        if len(danger_u) == 1:
            banned.add(danger_u[0][1])
        if len(danger_v) == 1:
            banned.add(danger_v[0][1])

        su, sv = colouring.vertex_colours(u), colouring.vertex_colours(v)
        pool = [c for c in range(1, palette + 1)
                if c not in su and c not in sv and c not in banned]
        # both endpoints are small, so |S(u) + S(v)| <= 2d - 2 and at least
        # s + q + 4 colours always survive; anything less is a logic error
        if len(pool) < s + q + 4:
            raise InvariantError(
                f"small step {step}: only {len(pool)} available colours for "
                f"{edge}, expected at least {s + q + 4}"
            )
        pool = pool[:s]
        if replay is not None:
            try:
                r = next(replay)
            except StopIteration:
                raise InvariantError("replay choices exhausted before completion")
            if not 0 <= r < len(pool):
                raise InvariantError(
                    f"replayed choice {r} outside pool of {len(pool)}"
                )
        else:
            r = rng.randrange(len(pool))
        chosen = pool[r]
        colouring.set_pair(edge, chosen)
        coloured[edge] = True

        event = None
        hit = next((w for w, i in danger_u if i == chosen), None)
        anchor = u
        if hit is None:
            hit = next((w for w, i in danger_v if i == chosen), None)
            anchor = v
        if hit is not None:
            incident = _incident_in_order(order, anchor, edge)
            if len(incident) < 2:
                raise InvariantError(
                    f"small step {step}: dangerous colour received but vertex "
                    f"{anchor} has no second core edge to uncolour"
                )
            if _norm_edge(anchor, hit) not in incident:
                raise InvariantError(
                    f"small step {step}: dangerous neighbour {hit} of {anchor} "
                    "lies outside the recolouring core"
                )
            at = incident.index(_norm_edge(anchor, hit))
            partner = incident[(at + 1) % len(incident)]
            partner_colour = colouring.pair_colour(partner)
            if partner_colour == UNCOLOURED:
                raise InvariantError(
                    f"small step {step}: partner edge {partner} is uncoloured"
                )
            colouring.set_pair(edge, UNCOLOURED)
            colouring.set_pair(partner, UNCOLOURED)
            coloured[edge] = False
            coloured[partner] = False
            event = SmallEventRecord(step, anchor, hit, partner,
                                     (chosen, partner_colour))
            if assert_invariants:
                gap = (colouring.vertex_colours(hit)
                       - colouring.vertex_colours(anchor))
                if gap != {chosen, partner_colour}:
                    raise InvariantError(
                        f"small step {step}: repair colours {sorted(gap)} do "
                        f"not match the uncoloured pair "
                        f"{sorted((chosen, partner_colour))}"
                    )

        trace.steps.append(SmallStepRecord(step, edge, r, chosen, event))

    trace.completed = True
    return colouring, trace
