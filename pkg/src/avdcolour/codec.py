"""Lossless logs for the two randomised phases.

A run of the selection loop (or of the recolouring pass) is fully described
by its sequence of random ranks ``r_1, ..., r_t``.  This module converts
such a run into a *log* — a partial Dyck word ``W`` recording treat/reset
(or colour/uncolour) operations, two integer sequences ``gamma`` and
``delta`` carrying per-conflict payloads, and a snapshot of the final state
— and converts the log back into exactly the ranks that produced it.  The
round trip is the executable form of the argument that conflicts are too
rare for the loops to run forever: logs of eventful runs are information-
poor compared with the ``s^t`` rank sequences, so long executions must be
conflict-free, and conflict-free executions terminate.

Encoding is strict: every payload must fit the per-conflict budget that the
bound calculator charges for it, and both directions re-derive the full
intermediate state and fail loudly (``CodecError``) on any inconsistency,
so a tampered log can never decode silently.

Decoding works in two sweeps.  A forward sweep reads ``W`` and ``gamma``
alone to learn which vertex (edge) each step treated and who was reset.  A
backward sweep then starts from the final snapshot and peels one step at a
time: knowing the state *after* step i and the payload ``delta_i``, it
reconstructs the state *before* step i and the position that the step's
choice occupied in its candidate pool — which is ``r_i``.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

from .bigphase import (
    BadEventRecord,
    ExecutionTrace,
    SelectionState,
    StepRecord,
    admissible_pairs,
    check_invariants,
    detect_bad_event,
)
from .colouring import UNCOLOURED, PartialEdgeColouring
from .errors import CodecError, InvariantError
from .graphs import DegreeProfile, Edge, Graph, _norm_edge
from .smallphase import (
    SmallEventRecord,
    SmallStepRecord,
    SmallTrace,
    _incident_in_order,
    colour_window,
    core_edge_order,
    dangerous_for,
    run_small_phase,
)

Pair = tuple[int, int]


# --------------------------------------------------------------------------
# partial Dyck words


@dataclass(frozen=True)
class PartialDyckWord:
    """A 0/1 word in which every prefix holds at least as many 0s as 1s.

    The number of 0s is the *semilength*; the surplus of 0s over 1s is the
    *defect*.  In a selection log every 0 is one treated vertex and every
    run of 1s (a *descent*) is one handled conflict, so the defect counts
    the vertices currently holding a pair.
    """

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        zeros = ones = 0
        for b in self.bits:
            if b not in (0, 1):
                raise CodecError(f"Dyck word contains {b!r}; bits must be 0 or 1")
            if b == 0:
                zeros += 1
            else:
                ones += 1
            if ones > zeros:
                raise CodecError("more 1s than 0s in a prefix: not a Dyck prefix")

    @property
    def semilength(self) -> int:
        return sum(1 for b in self.bits if b == 0)

    def defect(self) -> int:
        return sum(-1 if b else 1 for b in self.bits)

    def is_full(self) -> bool:
        return self.defect() == 0

    def descent_lengths(self) -> tuple[int, ...]:
        out: list[int] = []
        run = 0
        for b in self.bits:
            if b == 1:
                run += 1
            elif run:
                out.append(run)
                run = 0
        if run:
            out.append(run)
        return tuple(out)

    def per_step_descents(self) -> tuple[int, ...]:
        """Length of the descent following each 0 (0 when none follows)."""
        steps: list[int] = []
        for b in self.bits:
            if b == 0:
                steps.append(0)
            else:
                steps[-1] += 1
        return tuple(steps)


def defect(word: PartialDyckWord) -> int:
    return word.defect()


def pad_to_dyck(word: PartialDyckWord) -> PartialDyckWord:
    """Append one ``011`` per unit of defect, producing a full Dyck word.

    Words of equal semilength and equal defect pad to distinct images (the
    suffix has known length and can be chopped off again), which is the
    injectivity the log-counting bound relies on.
    """
    return PartialDyckWord(word.bits + (0, 1, 1) * word.defect())


# --------------------------------------------------------------------------
# log containers


def _validate_alignment(word: PartialDyckWord, gamma: tuple[int, ...],
                        delta: tuple[int, ...]) -> None:
    t = word.semilength
    if len(gamma) != t or len(delta) != t:
        raise CodecError(
            f"gamma/delta lengths ({len(gamma)}, {len(delta)}) do not match "
            f"the {t} steps of W"
        )
    for i, (ell, g, dl) in enumerate(zip(word.per_step_descents(), gamma, delta)):
        if (ell == 0) != (g == -1) or (g == -1) != (dl == -1):
            raise CodecError(
                f"step {i + 1}: conflict markers disagree "
                f"(descent {ell}, gamma {g}, delta {dl})"
            )
        if g != -1 and (g < 0 or dl < 0):
            raise CodecError(f"step {i + 1}: negative payload ({g}, {dl})")


@dataclass(frozen=True)
class BigLog:
    """(W, gamma, delta, final pair assignment) for a selection run."""

    W: PartialDyckWord
    gamma: tuple[int, ...]
    delta: tuple[int, ...]
    final_uplus: tuple[tuple[int, int, int], ...]  # (vertex, pair lo, pair hi)

    def __post_init__(self) -> None:
        _validate_alignment(self.W, self.gamma, self.delta)
        for ell in self.W.descent_lengths():
            if ell < 2:
                raise CodecError(f"descent of length {ell}: no conflict resets "
                                 "fewer than two vertices")
        prev = -1
        for v, a, b in self.final_uplus:
            if v <= prev:
                raise CodecError("final assignment must be sorted by vertex")
            if not a < b:
                raise CodecError(f"pair ({a}, {b}) of {v} is not normalised")
            prev = v


@dataclass(frozen=True)
class SmallLog:
    """(W, gamma, delta, final colouring) for a recolouring run."""

    W: PartialDyckWord
    gamma: tuple[int, ...]
    delta: tuple[int, ...]
    palette: int
    final_colouring: tuple[tuple[int, int, int], ...]  # (u, v, colour)

    def __post_init__(self) -> None:
        _validate_alignment(self.W, self.gamma, self.delta)
        for ell in self.W.descent_lengths():
            if ell != 2:
                raise CodecError(
                    f"descent of length {ell}: a recolouring conflict uncolours "
                    "exactly two edges"
                )
        for dl in self.delta:
            if dl not in (-1, 0, 1):
                raise CodecError(f"delta entry {dl} outside the two-way choice")
        prev: tuple[int, int] | None = None
        for u, v, c in self.final_colouring:
            if not u < v:
                raise CodecError(f"edge ({u}, {v}) in snapshot is not normalised")
            if prev is not None and (u, v) <= prev:
                raise CodecError("snapshot edges must be strictly sorted")
            if not 1 <= c <= self.palette:
                raise CodecError(f"snapshot colour {c} outside palette {self.palette}")
            prev = (u, v)


# --------------------------------------------------------------------------
# payload budgets

def event_budgets(profile: DegreeProfile, q: int) -> dict[int, tuple[int, int]]:
    """Exclusive upper bounds (gamma, delta) per conflict type.

    Their per-type products are exactly the descent weights used by the
    generating-function bound, except for type 5 where the vertex payload
    is charged one factor of delta more than the weight table admits; the
    payload side is authoritative for what a log may contain.
    """
    d, delta = profile.d, profile.delta
    return {
        1: (d * math.comb(delta, q), d ** (q + 1)),
        2: ((q + 2) * d, d * d),
        3: (2 * delta ** 3, 64 * math.comb(d, 2)),
        4: (4 * delta ** 4, 2 ** 10 * d * math.comb(d, 2)),
        5: (2 * delta ** 5, 2 ** 10 * d * d * math.comb(d, 2)),
    }


def check_budgets(log: BigLog | SmallLog, profile: DegreeProfile,
                  q: int = 13) -> None:
    """Raise CodecError if any payload exceeds the budget for its type."""
    per_step = log.W.per_step_descents()
    if isinstance(log, SmallLog):
        cap = 2 * profile.d
        for i, (ell, g) in enumerate(zip(per_step, log.gamma)):
            if ell and not 0 <= g < cap:
                raise CodecError(f"step {i + 1}: gamma {g} outside [0, {cap})")
        return
    budgets = event_budgets(profile, q)
    types = _types_by_descent(q)
    for i, (ell, g, dl) in enumerate(zip(per_step, log.gamma, log.delta)):
        if ell == 0:
            continue
        if ell not in types:
            raise CodecError(f"step {i + 1}: descent length {ell} matches no "
                             "conflict type")
        gcap, dcap = budgets[types[ell]]
        if not 0 <= g < gcap:
            raise CodecError(f"step {i + 1}: gamma {g} outside [0, {gcap})")
        if not 0 <= dl < dcap:
            raise CodecError(f"step {i + 1}: delta {dl} outside [0, {dcap})")


def _types_by_descent(q: int) -> dict[int, int]:
    if q < 5:
        raise CodecError(
            f"q={q} collapses the descent alphabet: lengths 2..5 and q+1 "
            "must stay distinct, so logs require q >= 5"
        )
    return {q + 1: 1, 2: 2, 3: 3, 4: 4, 5: 5}


# --------------------------------------------------------------------------
# combinatorial (un)ranking


def _subset_rank(universe: tuple[int, ...], subset: tuple[int, ...]) -> int:
    index = {x: i for i, x in enumerate(universe)}
    try:
        pos = sorted(index[x] for x in subset)
    except KeyError as missing:
        raise CodecError(f"subset member {missing} outside its universe")
    n, k = len(universe), len(subset)
    rank, prev = 0, -1
    for a, p in enumerate(pos):
        for t in range(prev + 1, p):
            rank += math.comb(n - t - 1, k - a - 1)
        prev = p
    return rank


def _subset_unrank(universe: tuple[int, ...], k: int, rank: int) -> tuple[int, ...]:
    n = len(universe)
    out: list[int] = []
    start = 0
    for a in range(k):
        for t in range(start, n):
            block = math.comb(n - t - 1, k - a - 1)
            if rank < block:
                out.append(universe[t])
                start = t + 1
                break
            rank -= block
        else:
            raise CodecError("subset rank out of range for its universe")
    return tuple(out)


def _pair_rank(cands: tuple[int, ...], pair: Pair) -> int:
    try:
        i, j = sorted(cands.index(m) for m in pair)
    except ValueError:
        raise CodecError(f"pair {pair} is not drawn from the candidate list")
    n = len(cands)
    return math.comb(n, 2) - math.comb(n - i, 2) + (j - i - 1)


def _pair_unrank(cands: tuple[int, ...], rank: int) -> Pair:
    n = len(cands)
    r = rank
    for i in range(n - 1):
        block = n - 1 - i
        if r < block:
            return (cands[i], cands[i + 1 + r])
        r -= block
    raise CodecError(f"pair rank {rank} out of range for {n} candidates")


def _pack_flags(flags: tuple[bool, ...]) -> int:
    value = 0
    for f in flags:
        value = value * 2 + int(f)
    return value


def _unpack_flags(value: int, k: int) -> tuple[bool, ...]:
    if not 0 <= value < 1 << k:
        raise CodecError(f"flag block {value} does not fit {k} bits")
    return tuple(bool((value >> (k - 1 - i)) & 1) for i in range(k))


def _nbr_rank(graph: Graph, at: int, target: int) -> int:
    try:
        return graph.neighbours(at).index(target)
    except ValueError:
        raise CodecError(f"{target} is not a neighbour of {at}")


def _nbr_at(graph: Graph, at: int, rank: int) -> int:
    nbrs = graph.neighbours(at)
    if not 0 <= rank < len(nbrs):
        raise CodecError(f"neighbour rank {rank} out of range at vertex {at}")
    return nbrs[rank]


# --------------------------------------------------------------------------
# selection-run encoding


def _other_member(pair: tuple[int, ...], not_this: int) -> int:
    if not_this not in pair or len(pair) != 2:
        raise CodecError(f"pair {pair} does not contain {not_this} exactly once")
    return pair[0] if pair[1] == not_this else pair[1]


def _encode_event(state: SelectionState, graph: Graph, u: int,
                  ev: BadEventRecord,
                  budgets: dict[int, tuple[int, int]]) -> tuple[int, int]:
    """Payloads for a conflict, read from the state *before* its resets."""
    q = state.q
    cand = state.candidates
    delta_cap = graph.delta  # radix for vertex walks; degrees never exceed it
    pair_u = state.uplus(u)
    # the shared pick z of a type-5 conflict may be u itself; everything
    # else in a witness holds a pair of its own and so cannot be u
    reset_part = ev.witness[:4] if ev.type == 5 else ev.witness
    if u in reset_part:
        raise CodecError(f"type {ev.type} witness {ev.witness} includes the "
                         "treated vertex; no payload is defined for this")

    if ev.type == 1:
        (v,) = ev.witness
        uminus = tuple(sorted(set(ev.resets) - {u}))
        gamma = cand[u].index(v) * math.comb(delta_cap, q) \
            + _subset_rank(graph.neighbours(v), uminus)
        dl = cand[u].index(_other_member(pair_u, v))
        for w in uminus:
            dl = dl * len(cand[u]) + cand[w].index(_other_member(state.uplus(w), v))
        gd = (gamma, dl)
    elif ev.type == 2:
        v, w, x = ev.witness
        if not state.fragile.is_matching:
            raise CodecError("fragile edges do not form a matching; the far "
                             "endpoint of an engaged edge cannot be recovered")
        if state.fragile.partner.get(v) != w:
            raise CodecError(f"({v}, {w}) is not a fragile edge of the graph")
        others = [z for z in graph.neighbours(w) if z != v]
        if x not in others:
            raise CodecError(f"witness {x} coincides with the fragile endpoint "
                             f"{v}; this regime has no two-sided encoding")
        gamma = cand[u].index(v) * (q + 2) + others.index(x)
        dl = cand[u].index(_other_member(pair_u, v)) * len(cand[u]) \
            + cand[x].index(_other_member(state.uplus(x), w))
        gd = (gamma, dl)
    elif ev.type == 3:
        v, w, x = ev.witness
        if graph.has_edge(u, v):
            walk = (0, _nbr_rank(graph, u, v), _nbr_rank(graph, v, w),
                    _nbr_rank(graph, w, x))
        elif graph.has_edge(u, w):
            walk = (1, _nbr_rank(graph, u, w), _nbr_rank(graph, w, v),
                    _nbr_rank(graph, w, x))
        else:
            raise CodecError(f"treated vertex {u} is adjacent to neither {v} "
                             f"nor {w}")
        gamma = 0
        for part in walk:
            gamma = gamma * delta_cap + part
        flags_v = (w in state.uplus(v), w in state.uplus(x), v in state.uplus(x))
        flags_x = (w in state.uplus(x), w in state.uplus(v), x in state.uplus(v))
        dl = (_pair_rank(cand[u], pair_u) * 8 + _pack_flags(flags_v)) * 8 \
            + _pack_flags(flags_x)
        gd = (gamma, dl)
    elif ev.type == 4:
        v, w, x, y = ev.witness
        walks = {
            0: (v, (v, w), (w, x), (x, y)),
            1: (w, (w, v), (w, x), (x, y)),
            2: (x, (x, w), (w, v), (x, y)),
            3: (y, (y, x), (x, w), (w, v)),
        }
        for a in range(4):
            if graph.has_edge(u, walks[a][0]):
                anchor, *hops = walks[a]
                gamma = a
                for part in (_nbr_rank(graph, u, anchor),
                             *(_nbr_rank(graph, p, t) for p, t in hops)):
                    gamma = gamma * delta_cap + part
                break
        else:
            raise CodecError(f"treated vertex {u} touches none of {ev.witness}")
        if x not in state.uplus(w):
            raise CodecError(f"{x} is not in the pair of {w}: not this conflict")
        dw = cand[w].index(_other_member(state.uplus(w), x))
        flags_v = (w in state.uplus(v), w in state.uplus(x), w in state.uplus(y),
                   v in state.uplus(x), v in state.uplus(y))
        flags_y = (x in state.uplus(y), x in state.uplus(w), x in state.uplus(v),
                   y in state.uplus(w), y in state.uplus(v))
        dl = ((_pair_rank(cand[u], pair_u) * len(cand[u]) + dw) * 32
              + _pack_flags(flags_v)) * 32 + _pack_flags(flags_y)
        gd = (gamma, dl)
    else:
        v, w, x, y, z = ev.witness
        if graph.has_edge(u, v):
            first = (0, _nbr_rank(graph, u, v), _nbr_rank(graph, v, w))
        elif graph.has_edge(u, w):
            first = (1, _nbr_rank(graph, u, w), _nbr_rank(graph, w, v))
        else:
            raise CodecError(f"treated vertex {u} is adjacent to neither {v} "
                             f"nor {w}")
        gamma = 0
        for part in (*first, _nbr_rank(graph, w, z), _nbr_rank(graph, z, x),
                     _nbr_rank(graph, x, y)):
            gamma = gamma * delta_cap + part
        if z not in state.uplus(w) or z not in state.uplus(x):
            raise CodecError(f"{z} is not the shared pick of {w} and {x}")
        dw = cand[w].index(_other_member(state.uplus(w), z))
        dx = cand[x].index(_other_member(state.uplus(x), z))
        flags_v = (w in state.uplus(v), w in state.uplus(x), w in state.uplus(y),
                   v in state.uplus(x), v in state.uplus(y))
        flags_y = (x in state.uplus(y), x in state.uplus(w), x in state.uplus(v),
                   y in state.uplus(w), y in state.uplus(v))
        dl = (((_pair_rank(cand[u], pair_u) * len(cand[u]) + dw)
               * len(cand[u]) + dx) * 32
              + _pack_flags(flags_v)) * 32 + _pack_flags(flags_y)
        gd = (gamma, dl)

    gcap, dcap = budgets[ev.type]
    if not (0 <= gd[0] < gcap and 0 <= gd[1] < dcap):
        raise CodecError(
            f"type {ev.type} payload {gd} exceeds its budget ({gcap}, {dcap})"
        )
    return gd


def _drive_big(graph: Graph, profile: DegreeProfile,
               colouring: PartialEdgeColouring, q: int, mode: str | None,
               choices: list[int],
               ) -> tuple[SelectionState, list[StepRecord],
                          list[int], list[int], list[int]]:
    """Replay ranks through the selection loop, emitting log material.

    This mirrors the production loop exactly but stops after ``choices`` is
    exhausted, which makes frozen prefixes of longer runs encodable.
    """
    state = SelectionState(graph, profile, q, mode)
    if state.mode == "theory" and state.s <= 0:
        raise CodecError(f"sampling window s={state.s} is not positive")
    budgets = event_budgets(profile, q)
    steps: list[StepRecord] = []
    bits: list[int] = []
    gammas: list[int] = []
    deltas: list[int] = []
    for step, r in enumerate(choices, 1):
        if not state.pending:
            raise CodecError(f"rank sequence continues past completion "
                             f"(step {step})")
        u = state.first_pending()
        pool = admissible_pairs(state, colouring, u)
        if state.mode == "theory":
            if len(pool) < state.s:
                raise CodecError(
                    f"vertex {u} has {len(pool)} admissible pairs, needs "
                    f"s={state.s}"
                )
            pool = pool[: state.s]
        if not 0 <= r < len(pool):
            raise CodecError(
                f"rank {r} outside the pool of {len(pool)} at step {step}"
            )
        pair = pool[r]
        state.assign(u, pair)
        ev = detect_bad_event(state, colouring, u, step)
        bits.append(0)
        if ev is None:
            gammas.append(-1)
            deltas.append(-1)
        else:
            g, dl = _encode_event(state, graph, u, ev, budgets)
            gammas.append(g)
            deltas.append(dl)
            bits.extend([1] * len(ev.resets))
            state.reset(ev.resets)
        steps.append(StepRecord(step, u, r, pair, ev))
    return state, steps, bits, gammas, deltas


def _snapshot_uplus(state: SelectionState) -> tuple[tuple[int, int, int], ...]:
    return tuple(
        (v, pair[0], pair[1])
        for v, pair in sorted(state.pair_of.items())
        if pair is not None
    )


def encode_big(trace: ExecutionTrace, graph: Graph, profile: DegreeProfile,
               colouring: PartialEdgeColouring, q: int | None = None,
               mode: str | None = None) -> BigLog:
    """Build the log of a selection run (or of a frozen prefix of one).

    The trace is replayed against the graph and base colouring; any
    disagreement between the recorded steps and the replay — wrong vertex
    order, inadmissible pair, missing or mislabelled conflict — is a
    CodecError, so a log is only ever produced for a genuine execution.
    """
    q = trace.q if q is None else q
    mode = trace.mode if mode is None else mode
    _types_by_descent(q)
    if not colouring.is_total():
        raise CodecError("selection logs presuppose a total base colouring")
    state, steps, bits, gammas, deltas = _drive_big(
        graph, profile, colouring, q, mode, [rec.r for rec in trace.steps]
    )
    if not state.fragile.is_matching:
        raise CodecError("fragile edges do not form a matching; logs are "
                         "not defined in this regime")
    if steps != trace.steps:
        bad = next(i for i, (a, b) in enumerate(zip(steps, trace.steps)) if a != b)
        raise CodecError(
            f"trace does not replay: step {bad + 1} recorded "
            f"{trace.steps[bad]}, execution gives {steps[bad]}"
        )
    return BigLog(PartialDyckWord(tuple(bits)), tuple(gammas), tuple(deltas),
                  _snapshot_uplus(state))


# --------------------------------------------------------------------------
# selection-run decoding


def _decode_gamma(typ: int, gamma: int, u: int, graph: Graph,
                  profile: DegreeProfile, q: int,
                  state: SelectionState) -> tuple[tuple[int, ...], frozenset[int]]:
    """Witness tuple and newly-pending vertices for one conflict.

    Needs only static data plus the identity of the treated vertex, which
    is what makes the forward sweep possible before any pair is known.
    """
    cand = state.candidates
    delta_cap = graph.delta
    if typ == 1:
        comb_cap = math.comb(delta_cap, q)
        iv, srank = divmod(gamma, comb_cap)
        if iv >= len(cand[u]):
            raise CodecError(f"vertex selector {iv} outside the candidates of {u}")
        v = cand[u][iv]
        uminus = _subset_unrank(graph.neighbours(v), q, srank)
        return (v,), frozenset(uminus)
    if typ == 2:
        iv, ix = divmod(gamma, q + 2)
        if iv >= len(cand[u]):
            raise CodecError(f"vertex selector {iv} outside the candidates of {u}")
        v = cand[u][iv]
        w = state.fragile.partner.get(v)
        if w is None:
            raise CodecError(f"{v} is not an endpoint of a fragile edge")
        others = [z for z in graph.neighbours(w) if z != v]
        if ix >= len(others):
            raise CodecError(f"picker selector {ix} out of range at {w}")
        return (v, w, others[ix]), frozenset({others[ix]})
    if typ == 3:
        gamma, r3 = divmod(gamma, delta_cap)
        gamma, r2 = divmod(gamma, delta_cap)
        b, r1 = divmod(gamma, delta_cap)
        if b > 1:
            raise CodecError(f"orientation flag {b} in a three-vertex walk")
        if b == 0:
            v = _nbr_at(graph, u, r1)
            w = _nbr_at(graph, v, r2)
        else:
            w = _nbr_at(graph, u, r1)
            v = _nbr_at(graph, w, r2)
        x = _nbr_at(graph, w, r3)
        if len({u, v, w, x}) != 4:
            raise CodecError(f"degenerate witness walk ({v}, {w}, {x}) from {u}")
        return (v, w, x), frozenset({v, x})
    if typ == 4:
        gamma, r4 = divmod(gamma, delta_cap)
        gamma, r3 = divmod(gamma, delta_cap)
        gamma, r2 = divmod(gamma, delta_cap)
        a, r1 = divmod(gamma, delta_cap)
        if a > 3:
            raise CodecError(f"anchor selector {a} in a four-vertex walk")
        p1 = _nbr_at(graph, u, r1)
        if a == 0:
            v = p1
            w = _nbr_at(graph, v, r2)
            x = _nbr_at(graph, w, r3)
            y = _nbr_at(graph, x, r4)
        elif a == 1:
            w = p1
            v = _nbr_at(graph, w, r2)
            x = _nbr_at(graph, w, r3)
            y = _nbr_at(graph, x, r4)
        elif a == 2:
            x = p1
            w = _nbr_at(graph, x, r2)
            v = _nbr_at(graph, w, r3)
            y = _nbr_at(graph, x, r4)
        else:
            y = p1
            x = _nbr_at(graph, y, r2)
            w = _nbr_at(graph, x, r3)
            v = _nbr_at(graph, w, r4)
        if len({u, v, w, x, y}) != 5:
            raise CodecError(f"degenerate witness walk ({v}, {w}, {x}, {y})")
        return (v, w, x, y), frozenset({v, w, y})
    if typ == 5:
        gamma, r5 = divmod(gamma, delta_cap)
        gamma, r4 = divmod(gamma, delta_cap)
        gamma, r3 = divmod(gamma, delta_cap)
        gamma, r2 = divmod(gamma, delta_cap)
        b, r1 = divmod(gamma, delta_cap)
        if b > 1:
            raise CodecError(f"orientation flag {b} in a five-vertex walk")
        if b == 0:
            v = _nbr_at(graph, u, r1)
            w = _nbr_at(graph, v, r2)
        else:
            w = _nbr_at(graph, u, r1)
            v = _nbr_at(graph, w, r2)
        z = _nbr_at(graph, w, r3)
        x = _nbr_at(graph, z, r4)
        y = _nbr_at(graph, x, r5)
        if len({u, v, w, x, y}) != 5 or z in (v, w, x, y):
            raise CodecError(f"degenerate witness walk ({v}, {w}, {x}, {y}, {z})")
        return (v, w, x, y, z), frozenset({v, w, x, y})
    raise CodecError(f"unknown conflict type {typ}")


class _PreResetView:
    """Pair membership in the state just before a conflict's resets.

    Answers "is a in the pair of z?" by priority: the treated vertex's own
    pair, explicitly recovered pairs, recorded membership flags, and
    finally the live state (valid for vertices the resets never touched).
    A query about a reset vertex that none of these cover means the log
    lacks information it was required to carry.
    """

    def __init__(self, state: SelectionState, u: int, pair_u: Pair):
        self.state = state
        self.u = u
        self.pair_u = pair_u
        self.known: dict[int, tuple[int, ...]] = {}
        self.flags: dict[tuple[int, int], bool] = {}
        self.unresolved: set[int] = set()

    def member(self, z: int, a: int) -> bool:
        if z == self.u:
            return a in self.pair_u
        if z in self.known:
            return a in self.known[z]
        if (z, a) in self.flags:
            return self.flags[(z, a)]
        if z in self.unresolved:
            raise CodecError(
                f"membership of {a} in the pair of reset vertex {z} was "
                "needed but never recorded"
            )
        return a in self.state.uplus(z)

    def check_flag(self, z: int, a: int, expect: bool) -> None:
        if self.flags.get((z, a), expect) != expect:
            raise CodecError(
                f"membership flag for ({z}, {a}) contradicts the "
                "reconstructed state"
            )

    def residual(self, colouring: PartialEdgeColouring, w: int) -> set[int]:
        """Colours at w away from both its own pair and its pickers."""
        pw = self.known.get(w) or self.state.uplus(w)
        g = self.state.graph
        return {
            colouring.pair_colour((w, t)) for t in g.neighbours(w)
            if t not in pw and not self.member(t, w)
        }

    def recover_pair(self, colouring: PartialEdgeColouring, v: int,
                     target_residual: set[int],
                     cand: tuple[int, ...]) -> tuple[int, int]:
        """Find the pair of v from "its residual must equal this set".

        The colours at v that are not picker colours split into the residual
        and the pair colours; removing the target residual leaves exactly
        the two pair edges.
        """
        g = self.state.graph
        visible = {
            t: colouring.pair_colour((v, t)) for t in g.neighbours(v)
            if not self.member(t, v)
        }
        t_v = set(visible.values())
        if not target_residual <= t_v:
            raise CodecError(
                f"residual colours of {v} cannot contain the recorded set"
            )
        keep = t_v - target_residual
        members = tuple(sorted(t for t, c in visible.items() if c in keep))
        if len(members) != 2 or any(m not in cand for m in members):
            raise CodecError(
                f"recovered pair {members} of {v} is not a candidate pair"
            )
        self.known[v] = members
        self.unresolved.discard(v)
        return members


def _restore_event(state: SelectionState, typ: int, wit: tuple[int, ...],
                   extra: frozenset[int], dl: int, u: int, graph: Graph,
                   colouring: PartialEdgeColouring, q: int) -> Pair:
    """Rebuild the pairs a conflict destroyed; mutate state back to the
    start of the iteration; return the pair the treated vertex had chosen."""
    cand = state.candidates
    d_u = len(cand[u])

    def must_be_unset(vertices) -> None:
        for m in vertices:
            if state.pair_of.get(m, None) is not None:
                raise CodecError(f"vertex {m} should have been reset but "
                                 "still holds a pair")

    def checked_assign(v: int, pair: tuple[int, ...]) -> None:
        try:
            state.assign(v, (pair[0], pair[1]))
        except InvariantError as exc:
            raise CodecError(f"cannot restore the pair of {v}: {exc}")

    if typ == 1:
        (v,) = wit
        uminus = tuple(sorted(extra))
        must_be_unset((u, *uminus))
        digits: dict[int, int] = {}
        for w in reversed(uminus):
            dl, digits[w] = divmod(dl, d_u)
        if dl >= d_u:
            raise CodecError(f"payload overruns the partner selector ({dl})")
        x = cand[u][dl]
        if x == v:
            raise CodecError("chosen pair would collapse to a single vertex")
        for w in uminus:
            other = cand[w][digits[w]] if digits[w] < len(cand[w]) else None
            if other is None or other == v:
                raise CodecError(f"pair member selector of {w} is invalid")
            checked_assign(w, tuple(sorted((v, other))))
        return tuple(sorted((v, x)))

    if typ == 2:
        v, w, x = wit
        must_be_unset((u, x))
        ipo, ixo = divmod(dl, d_u)
        if ipo >= d_u or ixo >= len(cand[x]):
            raise CodecError(f"payload selectors ({ipo}, {ixo}) out of range")
        po = cand[u][ipo]
        xo = cand[x][ixo]
        if po == v or xo == w:
            raise CodecError("restored pair would collapse to a single vertex")
        checked_assign(x, tuple(sorted((w, xo))))
        return tuple(sorted((v, po)))

    if typ == 3:
        v, w, x = wit
        must_be_unset((u, v, x))
        dl, fx = divmod(dl, 8)
        pr, fv = divmod(dl, 8)
        pair_u = _pair_unrank(cand[u], pr)
        b1, b2, b3 = _unpack_flags(fv, 3)
        c1, c2, c3 = _unpack_flags(fx, 3)
        if c1 != b2 or c2 != b1:
            raise CodecError("duplicated membership flags disagree")
        view = _PreResetView(state, u, pair_u)
        if not state.uplus(w):
            raise CodecError(f"middle vertex {w} lost its pair; the log "
                             "cannot be replayed")
        view.known[w] = state.uplus(w)
        view.flags.update({(v, w): b1, (x, w): b2, (x, v): b3, (v, x): c3})
        view.unresolved.update((v, x))
        res_w = view.residual(colouring, w)
        pv = view.recover_pair(colouring, v, res_w, cand[v])
        view.check_flag(v, w, w in pv)
        view.check_flag(v, x, x in pv)
        px = view.recover_pair(colouring, x, res_w, cand[x])
        view.check_flag(x, w, w in px)
        view.check_flag(x, v, v in px)
        checked_assign(v, pv)
        checked_assign(x, px)
        return pair_u

    if typ == 4:
        v, w, x, y = wit
        must_be_unset((u, v, w, y))
        dl, fy = divmod(dl, 32)
        dl, fv = divmod(dl, 32)
        pr, dw = divmod(dl, d_u)
        pair_u = _pair_unrank(cand[u], pr)
        if dw >= len(cand[w]) or cand[w][dw] == x:
            raise CodecError(f"pair member selector {dw} of {w} is invalid")
        pw = tuple(sorted((x, cand[w][dw])))
        b1, b2, b3, b4, b5 = _unpack_flags(fv, 5)
        c1, c2, c3, c4, c5 = _unpack_flags(fy, 5)
        view = _PreResetView(state, u, pair_u)
        px = state.uplus(x)
        if not px:
            raise CodecError(f"outer vertex {x} lost its pair; the log "
                             "cannot be replayed")
        view.known[w] = pw
        view.known[x] = px
        view.flags.update({(v, w): b1, (y, w): b3, (y, v): b5,
                           (y, x): c1, (v, x): c3, (v, y): c5})
        view.unresolved.update((v, y))
        if b2 != (w in px) or b4 != (v in px) or c2 != (x in pw) or c4 != (y in pw):
            raise CodecError("membership flags contradict the recorded pairs")
        res_w = view.residual(colouring, w)
        pv = view.recover_pair(colouring, v, res_w, cand[v])
        view.check_flag(v, w, w in pv)
        view.check_flag(v, x, x in pv)
        view.check_flag(v, y, y in pv)
        res_x = view.residual(colouring, x)
        py = view.recover_pair(colouring, y, res_x, cand[y])
        view.check_flag(y, x, x in py)
        view.check_flag(y, w, w in py)
        view.check_flag(y, v, v in py)
        checked_assign(v, pv)
        checked_assign(w, pw)
        checked_assign(y, py)
        return pair_u

    if typ == 5:
        v, w, x, y, z = wit
        must_be_unset((u, v, w, x, y))
        dl, fy = divmod(dl, 32)
        dl, fv = divmod(dl, 32)
        dl, dx = divmod(dl, d_u)
        pr, dw = divmod(dl, d_u)
        pair_u = _pair_unrank(cand[u], pr)
        if dw >= len(cand[w]) or cand[w][dw] == z:
            raise CodecError(f"pair member selector {dw} of {w} is invalid")
        if dx >= len(cand[x]) or cand[x][dx] == z:
            raise CodecError(f"pair member selector {dx} of {x} is invalid")
        pw = tuple(sorted((z, cand[w][dw])))
        px = tuple(sorted((z, cand[x][dx])))
        b1, b2, b3, b4, b5 = _unpack_flags(fv, 5)
        c1, c2, c3, c4, c5 = _unpack_flags(fy, 5)
        view = _PreResetView(state, u, pair_u)
        view.known[w] = pw
        view.known[x] = px
        view.flags.update({(v, w): b1, (y, w): b3, (y, v): b5,
                           (y, x): c1, (v, x): c3, (v, y): c5})
        view.unresolved.update((v, y))
        if b2 != (w in px) or b4 != (v in px) or c2 != (x in pw) or c4 != (y in pw):
            raise CodecError("membership flags contradict the recorded pairs")
        res_w = view.residual(colouring, w)
        pv = view.recover_pair(colouring, v, res_w, cand[v])
        view.check_flag(v, w, w in pv)
        view.check_flag(v, x, x in pv)
        view.check_flag(v, y, y in pv)
        res_x = view.residual(colouring, x)
        py = view.recover_pair(colouring, y, res_x, cand[y])
        view.check_flag(y, x, x in py)
        view.check_flag(y, w, w in py)
        view.check_flag(y, v, v in py)
        checked_assign(v, pv)
        checked_assign(w, pw)
        checked_assign(x, px)
        checked_assign(y, py)
        return pair_u

    raise CodecError(f"unknown conflict type {typ}")


def decode_big(log: BigLog, graph: Graph, profile: DegreeProfile,
               colouring: PartialEdgeColouring, q: int = 13,
               mode: str | None = None) -> list[int]:
    """Recover the exact rank sequence that produced a selection log.

    Forward sweep: W and gamma alone determine the treated vertex and the
    reset set of every step.  Backward sweep: starting from the final
    snapshot, each step's state is rolled back and the recorded pair is
    ranked inside the recomputed admissible pool.  The result is replayed
    and re-encoded; any difference from the input log is fatal.
    """
    types = _types_by_descent(q)
    if not colouring.is_total():
        raise CodecError("selection logs presuppose a total base colouring")
    state = SelectionState(graph, profile, q, mode)
    if not state.fragile.is_matching:
        raise CodecError("fragile edges do not form a matching; logs are "
                         "not defined in this regime")
    if state.mode == "theory" and state.s <= 0:
        raise CodecError(f"sampling window s={state.s} is not positive")
    check_budgets(log, profile, q)

    per_step = log.W.per_step_descents()
    for ell in per_step:
        if ell and ell not in types:
            raise CodecError(f"descent length {ell} matches no conflict type")

    bigs = set(state.candidates)
    pending = set(bigs)
    treated: list[int] = []
    meta: list[tuple[int, tuple[int, ...], frozenset[int]] | None] = []
    for i, ell in enumerate(per_step):
        if not pending:
            raise CodecError("the log has more steps than the graph has work")
        u = min(pending)
        treated.append(u)
        if ell == 0:
            pending.discard(u)
            meta.append(None)
            continue
        typ = types[ell]
        wit, adds = _decode_gamma(typ, log.gamma[i], u, graph, profile, q, state)
        for a in adds:
            if a not in bigs or a == u or a in pending:
                raise CodecError(f"step {i + 1} resets {a}, which holds no pair")
        pending |= adds
        meta.append((typ, wit, adds))

    if {v for v, _, _ in log.final_uplus} != bigs - pending:
        raise CodecError("final snapshot covers the wrong set of vertices")
    for v, a, b in log.final_uplus:
        try:
            state.assign(v, (a, b))
        except InvariantError as exc:
            raise CodecError(f"final snapshot rejected: {exc}")

    ranks = [0] * len(per_step)
    for i in reversed(range(len(per_step))):
        u = treated[i]
        if meta[i] is None:
            pair = state.pair_of.get(u)
            if pair is None:
                raise CodecError(f"step {i + 1} treated {u} but the later "
                                 "state has no pair for it")
            state.reset((u,))
        else:
            typ, wit, adds = meta[i]
            pair = _restore_event(state, typ, wit, adds, log.delta[i], u,
                                  graph, colouring, q)
            report = check_invariants(state, colouring)
            if not report.ok:
                raise CodecError(
                    "reconstructed state is structurally impossible: "
                    + "; ".join(report.violations)
                )
        pool = admissible_pairs(state, colouring, u)
        if state.mode == "theory":
            if len(pool) < state.s:
                raise CodecError(f"vertex {u} has too few admissible pairs "
                                 "in the rolled-back state")
            pool = pool[: state.s]
        try:
            ranks[i] = pool.index((min(pair), max(pair)))
        except ValueError:
            raise CodecError(f"step {i + 1}: recovered pair {pair} is not "
                             "admissible")

    if state.pending != bigs:
        raise CodecError("rollback did not return to the initial state")
    state2, _, bits2, gammas2, deltas2 = _drive_big(
        graph, profile, colouring, q, mode, ranks
    )
    relog = BigLog(PartialDyckWord(tuple(bits2)), tuple(gammas2),
                   tuple(deltas2), _snapshot_uplus(state2))
    if relog != log:
        raise CodecError("log does not correspond to any execution "
                         "(re-encoding the decoded ranks disagrees)")
    return ranks


# --------------------------------------------------------------------------
# recolouring-run encoding/decoding


def _small_gamma(profile: DegreeProfile, graph: Graph, edge: Edge,
                 anchor: int, witness: int) -> int:
    if anchor not in edge:
        raise CodecError(f"anchor {anchor} is not an endpoint of {edge}")
    side = 0 if anchor == edge[0] else 1
    rank = _nbr_rank(graph, anchor, witness)
    if rank >= profile.d:
        raise CodecError(f"witness rank {rank} at {anchor} exceeds the "
                         "degree bound for small vertices")
    return side * profile.d + rank


def _small_partner(order: tuple[Edge, ...], edge: Edge, anchor: int,
                   witness: int) -> Edge:
    incident = _incident_in_order(order, anchor, edge)
    we = _norm_edge(anchor, witness)
    if we not in incident:
        raise CodecError(f"edge to the dangerous vertex {witness} is not a "
                         "core edge")
    if len(incident) < 2:
        raise CodecError(f"vertex {anchor} has no second core edge")
    return incident[(incident.index(we) + 1) % len(incident)]


def _snapshot_colouring(colouring: PartialEdgeColouring
                        ) -> tuple[tuple[int, int, int], ...]:
    return tuple(
        (u, v, colouring.pair_colour((u, v)))
        for u, v in colouring.edges
        if colouring.pair_colour((u, v)) != UNCOLOURED
    )


def _colouring_from_snapshot(graph: Graph, log: SmallLog) -> PartialEdgeColouring:
    try:
        col = PartialEdgeColouring.for_graph(graph, palette=log.palette)
        for u, v, c in log.final_colouring:
            col.set_pair((u, v), c)
    except (InvariantError, KeyError, ValueError) as exc:
        raise CodecError(f"snapshot is not a colouring of the graph: {exc}")
    return col


def encode_small(trace: SmallTrace, graph: Graph, profile: DegreeProfile,
                 colouring: PartialEdgeColouring, q: int = 13) -> SmallLog:
    """Build the log of a recolouring run (the colouring is its end state)."""
    order = core_edge_order(graph, profile)
    if tuple(trace.order) != order:
        raise CodecError("trace was recorded against a different edge order")
    core = set(order)
    for u, v in graph.edges():
        if (u, v) not in core and \
                colouring.pair_colour((u, v)) == UNCOLOURED:
            raise CodecError(f"non-core edge ({u}, {v}) is uncoloured; the "
                             "recolouring pass never touches it")

    bits: list[int] = []
    gammas: list[int] = []
    deltas: list[int] = []
    held: dict[Edge, int] = {}
    for rec in trace.steps:
        live = next((e for e in order if e not in held), None)
        if rec.edge != live:
            raise CodecError(f"step {rec.step} coloured {rec.edge} but "
                             f"{live} was first in line")
        held[rec.edge] = rec.colour
        bits.append(0)
        if rec.event is None:
            gammas.append(-1)
            deltas.append(-1)
            continue
        ev = rec.event
        gammas.append(_small_gamma(profile, graph, rec.edge, ev.anchor,
                                   ev.witness))
        partner = _small_partner(order, rec.edge, ev.anchor, ev.witness)
        if partner != ev.partner:
            raise CodecError(f"step {rec.step} uncoloured {ev.partner}, but "
                             f"the witness determines {partner}")
        if ev.colours[0] != rec.colour or held.get(partner) != ev.colours[1]:
            raise CodecError(f"step {rec.step}: recorded conflict colours "
                             f"{ev.colours} disagree with the run")
        deltas.append(0 if ev.colours[0] < ev.colours[1] else 1)
        bits.extend((1, 1))
        del held[rec.edge]
        del held[partner]

    for e in order:
        have = colouring.pair_colour(e)
        want = held.get(e, UNCOLOURED)
        if have != want:
            raise CodecError(f"final colouring has {have} on {e}, the trace "
                             f"leaves {want}")

    if trace.completed:
        base = colouring.copy()
        for e in order:
            base.set_pair(e, UNCOLOURED)
        replayed, trace2 = run_small_phase(
            graph, profile, base, q=q, choices=[rec.r for rec in trace.steps]
        )
        if trace2.steps != list(trace.steps) or replayed != colouring:
            raise CodecError("trace does not replay against this graph")

    return SmallLog(PartialDyckWord(tuple(bits)), tuple(gammas),
                    tuple(deltas), colouring.palette,
                    _snapshot_colouring(colouring))


def decode_small(log: SmallLog, graph: Graph, profile: DegreeProfile,
                 q: int = 13) -> list[int]:
    """Recover the colour ranks of a recolouring run from its log.

    The forward sweep replays colour/uncolour bookkeeping to learn which
    edge each step treated and, from gamma, which neighbour sprang the
    conflict.  Walking backwards from the snapshot, the two colours lost in
    a conflict reappear as the difference between the witness's palette and
    the anchor's, delta says which edge wore which, and the chosen colour's
    position in the recomputed pool is the rank.
    """
    palette_req = profile.delta + q + 6
    if log.palette < palette_req:
        raise CodecError(f"palette {log.palette} below the {palette_req} "
                         "the pass requires")
    check_budgets(log, profile, q)
    s = colour_window(profile)
    small = frozenset(profile.small)
    order = core_edge_order(graph, profile)
    final = _colouring_from_snapshot(graph, log)
    core = set(order)
    for u, v in graph.edges():
        if (u, v) not in core and \
                final.pair_colour((u, v)) == UNCOLOURED:
            raise CodecError(f"non-core edge ({u}, {v}) is uncoloured in the "
                             "snapshot")

    per_step = log.W.per_step_descents()
    coloured: dict[Edge, bool] = {e: False for e in order}
    plan: list[tuple[Edge, tuple[int, int, Edge] | None]] = []
    for i, ell in enumerate(per_step):
        edge = next((e for e in order if not coloured[e]), None)
        if edge is None:
            raise CodecError("the log has more steps than uncoloured edges")
        if ell == 0:
            coloured[edge] = True
            plan.append((edge, None))
            continue
        g = log.gamma[i]
        side, rank = divmod(g, profile.d)
        if side > 1:
            raise CodecError(f"side flag {side} in a witness selector")
        anchor = edge[side]
        witness = _nbr_at(graph, anchor, rank)
        partner = _small_partner(order, edge, anchor, witness)
        if not coloured[partner]:
            raise CodecError(f"step {i + 1} uncolours {partner}, which holds "
                             "no colour")
        coloured[partner] = False
        plan.append((edge, (anchor, witness, partner)))

    for e in order:
        snap = final.pair_colour(e) != UNCOLOURED
        if coloured[e] != snap:
            raise CodecError(f"snapshot and W disagree about whether {e} "
                             "is coloured")

    col = final.copy()
    ranks = [0] * len(per_step)
    steps: list[SmallStepRecord] = []
    for i in reversed(range(len(per_step))):
        edge, conflict = plan[i]
        u, v = edge
        event = None
        if conflict is None:
            chosen = col.pair_colour(edge)
            if chosen == UNCOLOURED:
                raise CodecError(f"step {i + 1} left {edge} coloured but the "
                                 "later state lost it")
            col.set_pair(edge, UNCOLOURED)
        else:
            anchor, witness, partner = conflict
            lost = col.vertex_colours(witness) - col.vertex_colours(anchor)
            if len(lost) != 2:
                raise CodecError(
                    f"step {i + 1}: the witness {witness} shows {len(lost)} "
                    "colours the anchor lacks, not the two uncoloured ones"
                )
            lo, hi = sorted(lost)
            chosen, partner_col = (lo, hi) if log.delta[i] == 0 else (hi, lo)
            if col.pair_colour(edge) != UNCOLOURED \
                    or col.pair_colour(partner) != UNCOLOURED:
                raise CodecError(f"step {i + 1}: conflict edges are still "
                                 "coloured downstream")
            try:
                col.set_pair(partner, partner_col)
            except InvariantError as exc:
                raise CodecError(f"step {i + 1}: restoring {partner} is "
                                 f"improper: {exc}")
            event = SmallEventRecord(i + 1, anchor, witness, partner,
                                     (chosen, partner_col))

        danger_u = dangerous_for(graph, col, u, v, small)
        danger_v = dangerous_for(graph, col, v, u, small)
        banned = set()
        if len(danger_u) == 1:
            banned.add(danger_u[0][1])
        if len(danger_v) == 1:
            banned.add(danger_v[0][1])
        su, sv = col.vertex_colours(u), col.vertex_colours(v)
        pool = [c for c in range(1, palette_req + 1)
                if c not in su and c not in sv and c not in banned][:s]
        if chosen not in pool:
            raise CodecError(f"step {i + 1}: colour {chosen} is outside the "
                             "recomputed pool")
        ranks[i] = pool.index(chosen)

        hit = next((w for w, c in danger_u if c == chosen), None)
        side_anchor = u
        if hit is None:
            hit = next((w for w, c in danger_v if c == chosen), None)
            side_anchor = v
        if conflict is None:
            if hit is not None:
                raise CodecError(f"step {i + 1}: colour {chosen} was "
                                 "dangerous but the log records no conflict")
        else:
            if hit is None or (side_anchor, hit) != (conflict[0], conflict[1]):
                raise CodecError(f"step {i + 1}: recorded conflict does not "
                                 "match the danger at that state")
        steps.append(SmallStepRecord(i + 1, edge, ranks[i], chosen, event))

    for e in order:
        if col.pair_colour(e) != UNCOLOURED:
            raise CodecError("rollback did not return to the uncoloured core")

    rebuilt = SmallTrace(s=s, mode=profile.mode, seed=None, order=order,
                         steps=list(reversed(steps)),
                         completed=all(
                             final.pair_colour(e) != UNCOLOURED for e in order
                         ))
    relog = encode_small(rebuilt, graph, profile, final, q=q)
    if relog != log:
        raise CodecError("log does not correspond to any execution "
                         "(re-encoding the decoded ranks disagrees)")
    return ranks


# --------------------------------------------------------------------------
# byte-level serialisation

_MAGIC_BIG = b"AVDLB1\n"
_MAGIC_SMALL = b"AVDLS1\n"


def _pack_word(word: PartialDyckWord) -> bytes:
    bits = word.bits
    body = bytearray(struct.pack(">I", len(bits)))
    acc = 0
    for i, b in enumerate(bits):
        acc = (acc << 1) | b
        if i % 8 == 7:
            body.append(acc)
            acc = 0
    if len(bits) % 8:
        body.append(acc << (8 - len(bits) % 8))
    return bytes(body)


def _pack_ints(values: tuple[int, ...]) -> bytes:
    body = bytearray(struct.pack(">I", len(values)))
    for v in values:
        text = str(v).encode("ascii")
        body.extend(struct.pack(">I", len(text)))
        body.extend(text)
    return bytes(body)


def _pack_json(payload: object) -> bytes:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    raw = text.encode("utf-8")
    return struct.pack(">I", len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.at = 0

    def take(self, n: int) -> bytes:
        if self.at + n > len(self.data):
            raise CodecError("log bytes truncated")
        out = self.data[self.at: self.at + n]
        self.at += n
        return out

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def word(self) -> PartialDyckWord:
        n = self.u32()
        raw = self.take((n + 7) // 8)
        bits = tuple((raw[i // 8] >> (7 - i % 8)) & 1 for i in range(n))
        return PartialDyckWord(bits)

    def ints(self) -> tuple[int, ...]:
        count = self.u32()
        out = []
        for _ in range(count):
            text = self.take(self.u32())
            try:
                out.append(int(text.decode("ascii")))
            except (UnicodeDecodeError, ValueError):
                raise CodecError("malformed integer field in log bytes")
        return tuple(out)

    def json(self) -> object:
        raw = self.take(self.u32())
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, ValueError):
            raise CodecError("malformed snapshot in log bytes")

    def done(self) -> None:
        if self.at != len(self.data):
            raise CodecError("trailing bytes after the log")


def serialize_log(log: BigLog | SmallLog) -> bytes:
    """Canonical bytes: magic, W, gamma, delta, JSON snapshot."""
    if isinstance(log, BigLog):
        snap = {"uplus": [[v, a, b] for v, a, b in log.final_uplus]}
        return _MAGIC_BIG + _pack_word(log.W) + _pack_ints(log.gamma) \
            + _pack_ints(log.delta) + _pack_json(snap)
    snap = {"palette": log.palette,
            "colours": [[u, v, c] for u, v, c in log.final_colouring]}
    return _MAGIC_SMALL + _pack_word(log.W) + _pack_ints(log.gamma) \
        + _pack_ints(log.delta) + _pack_json(snap)


def parse_log(data: bytes) -> BigLog | SmallLog:
    """Inverse of serialize_log; every violation raises CodecError."""
    if data.startswith(_MAGIC_BIG):
        rd = _Reader(data[len(_MAGIC_BIG):])
        word, gamma, delta = rd.word(), rd.ints(), rd.ints()
        snap = rd.json()
        rd.done()
        if not isinstance(snap, dict) or set(snap) != {"uplus"}:
            raise CodecError("snapshot must carry exactly the pair table")
        try:
            final = tuple((int(v), int(a), int(b)) for v, a, b in snap["uplus"])
        except (TypeError, ValueError):
            raise CodecError("malformed pair table in snapshot")
        return BigLog(word, gamma, delta, final)
    if data.startswith(_MAGIC_SMALL):
        rd = _Reader(data[len(_MAGIC_SMALL):])
        word, gamma, delta = rd.word(), rd.ints(), rd.ints()
        snap = rd.json()
        rd.done()
        if not isinstance(snap, dict) or set(snap) != {"palette", "colours"}:
            raise CodecError("snapshot must carry the palette and colours")
        try:
            colours = tuple(
                (int(u), int(v), int(c)) for u, v, c in snap["colours"]
            )
            return SmallLog(word, gamma, delta, int(snap["palette"]), colours)
        except (TypeError, ValueError):
            raise CodecError("malformed colour table in snapshot")
    raise CodecError("unrecognised log header")
