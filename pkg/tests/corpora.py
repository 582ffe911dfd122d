"""Shared encode/decode corpora for the log codec.

Building a hundred-odd runs of each phase is the expensive part of the
codec checks, and two test modules want to assert on the same material, so
the corpora are built once per process and cached.  Every entry has already
been round-tripped (encode -> decode) during construction; the cached ranks
let the tests compare against the recorded ones cheaply.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from gadgets import (
    FIRING_SEEDS,
    GADGETS,
    GRIND_EVENT_SEEDS,
    quiet_bad_edge_gadget,
    run_gadget,
    run_grind,
    theory_star_chain,
)

from avdcolour.bigphase import ExecutionTrace, run_big_phase
from avdcolour.codec import (
    BigLog,
    SmallLog,
    decode_big,
    decode_small,
    encode_big,
    encode_small,
)
from avdcolour.colouring import (
    PartialEdgeColouring,
    extend_to_original,
    vizing_colour,
)
from avdcolour.errors import CodecError, RegimeError, StepCapExceeded
from avdcolour.graphs import (
    DegreeProfile,
    Graph,
    classify,
    contract_pendant_pairs,
    gen_random_graph,
)
from avdcolour.smallphase import SmallTrace

RANDOM_TARGET = 60  # successful random-graph runs wanted in the big corpus


@dataclass(frozen=True)
class BigRun:
    label: str
    graph: Graph
    profile: DegreeProfile
    base: PartialEdgeColouring
    q: int
    mode: str
    trace: ExecutionTrace
    log: BigLog
    ranks: tuple[int, ...]


@dataclass(frozen=True)
class SmallRun:
    label: str
    graph: Graph
    profile: DegreeProfile
    final: PartialEdgeColouring
    q: int
    trace: SmallTrace
    log: SmallLog
    ranks: tuple[int, ...]


def _via_vizing(graph: Graph, profile: DegreeProfile) -> PartialEdgeColouring:
    mg = contract_pendant_pairs(graph, profile)
    return extend_to_original(graph, mg, vizing_colour(mg))


def _big_run(label: str, graph: Graph, profile: DegreeProfile,
             base: PartialEdgeColouring, trace: ExecutionTrace) -> BigRun:
    log = encode_big(trace, graph, profile, base)
    ranks = decode_big(log, graph, profile, base, q=trace.q, mode=trace.mode)
    return BigRun(label, graph, profile, base, trace.q, trace.mode, trace,
                  log, tuple(ranks))


@lru_cache(maxsize=1)
def big_corpus() -> tuple[tuple[BigRun, ...], int]:
    """(runs, refusals): all gadget firing seeds, the two quiet builds, and
    random graphs scanned until RANDOM_TARGET of them encode cleanly."""
    runs: list[BigRun] = []
    for typ, seeds in sorted(FIRING_SEEDS.items()):
        for seed in seeds:
            state, trace, base = run_gadget(GADGETS[typ], seed)
            runs.append(_big_run(f"gadget-type{typ}-seed{seed}", state.graph,
                                 state.profile, base, trace))

    graph, eps, q = quiet_bad_edge_gadget()
    profile = classify(graph, eps, mode="practical")
    base = _via_vizing(graph, profile)
    _, trace = run_big_phase(graph, profile, base, q=q, seed=0)
    runs.append(_big_run("quiet", graph, profile, base, trace))

    graph, eps, q = theory_star_chain()
    profile = classify(graph, eps, mode="theory")
    base = _via_vizing(graph, profile)
    _, trace = run_big_phase(graph, profile, base, q=q, seed=3, mode="theory")
    runs.append(_big_run("theory-chain", graph, profile, base, trace))

    refusals = 0
    hits = 0
    for seed in range(150):
        if hits >= RANDOM_TARGET:
            break
        graph = gen_random_graph(60, 24, seed)
        profile = classify(graph, "0.1", mode="practical")
        base = _via_vizing(graph, profile)
        try:
            _, trace = run_big_phase(graph, profile, base, q=13, seed=seed,
                                     step_cap=50_000)
        except (RegimeError, StepCapExceeded):
            continue
        try:
            run = _big_run(f"random-seed{seed}", graph, profile, base, trace)
        except CodecError:
            # d <= q+3 pockets where fragile edges share endpoints; the
            # codec declines these outright rather than guessing
            refusals += 1
            continue
        runs.append(run)
        hits += 1
    return tuple(runs), refusals


@lru_cache(maxsize=1)
def small_corpus() -> tuple[SmallRun, ...]:
    """Every frozen eventful grind seed, plus one conflict-free run."""
    runs: list[SmallRun] = []
    for seed in (*GRIND_EVENT_SEEDS, 1):
        graph, profile, col, trace = run_grind(seed)
        log = encode_small(trace, graph, profile, col)
        ranks = decode_small(log, graph, profile)
        runs.append(SmallRun(f"grind-seed{seed}", graph, profile, col, 13,
                             trace, log, tuple(ranks)))
    return tuple(runs)
