"""End-to-end acceptance: the guarantees this package actually commits to.

The asymptotic palette guarantee activates only at astronomically large
maximum degree (the certified crossover reported by criterion f), so the
desk-scale contract is property-based: the pipeline must colour real graphs
inside the delta+19 palette with all structural invariants intact, the log
codec must be losslessly invertible, and the counting machinery must
reproduce its exactly checkable numbers.  One test per criterion; run with
``pytest -v`` for the per-criterion verdict lines.
"""

import json
import math
import random
import time
from fractions import Fraction

import pytest

from avdcolour.bigphase import check_invariants, run_big_phase
from avdcolour.bounds import (
    DescentSpec,
    certify_big_phase,
    constant_check,
    crossover_sweep,
    dyck_count_dp,
    gamma_upper_bound,
    solve_tau,
    tree_series,
)
from avdcolour.cli import RunConfig, _run_chain, main
from avdcolour.codec import check_budgets
from avdcolour.colouring import (
    extend_to_original,
    shared_colour_property,
    vizing_colour,
)
from avdcolour.errors import RegimeError, StepCapExceeded
from avdcolour.graphs import (
    Graph,
    MultiGraph,
    classify,
    contract_pendant_pairs,
    gen_random_graph,
)
from avdcolour.oracle import brute_force_avd_index, conjecture_sweep, verify

from corpora import big_corpus, small_corpus
from gadgets import theory_star_chain
from helpers import cycle

PALETTE_TARGETS = (50, 60, 70, 80)  # keeps delta inside [40, 80] at n=200


@pytest.fixture(scope="module")
def palette_runs(tmp_path_factory):
    """Fifty seeded n=200 pipeline runs with invariant assertions enabled.

    Shared by criteria (a) and (b): exit code 0 simultaneously means the
    chain terminated inside the step cap and that no loop-test point saw an
    invariant violation (violations raise and exit 1).
    """
    out_dir = tmp_path_factory.mktemp("colourings")
    rows = []
    for seed in range(50):
        target = PALETTE_TARGETS[seed % 4]
        out = out_dir / f"run{seed}.json"
        t0 = time.perf_counter()
        code = main(["color", "--gen", f"200,{target}", "--seed", str(seed),
                     "--assert", "--out", str(out)])
        elapsed = time.perf_counter() - t0
        doc = json.loads(out.read_text()) if code == 0 else None
        rows.append((seed, code, elapsed, doc))
    return rows


def test_criterion_a_palette_bound_empirical(palette_runs):
    assert [seed for seed, code, _, _ in palette_runs if code != 0] == []
    worst = 0.0
    for seed, _, elapsed, doc in palette_runs:
        graph, report = doc["graph"], doc["report"]
        assert 40 <= graph["delta"] <= 80, (seed, graph["delta"])
        assert report["proper"] and report["avd"], seed
        assert report["palette_used"] <= graph["delta"] + 19, seed
        assert elapsed < 5.0, (seed, elapsed)
        worst = max(worst, elapsed)
    print(f"criterion (a): 50/50 graphs proper+distinguishing within "
          f"delta+19; worst wall {worst:.2f}s < 5s")


def test_criterion_b_invariants_every_step(palette_runs):
    # (1)-(4) at every loop-test point: the fixture ran with --assert, so a
    # single violation anywhere would have aborted that run with exit 1
    violations = [seed for seed, code, _, _ in palette_runs if code != 0]
    assert violations == []
    # (5) needs s > 0, which only a synthetic theory-regime graph provides
    graph, eps, q = theory_star_chain()
    profile = classify(graph, eps, mode="theory")
    mg = contract_pendant_pairs(graph, profile)
    base = extend_to_original(graph, mg, vizing_colour(mg))
    state, trace = run_big_phase(graph, profile, base, q=q, seed=3,
                                 mode="theory", assert_invariants=True)
    assert state.s > 0 and trace.completed
    assert check_invariants(state, base).ok
    print(f"criterion (b): zero invariant violations across 50 asserted "
          f"runs; property (5) held in theory mode with s={state.s}")


def test_criterion_c_codec_bijection():
    big_runs, _ = big_corpus()
    assert len(big_runs) >= 100
    seen = {t: 0 for t in (1, 2, 3, 4, 5)}
    for run in big_runs:
        assert run.ranks == tuple(rec.r for rec in run.trace.steps), run.label
        check_budgets(run.log, run.profile, run.q)  # raises on any overflow
        for typ, count in run.trace.event_counts().items():
            seen[typ] += count
    assert all(seen[t] >= 1 for t in (1, 2, 3, 4, 5)), seen

    small_runs = small_corpus()
    eventful = [r for r in small_runs if r.trace.event_count() >= 1]
    assert len(eventful) >= 100
    for run in small_runs:
        assert run.ranks == tuple(rec.r for rec in run.trace.steps), run.label
        check_budgets(run.log, run.profile, run.q)
    print(f"criterion (c): {len(big_runs)} selection logs and "
          f"{len(eventful)} eventful recolouring logs round-tripped exactly; "
          f"event coverage {seen}")


def test_criterion_d_constant_check():
    value = constant_check(13)
    assert value == pytest.approx(0.12292, abs=1e-4)
    assert value < 0.125
    best = min(_timed(constant_check, 13) for _ in range(5))
    assert best < 1e-3, f"constant_check took {best * 1e3:.3f} ms"
    print(f"criterion (d): constant_check(13) = {value:.5f} < 1/8 "
          f"in {best * 1e6:.0f} us")


def _timed(fn, *args):
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0


def test_criterion_e_counting_cross_check():
    toys = [DescentSpec(e) for e in (((1, 1), (2, 1)), ((2, 3),),
                                     ((1, 2), (4, 5)))]
    for spec in toys:
        series = tree_series(spec, 20)
        assert all(dyck_count_dp(t, spec) == series[t] for t in range(21))

    aerated = DescentSpec([(2, 1)])
    ts = solve_tau(aerated)
    assert ts.tau == pytest.approx(1, abs=1e-10)
    assert ts.gamma == pytest.approx(2, abs=1e-10)
    for t, coeff in enumerate(tree_series(aerated, 30)):
        assert coeff <= (2 + 1e-9) ** t

    rng = random.Random(8140814)
    checked = 0
    while checked < 100:
        lengths = sorted(rng.sample(range(1, 7), rng.randint(1, 4)))
        if max(lengths) < 2:
            continue
        spec = DescentSpec([(l, rng.randint(1, 50)) for l in lengths])
        ts = solve_tau(spec)
        probe = Fraction(float(ts.tau) * rng.uniform(0.05, 0.95))
        probe = probe.limit_denominator(10**12)
        bound = gamma_upper_bound(spec, probe)
        assert bound is not None, spec
        assert float(bound) >= float(ts.gamma) * (1 - 1e-9), spec
        checked += 1
    print("criterion (e): DP = series on 3 toys to t=20; tau/gamma exact "
          "for the aerated spec; 100 random probes never undercut gamma")


def test_criterion_f_certifier_sanity():
    eps = Fraction(1, 250)
    defined = 0
    for delta in range(1, 10_001):
        try:
            report = certify_big_phase(delta, eps)
        except RegimeError:
            continue
        defined += 1
        assert report.verdict is False, delta
    assert defined >= 9_000  # the certificate is evaluable on most of the grid

    reports = crossover_sweep(eps)
    last = reports[-1]
    assert last.verdict is True
    assert all(not r.verdict for r in reports[:-1])
    # the comparison is exact rational-vs-integer: rounded in the safe
    # direction by construction, and immune to float overflow
    assert isinstance(last.probe_bound, Fraction) and isinstance(last.s, int)
    assert last.probe_bound < last.s
    assert all(math.isfinite(r.log10_gamma) for r in reports)
    print(f"criterion (f): verdict false on all {defined} evaluable "
          f"delta <= 1e4; certified crossover at delta = {last.delta} "
          f"(= 2^{last.delta.bit_length() - 1})")


def _pendant_pair_graph(seed, n_core=30, target=12, pairs=4):
    """Random dense core plus degree-2 pendant pairs hung off its hubs."""
    rng = random.Random(seed)
    core = gen_random_graph(n_core, target, seed)
    edges = list(core.edges())
    n = core.n
    hubs = sorted(range(core.n), key=core.degree, reverse=True)
    for _ in range(pairs):
        u, v = n, n + 1
        n += 2
        h1, h2 = rng.sample(hubs[:10], 2)
        edges += [(u, v), (u, h1), (v, h2)]
    return Graph(n, edges)


def _assert_proper_multigraph(mg, col, max_colour):
    assert col.is_total()
    assert col.max_colour() <= max_colour
    at_vertex = {}
    for eid in range(mg.m):
        u, v = mg.endpoints(eid)
        c = col.colour_of[eid]
        for w in (u, v):
            assert c not in at_vertex.setdefault(w, set()), (w, c)
            at_vertex[w].add(c)


def test_criterion_g_oracle_ground_truth():
    assert brute_force_avd_index(cycle(5)) == 5

    sweep = conjecture_sweep(5)
    assert sweep.ok
    assert len(sweep.exceptions) == 1
    sole = sweep.exceptions[0]
    assert sole["n"] == 5 and sole["delta"] == 2 and sole["avd_index"] == 5

    for seed in range(200):
        g = gen_random_graph(24, 6 + seed % 11, seed)
        mg = MultiGraph.from_graph(g)
        _assert_proper_multigraph(mg, vizing_colour(mg), g.delta + 1)

    for seed in range(50):
        g = gen_random_graph(16, 6, seed)
        rng = random.Random(seed)
        edges = list(g.edges())
        doubled = edges + rng.sample(edges, max(1, len(edges) // 4))
        mg = MultiGraph(g.n, doubled)
        assert mg.max_multiplicity == 2
        _assert_proper_multigraph(mg, vizing_colour(mg), mg.delta + 2)

    completed = pairs_checked = 0
    for seed in range(40):
        g = _pendant_pair_graph(seed)
        profile = classify(g, "0.1")
        mg = contract_pendant_pairs(g, profile)
        assert mg.merged, seed
        base = extend_to_original(g, mg, vizing_colour(mg))
        assert shared_colour_property(g, mg, base) == [], seed
        cfg = RunConfig(eps="0.1", q=13, seed=seed, mode="practical",
                        step_cap=10**6, assert_invariants=False)
        try:
            *_, colouring, _ = _run_chain(g, cfg)
        except (RegimeError, StepCapExceeded):
            continue  # tiny dense cores can run the admissible pool dry
        completed += 1
        pairs_checked += len(mg.merged)
        assert shared_colour_property(g, mg, colouring) == [], seed
        assert verify(g, colouring).ok, seed
    assert completed >= 25
    print(f"criterion (g): C5 index 5; n<=5 census clean; 200 simple + 50 "
          f"doubled Vizing runs proper; shared-colour property held on "
          f"{pairs_checked} contracted edges across {completed} full runs")


def test_criterion_h_byte_identical_determinism(tmp_path):
    def run_twice(tag, gen, seed):
        artefacts = []
        for attempt in (1, 2):
            out = tmp_path / f"{tag}-{attempt}.json"
            trace = tmp_path / f"{tag}-{attempt}-trace.json"
            code = main(["color", "--gen", gen, "--seed", seed,
                         "--out", str(out), "--trace-out", str(trace)])
            assert code == 0
            artefacts.append((out.read_bytes(), trace.read_bytes()))
        assert artefacts[0] == artefacts[1], tag
        return json.loads(artefacts[0][1].decode())

    trace_doc = run_twice("large", "200,50", "0")
    run_twice("small", "60,24", "7")
    assert trace_doc["big"]["log_hex"] or trace_doc["big"]["log_refusal"]
    print("criterion (h): colourings, traces, and encoded logs byte-identical "
          "across consecutive runs on both test graphs")
