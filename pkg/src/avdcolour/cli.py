"""Command-line front door for the colouring pipeline and its self-checks.

Seven subcommands: ``gen`` makes seeded test graphs, ``color`` runs the full
chain (classify, contract, Vizing, extend, selection, finalize, recolour,
verify), ``verify`` re-checks a colouring file, ``codec-test`` exercises the
lossless log round trip, ``analyze`` evaluates the counting machinery,
``sweep`` brute-forces the distinguishing-index conjecture on small graphs,
and ``bench`` times the chain over a batch of seeds.

Every flag has an ``AVD_``-prefixed environment override (``AVD_EPS``,
``AVD_Q``, ``AVD_SEED``, ...); explicit flags win.  Exit codes: 0 success,
1 verification/round-trip failure, 2 usage error, 3 regime or step-cap
failure.  All output is deterministic for a fixed (input, config, seed),
except for the wall-clock fields of ``bench``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .bigphase import ExecutionTrace, finalize_big, run_big_phase, trace_to_jsonl
from .bounds import (
    DescentSpec,
    certify_big_phase,
    constant_check,
    crossover_sweep,
    dyck_count_dp,
    small_phase_bound_check,
    solve_tau,
    tree_series,
)
from .codec import decode_big, decode_small, encode_big, encode_small, parse_log, serialize_log
from .colouring import colouring_to_json, extend_to_original, vizing_colour
from .errors import AVDError, CodecError, GraphFormatError, RegimeError, StepCapExceeded
from .graphs import (
    Graph,
    classify,
    contract_pendant_pairs,
    dump_edge_list,
    gen_random_graph,
    graph_from_json,
    graph_to_json,
    load_graph,
)
from .oracle import conjecture_sweep, verify
from .smallphase import run_small_phase

OK, FAIL, USAGE, REGIME = 0, 1, 2, 3

# toy descent specs for the counting cross-check: (label, entries)
_DYCK_TOYS = (
    ("1+x^2", ((2, 1),)),
    ("1+x+x^2", ((1, 1), (2, 1))),
    ("1+2x+5x^4", ((1, 2), (4, 5))),
)


def _env(name: str, fallback: str | None = None) -> str | None:
    return os.environ.get(f"AVD_{name}", fallback)


@dataclass(frozen=True)
class RunConfig:
    """Validated knobs shared by the pipeline-driving subcommands."""

    eps: str
    q: int
    seed: int
    mode: str
    step_cap: int
    assert_invariants: bool

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        mode = args.mode
        if mode not in ("practical", "theory"):
            raise ValueError(f"unknown mode {mode!r}")
        if args.q < 5:
            raise ValueError("q below 5 collides the event descent lengths")
        if args.step_cap < 1:
            raise ValueError("step cap must be positive")
        eps = args.eps or ("0.004" if mode == "theory" else "0.1")
        return cls(eps=eps, q=args.q, seed=args.seed, mode=mode,
                   step_cap=args.step_cap,
                   assert_invariants=args.assert_invariants)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(path).write_text(text)


def _load_graph_file(path: str) -> Graph:
    text = _read_text(path)
    if text.lstrip().startswith("{"):
        return graph_from_json(text)
    return load_graph(text)


def _resolve_input_graph(args: argparse.Namespace) -> Graph:
    if getattr(args, "gen", None):
        try:
            n, target = (int(x) for x in args.gen.split(","))
        except ValueError as exc:
            raise ValueError(f"--gen expects N,TARGET_DELTA, got {args.gen!r}") from exc
        return gen_random_graph(n, target, args.seed)
    if args.input is None:
        raise ValueError("no input graph: pass a file (or '-') or use --gen")
    return _load_graph_file(args.input)


def _emit(args: argparse.Namespace, payload: object, text: str) -> None:
    if args.format == "json":
        _write_text(getattr(args, "out", None),
                    json.dumps(payload, sort_keys=True, default=str) + "\n")
    else:
        _write_text(getattr(args, "out", None), text)


def _rows_to_text(columns: tuple[str, ...], rows: list[dict]) -> str:
    lines = ["\t".join(columns)]
    for row in rows:
        lines.append("\t".join(str(row.get(c, "")) for c in columns))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- pipeline


def _run_chain(graph: Graph, cfg: RunConfig):
    """classify -> contract -> vizing -> extend -> select -> finalize -> recolour."""
    profile = classify(graph, cfg.eps, mode=cfg.mode)
    mg = contract_pendant_pairs(graph, profile)
    base = extend_to_original(graph, mg, vizing_colour(mg))
    state, big_trace = run_big_phase(
        graph, profile, base, q=cfg.q, seed=cfg.seed, mode=cfg.mode,
        step_cap=cfg.step_cap, assert_invariants=cfg.assert_invariants)
    colouring = finalize_big(graph, state, base, cfg.q)
    colouring, small_trace = run_small_phase(
        graph, profile, colouring, q=cfg.q, seed=cfg.seed, mode=cfg.mode,
        step_cap=cfg.step_cap, assert_invariants=cfg.assert_invariants)
    return profile, base, state, big_trace, colouring, small_trace


def _trace_payload(graph, profile, base, big_trace, colouring, small_trace):
    """Serializable record of both phases, including the binary logs.

    A codec refusal (fragile matching with shared endpoints, q too small)
    does not invalidate the colouring, so it is reported in place of the
    log rather than raised.
    """
    def encoded(encode):
        try:
            return serialize_log(encode()).hex(), None
        except CodecError as exc:
            return None, str(exc)

    big_hex, big_refusal = encoded(
        lambda: encode_big(big_trace, graph, profile, base))
    small_hex, small_refusal = encoded(
        lambda: encode_small(small_trace, graph, profile, colouring,
                             q=big_trace.q))
    return {
        "q": big_trace.q,
        "mode": big_trace.mode,
        "seed": big_trace.seed,
        "big": {
            "steps": [json.loads(line) for line in
                      trace_to_jsonl(big_trace).splitlines()],
            "event_counts": big_trace.event_counts(),
            "log_hex": big_hex,
            "log_refusal": big_refusal,
        },
        "small": {
            "steps": len(small_trace.steps),
            "events": small_trace.event_count(),
            "log_hex": small_hex,
            "log_refusal": small_refusal,
        },
    }


def cmd_color(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    graph = _resolve_input_graph(args)
    profile, base, state, big_trace, colouring, small_trace = _run_chain(graph, cfg)
    report = verify(graph, colouring)
    bound = graph.delta + cfg.q + 6
    payload = {
        "graph": {"n": graph.n, "m": graph.m, "delta": graph.delta},
        "eps": cfg.eps,
        "q": cfg.q,
        "seed": cfg.seed,
        "mode": cfg.mode,
        "palette_bound": bound,
        "report": {
            "ok": report.ok,
            "proper": report.proper,
            "avd": report.avd,
            "palette_used": report.palette_used,
            "offending": [list(map(list, (o[:2], o[2], o[3])))
                          for o in report.offending],
        },
        "colouring": json.loads(colouring_to_json(colouring)),
    }
    lines = [
        f"# n={graph.n} m={graph.m} delta={graph.delta} "
        f"palette_bound={bound} palette_used={report.palette_used} "
        f"proper={report.proper} avd={report.avd}",
    ]
    lines += [f"{u} {v} {payload['colouring']['colours'][f'{u}-{v}']}"
              for u, v in graph.edges()]
    _emit(args, payload, "\n".join(lines) + "\n")
    if args.trace_out:
        trace_doc = _trace_payload(graph, profile, base, big_trace,
                                   colouring, small_trace)
        Path(args.trace_out).write_text(
            json.dumps(trace_doc, sort_keys=True) + "\n")
    ok = report.ok and report.palette_used <= bound
    return OK if ok else FAIL


def cmd_gen(args: argparse.Namespace) -> int:
    graph = gen_random_graph(args.n, args.target_delta, args.seed,
                             model=args.model)
    text = graph_to_json(graph) + "\n" if args.json else dump_edge_list(graph)
    _write_text(args.out, text)
    return OK


def cmd_verify(args: argparse.Namespace) -> int:
    graph = _load_graph_file(args.graph)
    payload = json.loads(_read_text(args.colouring))
    try:
        colours = {tuple(int(x) for x in key.split("-")): int(c)
                   for key, c in payload["colours"].items()}
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise GraphFormatError(f"bad colouring JSON: {exc}") from exc
    report = verify(graph, colours)
    doc = {
        "ok": report.ok,
        "proper": report.proper,
        "avd": report.avd,
        "palette_used": report.palette_used,
        "offending": [list(map(list, (o[:2], o[2], o[3])))
                      for o in report.offending],
    }
    text = (f"ok={report.ok} proper={report.proper} avd={report.avd} "
            f"palette_used={report.palette_used} "
            f"offending={len(report.offending)}\n")
    _emit(args, doc, text)
    return OK if report.ok else FAIL


# -------------------------------------------------------------- codec test


def _codec_unit(graph: Graph, cfg: RunConfig, seed: int,
                truncate: int | None, corrupt: bool) -> dict:
    """One round-trip check; returns a result row."""
    row = {"seed": seed, "n": graph.n, "m": graph.m}
    profile = classify(graph, cfg.eps, mode=cfg.mode)
    mg = contract_pendant_pairs(graph, profile)
    base = extend_to_original(graph, mg, vizing_colour(mg))
    try:
        state, trace = run_big_phase(
            graph, profile, base, q=cfg.q, seed=seed, mode=cfg.mode,
            step_cap=cfg.step_cap)
    except (RegimeError, StepCapExceeded) as exc:
        return {**row, "status": "skipped", "reason": str(exc), "ok": True}

    if truncate is not None:
        cut = min(truncate, len(trace.steps))
        trace = ExecutionTrace(q=trace.q, mode=trace.mode, seed=None,
                               steps=trace.steps[:cut], completed=False)
    want = tuple(rec.r for rec in trace.steps)
    try:
        blob = serialize_log(encode_big(trace, graph, profile, base))
    except CodecError as exc:
        return {**row, "status": "refused", "reason": str(exc), "ok": True}
    if corrupt:
        flipped = bytearray(blob)
        flipped[len(flipped) // 2] ^= 0xFF
        blob = bytes(flipped)
    try:
        got = tuple(decode_big(parse_log(blob), graph, profile, base,
                               q=trace.q, mode=trace.mode))
        exact = got == want
    except Exception as exc:  # any decode failure counts as a detected mismatch
        got, exact = ("error", str(exc)), False

    small_exact = True
    if truncate is None and not corrupt:
        colouring = finalize_big(graph, state, base, cfg.q)
        colouring, small_trace = run_small_phase(
            graph, profile, colouring, q=cfg.q, seed=seed, mode=cfg.mode,
            step_cap=cfg.step_cap)
        try:
            small_log = encode_small(small_trace, graph, profile, colouring,
                                     q=cfg.q)
            small_ranks = decode_small(parse_log(serialize_log(small_log)),
                                       graph, profile, q=cfg.q)
            small_exact = tuple(small_ranks) == tuple(
                rec.r for rec in small_trace.steps)
        except CodecError as exc:
            return {**row, "status": "refused", "reason": str(exc), "ok": True}
    ok = exact and small_exact
    return {**row, "status": "checked", "steps": len(want),
            "big_exact": exact, "small_exact": small_exact, "ok": ok}


def cmd_codec_test(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    rows = []
    for seed in range(args.count):
        graph = (_load_graph_file(args.input) if args.input
                 else gen_random_graph(args.n, args.target_delta, seed))
        rows.append(_codec_unit(graph, cfg, seed, args.truncate, args.corrupt))
    checked = [r for r in rows if r["status"] == "checked"]
    failures = [r for r in rows if not r["ok"]]
    summary = {
        "units": len(rows),
        "checked": len(checked),
        "skipped": sum(r["status"] == "skipped" for r in rows),
        "refused": sum(r["status"] == "refused" for r in rows),
        "exact": sum(r["ok"] for r in checked),
        "failures": len(failures),
    }
    text = _rows_to_text(("seed", "status", "steps", "ok"), rows)
    text += "# " + " ".join(f"{k}={v}" for k, v in summary.items()) + "\n"
    _emit(args, {"summary": summary, "rows": rows}, text)
    if not checked or failures:
        return FAIL
    return OK


# ----------------------------------------------------------------- analyze


def _sweep_figure(rows: list[dict], path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    deltas = [r["delta"] for r in rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.loglog(deltas, [r["gamma"] for r in rows], marker="o",
              label="log growth rate")
    ax.loglog(deltas, [r["s"] for r in rows], marker="s",
              label="pair budget s")
    certified = [r["delta"] for r in rows if r["verdict"]]
    if certified:
        ax.axvline(certified[0], color="grey", linestyle="--",
                   label=f"certified at {certified[0]:.0e}")
    ax.set_xlabel("maximum degree")
    ax.set_ylabel("count")
    ax.set_title("termination certificate: growth rate vs pair budget")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def cmd_analyze(args: argparse.Namespace) -> int:
    eps = args.eps or "0.004"
    sections: dict[str, object] = {}
    lines: list[str] = []

    if args.constant or not (args.certify or args.sweep or args.dyck):
        value = constant_check(args.q)
        sections["constant"] = {"q": args.q, "value": value,
                                "below_one_eighth": value < 0.125}
        lines.append(f"constant\tq={args.q}\t{value:.5f}\t"
                     f"{'<' if value < 0.125 else '>='} 1/8")

    if args.certify:
        if args.delta is None:
            raise ValueError("--certify needs --delta")
        rep = certify_big_phase(args.delta, eps, q=args.q).as_dict()
        sections["certify"] = rep
        lines.append("certify\t" + "\t".join(
            f"{k}={rep[k]}" for k in ("delta", "d", "s", "gamma", "verdict")))

    if args.sweep:
        rows = [r.as_dict() for r in crossover_sweep(eps, q=args.q)]
        sections["sweep"] = rows
        lines.append(_rows_to_text(
            ("delta", "d", "s", "gamma", "verdict"), rows).rstrip("\n"))
        if args.figure_out:
            _sweep_figure(rows, args.figure_out)

    if args.dyck:
        t_max = args.t
        toys = []
        for label, entries in _DYCK_TOYS:
            spec = DescentSpec(entries)
            series = tree_series(spec, t_max)
            agree = all(dyck_count_dp(t, spec) == series[t]
                        for t in range(t_max + 1))
            ts = solve_tau(spec)
            toys.append({"spec": label, "t_max": t_max, "agree": agree,
                         "tau": float(ts.tau), "gamma": float(ts.gamma),
                         "series_head": list(series[:8])})
        sections["dyck"] = toys
        lines.append(_rows_to_text(
            ("spec", "t_max", "agree", "tau", "gamma"), toys).rstrip("\n"))
        if not all(t["agree"] for t in toys):
            _emit(args, sections, "\n".join(lines) + "\n")
            return FAIL

    _emit(args, sections, "\n".join(lines) + "\n")
    return OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if not 3 <= args.max_n <= 7:
        raise ValueError("--max-n must be between 3 and 7")
    report = conjecture_sweep(args.max_n)
    doc = {
        "n_max": report.n_max,
        "graphs_checked": report.graphs_checked,
        "within_delta_plus_two": report.within_delta_plus_two,
        "exceptions": list(report.exceptions),
        "ok": report.ok,
    }
    text = (f"checked={report.graphs_checked} "
            f"within_delta_plus_two={report.within_delta_plus_two} "
            f"exceptions={len(report.exceptions)} ok={report.ok}\n")
    _emit(args, doc, text)
    return OK if report.ok else FAIL


# ------------------------------------------------------------------- bench


def _bench_unit(packed: tuple) -> dict:
    (seed, n, target, eps, q, mode, step_cap) = packed
    cfg = RunConfig(eps=eps, q=q, seed=seed, mode=mode, step_cap=step_cap,
                    assert_invariants=False)
    graph = gen_random_graph(n, target, seed)
    row = {"seed": seed, "n": graph.n, "m": graph.m, "delta": graph.delta}
    t0 = time.perf_counter()
    try:
        _, _, _, big_trace, colouring, small_trace = _run_chain(graph, cfg)
    except (RegimeError, StepCapExceeded) as exc:
        return {**row, "status": "refused", "reason": str(exc), "ok": True}
    report = verify(graph, colouring)
    return {
        **row,
        "status": "ok" if report.ok else "failed",
        "palette_bound": graph.delta + q + 6,
        "palette_used": report.palette_used,
        "big_steps": len(big_trace.steps),
        "small_steps": len(small_trace.steps),
        "ms": round(1000 * (time.perf_counter() - t0), 2),
        "ok": report.ok,
    }


def _bench_figure(rows: list[dict], path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    done = [r for r in rows if r["status"] != "refused"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    ax1.scatter([r["m"] for r in done], [r["ms"] for r in done], s=18)
    ax1.set_xlabel("edges")
    ax1.set_ylabel("wall time (ms)")
    ax1.set_title("pipeline cost")
    slack = [r["palette_bound"] - r["palette_used"] for r in done]
    ax2.hist(slack, bins=range(0, max(slack, default=1) + 2), edgecolor="black")
    ax2.set_xlabel("unused colours below the bound")
    ax2.set_ylabel("runs")
    ax2.set_title("palette slack")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    units = [(seed, args.n, args.target_delta, cfg.eps, cfg.q, cfg.mode,
              cfg.step_cap) for seed in range(args.count)]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_bench_unit, units))
    else:
        rows = [_bench_unit(u) for u in units]
    failures = [r for r in rows if not r["ok"]]
    summary = {
        "runs": len(rows),
        "refused": sum(r["status"] == "refused" for r in rows),
        "failures": len(failures),
        "total_ms": round(sum(r.get("ms", 0) for r in rows), 2),
    }
    text = _rows_to_text(
        ("seed", "n", "m", "delta", "status", "palette_used", "ms"), rows)
    text += "# " + " ".join(f"{k}={v}" for k, v in summary.items()) + "\n"
    _emit(args, {"summary": summary, "rows": rows}, text)
    if args.figure_out:
        _bench_figure(rows, args.figure_out)
    return OK if not failures else FAIL


# ------------------------------------------------------------------ parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", default=_env("EPS"),
                   help="degree-threshold ratio; default 0.1 (practical) "
                        "or 0.004 (theory)")
    p.add_argument("--q", type=int, default=_env("Q", "13"),
                   help="palette parameter; the bound is delta+q+6")
    p.add_argument("--seed", type=int, default=_env("SEED", "0"))
    p.add_argument("--mode", default=_env("MODE", "practical"),
                   help="practical|theory")
    p.add_argument("--step-cap", type=int, default=_env("STEP_CAP", "1000000"))
    p.add_argument("--assert", dest="assert_invariants", action="store_true",
                   default=bool(_env("ASSERT")),
                   help="check the selection invariants at every step")
    p.add_argument("--format", choices=("json", "text"),
                   default=_env("FORMAT", "json"))
    p.add_argument("--workers", type=int, default=_env("WORKERS", "1"))
    p.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avdcolour",
        description="adjacent-vertex-distinguishing edge colouring toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a seeded random graph")
    _add_common(p)
    p.add_argument("--n", type=int, default=_env("N", "60"))
    p.add_argument("--target-delta", type=int, default=_env("TARGET_DELTA", "24"))
    p.add_argument("--model", choices=("gnp-capped", "near-regular"),
                   default="gnp-capped")
    p.add_argument("--json", action="store_true",
                   help="emit graph JSON instead of an edge list")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("color", help="run the full colouring chain")
    _add_common(p)
    p.add_argument("input", nargs="?", help="edge list or graph JSON ('-' = stdin)")
    p.add_argument("--gen", metavar="N,TARGET",
                   help="colour a seeded random graph instead of a file")
    p.add_argument("--trace-out", default=_env("TRACE_OUT"),
                   help="write step traces and encoded logs to this path")
    p.set_defaults(func=cmd_color)

    p = sub.add_parser("verify", help="check a colouring file against a graph")
    _add_common(p)
    p.add_argument("graph")
    p.add_argument("colouring")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("codec-test",
                       help="encode/decode round trips on seeded runs")
    _add_common(p)
    p.add_argument("input", nargs="?",
                   help="optional graph file; default is seeded random graphs")
    p.add_argument("--count", type=int, default=_env("COUNT", "20"))
    p.add_argument("--n", type=int, default=_env("N", "60"))
    p.add_argument("--target-delta", type=int, default=_env("TARGET_DELTA", "24"))
    p.add_argument("--truncate", type=int, default=None,
                   help="keep only the first T selection steps before encoding")
    p.add_argument("--corrupt", action="store_true",
                   help="flip one byte of each log; round trips must then fail")
    p.set_defaults(func=cmd_codec_test)

    p = sub.add_parser("analyze", help="counting machinery and certificates")
    _add_common(p)
    p.add_argument("--constant", action="store_true",
                   help="evaluate the q-dependence constant")
    p.add_argument("--certify", action="store_true",
                   help="certify one (delta, eps) point; needs --delta")
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--sweep", action="store_true",
                   help="log-scale sweep until the certificate first holds")
    p.add_argument("--dyck", action="store_true",
                   help="cross-check the two word-counting routes")
    p.add_argument("-t", type=int, default=20,
                   help="max semilength for --dyck")
    p.add_argument("--figure-out", default=None,
                   help="render the sweep as a figure (PNG/SVG by extension)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep",
                       help="brute-force the delta+2 conjecture on small graphs")
    _add_common(p)
    p.add_argument("--max-n", type=int, default=_env("MAX_N", "5"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="time the chain over a batch of seeds")
    _add_common(p)
    p.add_argument("--count", type=int, default=_env("COUNT", "10"))
    p.add_argument("--n", type=int, default=_env("N", "120"))
    p.add_argument("--target-delta", type=int, default=_env("TARGET_DELTA", "32"))
    p.add_argument("--figure-out", default=None,
                   help="render cost and palette-slack panels to this path")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (RegimeError, StepCapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return REGIME
    except AVDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    raise SystemExit(main())
