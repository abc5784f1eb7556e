"""Command-line interface.

Exit codes: 0 success, 1 usage or parse error, 2 refusal (enumeration cap or
an infeasible --preset paper), 3 validation failure, 4 the estimator crashed.
"""

from __future__ import annotations

import argparse
import sys
from functools import partial
from pathlib import Path

from . import exact
from .config import paper_config, scaled_config
from .exact import EnumerationCapError
from .fpras import run
from .generators import RawGraph, diamond_chain, layered, random_dag, series_parallel
from .graph import CycleError, Instance, preprocess
from .harness import SUITES, run_suite
from .io import (
    ParseError,
    parse_bipartite,
    parse_instance,
    parse_vertex_failure,
    render_nfa,
    render_raw,
    render_report,
    render_vertex_failure,
)
from .reductions import (
    BRUTE_FORCE_CAP,
    bis_to_unreliability,
    connected_subsets_bruteforce,
    count_accepting_strings,
    count_disconnected_subsets_bruteforce,
    count_independent_sets_bruteforce,
    dag_to_nfa,
    vertex_reliability_bruteforce,
    split_edges,
)

EXIT_OK, EXIT_USAGE, EXIT_REFUSED, EXIT_INVALID, EXIT_CRASH = 0, 1, 2, 3, 4

# samples the paper preset may allocate before the CLI refuses to run it
DEFAULT_MAX_STORE = 10**8


class UsageError(Exception):
    pass


class Refusal(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def load_instance(path: str, eps: float = 0.5):
    raw = parse_instance(_read(path))
    return preprocess(raw.edges, raw.s, raw.t, eps=eps)


# ---------------------------------------------------------------- commands


def cmd_estimate(args) -> int:
    inst = load_instance(args.file, args.eps)
    if not isinstance(inst, Instance):
        items = {"estimate": 0.0, "trivial_zero": True, "note": inst.reason, "seed": args.seed}
        _emit(render_report(items), args.out)
        return EXIT_OK
    if args.preset == "paper":
        config = paper_config(inst.n, inst.m, args.eps)
        total = config.ell * inst.n
        if total > args.max_store:
            raise Refusal(
                f"the paper preset needs ell={config.ell:,} samples per vertex "
                f"({total:,} in total for n={inst.n}, m={inst.m}, eps={args.eps}), "
                f"above --max-store={args.max_store:,}; use --preset scaled"
            )
    else:
        config = scaled_config(inst.n, args.eps, B=args.B, ell1=args.ell1, ell2=args.ell2,
                               sample_T=args.sample_T)
    report = run(inst, config, args.seed)
    items = {
        "estimate": report.estimate,
        "crashed": report.crashed,
        "crash_kind": report.crash_kind,
        "crash_vertex": None if report.crash_vertex is None else inst.labels[report.crash_vertex],
        "trivial_zero": False,
        "seed": args.seed,
        "eps": args.eps,
        "n": inst.n,
        "m": inst.m,
    }
    items |= {f"config.{k}": v for k, v in report.config.items()}
    items["guaranteed"] = config.guaranteed
    items |= {
        "memo_keys": report.memo_keys,
        "duplicate_keys": report.duplicate_keys,
        "invariant_checks": report.invariant_checks,
    }
    _emit(render_report(items, {"metadata": {"wall_time": round(report.wall_time, 3)}}), args.out)
    return EXIT_CRASH if report.crashed else EXIT_OK


def cmd_exact(args) -> int:
    inst = load_instance(args.file)
    if isinstance(inst, Instance):
        value = exact.exact_reliability(inst, cap=args.cap)
        m = inst.m
    else:
        value, m = 0.0, 0
    sys.stdout.write(render_report({"exact": f"{value:.15g}", "m": m}))
    return EXIT_OK


def _q_param(args):
    if args.q_range is not None:
        return tuple(args.q_range)
    return args.q


def cmd_gen(args) -> int:
    q = _q_param(args)
    if isinstance(q, tuple) and args.seed is None:
        args.seed = 0
    try:
        if args.kind == "diamond-chain":
            raw = diamond_chain(args.length, q, args.seed)
        elif args.kind == "layered":
            raw = layered(args.layers, args.width, q, args.seed)
        elif args.kind == "series-parallel":
            raw = series_parallel(args.edges, q, args.seed or 0)
        else:
            raw = random_dag(args.n, args.density, q, args.seed or 0, allow_trivial=args.allow_trivial)
    except (ValueError, RuntimeError) as exc:
        raise UsageError(str(exc)) from None
    shape = {
        "diamond-chain": ("length",),
        "layered": ("layers", "width"),
        "series-parallel": ("edges",),
        "random-dag": ("n", "density", "allow_trivial"),
    }[args.kind]
    params = {k: getattr(args, k) for k in shape} | {"q": q, "seed": args.seed}
    comment = f"generated: {args.kind} " + " ".join(f"{k}={v}" for k, v in params.items())
    _emit(render_raw(raw, comment), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    code = EXIT_OK
    chunks = []
    for suite in (SUITES if args.suite == "all" else [args.suite]):
        report = run_suite(suite, args.trials, args.seed)
        chunks.append(report.render())
        if not report.passed:
            code = EXIT_INVALID
    _emit("\n".join(chunks), args.out)
    return code


def cmd_reduce(args) -> int:
    text = _read(args.file)
    if args.kind == "nfa":
        raw = parse_instance(text)
        inst = preprocess([(a, b, 0.5) for a, b, _ in raw.edges], raw.s, raw.t)
        if not isinstance(inst, Instance):
            raise UsageError("the source cannot reach the sink; nothing to reduce")
        nfa = dag_to_nfa(inst, shared=args.shared)
        if inst.m <= BRUTE_FORCE_CAP:
            got, want = count_accepting_strings(nfa), connected_subsets_bruteforce(inst)
            line, ok = f"accepting({inst.m + 1})={got} == {want}", got == want
        else:
            line, ok = None, True
        render = partial(render_nfa, nfa)
    elif args.kind == "bis":
        graph = parse_bipartite(text)
        vf = bis_to_unreliability(graph)
        if len(graph.vertices) <= BRUTE_FORCE_CAP:
            a, b = count_independent_sets_bruteforce(graph), count_disconnected_subsets_bruteforce(vf)
            line, ok = f"IS={a} == disconnected={b}", a == b
        else:
            line, ok = None, True
        render = partial(render_vertex_failure, vf)
    else:
        vf = parse_vertex_failure(text)
        raw = RawGraph(split_edges(vf, args.k, args.bundle_q), vf.s, vf.t)
        inst = preprocess(raw.edges, raw.s, raw.t)
        if not isinstance(inst, Instance):
            raise UsageError("the source cannot reach the sink; nothing to reduce")
        if len(vf.vertices) <= BRUTE_FORCE_CAP and inst.m <= exact.DEFAULT_CAP:
            a, b = vertex_reliability_bruteforce(vf), exact.exact_reliability(inst)
            tol = 1e-12 if args.bundle_q is None else len(vf.edges) * args.bundle_q**args.k + 1e-12
            line, ok = f"R_vertex={a:.15g} == R_edge={b:.15g} (tol {tol:.3g})", abs(a - b) <= tol
        else:
            line, ok = None, True
        render = partial(render_raw, raw)
    if line is None:
        note = "verification: unverified (input exceeds the enumeration cap)"
    else:
        note = f"verification: {line} {'ok' if ok else 'MISMATCH'}"
    body = render(note)
    if args.out:
        Path(args.out).write_text(body)
        items = {"kind": args.kind, "out": args.out, "verified": line is not None,
                 "verification": line, "ok": ok}
        sys.stdout.write(render_report(items))
    else:
        sys.stdout.write(body)
    return EXIT_OK if ok else EXIT_INVALID


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="streliability", description="s-t reliability in DAGs")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("estimate", help="randomized estimate of the s-t reliability")
    e.add_argument("file")
    e.add_argument("--eps", type=float, default=0.5)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--preset", choices=("paper", "scaled"), default="scaled")
    e.add_argument("--B", type=int)
    e.add_argument("--ell1", type=int)
    e.add_argument("--ell2", type=int)
    e.add_argument("--sample-T", dest="sample_T", type=int)
    e.add_argument("--max-store", type=int, default=DEFAULT_MAX_STORE,
                   help="largest total sample store the paper preset may allocate")
    e.add_argument("--out")
    e.set_defaults(func=cmd_estimate)

    x = sub.add_parser("exact", help="exact reliability by enumeration")
    x.add_argument("file")
    x.add_argument("--cap", type=int, default=exact.DEFAULT_CAP)
    x.set_defaults(func=cmd_exact)

    g = sub.add_parser("gen", help="write a generated instance")
    g.add_argument("kind", choices=("diamond-chain", "layered", "series-parallel", "random-dag"))
    g.add_argument("--length", type=int, default=1)
    g.add_argument("--layers", type=int, default=2)
    g.add_argument("--width", type=int, default=2)
    g.add_argument("--edges", type=int, default=6)
    g.add_argument("--n", type=int, default=8)
    g.add_argument("--density", type=float, default=0.4)
    g.add_argument("--q", type=float, default=0.5)
    g.add_argument("--q-range", type=float, nargs=2, metavar=("LO", "HI"))
    g.add_argument("--allow-trivial", action="store_true")
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("validate", help="run a validation suite")
    v.add_argument("suite", choices=(*SUITES, "all"))
    v.add_argument("--trials", type=int, default=20_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("reduce", help="build a reduction artifact")
    r.add_argument("kind", choices=("nfa", "bis", "vertex2edge"))
    r.add_argument("file")
    r.add_argument("--k", type=int, default=1, help="parallel edges per bundle")
    r.add_argument("--bundle-q", type=float, help="failure probability of bundle edges")
    r.add_argument("--shared", action="store_true", help="share auxiliary NFA chains")
    r.add_argument("--out")
    r.set_defaults(func=cmd_reduce)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, CycleError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Refusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except EnumerationCapError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
