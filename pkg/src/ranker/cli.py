"""Command-line entry point: `ranker <verb> ...`.

Exit codes: 0 ok, 1 property violation found, 2 usage error, 3 budget or
timeout exhausted.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from pathlib import Path

from .automaton import BuchiAutomaton, LassoWord, find_accepting_lasso
from .constructions import DEFAULT_BUDGET, BudgetExceeded, TimeoutExceeded
from .formats import ParseError, parse_automaton, serialize

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def read_text(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def read_automaton(path: str, text: str | None = None) -> BuchiAutomaton:
    text = read_text(path) if text is None else text
    try:
        return parse_automaton(text)
    except ParseError as exc:
        raise UsageError(f"{path}: {exc}") from None


def text_format(text: str) -> str:
    return "hoa" if text.lstrip().startswith("HOA:") else "ba"


def write_text(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def parse_word(aut: BuchiAutomaton, stem: str, loop: str) -> LassoWord:
    def symbols(text):
        text = text.strip()
        if not text:
            return ()
        parts = re.split(r"[\s,]+", text) if re.search(r"[\s,]", text) else list(text)
        try:
            return tuple(aut.symbol_index(s) for s in parts)
        except (KeyError, ValueError) as exc:
            raise UsageError(f"unknown symbol in {text!r}: {exc}") from None

    w = LassoWord(symbols(stem), symbols(loop))
    if not w.loop:
        raise UsageError("the loop of a lasso word must be non-empty")
    return w


def _opt_config(args):
    from .optimizations import BackoffPolicy, OptConfig

    names = [x for x in (args.opt or "").split(",") if x.strip()]
    backoff = None
    if args.backoff:
        kw = {"check_filtered": not args.backoff_unfiltered}
        if args.surrogate_cmd:
            kw.update(surrogate="external-command", command=args.surrogate_cmd)
        try:
            backoff = BackoffPolicy.parse(args.backoff, **kw)
        except ValueError as exc:
            raise UsageError(f"bad --backoff value {args.backoff!r}: {exc}") from None
    elif args.surrogate_cmd:
        raise UsageError("--surrogate-cmd needs --backoff")
    if args.algorithm in ("kv", "fkv"):
        if names or backoff or args.strict_eta4:
            raise UsageError(f"--algorithm {args.algorithm} takes no optimizations")
        return None
    if args.algorithm == "maxrank" and not names:
        cfg = OptConfig.maxrank_pipeline(strict_eta4=args.strict_eta4, backoff=backoff)
        return cfg
    if args.algorithm == "maxrank":
        names.append("maxrank")
    try:
        return OptConfig.from_names(sorted(set(names)), strict_eta4=args.strict_eta4, backoff=backoff)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_complement(args) -> int:
    from .optimizations import complement

    text = read_text(args.input)
    aut = read_automaton(args.input, text)
    config = _opt_config(args)
    deadline = None if args.timeout is None else time.monotonic() + args.timeout
    result = complement(aut, args.algorithm, config, args.budget, deadline)
    out = result.automaton
    if args.labels:
        names = tuple(result.macrostate_labels[q] for q in range(out.num_states))
        out = BuchiAutomaton(out.num_states, out.alphabet, out.transitions, out.initial, out.accepting, names)
    fmt = args.format or text_format(text)
    try:
        rendered = serialize(out, fmt, single_init=args.single_init)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_text(args.output, rendered)
    if args.stats:
        write_text(args.stats, json.dumps(result.stats, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_generate(args) -> int:
    from .harness import TvParams, tabakov_vardi

    try:
        params = [
            TvParams(args.n, args.alphabet_size, args.td, args.ad, args.seed + k) for k in range(args.count)
        ]
        auts = [tabakov_vardi(p) for p in params]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.count == 1 and not args.out_dir:
        write_text(args.output, serialize(auts[0], args.format))
        return EXIT_OK
    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    for p, aut in zip(params, auts):
        name = f"tv-n{p.n}-td{p.td}-ad{p.ad}-s{p.seed}.{args.format}"
        (out_dir / name).write_text(serialize(aut, args.format))
    return EXIT_OK


def cmd_check(args) -> int:
    from .harness import complement_correctness_check, equivalence_check

    from .optimizations import align_alphabet

    a, b = read_automaton(args.first), read_automaton(args.second)
    # BA text only lists symbols that label an edge, so compare over the union
    union = a.alphabet + tuple(s for s in b.alphabet if s not in a.alphabet)
    a, b = align_alphabet(a, union), align_alphabet(b, union)
    fn = complement_correctness_check if args.mode == "complement" else equivalence_check
    res = fn(a, b, args.stem_max, args.loop_max)
    if res.passed:
        print(f"pass ({res.checked} lassos checked)")
        return EXIT_OK
    print(f"fail: witness {res.witness.render(a)} after {res.checked} lassos")
    return EXIT_VIOLATION


def cmd_bench(args) -> int:
    from .harness import TvParams, configuration_names, run_benchmark, tabakov_vardi

    configs = [c.strip() for c in args.configs.split(",") if c.strip()]
    unknown = set(configs) - set(configuration_names())
    if unknown:
        raise UsageError(f"unknown configurations {sorted(unknown)}; known: {', '.join(configuration_names())}")
    if args.inputs:
        corpus = [(p, read_automaton(p)) for p in args.inputs]
    else:
        corpus = [
            (f"tv-{args.seed + k:05d}", tabakov_vardi(TvParams(args.n, args.alphabet_size, args.td, args.ad, args.seed + k)))
            for k in range(args.count)
        ]
    bounds = None
    if args.check:
        bounds = tuple(int(x) for x in args.check.split(","))
    to_stdout = args.output in (None, "-")
    out = sys.stdout if to_stdout else args.output
    records, summary = run_benchmark(corpus, configs, args.timeout, out, args.workers, args.budget, bounds)
    if args.summary:
        write_text(args.summary, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if not to_stdout:
        json.dump(summary["configs"], sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    return EXIT_VIOLATION if any(r.verdict == "fail" for r in records) else EXIT_OK


def cmd_rankdag(args) -> int:
    from .rundag import OMEGA, explicit_dag

    aut = read_automaton(args.input)
    w = parse_word(aut, args.stem, args.loop)
    dag = explicit_dag(aut, w, args.depth)
    print(f"# word {w.render(aut)}: levels 0..{dag.end - 1}, level {dag.end} repeats level {dag.loop_start}")
    for i in range(max(dag.end, args.depth)):
        for q in range(aut.num_states):
            if dag.level(i) >> q & 1:
                r = dag.rank(q, i)
                print(f"{aut.name(q)}@{i}: {'omega' if r == OMEGA else r}")
    accepted = any(r == OMEGA for r in dag.ranks.values())
    print("# accepted" if accepted else "# rejected")
    return EXIT_OK


def cmd_simrel(args) -> int:
    from .simulations import direct_simulation, odd_rank_relation

    aut = read_automaton(args.input)
    rel = odd_rank_relation(aut) if args.kind == "oddrank" else direct_simulation(aut)
    for p, q in rel.pairs():
        if p != q or args.reflexive:
            print(f"{aut.name(p)} <= {aut.name(q)}")
    return EXIT_OK


def cmd_empty(args) -> int:
    aut = read_automaton(args.input)
    w = find_accepting_lasso(aut)
    if w is None:
        print("empty")
        return EXIT_OK
    print(f"non-empty: {w.render(aut)}")
    return EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ranker", description="Rank-based Büchi automata complementation.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("complement", help="complement an automaton (BA or HOA, '-' for stdin)")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--algorithm", choices=["kv", "fkv", "schewe", "maxrank"], default="maxrank")
    p.add_argument("--opt", help="comma list of delay,succrank,ranksim,purgedi,rankrestr")
    p.add_argument("--backoff", help='thresholds such as "9:5,8:6"')
    p.add_argument("--backoff-unfiltered", action="store_true", help="check unfiltered entry ranks")
    p.add_argument("--surrogate-cmd", help="shell command reading HOA on stdin and writing HOA")
    p.add_argument("--strict-eta4", action="store_true")
    p.add_argument("--stats", help="write stats JSON here")
    p.add_argument("--format", choices=["ba", "hoa"], help="output format (default: that of the input)")
    p.add_argument("--labels", action="store_true", help="name states after their macrostates")
    p.add_argument("--single-init", action="store_true", help="refuse BA output with several initial states")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--timeout", type=float)
    p.set_defaults(func=cmd_complement)

    p = sub.add_parser("generate", help="random Tabakov-Vardi automata")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alphabet-size", type=int, default=2)
    p.add_argument("--td", type=float, default=1.5)
    p.add_argument("--ad", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--format", choices=["ba", "hoa"], default="ba")
    p.add_argument("--out-dir")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("check", help="bounded lasso check of a complement or an equivalence")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--mode", choices=["complement", "equivalence"], default="complement")
    p.add_argument("--stem-max", type=int, default=4)
    p.add_argument("--loop-max", type=int, default=4)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="benchmark configurations on a corpus")
    p.add_argument("inputs", nargs="*", help="automaton files (default: generate a TV corpus)")
    p.add_argument("--configs", default="schewe,maxrank-pipeline")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--alphabet-size", type=int, default=2)
    p.add_argument("--td", type=float, default=1.5)
    p.add_argument("--ad", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--timeout", type=float, default=300.0)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--check", help='lasso bounds "STEM,LOOP" for a correctness check of every output')
    p.add_argument("-o", "--output", help="JSON-lines records (default stdout)")
    p.add_argument("--summary", help="write the summary JSON here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("rankdag", help="ranks of the run DAG over a lasso word")
    p.add_argument("input")
    p.add_argument("--stem", default="")
    p.add_argument("--loop", required=True)
    p.add_argument("--depth", type=int, default=0, help="print at least this many levels")
    p.set_defaults(func=cmd_rankdag)

    p = sub.add_parser("simrel", help="print a simulation relation")
    p.add_argument("input")
    p.add_argument("--kind", choices=["di", "direct", "oddrank"], default="di")
    p.add_argument("--reflexive", action="store_true")
    p.set_defaults(func=cmd_simrel)

    p = sub.add_parser("empty", help="emptiness check with a witness lasso")
    p.add_argument("input")
    p.set_defaults(func=cmd_empty)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ranker: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, TimeoutExceeded) as exc:
        print(f"ranker: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except FileNotFoundError as exc:
        print(f"ranker: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
