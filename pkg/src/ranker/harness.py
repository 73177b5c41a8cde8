"""Random automata, bounded lasso checks and the benchmark runner."""

from __future__ import annotations

import json
import math
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict
from typing import Callable, Iterable

from .automaton import BuchiAutomaton, LassoWord, MembershipOracle, all_lassos


@dataclass(frozen=True)
class TvParams:
    n: int
    alphabet_size: int = 2
    td: float = 1.5
    ad: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0 <= self.ad <= 1:
            raise ValueError("acceptance density must lie in [0, 1]")
        if self.td < 0:
            raise ValueError("transition density must be non-negative")
        if self.alphabet_size < 1:
            raise ValueError("alphabet must be non-empty")


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def symbol_names(k: int) -> tuple[str, ...]:
    if k <= 26:
        return tuple(chr(ord("a") + i) for i in range(k))
    return tuple(f"s{i}" for i in range(k))


def tabakov_vardi(p: TvParams) -> BuchiAutomaton:
    n = p.n
    per_symbol = round_half_up(p.td * n)
    if per_symbol > n * n:
        raise ValueError(f"cannot place {per_symbol} distinct transitions among {n * n} pairs")
    rng = random.Random(p.seed)
    edges = []
    for a in range(p.alphabet_size):
        for cell in rng.sample(range(n * n), per_symbol):
            edges.append((cell // n, a, cell % n))
    accepting = rng.sample(range(n), round_half_up(p.ad * n))
    return BuchiAutomaton.from_edges(n, symbol_names(p.alphabet_size), edges, [0], accepting)


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    witness: LassoWord | None = None
    checked: int = 0

    def __bool__(self):
        return self.passed


def _same_alphabet(A: BuchiAutomaton, B: BuchiAutomaton):
    if A.alphabet != B.alphabet:
        raise ValueError("automata must share the alphabet (same symbol order)")


def complement_correctness_check(A, C, stem_max=4, loop_max=4) -> CheckResult:
    """Every lasso within the bounds is in exactly one of L(A), L(C)."""
    _same_alphabet(A, C)
    in_a, in_c = MembershipOracle(A), MembershipOracle(C)
    count = 0
    for w in all_lassos(len(A.alphabet), stem_max, loop_max):
        count += 1
        if in_a(w) == in_c(w):
            return CheckResult(False, w, count)
    return CheckResult(True, None, count)


def equivalence_check(A, B, stem_max=4, loop_max=4) -> CheckResult:
    _same_alphabet(A, B)
    in_a, in_b = MembershipOracle(A), MembershipOracle(B)
    count = 0
    for w in all_lassos(len(A.alphabet), stem_max, loop_max):
        count += 1
        if in_a(w) != in_b(w):
            return CheckResult(False, w, count)
    return CheckResult(True, None, count)


# configurations known to the benchmark runner: name -> (algorithm, OptConfig factory)
def _configs():
    from .optimizations import OptConfig

    return {
        "kv": ("kv", None),
        "fkv": ("fkv", None),
        "schewe": ("schewe", OptConfig()),
        "delay": ("schewe", OptConfig(delay=True)),
        "succrank": ("schewe", OptConfig(succrank=True)),
        "ranksim": ("schewe", OptConfig(ranksim=True)),
        "purgedi": ("schewe", OptConfig(purgedi=True)),
        "rankrestr-pipeline": ("schewe", OptConfig.rankrestr_pipeline()),
        "maxrank-pipeline": ("maxrank", OptConfig.maxrank_pipeline()),
    }


def named_configuration(name: str):
    table = _configs()
    if name not in table:
        raise ValueError(f"unknown configuration {name!r} (known: {', '.join(table)})")
    return table[name]


def configuration_names() -> list[str]:
    return list(_configs())


@dataclass
class BenchRecord:
    input_id: str
    config: str
    stats: dict | None = None
    verdict: str | None = None  # "pass", "fail" or None when not checked
    timeout: bool = False
    error: str | None = None

    @property
    def states(self) -> int | None:
        if self.stats is None:
            return None
        return self.stats["states_waiting"] + self.stats["states_tight"]


def _bench_task(args):
    from .constructions import BudgetExceeded, TimeoutExceeded
    from .optimizations import complement

    input_id, aut, name, algorithm, config, timeout, budget, bounds = args
    deadline = None if timeout is None else time.monotonic() + timeout
    try:
        result = complement(aut, algorithm, config, budget, deadline)
    except TimeoutExceeded:
        return BenchRecord(input_id, name, timeout=True)
    except BudgetExceeded as exc:
        return BenchRecord(input_id, name, error=f"budget: {exc}")
    except Exception as exc:  # recorded, the batch goes on
        return BenchRecord(input_id, name, error=f"{type(exc).__name__}: {exc}")
    verdict = None
    if bounds is not None:
        verdict = "pass" if complement_correctness_check(aut, result.automaton, *bounds) else "fail"
    return BenchRecord(input_id, name, result.stats, verdict)


def run_benchmark(
    corpus,
    configurations,
    timeout: float | None = 300.0,
    out=None,
    workers: int = 1,
    budget: int | None = None,
    check_bounds: tuple[int, int] | None = None,
) -> tuple[list[BenchRecord], dict]:
    """Complement every input under every configuration.

    corpus: iterable of (input_id, automaton). configurations: names from
    `configuration_names()`. `out` (path or text stream) receives one JSON
    line per record followed by a summary line.
    """
    from .constructions import DEFAULT_BUDGET

    budget = budget or DEFAULT_BUDGET
    tasks = []
    for input_id, aut in corpus:
        for name in configurations:
            algorithm, config = named_configuration(name)
            tasks.append((str(input_id), aut, name, algorithm, config, timeout, budget, check_bounds))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_bench_task, tasks))
    else:
        records = [_bench_task(t) for t in tasks]
    records.sort(key=lambda r: (r.input_id, list(configurations).index(r.config)))
    summary = summarize(records, list(configurations))
    if out is not None:
        _write_jsonl(out, records, summary)
    return records, summary


def _write_jsonl(out, records, summary):
    lines = [json.dumps(asdict(r), sort_keys=True) for r in records]
    lines.append(json.dumps({"summary": summary}, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if hasattr(out, "write"):
        out.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def describe(values) -> dict:
    if not values:
        return {"count": 0, "max": None, "mean": None, "median": None, "std": None}
    return {
        "count": len(values),
        "max": max(values),
        "mean": statistics.fmean(values),
        "median": statistics.median(values),
        "std": statistics.stdev(values) if len(values) > 1 else 0.0,
    }


def summarize(records, configurations) -> dict:
    """Per-configuration size statistics plus pairwise wins/losses/ties.

    A completed run beats a timed-out or failed one; two unfinished runs tie.
    """
    by_input: dict = {}
    for r in records:
        by_input.setdefault(r.input_id, {})[r.config] = r
    per_config = {}
    for name in configurations:
        rs = [inp[name] for inp in by_input.values() if name in inp]
        stats = describe([r.states for r in rs if r.states is not None])
        stats["timeouts"] = sum(r.timeout for r in rs)
        stats["errors"] = sum(r.error is not None for r in rs)
        stats["failures"] = sum(r.verdict == "fail" for r in rs)
        per_config[name] = stats
    pairs = {}
    for a_name in configurations:
        for b_name in configurations:
            if a_name == b_name:
                continue
            wins = losses = ties = 0
            for inp in by_input.values():
                a, b = inp[a_name].states, inp[b_name].states
                if a is None and b is None or a == b:
                    ties += 1
                elif b is None or (a is not None and a < b):
                    wins += 1
                else:
                    losses += 1
            pairs[f"{a_name} vs {b_name}"] = {"wins": wins, "losses": losses, "ties": ties}
    return {"configs": per_config, "pairs": pairs, "inputs": len(by_input)}
