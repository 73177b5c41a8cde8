"""Rank-based complementation: KV, FKV and Schewe over one exploration engine.

Macrostates are hashable tuples whose state sets are bit masks and whose
rankings are full-length tuples (rank 0 outside S). Every construction is a
lazy object exposing initial states, successors and acceptance; `materialize`
turns it into an explicit automaton by worklist exploration.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

from .automaton import BuchiAutomaton, bits
from .rankings import (
    enumerate_s_tight,
    enumerate_tight,
    format_ranking,
    is_even_on,
    is_s_tight,
    odd_mask,
    preimage,
    rank_of,
    tight_rank_cap,
)

DEFAULT_BUDGET = 1 << 20


class BudgetExceeded(RuntimeError):
    pass


class TimeoutExceeded(RuntimeError):
    pass


class Waiting(NamedTuple):
    S: int


class KvState(NamedTuple):
    """(S, O, f) of KV and of the FKV tight part."""

    S: int
    O: int
    f: tuple


class TightState(NamedTuple):
    """(S, O, f, i) of the Schewe tight part."""

    S: int
    O: int
    f: tuple
    i: int


def _below(f, S, upper) -> bool:
    return all(f[q] <= upper[q] for q in bits(S))


def _tight_on(aut, f, S, rank=None) -> bool:
    """f is S-tight (of the given rank), even on F, and zero off S."""
    if any(f[q] for q in range(aut.num_states) if not S >> q & 1):
        return False
    if not is_s_tight(f, S) or not is_even_on(f, aut.accepting_mask & S):
        return False
    return rank is None or rank_of(f) == rank


def set_label(aut: BuchiAutomaton, mask: int) -> str:
    if not mask:
        return "∅"
    return aut.set_label(mask)


def macrostate_label(aut: BuchiAutomaton, m) -> str:
    if isinstance(m, Waiting):
        return set_label(aut, m.S)
    ranking = format_ranking(m.f, m.S, aut.state_names)
    if isinstance(m, TightState):
        return f"({ranking}, {set_label(aut, m.O)}, {m.i})"
    return f"({ranking}, {set_label(aut, m.O)})"


def predecessor_bounds(aut: BuchiAutomaton, S: int, f, a: int, S_next: int) -> list[int]:
    """upper[q'] = min f(q) over q in S with q' in delta(q, a)."""
    upper = [0] * aut.num_states
    pred = aut.pred_mask[a]
    for d in bits(S_next):
        upper[d] = min(f[q] for q in bits(pred[d] & S))
    return upper


def schewe_update(aut, m: TightState, a: int, S_next: int, f_next) -> TightState:
    """Breakpoint and phase bookkeeping shared by the Schewe tight transitions."""
    if m.O == 0:
        i_next = (m.i + 2) % (rank_of(f_next) + 1)
        O_next = preimage(f_next, i_next, S_next)
    else:
        i_next = m.i
        O_next = aut.post(m.O, a) & preimage(f_next, m.i, S_next)
    return TightState(S_next, O_next, f_next, i_next)


def tight_state_ok(aut: BuchiAutomaton, m: TightState) -> bool:
    """Tight-part invariants: f is S-tight and even on F, O within S at phase i."""
    return (
        is_s_tight(m.f, m.S)
        and is_even_on(m.f, aut.accepting_mask & m.S)
        and m.i % 2 == 0
        and m.O & ~preimage(m.f, m.i, m.S) == 0
    )


class Construction:
    """Lazy complement automaton."""

    name = "construction"

    def __init__(self, aut: BuchiAutomaton):
        self.aut = aut

    def initial(self) -> Iterable:
        raise NotImplementedError

    def successors(self, m, a: int) -> Iterable:
        raise NotImplementedError

    def is_accepting(self, m) -> bool:
        raise NotImplementedError

    def is_waiting(self, m) -> bool:
        return isinstance(m, Waiting)

    def label(self, m) -> str:
        return macrostate_label(self.aut, m)

    def has_transition(self, src, a: int, dst) -> bool:
        return any(s == dst for s in self.successors(src, a))

    def successor_key(self, m, a: int):
        """Hashable key determining successors(m, a), or None when there is none."""
        return None


class KV(Construction):
    name = "kv"

    def __init__(self, aut: BuchiAutomaton):
        super().__init__(aut)
        self._cache: dict = {}

    def initial(self):
        aut = self.aut
        n, F = aut.num_states, aut.accepting_mask
        I = sorted(aut.initial)
        choices = [range(0, 2 * n + 1, 2) if F >> q & 1 else range(2 * n + 1) for q in I]
        for vals in itertools.product(*choices):
            f = [0] * n
            for q, v in zip(I, vals):
                f[q] = v
            yield KvState(aut.initial_mask, 0, tuple(f))

    def successors(self, m: KvState, a: int):
        aut = self.aut
        S_next = aut.post(m.S, a)
        upper = predecessor_bounds(aut, m.S, m.f, a, S_next)
        base = S_next if m.O == 0 else aut.post(m.O, a)
        for f, odd in self._rankings(S_next, upper):
            yield KvState(S_next, base & ~odd, f)

    def successor_key(self, m: KvState, a: int):
        S_next = self.aut.post(m.S, a)
        upper = predecessor_bounds(self.aut, m.S, m.f, a, S_next)
        base = S_next if m.O == 0 else self.aut.post(m.O, a)
        return (S_next, tuple(upper), base)

    def _rankings(self, S: int, upper):
        """All rankings of S below `upper` (even on F), with their odd sets; memoized."""
        key = (S, tuple(upper))
        got = self._cache.get(key)
        if got is None:
            n, F = self.aut.num_states, self.aut.accepting_mask
            order = bits(S)
            choices = [range(0, upper[q] + 1, 2) if F >> q & 1 else range(upper[q] + 1) for q in order]
            got = []
            for vals in itertools.product(*choices):
                f = [0] * n
                for q, v in zip(order, vals):
                    f[q] = v
                got.append((tuple(f), odd_mask(f)))
            self._cache[key] = got
        return got

    def is_accepting(self, m) -> bool:
        return m.O == 0

    def is_waiting(self, m) -> bool:
        return False

    def has_transition(self, src: KvState, a: int, dst) -> bool:
        # direct membership test, equivalent to scanning successors()
        aut = self.aut
        if not isinstance(dst, KvState) or dst.S != aut.post(src.S, a):
            return False
        if not _below(dst.f, dst.S, predecessor_bounds(aut, src.S, src.f, a, dst.S)):
            return False
        if not is_even_on(dst.f, aut.accepting_mask & dst.S) or any(dst.f[q] for q in bits(~dst.S & ((1 << aut.num_states) - 1))):
            return False
        base = dst.S if src.O == 0 else aut.post(src.O, a)
        return dst.O == base & ~odd_mask(dst.f)


class FKV(Construction):
    name = "fkv"

    def initial(self):
        return [Waiting(self.aut.initial_mask)]

    def successors(self, m, a: int):
        aut = self.aut
        n, F = aut.num_states, aut.accepting_mask
        S_next = aut.post(m.S, a)
        if isinstance(m, Waiting):
            yield Waiting(S_next)
            for f in enumerate_s_tight(S_next, F, n):
                yield KvState(S_next, 0, f)
            return
        if not S_next:
            return
        upper = predecessor_bounds(aut, m.S, m.f, a, S_next)
        base = S_next if m.O == 0 else aut.post(m.O, a)
        for f in enumerate_tight(n, S_next, F, rank_of(m.f), upper):
            yield KvState(S_next, base & ~odd_mask(f), f)

    def is_accepting(self, m) -> bool:
        return m.S == 0 if isinstance(m, Waiting) else m.O == 0

    def has_transition(self, src, a: int, dst) -> bool:
        aut = self.aut
        S_next = aut.post(src.S, a)
        if isinstance(dst, Waiting):
            return isinstance(src, Waiting) and dst.S == S_next
        if not isinstance(dst, KvState) or dst.S != S_next:
            return False
        if isinstance(src, Waiting):
            return dst.O == 0 and _tight_on(aut, dst.f, S_next, None) and rank_of(dst.f) <= tight_rank_cap(S_next, aut.accepting_mask, aut.num_states)
        if not S_next or not _tight_on(aut, dst.f, S_next, rank_of(src.f)):
            return False
        if not _below(dst.f, S_next, predecessor_bounds(aut, src.S, src.f, a, S_next)):
            return False
        base = S_next if src.O == 0 else aut.post(src.O, a)
        return dst.O == base & ~odd_mask(dst.f)


class Schewe(Construction):
    """Schewe's construction with optional hooks used by the optimizations.

    entry_gate: set of (S, a) waiting edges allowed to enter the tight part
        (None: all of them).
    entries: replaces the entry fan-out (S_next -> tight states).
    step: replaces the tight transition function.
    state_filter / transition_filter: predicates applied when a tight
        macrostate / tight transition is generated.
    lower_bounds: optional (S_next, rank) -> per-state lower bounds, None for
        no bound, or False when no ranking of that rank can pass; used to
        prune enumeration.
    """

    name = "schewe"

    def __init__(
        self,
        aut: BuchiAutomaton,
        entry_gate=None,
        entries: Callable | None = None,
        step: Callable | None = None,
        state_filter: Callable | None = None,
        transition_filter: Callable | None = None,
        lower_bounds: Callable | None = None,
    ):
        super().__init__(aut)
        self.entry_gate = entry_gate
        self._entries = entries
        self._step = step
        self.state_filter = state_filter
        self.transition_filter = transition_filter
        self.lower_bounds = lower_bounds
        self._cache: dict = {}

    def initial(self):
        return [Waiting(self.aut.initial_mask)]

    def tight_rankings(self, S: int, rank: int | None = None, upper=None):
        """S-tight rankings (all ranks up to the cap, or one rank), pruned by lower_bounds."""
        aut = self.aut
        n, F = aut.num_states, aut.accepting_mask
        ranks = [rank] if rank is not None else range(1, 2 * n, 2)
        cap = tight_rank_cap(S, F, n)
        for r in ranks:
            if r > cap:
                break
            key = (S, r, tuple(upper) if upper is not None else None)
            got = self._cache.get(key)
            if got is None:
                lower = None
                if self.lower_bounds is not None:
                    lower = self.lower_bounds(S, r)
                got = [] if lower is False else enumerate_tight(n, S, F, r, upper, lower)
                self._cache[key] = got
            yield from got

    def entry_states(self, S_next: int):
        if self._entries is not None:
            return self._entries(S_next)
        out = []
        for f in self.tight_rankings(S_next):
            m = TightState(S_next, 0, f, 0)
            if self.state_filter is None or self.state_filter(m):
                out.append(m)
        return out

    def tight_step(self, m: TightState, a: int):
        if self._step is not None:
            return self._step(m, a)
        aut = self.aut
        S_next = aut.post(m.S, a)
        if not S_next:
            return []
        upper = predecessor_bounds(aut, m.S, m.f, a, S_next)
        out = []
        for f in self.tight_rankings(S_next, rank_of(m.f), upper):
            dst = schewe_update(aut, m, a, S_next, f)
            if self.state_filter is not None and not self.state_filter(dst):
                continue
            if self.transition_filter is not None and not self.transition_filter(m, a, dst):
                continue
            out.append(dst)
        return out

    def successors(self, m, a: int):
        if isinstance(m, Waiting):
            S_next = self.aut.post(m.S, a)
            out = [Waiting(S_next)]
            if self.entry_gate is None or (m.S, a) in self.entry_gate:
                out.extend(self.entry_states(S_next))
            return out
        return self.tight_step(m, a)

    def is_accepting(self, m) -> bool:
        return m.S == 0 if isinstance(m, Waiting) else m.O == 0

    def _accepts_ranking(self, S: int, f) -> bool:
        if rank_of(f) > tight_rank_cap(S, self.aut.accepting_mask, self.aut.num_states):
            return False
        if self.lower_bounds is None:
            return True
        lower = self.lower_bounds(S, rank_of(f))
        return lower is not False and (lower is None or all(f[q] >= lower[q] for q in bits(S)))

    def has_transition(self, src, a: int, dst) -> bool:
        # direct membership test, equivalent to scanning successors()
        aut = self.aut
        S_next = aut.post(src.S, a)
        if dst.S != S_next:
            return False
        if isinstance(dst, Waiting):
            return isinstance(src, Waiting)
        if not isinstance(dst, TightState):
            return False
        if isinstance(src, Waiting):
            if self.entry_gate is not None and (src.S, a) not in self.entry_gate:
                return False
            if self._entries is not None:
                return dst in self._entries(S_next)
            if dst.O or dst.i or not _tight_on(aut, dst.f, S_next) or not self._accepts_ranking(S_next, dst.f):
                return False
            return self.state_filter is None or self.state_filter(dst)
        if self._step is not None:
            return dst in self._step(src, a)
        if not S_next or not _tight_on(aut, dst.f, S_next, rank_of(src.f)):
            return False
        if not _below(dst.f, S_next, predecessor_bounds(aut, src.S, src.f, a, S_next)):
            return False
        if not self._accepts_ranking(S_next, dst.f):
            return False
        if dst != schewe_update(aut, src, a, S_next, dst.f):
            return False
        if self.state_filter is not None and not self.state_filter(dst):
            return False
        return self.transition_filter is None or self.transition_filter(src, a, dst)


@dataclass
class ComplementResult:
    automaton: BuchiAutomaton
    macrostate_labels: dict
    macrostates: list
    stats: dict = field(default_factory=dict)

    def index(self):
        return {m: k for k, m in enumerate(self.macrostates)}


class BackoffTriggered(Exception):
    pass


def materialize(
    con: Construction,
    budget: int = DEFAULT_BUDGET,
    deadline: float | None = None,
    on_entries: Callable | None = None,
    algorithm: str | None = None,
    opts=(),
) -> ComplementResult:
    """Explore the reachable part: waiting states first, then the tight part.

    `on_entries(entry_states)` runs once the waiting part is done; returning
    True aborts with BackoffTriggered.
    """
    started = time.perf_counter()
    aut = con.aut
    k = len(aut.alphabet)
    ids: dict = {}
    states: list = []
    rows: list = []
    waiting_queue: list = []
    tight_queue: list = []
    entry_set: set = set()

    def add(m):
        got = ids.get(m)
        if got is not None:
            return got
        if len(states) >= budget:
            raise BudgetExceeded(f"more than {budget} macrostates")
        if deadline is not None and len(states) % 256 == 0 and time.monotonic() > deadline:
            raise TimeoutExceeded("construction timed out")
        if isinstance(m, TightState):
            assert tight_state_ok(aut, m), m
        got = len(states)
        ids[m] = got
        states.append(m)
        rows.append([frozenset()] * k)
        (waiting_queue if con.is_waiting(m) else tight_queue).append(got)
        return got

    initial = [add(m) for m in con.initial()]

    shared: dict = {}  # successor key -> frozenset of target ids

    def expand(queue, from_waiting):
        pos = 0
        while pos < len(queue):
            src = queue[pos]
            pos += 1
            m = states[src]
            for a in range(k):
                key = None if from_waiting else con.successor_key(m, a)
                if key is not None and key in shared:
                    rows[src][a] = shared[key]
                    continue
                targets = set()
                for dst in con.successors(m, a):
                    targets.add(add(dst))
                    if from_waiting and not con.is_waiting(dst):
                        entry_set.add(dst)
                rows[src][a] = targets = frozenset(targets)
                if key is not None:
                    shared[key] = targets
        queue.clear()

    expand(waiting_queue, True)
    backoff_fired = False
    if on_entries is not None and on_entries(entry_set):
        raise BackoffTriggered()
    expand(tight_queue, False)

    accepting = frozenset(x for x, m in enumerate(states) if con.is_accepting(m))
    result_aut = BuchiAutomaton(
        len(states),
        aut.alphabet,
        tuple(tuple(row) for row in rows),
        frozenset(initial),
        accepting,
    )
    labels = {x: con.label(m) for x, m in enumerate(states)}
    waiting = sum(1 for m in states if con.is_waiting(m))
    max_rank = max((rank_of(m.f) for m in states if not con.is_waiting(m)), default=0)
    stats = {
        "algorithm": algorithm or con.name,
        "opts": list(opts),
        "states_waiting": waiting,
        "states_tight": len(states) - waiting,
        "transitions": result_aut.num_transitions(),
        "max_rank": max_rank,
        "backoff_fired": backoff_fired,
        "wall_ms": (time.perf_counter() - started) * 1000.0,
    }
    return ComplementResult(result_aut, labels, states, stats)


def complement_kv(aut: BuchiAutomaton, budget: int = DEFAULT_BUDGET, deadline=None) -> ComplementResult:
    return materialize(KV(aut), budget, deadline)


def complement_fkv(aut: BuchiAutomaton, budget: int = DEFAULT_BUDGET, deadline=None) -> ComplementResult:
    return materialize(FKV(aut), budget, deadline)


def complement_schewe(aut: BuchiAutomaton, budget: int = DEFAULT_BUDGET, deadline=None) -> ComplementResult:
    return materialize(Schewe(aut), budget, deadline)
