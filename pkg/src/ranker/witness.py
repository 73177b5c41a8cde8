"""Complement runs read off the run DAG of a rejected lasso word.

For w outside L(A) every vertex of the run DAG gets a finite rank. Using
those ranks as the level rankings gives a run of the complement automaton
that is as low as possible; these helpers build that run for KV and for the
waiting/tight constructions and check it transition by transition against a
construction, without materializing the construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .automaton import BuchiAutomaton, LassoWord
from .constructions import Construction, KvState, TightState, Waiting, schewe_update
from .rankings import is_even_on, is_s_tight, odd_mask, rank_of
from .rundag import OMEGA, ExplicitDag, explicit_dag


@dataclass
class WitnessRun:
    """Macrostates m_0 .. m_{k-1}; m_j reads symbols[j]; m_{k-1} moves back to m_loop."""

    states: list
    symbols: list
    loop: int
    entry: int | None = None  # index of the first tight macrostate

    def transitions(self):
        k = len(self.states)
        for j in range(k):
            yield self.states[j], self.symbols[j], self.states[j + 1 if j + 1 < k else self.loop]

    @property
    def entry_state(self):
        return None if self.entry is None else self.states[self.entry]


def check_run(con: Construction, run: WitnessRun) -> bool:
    """Starts in an initial state, every step is a transition, and the loop visits acceptance."""
    if run.states[0] not in set(con.initial()):
        return False
    if not all(con.has_transition(src, a, dst) for src, a, dst in run.transitions()):
        return False
    return any(con.is_accepting(m) for m in run.states[run.loop:])


class WordAccepted(ValueError):
    pass


def rejected_dag(aut: BuchiAutomaton, w: LassoWord) -> ExplicitDag:
    dag = explicit_dag(aut, w)
    if any(r == OMEGA for r in dag.ranks.values()):
        raise WordAccepted(f"{w.render(aut)} is accepted, no complement run exists")
    return dag


def _close(dag: ExplicitDag, w: LassoWord, start: int, first, step, prefix, symbols):
    """Follow `step` from level `start` until (folded level, macrostate) repeats."""
    states = list(prefix)
    symbols = list(symbols)
    entry = len(states)
    seen = {}
    i, m = start, first
    while (dag.fold(i), m) not in seen:
        seen[(dag.fold(i), m)] = len(states)
        states.append(m)
        a = w.symbol_at(i)
        symbols.append(a)
        m = step(m, a, i + 1)
        i += 1
    return WitnessRun(states, symbols, seen[(dag.fold(i), m)], entry)


def kv_witness(aut: BuchiAutomaton, w: LassoWord) -> WitnessRun:
    """KV run whose rankings are the oracle ranks from level 0 on."""
    dag = rejected_dag(aut, w)

    def step(m, a, i):
        S = dag.level(i)
        f = dag.ranking(i)
        base = S if m.O == 0 else aut.post(m.O, a)
        return KvState(S, base & ~odd_mask(f), f)

    return _close(dag, w, 0, KvState(dag.level(0), 0, dag.ranking(0)), step, [], [])


def tight_level(aut: BuchiAutomaton, dag: ExplicitDag) -> int:
    """First level from which every level ranking is tight with the same rank."""
    loop_levels = range(dag.loop_start, dag.end)
    final = {rank_of(dag.ranking(i)) for i in loop_levels}
    if len(final) != 1:
        raise AssertionError("rank of the level rankings is not constant on the loop")
    (r,) = final

    def good(i):
        f, S = dag.ranking(i), dag.level(i)
        return rank_of(f) == r and is_s_tight(f, S) and is_even_on(f, aut.accepting_mask & S)

    if not all(good(i) for i in loop_levels):
        raise AssertionError("level rankings on the loop are not tight")
    start = dag.loop_start
    while start > 0 and good(start - 1):
        start -= 1
    return start


def tight_witness(aut: BuchiAutomaton, w: LassoWord, kind: str = "schewe", gate=None) -> WitnessRun:
    """Waiting prefix, then oracle rankings from the first tight level.

    kind is "schewe" (breakpoint with phase) or "fkv" (KV-style breakpoint).
    With a Delay gate the entry is postponed to the first gated waiting edge.
    """
    dag = rejected_dag(aut, w)
    if not dag.level(dag.loop_start):
        # all runs die: the complement run stays in the waiting part and loops on the empty set
        run = _close(dag, w, 0, Waiting(dag.level(0)), lambda m, a, i: Waiting(dag.level(i)), [], [])
        run.entry = None
        return run
    entry = max(1, tight_level(aut, dag))
    if gate is not None:
        limit = entry + dag.end + len(w.loop)
        while (dag.level(entry - 1), w.symbol_at(entry - 1)) not in gate:
            entry += 1
            if entry > limit:
                raise AssertionError("no gated waiting edge on the loop")
    prefix = [Waiting(dag.level(i)) for i in range(entry)]
    symbols = [w.symbol_at(i) for i in range(entry)]
    S0, f0 = dag.level(entry), dag.ranking(entry)
    if kind == "schewe":
        first = TightState(S0, 0, f0, 0)

        def step(m, a, i):
            return schewe_update(aut, m, a, dag.level(i), dag.ranking(i))

    elif kind == "fkv":
        first = KvState(S0, 0, f0)

        def step(m, a, i):
            S, f = dag.level(i), dag.ranking(i)
            base = S if m.O == 0 else aut.post(m.O, a)
            return KvState(S, base & ~odd_mask(f), f)

    else:
        raise ValueError(f"unknown kind {kind!r}")
    return _close(dag, w, entry, first, step, prefix, symbols)
