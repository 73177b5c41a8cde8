"""Run DAGs over lasso words and their rank assignment (the ranking oracle).

Two finite presentations of the infinite run DAG of A over u.v^omega are
provided. The quotient folds every tail level onto its position modulo |v|.
The explicit one keeps exact per-level state sets until the sequence of
(level set, loop offset) pairs repeats, then closes the loop there.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .automaton import BuchiAutomaton, LassoWord, bits

OMEGA = 1 << 30  # "no finite rank"; larger than any 2n in practice


class VertexNotInDag(KeyError):
    pass


@dataclass(frozen=True)
class LassoDag:
    aut: BuchiAutomaton
    word: LassoWord
    present: tuple[int, ...]  # state mask per position
    loop_start: int  # position the last position wraps to

    @property
    def num_positions(self) -> int:
        return len(self.present)

    def symbol(self, p: int) -> int:
        return self.word.symbol_at(p)

    def next_position(self, p: int) -> int:
        return p + 1 if p + 1 < len(self.present) else self.loop_start

    def vertices(self):
        for p, mask in enumerate(self.present):
            for q in bits(mask):
                yield q, p

    def edges(self):
        for q, p in self.vertices():
            nxt = self.next_position(p)
            for d in sorted(self.aut.transitions[q][self.symbol(p)]):
                yield (q, p), (d, nxt)


def build_quotient_dag(aut: BuchiAutomaton, w: LassoWord) -> LassoDag:
    w.check(aut)
    u, v = w.stem, w.loop
    present = [0] * (len(u) + len(v))
    present[0] = aut.initial_mask
    for i, a in enumerate(u):
        if i + 1 < len(u):
            present[i + 1] = aut.post(present[i], a)
        else:
            present[len(u)] |= aut.post(present[i], a)
    # tail: least fixpoint of propagation around the loop
    base = len(u)
    changed = True
    while changed:
        changed = False
        for j, a in enumerate(v):
            src = base + j
            dst = base + (j + 1) % len(v)
            new = present[dst] | aut.post(present[src], a)
            if new != present[dst]:
                present[dst] = new
                changed = True
    return LassoDag(aut, w, tuple(present), base)


def prune_ranks(num_nodes, succ, accepting, alive, max_rank):
    """The alternating finite/endangered pruning on an explicit finite graph.

    A node is finite when it cannot reach a cycle among live nodes, and
    endangered when it cannot reach a live accepting node. Returns a list of
    ranks with OMEGA for nodes that survive every round; dead nodes get None.
    """
    alive = list(alive)
    ranks = [None if not a else OMEGA for a in alive]
    pred = [[] for _ in range(num_nodes)]
    for x in range(num_nodes):
        for y in succ[x]:
            pred[y].append(x)
    j = 0
    while j <= max_rank and any(alive):
        # finite vertices: peel off sinks until none remain
        out_deg = [0] * num_nodes
        for x in range(num_nodes):
            if alive[x]:
                out_deg[x] = sum(1 for y in succ[x] if alive[y])
        queue = deque(x for x in range(num_nodes) if alive[x] and out_deg[x] == 0)
        while queue:
            x = queue.popleft()
            alive[x] = False
            ranks[x] = j
            for p in pred[x]:
                if alive[p]:
                    out_deg[p] -= 1
                    if out_deg[p] == 0:
                        queue.append(p)
        if j + 1 > max_rank:
            break
        # endangered vertices: no live accepting vertex reachable
        reach = [False] * num_nodes
        queue = deque(x for x in range(num_nodes) if alive[x] and accepting[x])
        for x in queue:
            reach[x] = True
        while queue:
            x = queue.popleft()
            for p in pred[x]:
                if alive[p] and not reach[p]:
                    reach[p] = True
                    queue.append(p)
        for x in range(num_nodes):
            if alive[x] and not reach[x]:
                alive[x] = False
                ranks[x] = j + 1
        j += 2
    return ranks


@dataclass(frozen=True)
class RankAssignment:
    dag: LassoDag
    ranks: dict  # (state, position) -> rank or OMEGA

    def position_of(self, level: int) -> int:
        u, v = len(self.dag.word.stem), len(self.dag.word.loop)
        return level if level < u else u + (level - u) % v

    def __getitem__(self, vertex):
        return self.ranks[vertex]

    def has_omega(self) -> bool:
        return any(r == OMEGA for r in self.ranks.values())


def assign_ranks(dag: LassoDag, accepting=None) -> RankAssignment:
    aut = dag.aut
    acc_mask = aut.accepting_mask if accepting is None else _as_mask(accepting)
    n, P = aut.num_states, dag.num_positions
    succ = [[] for _ in range(n * P)]
    alive = [False] * (n * P)
    acc = [False] * (n * P)
    for q, p in dag.vertices():
        x = p * n + q
        alive[x] = True
        acc[x] = bool(acc_mask >> q & 1)
        nxt = dag.next_position(p)
        succ[x] = [nxt * n + d for d in aut.transitions[q][dag.symbol(p)]]
    ranks = prune_ranks(n * P, succ, acc, alive, 2 * n)
    return RankAssignment(dag, {(q, p): ranks[p * n + q] for q, p in dag.vertices()})


def _as_mask(states):
    if isinstance(states, int):
        return states
    m = 0
    for q in states:
        m |= 1 << q
    return m


def rank_at(assignment: RankAssignment, q: int, i: int) -> int:
    if i < 0:
        raise ValueError("level must be non-negative")
    p = assignment.position_of(i)
    try:
        return assignment.ranks[(q, p)]
    except KeyError:
        raise VertexNotInDag(f"state {q} is not present at position {p}") from None


def word_ranks(aut: BuchiAutomaton, w: LassoWord) -> RankAssignment:
    return assign_ranks(build_quotient_dag(aut, w))


@dataclass(frozen=True)
class ExplicitDag:
    """Exact level sets L_0 .. L_{end-1}; level `end` coincides with `loop_start`."""

    aut: BuchiAutomaton
    word: LassoWord
    levels: tuple[int, ...]
    loop_start: int
    ranks: dict  # (state, level) -> rank, for level < end

    @property
    def end(self) -> int:
        return len(self.levels)

    def fold(self, i: int) -> int:
        if i < self.end:
            return i
        period = self.end - self.loop_start
        return self.loop_start + (i - self.loop_start) % period

    def level(self, i: int) -> int:
        return self.levels[self.fold(i)]

    def rank(self, q: int, i: int) -> int:
        return self.ranks[(q, self.fold(i))]

    def ranking(self, i: int) -> tuple[int, ...]:
        """Level ranking f_i: oracle ranks on L_i, 0 elsewhere."""
        f = [0] * self.aut.num_states
        for q in bits(self.level(i)):
            f[q] = self.ranks[(q, self.fold(i))]
        return tuple(f)


def explicit_dag(aut: BuchiAutomaton, w: LassoWord, min_depth: int = 0) -> ExplicitDag:
    """Unroll until the level sequence provably repeats (and at least `min_depth` levels)."""
    w.check(aut)
    u, v = len(w.stem), len(w.loop)
    levels = [aut.initial_mask]
    seen = {}
    i = 0
    while True:
        if i >= u:
            key = ((i - u) % v, levels[i])
            if key in seen and i >= min_depth and (i - seen[key]) % v == 0:
                start = seen[key]
                levels.pop()
                break
            seen.setdefault(key, i)
        levels.append(aut.post(levels[i], w.symbol_at(i)))
        i += 1
    end = len(levels)
    n = aut.num_states
    succ = [[] for _ in range(n * end)]
    alive = [False] * (n * end)
    acc = [False] * (n * end)
    for lvl in range(end):
        nxt = lvl + 1 if lvl + 1 < end else start
        a = w.symbol_at(lvl)
        for q in bits(levels[lvl]):
            x = lvl * n + q
            alive[x] = True
            acc[x] = q in aut.accepting
            succ[x] = [nxt * n + d for d in aut.transitions[q][a]]
    ranks = prune_ranks(n * end, succ, acc, alive, 2 * n)
    table = {(q, lvl): ranks[lvl * n + q] for lvl in range(end) for q in bits(levels[lvl])}
    return ExplicitDag(aut, w, tuple(levels), start, table)
