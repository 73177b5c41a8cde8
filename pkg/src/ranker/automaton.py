"""Büchi automata over explicit alphabets, plus lasso-word decision procedures."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

from .graphs import is_nontrivial, reachable, reverse, tarjan_scc


def bits(mask: int) -> list[int]:
    """Indices of the set bits of `mask`, ascending."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_of(states: Iterable[int]) -> int:
    m = 0
    for q in states:
        m |= 1 << q
    return m


@dataclass(frozen=True)
class BuchiAutomaton:
    """A = (Q, delta, I, F) with Q = range(num_states).

    `transitions[q][a]` is the successor set of state q under symbol index a;
    `alphabet[a]` is the printable name of symbol a.
    """

    num_states: int
    alphabet: tuple[str, ...]
    transitions: tuple[tuple[frozenset[int], ...], ...]
    initial: frozenset[int]
    accepting: frozenset[int]
    state_names: tuple[str, ...] | None = None

    def __post_init__(self):
        n = self.num_states
        if not self.alphabet:
            raise ValueError("alphabet must be non-empty")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate symbol names")
        if len(self.transitions) != n:
            raise ValueError("transition table must have one row per state")
        checked = set()  # complements share target sets between rows
        for row in self.transitions:
            if len(row) != len(self.alphabet):
                raise ValueError("transition row width must equal alphabet size")
            for succ in row:
                if id(succ) in checked:
                    continue
                checked.add(id(succ))
                if any(not 0 <= d < n for d in succ):
                    raise ValueError("transition endpoint out of range")
        if any(not 0 <= q < n for q in self.initial | self.accepting):
            raise ValueError("initial/accepting state out of range")
        if self.state_names is not None and len(self.state_names) != n:
            raise ValueError("state_names length must equal num_states")

    @classmethod
    def from_edges(cls, num_states, alphabet, edges, initial, accepting, state_names=None):
        """Build from (src, symbol, dst) triples; symbol may be an index or a name."""
        alphabet = tuple(alphabet)
        lookup = {name: i for i, name in enumerate(alphabet)}
        table = [[set() for _ in alphabet] for _ in range(num_states)]
        for src, sym, dst in edges:
            a = lookup[sym] if isinstance(sym, str) else sym
            table[src][a].add(dst)
        return cls(
            num_states,
            alphabet,
            tuple(tuple(frozenset(s) for s in row) for row in table),
            frozenset(initial),
            frozenset(accepting),
            tuple(state_names) if state_names is not None else None,
        )

    @property
    def n(self) -> int:
        return self.num_states

    def name(self, q: int) -> str:
        return self.state_names[q] if self.state_names is not None else str(q)

    def state_index(self, name: str) -> int:
        names = [self.name(q) for q in range(self.num_states)]
        return names.index(name)

    def symbol_index(self, name: str) -> int:
        try:
            return self.alphabet.index(name)
        except ValueError:
            raise ValueError(f"symbol {name!r} not in alphabet") from None

    def edges(self):
        for q, row in enumerate(self.transitions):
            for a, succ in enumerate(row):
                for d in sorted(succ):
                    yield q, a, d

    def num_transitions(self) -> int:
        return sum(len(s) for row in self.transitions for s in row)

    # bit-set views used by the constructions
    @cached_property
    def succ_mask(self) -> tuple[tuple[int, ...], ...]:
        memo: dict = {}

        def mask(s):
            got = memo.get(id(s))
            if got is None:
                got = memo[id(s)] = mask_of(s)
            return got

        return tuple(tuple(mask(s) for s in row) for row in self.transitions)

    @cached_property
    def pred_mask(self) -> tuple[tuple[int, ...], ...]:
        """pred_mask[a][q'] = set of q with q' in delta(q, a)."""
        table = [[0] * self.num_states for _ in self.alphabet]
        for q, a, d in self.edges():
            table[a][d] |= 1 << q
        return tuple(tuple(row) for row in table)

    @cached_property
    def accepting_mask(self) -> int:
        return mask_of(self.accepting)

    @cached_property
    def initial_mask(self) -> int:
        return mask_of(self.initial)

    def post(self, states: int, a: int) -> int:
        """delta(S, a) on bit sets."""
        out = 0
        row = self.succ_mask
        while states:
            low = states & -states
            out |= row[low.bit_length() - 1][a]
            states ^= low
        return out

    def set_label(self, states: int) -> str:
        return "{" + ",".join(self.name(q) for q in bits(states)) + "}"


class LassoWord(NamedTuple):
    """The ultimately periodic word stem . loop^omega, as symbol indices."""

    stem: tuple[int, ...]
    loop: tuple[int, ...]

    def check(self, aut: BuchiAutomaton | None = None):
        if not self.loop:
            raise ValueError("lasso loop must be non-empty")
        if aut is not None:
            k = len(aut.alphabet)
            if any(not 0 <= a < k for a in self.stem + self.loop):
                raise ValueError("symbol out of alphabet")
        return self

    def symbol_at(self, i: int) -> int:
        u, v = self.stem, self.loop
        if i < len(u):
            return u[i]
        return v[(i - len(u)) % len(v)]

    def render(self, aut: BuchiAutomaton) -> str:
        stem = " ".join(aut.alphabet[a] for a in self.stem)
        loop = " ".join(aut.alphabet[a] for a in self.loop)
        return f"({stem})({loop})^w"


def lasso(aut: BuchiAutomaton, stem: Sequence[str] | str, loop: Sequence[str] | str) -> LassoWord:
    """Build a lasso from symbol names; a plain string is split per character."""
    w = LassoWord(
        tuple(aut.symbol_index(s) for s in stem),
        tuple(aut.symbol_index(s) for s in loop),
    )
    return w.check(aut)


def all_lassos(num_symbols: int, stem_max: int, loop_max: int):
    """Every (u, v) with |u| <= stem_max and 1 <= |v| <= loop_max."""
    from itertools import product

    for ls in range(stem_max + 1):
        for stem in product(range(num_symbols), repeat=ls):
            for lv in range(1, loop_max + 1):
                for loop in product(range(num_symbols), repeat=lv):
                    yield LassoWord(stem, loop)


def make_complete(aut: BuchiAutomaton) -> BuchiAutomaton:
    missing = any(not s for row in aut.transitions for s in row)
    if not missing:
        return aut
    sink = aut.num_states
    k = len(aut.alphabet)
    rows = [tuple(s if s else frozenset({sink}) for s in row) for row in aut.transitions]
    rows.append(tuple(frozenset({sink}) for _ in range(k)))
    names = None
    if aut.state_names is not None:
        taken = set(aut.state_names)
        sink_name = "sink"
        while sink_name in taken:
            sink_name += "_"
        names = aut.state_names + (sink_name,)
    return BuchiAutomaton(sink + 1, aut.alphabet, tuple(rows), aut.initial, aut.accepting, names)


def _succ_lists(aut: BuchiAutomaton) -> list[list[int]]:
    return [sorted(set().union(*row)) for row in aut.transitions]


def accepting_cycle_states(aut: BuchiAutomaton) -> set[int]:
    """States lying on a cycle through an accepting state."""
    succ = _succ_lists(aut)
    out = set()
    for comp in tarjan_scc(aut.num_states, succ):
        if is_nontrivial(comp, succ) and any(q in aut.accepting for q in comp):
            out.update(comp)
    return out


def restrict(aut: BuchiAutomaton, keep: Iterable[int]) -> BuchiAutomaton:
    """Sub-automaton on `keep`, renumbered in ascending order."""
    keep = sorted(set(keep))
    new = {q: i for i, q in enumerate(keep)}
    rows = tuple(
        tuple(frozenset(new[d] for d in s if d in new) for s in aut.transitions[q]) for q in keep
    )
    names = tuple(aut.state_names[q] for q in keep) if aut.state_names is not None else None
    if names is None and len(keep) != aut.num_states:
        names = tuple(str(q) for q in keep)
    return BuchiAutomaton(
        len(keep),
        aut.alphabet,
        rows,
        frozenset(new[q] for q in aut.initial if q in new),
        frozenset(new[q] for q in aut.accepting if q in new),
        names,
    )


def trim(aut: BuchiAutomaton, productive: bool = False) -> BuchiAutomaton:
    succ = _succ_lists(aut)
    seen = reachable(aut.num_states, succ, aut.initial)
    keep = {q for q in range(aut.num_states) if seen[q]}
    if productive:
        core = accepting_cycle_states(aut) & keep
        back = reachable(aut.num_states, reverse(aut.num_states, succ), core)
        keep = {q for q in keep if back[q]}
    return restrict(aut, keep)


def run_subset(aut: BuchiAutomaton, start: int, word: Sequence[int]) -> int:
    states = start
    for a in word:
        states = aut.post(states, a)
    return states


def loop_accepting_states(aut: BuchiAutomaton, loop: Sequence[int]) -> int:
    """Bit set of states q from which loop^omega has an accepting run."""
    n, m = aut.num_states, len(loop)
    # product node (q, j) is numbered j * n + q
    succ = []
    for j in range(m):
        a, nxt = loop[j], ((j + 1) % m) * n
        for q in range(n):
            succ.append([nxt + d for d in aut.transitions[q][a]])
    total = n * m
    good = []
    for comp in tarjan_scc(total, succ):
        if is_nontrivial(comp, succ) and any((v % n) in aut.accepting for v in comp):
            good.extend(comp)
    if not good:
        return 0
    back = reachable(total, reverse(total, succ), good)
    return mask_of(q for q in range(n) if back[q])


def lasso_membership(aut: BuchiAutomaton, w: LassoWord) -> bool:
    w.check(aut)
    at_loop = run_subset(aut, aut.initial_mask, w.stem)
    return bool(at_loop & loop_accepting_states(aut, w.loop))


class MembershipOracle:
    """Memoized lasso membership for one automaton over many words.

    Loop analysis runs on sparse matrices (scipy's strongly connected
    components), which keeps large complement automata tractable.
    """

    def __init__(self, aut: BuchiAutomaton):
        import numpy as np
        from scipy import sparse

        self.aut = aut
        n = aut.num_states
        self._np, self._sparse = np, sparse
        self._mats = []
        memo: dict = {}
        for a in range(len(aut.alphabet)):
            targets = []
            for q in range(n):
                succ = aut.transitions[q][a]
                arr = memo.get(id(succ))
                if arr is None:
                    arr = memo[id(succ)] = np.fromiter(sorted(succ), dtype=np.int64, count=len(succ))
                targets.append(arr)
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum([len(t) for t in targets], out=indptr[1:])
            indices = np.concatenate(targets) if targets else np.zeros(0, dtype=np.int64)
            data = np.ones(len(indices), dtype=np.int8)
            self._mats.append(sparse.csr_matrix((data, indices, indptr), shape=(n, n)))
        self._acc = np.zeros(n, dtype=bool)
        self._acc[list(aut.accepting)] = True
        self._loops: dict = {}
        init = np.zeros(n, dtype=bool)
        init[list(aut.initial)] = True
        self._stems: dict = {(): init}

    def _stem(self, stem):
        got = self._stems.get(stem)
        if got is None:
            prev = self._stem(stem[:-1])
            got = (self._mats[stem[-1]].T @ prev.astype(self._np.int32)) > 0
            self._stems[stem] = got
        return got

    def _loop(self, loop):
        np, sparse = self._np, self._sparse
        from scipy.sparse.csgraph import breadth_first_order, connected_components

        n, m = self.aut.num_states, len(loop)
        size = n * m
        if size == 0:
            return np.zeros(n, dtype=bool)
        if m == 1:
            prod = self._mats[loop[0]]
        else:
            blocks = [[None] * m for _ in range(m)]
            for j, a in enumerate(loop):
                blocks[j][(j + 1) % m] = self._mats[a]
            prod = sparse.bmat(blocks, format="csr")
        _, labels = connected_components(prod, directed=True, connection="strong")
        cyclic = np.bincount(labels)[labels] > 1
        cyclic |= prod.diagonal() > 0
        hot = cyclic & np.tile(self._acc, m)
        good = np.isin(labels, labels[hot])
        if not good.any():
            return np.zeros(n, dtype=bool)
        # backward search from all good nodes at once through an extra root
        targets = np.flatnonzero(good)
        root = sparse.csr_matrix(
            (np.ones(len(targets), dtype=np.int8), (np.zeros(len(targets), dtype=np.int64), targets)),
            shape=(1, size + 1),
        )
        rev = sparse.hstack([prod.T, sparse.csr_matrix((size, 1), dtype=np.int8)])
        order = breadth_first_order(sparse.vstack([rev, root]).tocsr(), size, return_predecessors=False)
        hit = np.zeros(size + 1, dtype=bool)
        hit[order] = True
        return hit[:n]

    def loop_states(self, loop):
        """States with an accepting run on loop^omega.

        Only the least rotation of the primitive root is analysed on the
        product graph; other loops reuse it through a few pre-image steps.
        """
        got = self._loops.get(loop)
        if got is not None:
            return got
        root = primitive_root(loop)
        k, rot = least_rotation(root)
        if rot == loop:
            got = self._loop(rot)
        else:
            # root = rot[k:] + rot[:k], so root^omega = rot[k:] . rot^omega
            got = self.loop_states(rot)
            for a in reversed(rot[k:]):
                got = (self._mats[a] @ got.astype(self._np.int32)) > 0
        self._loops[loop] = got
        return got

    def __call__(self, w: LassoWord) -> bool:
        return bool((self._stem(w.stem) & self.loop_states(w.loop)).any())


def primitive_root(word: tuple) -> tuple:
    m = len(word)
    for p in range(1, m + 1):
        if m % p == 0 and word[:p] * (m // p) == word:
            return word[:p]
    return word


def least_rotation(word: tuple) -> tuple[int, tuple]:
    """(k, r) with r the least rotation and word == r[k:] + r[:k]."""
    m = len(word)
    best = min(word[j:] + word[:j] for j in range(m))
    for k in range(m):
        if best[k:] + best[:k] == word:
            return k, best
    raise AssertionError("unreachable")


def _bfs_word(aut: BuchiAutomaton, sources, target: int):
    """Shortest symbol sequence from a source state to `target` (sources at distance 0)."""
    parent = {s: None for s in sources}
    queue = deque(sources)
    while queue:
        q = queue.popleft()
        if q == target:
            word = []
            while parent[q] is not None:
                q, a = parent[q]
                word.append(a)
            return word[::-1]
        for a, succ in enumerate(aut.transitions[q]):
            for d in sorted(succ):
                if d not in parent:
                    parent[d] = (q, a)
                    queue.append(d)
    return None


def find_accepting_lasso(aut: BuchiAutomaton) -> LassoWord | None:
    """An accepted lasso word, or None when the language is empty."""
    succ = _succ_lists(aut)
    seen = reachable(aut.num_states, succ, aut.initial)
    for q in sorted(accepting_cycle_states(aut) & aut.accepting):
        if not seen[q]:
            continue
        stem = _bfs_word(aut, sorted(aut.initial), q)
        # go around once: first step out of q, then back
        best = None
        for a, targets in enumerate(aut.transitions[q]):
            for d in sorted(targets):
                back = _bfs_word(aut, [d], q)
                if back is not None and (best is None or len(back) + 1 < len(best)):
                    best = [a] + back
        return LassoWord(tuple(stem), tuple(best))
    return None


def is_empty(aut: BuchiAutomaton) -> bool:
    return find_accepting_lasso(aut) is None
