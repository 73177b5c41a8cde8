"""State-space pruning on top of Schewe's construction.

Delay postpones entering the tight part until a waiting cycle closes,
SuccRank bounds ranks by what the subset automaton can still reach, RankSim
and PurgeDi discard rankings contradicting simulation, RankRestr drops
transitions losing an odd rank, and MaxRank keeps only maximal rankings.
BackOff hands explosive inputs to a surrogate procedure.
"""

from __future__ import annotations

import subprocess
import time
from collections import deque
from dataclasses import dataclass

from .automaton import BuchiAutomaton, bits
from .constructions import (
    DEFAULT_BUDGET,
    BackoffTriggered,
    ComplementResult,
    Schewe,
    TightState,
    materialize,
    predecessor_bounds,
    schewe_update,
)
from .rankings import enumerate_tight, is_s_tight, rank_of, ranking_le, tight_rank_cap
from .simulations import Relation, direct_simulation, odd_rank_relation, purge_di_ok, rank_sim_ok


def popcount(m: int) -> int:
    return bin(m).count("1")


class ReachAnalysis:
    """Reachability in the subset automaton, computed on demand.

    For each subset R met so far we keep the largest and smallest |R' \\ F|
    over subsets R' lying on a cycle reachable from R.
    """

    def __init__(self, aut: BuchiAutomaton):
        self.aut = aut
        self._info: dict[int, tuple[int, int]] = {}

    def _succ(self, R):
        aut = self.aut
        return sorted({aut.post(R, a) for a in range(len(aut.alphabet))})

    def _explore(self, root):
        info, F = self._info, self.aut.accepting_mask
        index, low = {}, {}
        stack, on_stack = [], set()
        counter = 0
        index[root] = low[root] = counter
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(self._succ(root)))]
        while work:
            v, it = work[-1]
            pushed = False
            for w in it:
                if w in info:
                    continue
                if w not in index:
                    counter += 1
                    index[w] = low[w] = counter
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(self._succ(w))))
                    pushed = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if pushed:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] != index[v]:
                continue
            comp = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.append(w)
                if w == v:
                    break
            members = set(comp)
            cyclic = len(comp) > 1 or v in self._succ(v)
            hi, lo = -1, None
            if cyclic:
                sizes = [popcount(R & ~F) for R in comp]
                hi, lo = max(sizes), min(sizes)
            for R in comp:
                for w in self._succ(R):
                    if w in members:
                        continue
                    whi, wlo = info[w]
                    hi = max(hi, whi)
                    lo = wlo if lo is None else min(lo, wlo)
            for R in comp:
                info[R] = (hi, lo)

    def _get(self, S):
        if S not in self._info:
            self._explore(S)
        return self._info[S]

    def maxinfreach(self, S: int) -> int:
        return self._get(S)[0]

    def mininfreach(self, S: int) -> int:
        return self._get(S)[1]

    def infreach(self, S: int) -> set[int]:
        """Subsets on cycles reachable from S (recomputed, for inspection and tests)."""
        seen, order = {S}, [S]
        for R in order:
            for w in self._succ(R):
                if w not in seen:
                    seen.add(w)
                    order.append(w)
        out = set()
        for R in order:
            # R lies on a cycle iff R is reachable from one of its successors
            frontier, visited = list(self._succ(R)), set()
            while frontier:
                x = frontier.pop()
                if x == R:
                    out.add(R)
                    break
                if x in visited:
                    continue
                visited.add(x)
                frontier.extend(self._succ(x))
        return out


def reach_analysis(aut: BuchiAutomaton) -> ReachAnalysis:
    return ReachAnalysis(aut)


def cond_coarse(S: int, f, ra: ReachAnalysis) -> bool:
    return rank_of(f) <= 2 * ra.maxinfreach(S) - 1


def cond_fine(S: int, f, ra: ReachAnalysis) -> bool:
    if not S:
        return True
    top = ra.maxinfreach(S)
    r = rank_of(f)
    return all(r <= f[q] + 2 * (top - ra.mininfreach(1 << q)) for q in bits(S))


def succ_rank_filter(S: int, f, ra: ReachAnalysis) -> bool:
    return cond_coarse(S, f, ra) and cond_fine(S, f, ra)


def succ_rank_lower_bounds(S: int, rank: int, ra: ReachAnalysis):
    """Per-state lower bounds equivalent to the SuccRank test at a fixed rank.

    Returns False when the coarse condition already rules the rank out.
    """
    top = ra.maxinfreach(S)
    if rank > 2 * top - 1:
        return False
    lower = [0] * ra.aut.num_states
    for q in bits(S):
        lower[q] = rank - 2 * (top - ra.mininfreach(1 << q))
    return lower


def rank_restr_filter(src: TightState, a: int, dst: TightState, aut: BuchiAutomaton) -> bool:
    """Every odd-ranked state keeps a successor with the same rank."""
    f, g = src.f, dst.f
    for q in bits(src.S):
        if f[q] & 1 and not any(g[d] == f[q] for d in aut.transitions[q][a]):
            return False
    return True


def delay_entry_edges(aut: BuchiAutomaton) -> tuple[set, list]:
    """Waiting edges (R, a) that close a cycle when generated in FIFO order.

    An edge R -a-> T closes a cycle when T is already known and R is
    reachable from T among the edges generated so far (T == R included).
    Returns the set of such edges and the waiting states in discovery order.
    """
    start = aut.initial_mask
    known = {start}
    order = [start]
    graph: dict[int, set] = {start: set()}
    gated = set()
    queue = deque([start])

    def reaches(src, dst):
        if src == dst:
            return True
        seen, todo = {src}, [src]
        while todo:
            x = todo.pop()
            for y in graph[x]:
                if y == dst:
                    return True
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        return False

    while queue:
        R = queue.popleft()
        for a in range(len(aut.alphabet)):
            T = aut.post(R, a)
            if T in known and reaches(T, R):
                gated.add((R, a))
            graph[R].add(T)
            if T not in known:
                known.add(T)
                order.append(T)
                graph[T] = set()
                queue.append(T)
    return gated, order


def maxrank_successor(m: TightState, a: int, aut: BuchiAutomaton) -> tuple:
    """Largest ranking any successor of m over a may carry."""
    S_next = aut.post(m.S, a)
    g = list(predecessor_bounds(aut, m.S, m.f, a, S_next))
    F = aut.accepting_mask
    for q in bits(S_next):
        if g[q] & 1 and F >> q & 1:
            g[q] -= 1
    return tuple(g)


def eta3(m: TightState, a: int, aut: BuchiAutomaton) -> TightState | None:
    S_next = aut.post(m.S, a)
    if not S_next:
        return None
    g = maxrank_successor(m, a, aut)
    if rank_of(g) != rank_of(m.f) or not is_s_tight(g, S_next):
        return None
    return schewe_update(aut, m, a, S_next, g)


def eta4(m: TightState, a: int, aut: BuchiAutomaton, strict_decrement: bool = False) -> TightState | None:
    base = eta3(m, a, aut)
    if base is None or base.i == 0:
        return None
    S_next, P, h, i = base
    F = aut.accepting_mask
    lowered = P if strict_decrement else P & ~F
    f = list(h)
    for q in bits(lowered):
        f[q] -= 1
    if strict_decrement and any(f[q] & 1 for q in bits(P & F)):
        return None
    O = 0
    for q in bits(P):
        if f[q] == i:
            O |= 1 << q
    return TightState(S_next, O, tuple(f), i)


def delay(aut: BuchiAutomaton, construction: Schewe | None = None, budget: int = DEFAULT_BUDGET, deadline=None):
    """Materialize `construction` (plain Schewe by default) with Delay's entry gating."""
    con = construction if construction is not None else Schewe(aut)
    con.entry_gate = delay_entry_edges(aut)[0]
    return materialize(con, budget, deadline, None, con.name, ["delay"])


def maximal_rankings(candidates):
    """Pointwise-maximal elements of a collection of rankings, compared within each rank.

    A ranking of lower rank is never replaced by one of higher rank: the tight
    part cannot lower the rank later, so the lower-rank run would be lost.
    """
    ordered = sorted(set(candidates), key=lambda f: -sum(f))
    tops = []
    for f in ordered:
        r = rank_of(f)
        if not any(rank_of(g) == r and ranking_le(f, g) for g in tops):
            tops.append(f)
    return tops


@dataclass(frozen=True)
class BackoffPolicy:
    thresholds: tuple = ((9, 5), (8, 6))
    surrogate: str = "schewe-plain"  # or "external-command"
    command: str | None = None
    check_filtered: bool = True

    def __post_init__(self):
        if not self.thresholds:
            raise ValueError("back-off needs at least one threshold")
        if self.surrogate not in ("schewe-plain", "external-command"):
            raise ValueError(f"unknown surrogate {self.surrogate!r}")
        if self.surrogate == "external-command" and not self.command:
            raise ValueError("external-command surrogate needs a command")

    @classmethod
    def parse(cls, text: str, **kw):
        pairs = []
        for item in text.split(","):
            s, r = item.split(":")
            pairs.append((int(s), int(r)))
        return cls(tuple(pairs), **kw)


def backoff_check(entries, policy: BackoffPolicy) -> bool:
    """True when some entry macrostate is large and high-ranked for some threshold."""
    for m in entries:
        size, r = popcount(m.S), rank_of(m.f)
        if any(size >= s and r >= rk for s, rk in policy.thresholds):
            return True
    return False


OPT_NAMES = ("delay", "succrank", "ranksim", "purgedi", "rankrestr", "maxrank")


@dataclass(frozen=True)
class OptConfig:
    delay: bool = False
    succrank: bool = False
    ranksim: bool = False
    purgedi: bool = False
    rankrestr: bool = False
    maxrank: bool = False
    strict_eta4: bool = False
    backoff: BackoffPolicy | None = None

    def __post_init__(self):
        if self.maxrank and self.rankrestr:
            raise ValueError("maxrank and rankrestr cannot be combined")
        if self.maxrank and self.purgedi:
            raise ValueError("purgedi cannot be combined with maxrank")
        if self.strict_eta4 and not self.maxrank:
            raise ValueError("strict_eta4 only applies to maxrank")

    @classmethod
    def from_names(cls, names, **kw):
        names = [x.strip() for x in names if x.strip()]
        unknown = set(names) - set(OPT_NAMES)
        if unknown:
            raise ValueError(f"unknown optimizations: {sorted(unknown)}")
        return cls(**{x: True for x in names}, **kw)

    @classmethod
    def maxrank_pipeline(cls, **kw):
        return cls(delay=True, succrank=True, ranksim=True, maxrank=True, **kw)

    @classmethod
    def rankrestr_pipeline(cls, **kw):
        return cls(delay=True, succrank=True, ranksim=True, rankrestr=True, purgedi=True, **kw)

    def names(self) -> list[str]:
        out = [x for x in OPT_NAMES if getattr(self, x)]
        if self.strict_eta4:
            out.append("strict-eta4")
        return out


class Pipeline(Schewe):
    """Schewe's construction with the configured optimizations switched on."""

    def __init__(self, aut: BuchiAutomaton, config: OptConfig):
        self.config = config
        self.ra = ReachAnalysis(aut) if config.succrank else None
        self.dirsim = direct_simulation(aut) if (config.purgedi or config.ranksim) else None
        self.oddrank = odd_rank_relation(aut, self.dirsim) if config.ranksim else None
        gate = delay_entry_edges(aut)[0] if config.delay else None
        self._tops: dict = {}
        lower = (lambda S, r: succ_rank_lower_bounds(S, r, self.ra)) if self.ra is not None else None
        if config.maxrank:
            super().__init__(aut, entry_gate=gate, entries=self._eta2, step=self._maxrank_step, lower_bounds=lower)
        else:
            super().__init__(
                aut,
                entry_gate=gate,
                state_filter=self._state_ok,
                transition_filter=self._transition_ok if config.rankrestr else None,
                lower_bounds=lower,
            )
        self.name = "maxrank" if config.maxrank else "schewe"

    def _filters_ok(self, m: TightState) -> bool:
        if self.ra is not None and not succ_rank_filter(m.S, m.f, self.ra):
            return False
        if self.oddrank is not None and not rank_sim_ok(m.S, m.f, self.oddrank):
            return False
        return True

    def _state_ok(self, m: TightState) -> bool:
        if not self._filters_ok(m):
            return False
        if self.config.purgedi and not purge_di_ok(m.S, m.f, self.dirsim):
            return False
        return True

    def _transition_ok(self, src, a, dst) -> bool:
        return rank_restr_filter(src, a, dst, self.aut)

    def _eta2(self, S_next: int):
        got = self._tops.get(S_next)
        if got is None:
            got = maximal_entry_rankings(self.aut, S_next, self.ra, self.oddrank)
            self._tops[S_next] = got
        return [TightState(S_next, 0, f, 0) for f in got]

    def _maxrank_step(self, m: TightState, a: int):
        out = []
        for dst in (eta3(m, a, self.aut), eta4(m, a, self.aut, self.config.strict_eta4)):
            if dst is not None and dst not in out:
                out.append(dst)
        return out


def filtered_entry_rankings(aut: BuchiAutomaton, S: int, ra=None, oddrank=None) -> list:
    """Tight rankings of S passing SuccRank and RankSim, enumerated with SuccRank bounds."""
    F, n = aut.accepting_mask, aut.num_states
    out = []
    for r in range(1, tight_rank_cap(S, F, n) + 1, 2):
        lower = succ_rank_lower_bounds(S, r, ra) if ra is not None else None
        if lower is False:
            continue
        for f in enumerate_tight(n, S, F, r, None, lower):
            if ra is not None and not succ_rank_filter(S, f, ra):
                continue
            if oddrank is not None and not rank_sim_ok(S, f, oddrank):
                continue
            out.append(f)
    return out


def maximal_entry_rankings(aut: BuchiAutomaton, S: int, ra=None, oddrank=None) -> list:
    """Pointwise-maximal tight rankings of S among those passing the filters.

    Maximality is taken among rankings of the same rank. Values are tried
    from high to low, so whatever dominates a ranking is generated before it;
    subtrees whose every completion lies below a maximum found so far are
    skipped.
    """
    F, n = aut.accepting_mask, aut.num_states
    order = bits(S)
    k = len(order)
    found: list = []
    odd_rows = oddrank.rows if oddrank is not None else None
    for r in range(tight_rank_cap(S, F, n), 0, -2):
        tops: list = []
        lower = succ_rank_lower_bounds(S, r, ra) if ra is not None else None
        if lower is False:
            continue
        choices = []
        for q in order:
            lo = 0 if lower is None else max(0, lower[q])
            if F >> q & 1:
                vals = list(range(r - 1, lo - 1, -2))
                vals = [v for v in vals if v >= lo]
            else:
                vals = list(range(r, lo - 1, -1))
            choices.append(vals)
        if any(not c for c in choices):
            continue
        need_all = (1 << ((r + 1) // 2)) - 1
        rem_count = [0] * (k + 1)
        rem_top = [-1] * (k + 1)
        for idx in range(k - 1, -1, -1):
            nonacc = not F >> order[idx] & 1
            rem_count[idx] = rem_count[idx + 1] + nonacc
            odd = [v for v in choices[idx] if v & 1]
            rem_top[idx] = max(rem_top[idx + 1], odd[0] if nonacc and odd else -1)
        vals = [0] * n

        def dominated(idx):
            for h in tops:
                if all(h[order[j]] >= vals[order[j]] for j in range(idx)) and all(
                    h[order[j]] >= choices[j][0] for j in range(idx, k)
                ):
                    return True
            return False

        def go(idx, covered, odd_set):
            missing = need_all & ~covered
            if missing:
                if bin(missing).count("1") > rem_count[idx]:
                    return
                if 2 * (missing.bit_length() - 1) + 1 > rem_top[idx]:
                    return
            if tops and dominated(idx):
                return
            if idx == k:
                f = tuple(vals)
                if ra is not None and not succ_rank_filter(S, f, ra):
                    return
                if oddrank is not None and not rank_sim_ok(S, f, oddrank):
                    return
                tops.append(f)
                return
            q = order[idx]
            for v in choices[idx]:
                if v & 1 and odd_rows is not None:
                    # direct odd-rank pairs among already placed odd states
                    if any(vals[x] > v for x in bits(odd_set) if odd_rows[x] >> q & 1):
                        continue
                    if any(v > vals[x] for x in bits(odd_rows[q] & odd_set)):
                        continue
                vals[q] = v
                go(idx + 1, covered | (1 << (v >> 1)) if v & 1 else covered, odd_set | (1 << q) if v & 1 else odd_set)
            vals[q] = 0

        go(0, 0, 0)
        found.extend(tops)
    return found


def maxrank_eta2(R: int, a: int, aut: BuchiAutomaton, ra=None, oddrank=None) -> list[TightState]:
    """Maximal filtered entry macrostates for waiting state R and symbol a."""
    ra = ra or ReachAnalysis(aut)
    oddrank = oddrank or odd_rank_relation(aut)
    S_next = aut.post(R, a)
    return [TightState(S_next, 0, f, 0) for f in maximal_entry_rankings(aut, S_next, ra, oddrank)]


def build(aut: BuchiAutomaton, config: OptConfig) -> Schewe:
    if not any(getattr(config, x) for x in OPT_NAMES):
        return Schewe(aut)
    return Pipeline(aut, config)


class SurrogateError(RuntimeError):
    pass


def _entry_hook(con: Schewe, policy: BackoffPolicy, fired: list):
    def hook(entries):
        if policy.check_filtered:
            hit = backoff_check(entries, policy)
        else:
            hit = _unfiltered_backoff(con, policy)
        fired.append(hit)
        return hit

    return hook


def _unfiltered_backoff(con: Schewe, policy: BackoffPolicy) -> bool:
    aut = con.aut
    F, n = aut.accepting_mask, aut.num_states
    gate = con.entry_gate
    _, waiting = delay_entry_edges(aut)
    for R in waiting:
        for a in range(len(aut.alphabet)):
            if gate is not None and (R, a) not in gate:
                continue
            S = aut.post(R, a)
            cap = tight_rank_cap(S, F, n)
            if cap >= 1 and any(popcount(S) >= s and cap >= r for s, r in policy.thresholds):
                return True
    return False


def run_surrogate(aut: BuchiAutomaton, policy: BackoffPolicy, budget: int, deadline=None) -> ComplementResult:
    from .constructions import complement_schewe

    if policy.surrogate == "schewe-plain":
        result = complement_schewe(aut, budget, deadline)
        result.stats["algorithm"] = "schewe-plain"
        return result
    from .formats import parse_hoa, serialize_hoa

    started = time.perf_counter()
    timeout = None if deadline is None else max(0.001, deadline - time.monotonic())
    try:
        proc = subprocess.run(
            policy.command,
            shell=True,
            input=serialize_hoa(aut),
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        from .constructions import TimeoutExceeded

        raise TimeoutExceeded("surrogate timed out") from exc
    if proc.returncode != 0:
        raise SurrogateError(f"surrogate exited with {proc.returncode}: {proc.stderr.strip()}")
    out = align_alphabet(parse_hoa(proc.stdout), aut.alphabet)
    labels = {q: out.name(q) for q in range(out.num_states)}
    stats = {
        "algorithm": "external",
        "opts": [],
        "states_waiting": 0,
        "states_tight": out.num_states,
        "transitions": out.num_transitions(),
        "max_rank": 0,
        "backoff_fired": True,
        "wall_ms": (time.perf_counter() - started) * 1000.0,
    }
    return ComplementResult(out, labels, list(range(out.num_states)), stats)


def align_alphabet(aut: BuchiAutomaton, alphabet) -> BuchiAutomaton:
    """Reorder symbols to `alphabet`; missing symbols get no transitions."""
    if tuple(aut.alphabet) == tuple(alphabet):
        return aut
    extra = set(aut.alphabet) - set(alphabet)
    if extra:
        raise SurrogateError(f"surrogate output uses unknown symbols {sorted(extra)}")
    pos = {s: i for i, s in enumerate(aut.alphabet)}
    rows = tuple(
        tuple(row[pos[s]] if s in pos else frozenset() for s in alphabet) for row in aut.transitions
    )
    return BuchiAutomaton(aut.num_states, tuple(alphabet), rows, aut.initial, aut.accepting, aut.state_names)


def complement_optimized(
    aut: BuchiAutomaton,
    config: OptConfig,
    budget: int = DEFAULT_BUDGET,
    deadline=None,
) -> ComplementResult:
    """Run the configured pipeline, backing off to the surrogate if the policy fires."""
    con = build(aut, config)
    name = "maxrank" if config.maxrank else "schewe"
    hook, fired = None, []
    if config.backoff is not None:
        hook = _entry_hook(con, config.backoff, fired)
    try:
        result = materialize(con, budget, deadline, hook, name, config.names())
    except BackoffTriggered:
        result = run_surrogate(aut, config.backoff, budget, deadline)
        result.stats["opts"] = config.names()
        result.stats["backoff_fired"] = True
        return result
    result.stats["backoff_fired"] = False
    return result


def complement_maxrank(aut: BuchiAutomaton, config: OptConfig | None = None, budget: int = DEFAULT_BUDGET, deadline=None):
    config = config or OptConfig.maxrank_pipeline()
    if not config.maxrank:
        raise ValueError("complement_maxrank needs config.maxrank")
    return complement_optimized(aut, config, budget, deadline)


def complement_with_backoff(aut: BuchiAutomaton, config: OptConfig, budget: int = DEFAULT_BUDGET, deadline=None):
    if config.backoff is None:
        raise ValueError("complement_with_backoff needs a back-off policy")
    return complement_optimized(aut, config, budget, deadline)


def maxrank_step_graph(aut: BuchiAutomaton, start: TightState, strict_decrement: bool = False):
    """Tight macrostates reachable from `start` through eta3/eta4, with their edges."""
    nodes, edges = [start], {}
    index = {start: 0}
    for m in nodes:
        out = set()
        for a in range(len(aut.alphabet)):
            for dst in (eta3(m, a, aut), eta4(m, a, aut, strict_decrement)):
                if dst is None:
                    continue
                if dst not in index:
                    index[dst] = len(nodes)
                    nodes.append(dst)
                out.add(index[dst])
        edges[index[m]] = out
    return nodes, [sorted(edges[x]) for x in range(len(nodes))]


def reaches_accepting_cycle(aut: BuchiAutomaton, start: TightState, strict_decrement: bool = False) -> bool:
    """Does some eta3/eta4 path from `start` reach a cycle through a state with empty O?"""
    from .graphs import is_nontrivial, tarjan_scc

    nodes, succ = maxrank_step_graph(aut, start, strict_decrement)
    for comp in tarjan_scc(len(nodes), succ):
        if is_nontrivial(comp, succ) and any(nodes[x].O == 0 for x in comp):
            return True
    return False


ALGORITHMS = ("kv", "fkv", "schewe", "maxrank")


def complement(
    aut: BuchiAutomaton,
    algorithm: str = "schewe",
    config: OptConfig | None = None,
    budget: int = DEFAULT_BUDGET,
    deadline=None,
) -> ComplementResult:
    """Single entry point: plain KV/FKV, or Schewe/MaxRank with optimizations."""
    from .constructions import complement_fkv, complement_kv

    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r} (expected one of {', '.join(ALGORITHMS)})")
    if algorithm in ("kv", "fkv"):
        if config is not None and (config.names() or config.backoff is not None):
            raise ValueError(f"{algorithm} takes no optimizations")
        fn = complement_kv if algorithm == "kv" else complement_fkv
        return fn(aut, budget, deadline)
    if config is None:
        config = OptConfig.maxrank_pipeline() if algorithm == "maxrank" else OptConfig()
    if algorithm == "maxrank" and not config.maxrank:
        config = OptConfig(**{**config.__dict__, "maxrank": True})
    if algorithm == "schewe" and config.maxrank:
        raise ValueError("use --algorithm maxrank for the maxrank construction")
    return complement_optimized(aut, config, budget, deadline)
