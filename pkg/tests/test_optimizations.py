import shlex
import sys

import networkx as nx
import pytest
from hypothesis import given, settings

from conftest import automata
from ranker.automaton import BuchiAutomaton, bits
from ranker.constructions import Schewe, TightState, Waiting, complement_schewe
from ranker.fixtures import mask_by_name, ranking_by_name
from ranker.harness import TvParams, complement_correctness_check, equivalence_check, tabakov_vardi
from ranker.optimizations import (
    BackoffPolicy,
    OptConfig,
    ReachAnalysis,
    SurrogateError,
    backoff_check,
    build,
    complement,
    complement_maxrank,
    complement_optimized,
    complement_with_backoff,
    cond_coarse,
    cond_fine,
    delay,
    delay_entry_edges,
    eta3,
    eta4,
    filtered_entry_rankings,
    maximal_entry_rankings,
    maximal_rankings,
    maxrank_eta2,
    maxrank_successor,
    rank_restr_filter,
    reaches_accepting_cycle,
    succ_rank_filter,
)
from ranker.rankings import enumerate_s_tight, is_s_tight, rank_of
from ranker.simulations import odd_rank_relation, rank_sim_ok

RED = dict(p1=5, p2=4, p3=3, p4=4, p5=5, q1=5, q2=4, q3=5, q4=4, q5=1)


class FixedReach:
    """Stand-in for ReachAnalysis with given values."""

    def __init__(self, top, bottom):
        self.top, self.bottom = top, bottom

    def maxinfreach(self, S):
        return self.top

    def mininfreach(self, single):
        return self.bottom[single.bit_length() - 1]


def chain(n, loop_at_end=True, accepting=()):
    edges = [(q, 0, q + 1) for q in range(n - 1)]
    if loop_at_end:
        edges.append((n - 1, 0, n - 1))
    return BuchiAutomaton.from_edges(n, ("a",), edges, [0], accepting)


def red_macrostate(app):
    return TightState((1 << 10) - 1, 0, ranking_by_name(app, RED), 0)


# reachability analysis


def test_reach_examples(app):
    ra = ReachAnalysis(app)
    assert ra.maxinfreach(mask_by_name(app, ["p5", "q5"])) == 2
    assert ra.mininfreach(mask_by_name(app, ["p5"])) == 1
    dead = BuchiAutomaton.from_edges(2, ("a",), [(0, 0, 1)], [0], [])
    assert ReachAnalysis(dead).maxinfreach(0b01) == 0
    acc = BuchiAutomaton.from_edges(1, ("a",), [(0, 0, 0)], [0], [0])
    assert ReachAnalysis(acc).mininfreach(0b1) == 0


def subset_graph(aut):
    g = nx.DiGraph()
    for R in range(1 << aut.num_states):
        g.add_node(R)
        for a in range(len(aut.alphabet)):
            g.add_edge(R, aut.post(R, a))
    return g


@settings(max_examples=60)
@given(automata(max_n=4))
def test_reach_analysis_matches_subset_graph(aut):
    g = subset_graph(aut)
    cyclic = set()
    for comp in nx.strongly_connected_components(g):
        if len(comp) > 1 or any(g.has_edge(x, x) for x in comp):
            cyclic |= comp
    ra = ReachAnalysis(aut)
    size = lambda R: bin(R & ~aut.accepting_mask).count("1")
    for S in range(1 << aut.num_states):
        inf = (nx.descendants(g, S) | {S}) & cyclic
        assert ra.infreach(S) == inf
        assert ra.maxinfreach(S) == max(size(R) for R in inf)
        assert ra.mininfreach(S) == min(size(R) for R in inf)
        for q in bits(S):
            assert ra.mininfreach(1 << q) <= ra.maxinfreach(S)


def test_coarse_and_fine_examples():
    # states r, s, t = 0, 1, 2
    assert not cond_coarse(0b101, (3, 0, 1), FixedReach(1, {0: 1, 2: 0}))
    assert cond_fine(0b101, (3, 0, 1), FixedReach(1, {0: 1, 2: 0}))
    assert cond_coarse(0b111, (1, 5, 3), FixedReach(3, {0: 2, 1: 1, 2: 0}))
    assert not cond_fine(0b111, (1, 5, 3), FixedReach(3, {0: 2, 1: 1, 2: 0}))
    assert cond_coarse(0b1, (1,), FixedReach(1, {0: 1}))
    assert cond_fine(0b1, (1,), FixedReach(1, {0: 1}))
    assert cond_fine(0, (0,), FixedReach(0, {}))


def test_succ_rank_filter_examples():
    assert not succ_rank_filter(0b101, (3, 0, 1), FixedReach(1, {0: 1, 2: 0}))
    assert not succ_rank_filter(0b111, (1, 5, 3), FixedReach(3, {0: 2, 1: 1, 2: 0}))
    assert succ_rank_filter(0b1, (1,), FixedReach(1, {0: 1}))


# transition filters and MaxRank steps


def test_rank_restr_examples():
    aut = BuchiAutomaton.from_edges(2, ("a",), [(0, 0, 1), (1, 0, 1)], [0], [])
    assert rank_restr_filter(TightState(0b01, 0, (2, 0), 0), 0, TightState(0b10, 0, (0, 1), 0), aut)
    assert not rank_restr_filter(TightState(0b01, 0, (3, 0), 0), 0, TightState(0b10, 0, (0, 2), 0), aut)
    assert rank_restr_filter(TightState(0b01, 0, (3, 0), 0), 0, TightState(0b10, 0, (0, 3), 0), aut)


def test_maxrank_successor_examples(app):
    m = red_macrostate(app)
    expected = dict(p1=5, p2=4, p3=3, p4=2, p5=4, q1=5, q2=4, q3=4, q4=4, q5=1)
    assert maxrank_successor(m, 0, app) == ranking_by_name(app, expected)
    single = BuchiAutomaton.from_edges(1, ("a",), [(0, 0, 0)], [0], [])
    assert maxrank_successor(TightState(1, 0, (1,), 0), 0, single) == (1,)
    acc = BuchiAutomaton.from_edges(2, ("a",), [(0, 0, 1)], [0], [1])
    assert maxrank_successor(TightState(1, 0, (3, 0), 0), 0, acc) == (0, 2)


def test_eta3_examples(app):
    nxt = eta3(red_macrostate(app), 0, app)
    assert nxt.i == 2 and nxt.O == mask_by_name(app, ["p4"]) and rank_of(nxt.f) == 5
    # x (rank 3) and y (rank 1) merge into y: rank 3 disappears
    merge = BuchiAutomaton.from_edges(3, ("a",), [(0, 0, 1), (1, 0, 1), (2, 0, 2)], [0], [])
    assert eta3(TightState(0b011, 0, (3, 1, 0), 0), 0, merge) is None
    single = BuchiAutomaton.from_edges(1, ("a",), [(0, 0, 0)], [0], [])
    m = TightState(1, 0, (1,), 0)
    assert eta3(m, 0, single) == m


def test_eta4_examples(app):
    m = red_macrostate(app)
    loose = eta4(m, 0, app)
    p4 = app.state_index("p4")
    assert loose.f[p4] == 2 and loose.O == 1 << p4
    assert eta4(m, 0, app, strict_decrement=True) is None
    single = BuchiAutomaton.from_edges(1, ("a",), [(0, 0, 0)], [0], [])
    for strict in (False, True):
        assert eta4(TightState(1, 0, (1,), 0), 0, single, strict) is None


def test_rao_regression(app):
    m = red_macrostate(app)
    assert reaches_accepting_cycle(app, m)
    assert not reaches_accepting_cycle(app, m, strict_decrement=True)


# entry rankings of MaxRank


def test_eta2_examples():
    single = BuchiAutomaton.from_edges(1, ("a",), [(0, 0, 0)], [0], [])
    assert maxrank_eta2(1, 0, single) == [TightState(1, 0, (1,), 0)]
    sym = BuchiAutomaton.from_edges(2, ("a",), [(p, 0, q) for p in range(2) for q in range(2)], [0, 1], [])
    assert sorted(maximal_entry_rankings(sym, 0b11)) == [(1, 1), (1, 3), (3, 1)]


def test_eta2_on_twin_chains(app):
    ra, rel = ReachAnalysis(app), odd_rank_relation(app)
    full = (1 << 10) - 1
    tops = maxrank_eta2(full, 0, app, ra, rel)
    assert tops
    for m in tops:
        assert rank_of(m.f) <= 11
        assert succ_rank_filter(m.S, m.f, ra) and rank_sim_ok(m.S, m.f, rel)
    assert 5 in {rank_of(m.f) for m in tops}


def test_maximal_rankings_keeps_each_rank():
    cands = [(1, 1), (1, 0), (0, 1), (1, 3), (3, 1)]
    assert sorted(maximal_rankings(cands)) == [(1, 1), (1, 3), (3, 1)]


@pytest.mark.parametrize("seed", range(40))
def test_maximal_entry_rankings_match_brute_force(seed):
    aut = tabakov_vardi(TvParams(2 + seed % 4, 2, (1.0, 1.5, 2.0)[seed % 3], (0.3, 0.5)[seed % 2], seed))
    ra, rel = ReachAnalysis(aut), odd_rank_relation(aut)
    for S in range(1, 1 << aut.num_states):
        for x, y in ((ra, rel), (None, None), (ra, None), (None, rel)):
            cands = [
                f
                for f in enumerate_s_tight(S, aut.accepting_mask, aut.num_states)
                if (x is None or succ_rank_filter(S, f, x)) and (y is None or rank_sim_ok(S, f, y))
            ]
            assert sorted(filtered_entry_rankings(aut, S, x, y)) == sorted(cands)
            assert sorted(maximal_entry_rankings(aut, S, x, y)) == sorted(maximal_rankings(cands))


# Delay


def test_delay_single_state():
    aut = BuchiAutomaton.from_edges(1, ("a",), [(0, 0, 0)], [0], [])
    gated, order = delay_entry_edges(aut)
    assert gated == {(1, 0)} and order == [1]


def test_delay_chain_enters_only_at_the_cycle():
    aut = chain(4)
    gated, order = delay_entry_edges(aut)
    assert order == [0b0001, 0b0010, 0b0100, 0b1000]
    assert gated == {(0b1000, 0)}
    res = delay(aut)
    idx = res.index()
    sources = {
        m
        for m in res.macrostates
        if isinstance(m, Waiting)
        and any(not isinstance(res.macrostates[d], Waiting) for d in res.automaton.transitions[idx[m]][0])
    }
    assert sources == {Waiting(0b1000)}


def test_delay_ignores_dag_back_joins():
    # {0} -a-> {1}, {0} -b-> {2}, both -> {3}: {3} is reached twice without a cycle
    aut = BuchiAutomaton.from_edges(4, ("a", "b"), [(0, 0, 1), (0, 1, 2), (1, 0, 3), (2, 0, 3), (3, 0, 3)], [0], [])
    gated, _ = delay_entry_edges(aut)
    assert (0b1000, 0) in gated
    assert (0b0100, 0) not in gated and (0b0010, 0) not in gated


# configuration


def test_opt_config_invariants():
    with pytest.raises(ValueError):
        OptConfig(maxrank=True, rankrestr=True)
    with pytest.raises(ValueError):
        OptConfig(maxrank=True, purgedi=True)
    with pytest.raises(ValueError):
        OptConfig(strict_eta4=True)
    with pytest.raises(ValueError):
        OptConfig.from_names(["delay", "bogus"])
    assert OptConfig.maxrank_pipeline().names() == ["delay", "succrank", "ranksim", "maxrank"]
    assert OptConfig.rankrestr_pipeline().names() == ["delay", "succrank", "ranksim", "purgedi", "rankrestr"]
    assert isinstance(build(chain(2), OptConfig()), Schewe)


def test_dispatcher():
    aut = chain(2)
    assert complement(aut, "kv").stats["algorithm"] == "kv"
    assert complement(aut, "maxrank").stats["algorithm"] == "maxrank"
    with pytest.raises(ValueError):
        complement(aut, "fkv", OptConfig(delay=True))
    with pytest.raises(ValueError):
        complement(aut, "nope")
    with pytest.raises(ValueError):
        complement_maxrank(aut, OptConfig(delay=True))


# language preservation and pruning


CONFIGS = {
    "delay": OptConfig(delay=True),
    "succrank": OptConfig(succrank=True),
    "ranksim": OptConfig(ranksim=True),
    "purgedi": OptConfig(purgedi=True),
    "rankrestr": OptConfig(rankrestr=True),
    "rankrestr-pipeline": OptConfig.rankrestr_pipeline(),
    "maxrank": OptConfig(maxrank=True),
    "maxrank-pipeline": OptConfig.maxrank_pipeline(),
}


@pytest.mark.parametrize("name", CONFIGS)
@settings(max_examples=30)
@given(aut=automata(max_n=4))
def test_language_preserved(name, aut):
    res = complement_optimized(aut, CONFIGS[name])
    assert complement_correctness_check(aut, res.automaton, 4, 4).passed


def labeled_edges(res):
    ms = res.macrostates
    for x, row in enumerate(res.automaton.transitions):
        for a, targets in enumerate(row):
            for d in targets:
                yield ms[x], a, ms[d]


@settings(max_examples=40)
@given(automata(max_n=4))
def test_monotone_pruning(aut):
    plain = complement_schewe(aut)
    states = set(plain.macrostates)
    edges = set(labeled_edges(plain))
    for name in ("delay", "succrank", "ranksim", "purgedi", "rankrestr-pipeline", "maxrank-pipeline"):
        assert set(complement_optimized(aut, CONFIGS[name]).macrostates) <= states
    assert set(labeled_edges(complement_optimized(aut, CONFIGS["rankrestr"]))) <= edges


@settings(max_examples=40)
@given(automata(max_n=4))
def test_maxrank_is_nearly_deterministic(aut):
    res = complement_maxrank(aut)
    for x, m in enumerate(res.macrostates):
        if isinstance(m, TightState):
            for a in range(len(aut.alphabet)):
                targets = [res.macrostates[d] for d in res.automaton.transitions[x][a]]
                assert len(targets) <= 2
                assert all(t in (eta3(m, a, aut), eta4(m, a, aut)) for t in targets)


def test_maxrank_accepts_twin_chains_word(app):
    from ranker.automaton import MembershipOracle, lasso

    res = complement_maxrank(app)
    assert MembershipOracle(res.automaton)(lasso(app, "", "a"))
    entries = [m for m in res.macrostates if isinstance(m, TightState) and m.O == 0 and m.i == 0]
    assert 5 in {rank_of(m.f) for m in entries}
    assert all(is_s_tight(m.f, m.S) for m in entries)


# back-off


def test_backoff_check_examples():
    policy = BackoffPolicy()
    assert backoff_check([TightState(0b111111111, 0, (1, 1, 1, 1, 1, 3, 3, 5, 5), 0)], policy)
    assert not backoff_check([TightState(0b11111111, 0, (1, 1, 1, 1, 1, 3, 3, 5), 0)], policy)
    assert not backoff_check([], policy)
    assert BackoffPolicy.parse("9:5,8:6").thresholds == ((9, 5), (8, 6))
    with pytest.raises(ValueError):
        BackoffPolicy(())
    with pytest.raises(ValueError):
        BackoffPolicy(surrogate="external-command")


@pytest.mark.parametrize("seed", range(10))
def test_backoff_thresholds(seed):
    aut = tabakov_vardi(TvParams(4, 2, 1.5, 0.5, seed))
    always = complement_with_backoff(aut, OptConfig.maxrank_pipeline(backoff=BackoffPolicy(((1, 1),))))
    never = complement_with_backoff(aut, OptConfig.maxrank_pipeline(backoff=BackoffPolicy(((10**6, 10**6),))))
    plain = complement_optimized(aut, OptConfig.maxrank_pipeline())
    assert never.stats["backoff_fired"] is False
    assert never.macrostates == plain.macrostates and never.automaton == plain.automaton
    entries = [m for m in plain.macrostates if isinstance(m, TightState) and m.i == 0 and m.O == 0]
    if entries:
        assert always.stats["backoff_fired"] is True
        assert always.stats["algorithm"] == "schewe-plain"
    assert equivalence_check(always.automaton, complement_schewe(aut).automaton, 4, 4).passed


def test_backoff_unfiltered_mode():
    aut = tabakov_vardi(TvParams(4, 2, 1.5, 0.5, 2))
    policy = BackoffPolicy(((1, 1),), check_filtered=False)
    assert complement_with_backoff(aut, OptConfig.maxrank_pipeline(backoff=policy)).stats["backoff_fired"]


def self_command():
    return f"{shlex.quote(sys.executable)} -m ranker.cli complement - --algorithm schewe"


def test_external_surrogate():
    aut = tabakov_vardi(TvParams(3, 2, 1.5, 0.5, 4))
    policy = BackoffPolicy(((1, 1),), surrogate="external-command", command=self_command())
    res = complement_with_backoff(aut, OptConfig.maxrank_pipeline(backoff=policy))
    assert res.stats["backoff_fired"] and res.stats["algorithm"] == "external"
    assert complement_correctness_check(aut, res.automaton, 4, 4).passed


def test_surrogate_failure_reports_stderr():
    aut = tabakov_vardi(TvParams(3, 2, 1.5, 0.5, 4))
    policy = BackoffPolicy(((1, 1),), surrogate="external-command", command="echo boom >&2; exit 4")
    with pytest.raises(SurrogateError, match="boom"):
        complement_with_backoff(aut, OptConfig(delay=True, backoff=policy))
    with pytest.raises(ValueError):
        complement_with_backoff(aut, OptConfig(delay=True))


def test_entry_maximality_is_per_rank(monkeypatch):
    # a.b^w is rejected by this automaton; keeping only rankings that are
    # maximal across all ranks drops the rank-1 entry its complement run needs
    import ranker.optimizations as opt
    from ranker.automaton import lasso, lasso_membership
    from ranker.rankings import ranking_le

    aut = tabakov_vardi(TvParams(3, 2, 1.5, 0.3, 1014))
    w = lasso(aut, "a", "b")
    assert not lasso_membership(aut, w)
    assert lasso_membership(complement_maxrank(aut).automaton, w)

    per_rank = opt.maximal_entry_rankings

    def across_ranks(aut, S, ra=None, oddrank=None):
        tops = per_rank(aut, S, ra, oddrank)
        return [f for f in tops if not any(g != f and ranking_le(f, g) for g in tops)]

    monkeypatch.setattr(opt, "maximal_entry_rankings", across_ranks)
    assert not lasso_membership(complement_maxrank(aut).automaton, w)
