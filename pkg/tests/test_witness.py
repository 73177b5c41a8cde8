import pytest
from hypothesis import assume, given, settings

from conftest import automata, lassos
from ranker.automaton import BuchiAutomaton, MembershipOracle, all_lassos, lasso, lasso_membership
from ranker.constructions import FKV, KV, Schewe, TightState, Waiting
from ranker.harness import TvParams, tabakov_vardi
from ranker.optimizations import OptConfig, build
from ranker.rankings import rank_of
from ranker.witness import WitnessRun, WordAccepted, check_run, kv_witness, tight_witness


def test_twin_chains_witnesses(app):
    w = lasso(app, "", "a")
    assert check_run(KV(app), kv_witness(app, w))
    assert check_run(FKV(app), tight_witness(app, w, "fkv"))
    run = tight_witness(app, w)
    assert check_run(Schewe(app), run)
    assert isinstance(run.entry_state, TightState) and rank_of(run.entry_state.f) == 5


@pytest.mark.parametrize(
    "config",
    [OptConfig(delay=True), OptConfig(succrank=True), OptConfig(ranksim=True), OptConfig(purgedi=True), OptConfig.rankrestr_pipeline()],
    ids=lambda c: "+".join(c.names()),
)
def test_twin_chains_optimized_witnesses(app, config):
    con = build(app, config)
    assert check_run(con, tight_witness(app, lasso(app, "", "a"), gate=con.entry_gate))


def test_accepted_word_has_no_witness():
    aut = BuchiAutomaton.from_edges(1, ("a",), [(0, 0, 0)], [0], [0])
    with pytest.raises(WordAccepted):
        tight_witness(aut, lasso(aut, "", "a"))


def test_all_runs_die():
    aut = BuchiAutomaton.from_edges(2, ("a",), [(0, 0, 1)], [0], [])
    run = tight_witness(aut, lasso(aut, "", "a"))
    assert run.entry is None and all(isinstance(m, Waiting) for m in run.states)
    assert check_run(Schewe(aut), run)


def test_check_run_rejects_broken_runs(app):
    run = tight_witness(app, lasso(app, "", "a"))
    bad = WitnessRun(run.states[1:] + run.states[:1], run.symbols, run.loop, run.entry)
    assert not check_run(Schewe(app), bad)
    swapped = list(run.states)
    m = swapped[-1]
    swapped[-1] = TightState(m.S, m.O, tuple(min(x + 2, 11) if x else 0 for x in m.f), m.i)
    assert not check_run(Schewe(app), WitnessRun(swapped, run.symbols, run.loop, run.entry))


@settings(max_examples=150)
@given(automata(max_n=5), lassos())
def test_super_tight_runs_embed(aut, w):
    assume(not lasso_membership(aut, w))
    assert check_run(KV(aut), kv_witness(aut, w))
    assert check_run(FKV(aut), tight_witness(aut, w, "fkv"))
    assert check_run(Schewe(aut), tight_witness(aut, w))


@pytest.mark.parametrize("seed", range(6))
def test_gated_witnesses(seed):
    aut = tabakov_vardi(TvParams(4, 2, 1.5, 0.5, seed))
    oracle = MembershipOracle(aut)
    for config in (OptConfig(delay=True), OptConfig.rankrestr_pipeline()):
        con = build(aut, config)
        for w in all_lassos(2, 2, 2):
            if not oracle(w):
                assert check_run(con, tight_witness(aut, w, gate=con.entry_gate))
