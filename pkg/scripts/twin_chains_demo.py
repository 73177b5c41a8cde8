"""Walk through the twin-chains automaton: ranks, the rank-5 entry, and the eta4 variants."""

from ranker.automaton import MembershipOracle, is_empty, lasso
from ranker.constructions import Schewe, TightState
from ranker.fixtures import ranking_by_name, twin_chains
from ranker.optimizations import complement_maxrank, eta3, eta4, reaches_accepting_cycle
from ranker.rankings import format_ranking, rank_of
from ranker.rundag import rank_at, word_ranks
from ranker.witness import check_run, tight_witness

aut = twin_chains()
w = lasso(aut, "", "a")
names = aut.state_names
full = (1 << aut.num_states) - 1

print("language empty:", is_empty(aut))
ranks = word_ranks(aut, w)
print("run DAG ranks over a^w:", {names[q]: rank_at(ranks, q, 0) for q in range(aut.num_states)})

run = tight_witness(aut, w)
entry = run.entry_state
print(f"lowest Schewe run enters the tight part at level {run.entry} with rank {rank_of(entry.f)}")
print("  entry ranking", format_ranking(entry.f, entry.S, names))
print("  accepted by Schewe:", check_run(Schewe(aut), run))

res = complement_maxrank(aut)
print(f"maxrank pipeline: {res.automaton.num_states} states, accepts a^w:", MembershipOracle(res.automaton)(w))

red = dict(p1=5, p2=4, p3=3, p4=4, p5=5, q1=5, q2=4, q3=5, q4=4, q5=1)
m = TightState(full, 0, ranking_by_name(aut, red), 0)
nxt = eta3(m, 0, aut)
print("eta3 successor", format_ranking(nxt.f, nxt.S, names), "phase", nxt.i)
print("eta4 successor (decrement outside F):", eta4(m, 0, aut) is not None)
print("eta4 successor (decrement everything):", eta4(m, 0, aut, strict_decrement=True))
print("accepting cycle reachable:", reaches_accepting_cycle(aut, m), "/ strict:", reaches_accepting_cycle(aut, m, True))
