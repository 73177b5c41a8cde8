import networkx as nx
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ranker.automaton import BuchiAutomaton, LassoWord
from ranker.fixtures import twin_chains
from ranker.rundag import OMEGA

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def app():
    return twin_chains()


@st.composite
def automata(draw, min_n=1, max_n=4, symbols=2, max_initial=2):
    n = draw(st.integers(min_n, max_n))
    alphabet = tuple("abcd"[:symbols])
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, symbols - 1), st.integers(0, n - 1))
    edges = draw(st.lists(pairs, max_size=3 * n * symbols))
    initial = draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=max_initial))
    accepting = draw(st.sets(st.integers(0, n - 1), max_size=n))
    return BuchiAutomaton.from_edges(n, alphabet, edges, initial, accepting)


@st.composite
def lassos(draw, symbols=2, max_stem=3, max_loop=3):
    stem = draw(st.lists(st.integers(0, symbols - 1), max_size=max_stem))
    loop = draw(st.lists(st.integers(0, symbols - 1), min_size=1, max_size=max_loop))
    return LassoWord(tuple(stem), tuple(loop))


def nx_membership(aut: BuchiAutomaton, w: LassoWord) -> bool:
    """Independent oracle: product with word positions, SCCs by networkx."""
    u, v = w.stem, w.loop
    P = len(u) + len(v)
    sym = list(u) + list(v)
    g = nx.DiGraph()
    for q in range(aut.num_states):
        for p in range(P):
            nxt = p + 1 if p + 1 < P else len(u)
            for d in aut.transitions[q][sym[p]]:
                g.add_edge((q, p), (d, nxt))
    g.add_nodes_from((q, 0) for q in aut.initial)
    reach = set()
    for q in aut.initial:
        reach |= nx.descendants(g, (q, 0)) | {(q, 0)}
    for comp in nx.strongly_connected_components(g.subgraph(reach)):
        cyclic = len(comp) > 1 or any(g.has_edge(x, x) for x in comp)
        if cyclic and any(q in aut.accepting for q, _ in comp):
            return True
    return False


def unrolled_ranks(aut, w):
    """Independent oracle: exact level sets closed into a loop, ranks by networkx."""
    u, v = len(w.stem), len(w.loop)
    levels, seen = [aut.initial_mask], {}
    i = 0
    while True:
        if i >= u:
            key = ((i - u) % v, levels[i])
            if key in seen and (i - seen[key]) % v == 0:
                start = seen[key]
                levels.pop()
                break
            seen.setdefault(key, i)
        levels.append(aut.post(levels[i], w.symbol_at(i)))
        i += 1
    g = nx.DiGraph()
    for i, mask in enumerate(levels):
        nxt = i + 1 if i + 1 < len(levels) else start
        for q in range(aut.num_states):
            if mask >> q & 1:
                g.add_node((q, i))
                for d in aut.transitions[q][w.symbol_at(i)]:
                    g.add_edge((q, i), (d, nxt))
    ranks = {}
    j = 0
    while g.number_of_nodes() and j <= 2 * aut.num_states:
        cyclic = set()
        for comp in nx.strongly_connected_components(g):
            if len(comp) > 1 or any(g.has_edge(x, x) for x in comp):
                cyclic |= comp
        infinite = set(cyclic)
        for x in cyclic:
            infinite |= nx.ancestors(g, x)
        finite = set(g) - infinite
        ranks.update((x, j) for x in finite)
        g.remove_nodes_from(finite)
        good = {x for x in g if x[0] in aut.accepting}
        for x in list(good):
            good |= nx.ancestors(g, x)
        endangered = set(g) - good
        ranks.update((x, j + 1) for x in endangered)
        g.remove_nodes_from(endangered)
        j += 2
    ranks.update((x, OMEGA) for x in g)
    return levels, start, ranks
