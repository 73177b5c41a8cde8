import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import automata, lassos, nx_membership
from ranker.automaton import (
    BuchiAutomaton,
    LassoWord,
    MembershipOracle,
    all_lassos,
    find_accepting_lasso,
    is_empty,
    lasso,
    lasso_membership,
    least_rotation,
    make_complete,
    primitive_root,
    trim,
)


def loop_automaton(accepting: bool):
    return BuchiAutomaton.from_edges(1, ("a",), [(0, 0, 0)], [0], [0] if accepting else [])


def test_rejects_out_of_range_edges():
    with pytest.raises(ValueError):
        BuchiAutomaton(1, ("a",), ((frozenset({3}),),), frozenset({0}), frozenset())


def test_rejects_empty_alphabet():
    with pytest.raises(ValueError):
        BuchiAutomaton(1, (), ((),), frozenset({0}), frozenset())


def test_lasso_checks_symbols():
    aut = loop_automaton(True)
    with pytest.raises(ValueError):
        LassoWord((), (1,)).check(aut)
    with pytest.raises(ValueError):
        LassoWord((0,), ()).check(aut)


def test_app_language_is_empty(app):
    assert not lasso_membership(app, lasso(app, "", "a"))
    assert is_empty(app)
    assert find_accepting_lasso(app) is None


def test_accepting_self_loop():
    aut = loop_automaton(True)
    assert lasso_membership(aut, lasso(aut, "", "a"))
    w = find_accepting_lasso(aut)
    assert w == LassoWord((), (0,))


def test_empty_automaton_is_legal():
    aut = BuchiAutomaton(0, ("a",), (), frozenset(), frozenset())
    assert is_empty(aut)
    assert not lasso_membership(aut, LassoWord((), (0,)))


@given(automata(max_n=4), lassos())
def test_membership_matches_networkx(aut, w):
    expected = nx_membership(aut, w)
    assert lasso_membership(aut, w) == expected
    assert MembershipOracle(aut)(w) == expected


@given(automata(max_n=5))
def test_is_empty_matches_lasso_enumeration(aut):
    # every accepting lasso of an n-state automaton fits in |u|, |v| <= n
    n = aut.num_states
    oracle = MembershipOracle(aut)
    any_accepted = any(oracle(w) for w in all_lassos(2, n, n))
    assert is_empty(aut) == (not any_accepted)
    w = find_accepting_lasso(aut)
    if w is not None:
        assert lasso_membership(aut, w)


@given(automata(max_n=4))
def test_complete_and_trim_preserve_language(aut):
    full = make_complete(aut)
    assert all(s for row in full.transitions for s in row)
    assert full.num_states <= aut.num_states + 1
    small = trim(aut)
    tight = trim(aut, productive=True)
    for w in all_lassos(2, 2, 3):
        expect = lasso_membership(aut, w)
        assert lasso_membership(full, w) == expect
        assert lasso_membership(small, w) == expect
        assert lasso_membership(tight, w) == expect


def test_make_complete_examples():
    aut = loop_automaton(False)
    assert make_complete(aut) is aut
    bare = BuchiAutomaton(1, ("a", "b"), ((frozenset(), frozenset()),), frozenset({0}), frozenset())
    full = make_complete(bare)
    assert full.num_states == 2
    assert full.transitions[1] == (frozenset({1}), frozenset({1}))
    assert 1 not in full.accepting


def test_trim_examples(app):
    aut = BuchiAutomaton.from_edges(3, ("a",), [(0, 0, 1), (1, 0, 1), (2, 0, 0)], [0], [1])
    assert trim(aut).num_states == 2
    assert trim(app, productive=True).num_states == 0


@given(st.lists(st.integers(0, 2), min_size=1, max_size=8))
def test_rotation_helpers(word):
    word = tuple(word)
    root = primitive_root(word)
    assert root * (len(word) // len(root)) == word
    k, r = least_rotation(word)
    assert r[k:] + r[:k] == word
    assert r == min(word[j:] + word[:j] for j in range(len(word)))


def test_oracle_equates_rotated_loops():
    # (ab)^w after stem a equals a(ba)^w
    aut = BuchiAutomaton.from_edges(2, ("a", "b"), [(0, 0, 1), (1, 1, 0)], [0], [1])
    oracle = MembershipOracle(aut)
    assert oracle(LassoWord((), (0, 1))) == oracle(LassoWord((0,), (1, 0))) is True
    assert oracle(LassoWord((), (0, 1, 0, 1))) is True
    assert oracle(LassoWord((1,), (0, 1))) is False
