"""Rank-based complementation of Büchi automata."""

from .automaton import (
    BuchiAutomaton,
    LassoWord,
    is_empty,
    find_accepting_lasso,
    lasso,
    lasso_membership,
    make_complete,
    trim,
)
from .formats import parse_automaton, parse_ba, parse_hoa, serialize
from .constructions import (
    BudgetExceeded,
    ComplementResult,
    complement_fkv,
    complement_kv,
    complement_schewe,
)
from .optimizations import BackoffPolicy, OptConfig, complement, complement_maxrank, complement_with_backoff

__all__ = [
    "BuchiAutomaton",
    "LassoWord",
    "is_empty",
    "find_accepting_lasso",
    "lasso",
    "lasso_membership",
    "make_complete",
    "trim",
    "parse_automaton",
    "parse_ba",
    "parse_hoa",
    "serialize",
    "BudgetExceeded",
    "ComplementResult",
    "complement_fkv",
    "complement_kv",
    "complement_schewe",
    "BackoffPolicy",
    "OptConfig",
    "complement",
    "complement_maxrank",
    "complement_with_backoff",
]
