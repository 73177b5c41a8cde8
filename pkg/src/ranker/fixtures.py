"""Small hand-built automata used by tests, scripts and the CLI demo."""

from .formats import parse_ba

# Two isomorphic 5-state chains over {a}. Each chain loops on its first,
# third and fifth state; the second and fourth are accepting. Every run gets
# stuck in a non-accepting self-loop, so the language is empty, but the run
# DAG over a^omega needs rank 5.
TWIN_CHAINS_BA = """\
[p1]
[q1]
a,[p1]->[p1]
a,[p1]->[p2]
a,[p2]->[p3]
a,[p3]->[p3]
a,[p3]->[p4]
a,[p4]->[p5]
a,[p5]->[p5]
a,[q1]->[q1]
a,[q1]->[q2]
a,[q2]->[q3]
a,[q3]->[q3]
a,[q3]->[q4]
a,[q4]->[q5]
a,[q5]->[q5]
[p2]
[p4]
[q2]
[q4]
"""


def twin_chains():
    return parse_ba(TWIN_CHAINS_BA)


def ranking_by_name(aut, values: dict) -> tuple:
    f = [0] * aut.num_states
    for name, r in values.items():
        f[aut.state_index(name)] = r
    return tuple(f)


def mask_by_name(aut, names) -> int:
    m = 0
    for name in names:
        m |= 1 << aut.state_index(name)
    return m
