"""Level rankings: tuples of length n, rank 0 for states outside the support.

State sets are bit masks (bit q set iff state q is in the set).
"""

from __future__ import annotations

from typing import Sequence

from .automaton import bits

Ranking = tuple  # tuple[int, ...] indexed by state


def rank_of(f: Sequence[int]) -> int:
    return max(f, default=0)


def odd_mask(f: Sequence[int]) -> int:
    m = 0
    for q, r in enumerate(f):
        if r & 1:
            m |= 1 << q
    return m


def preimage(f: Sequence[int], value: int, within: int) -> int:
    """States of `within` ranked exactly `value`."""
    m = 0
    for q in bits(within):
        if f[q] == value:
            m |= 1 << q
    return m


def is_even_on(f: Sequence[int], states: int) -> bool:
    return all(f[q] % 2 == 0 for q in bits(states))


def is_s_tight(f: Sequence[int], S: int) -> bool:
    r = rank_of(f)
    if r % 2 == 0:
        return False
    if any(f[q] and not S >> q & 1 for q in range(len(f))):
        return False
    hit = {f[q] for q in bits(S)}
    return all(v in hit for v in range(1, r + 1, 2))


def ranking_le(f: Sequence[int], g: Sequence[int]) -> bool:
    return all(x <= y for x, y in zip(f, g))


def ranking_lt(f: Sequence[int], g: Sequence[int]) -> bool:
    return ranking_le(f, g) and tuple(f) != tuple(g)


def tight_rank_cap(S: int, F: int, n: int) -> int:
    """Largest rank an S-tight ranking can have (-1 if none exists)."""
    return min(2 * n - 1, 2 * bin(S & ~F).count("1") - 1)


def enumerate_tight(n, S, F, rank, upper=None, lower=None):
    """All S-tight rankings of exactly `rank`, within per-state bounds.

    `upper`/`lower` map state -> bound (None means [0, rank]). Accepting
    states only get even values. Output is in lexicographic order of the
    assignment to the states of S taken by ascending id.
    """
    if rank % 2 == 0 or rank < 1:
        return []
    order = bits(S)
    choices = []
    for q in order:
        hi = rank if upper is None else min(rank, upper[q])
        lo = 0 if lower is None else max(0, lower[q])
        step_from = lo
        if F >> q & 1:
            step_from += lo & 1
            vals = list(range(step_from, hi + 1, 2))
        else:
            vals = list(range(lo, hi + 1))
        if not vals:
            return []
        choices.append(vals)

    need_all = (1 << ((rank + 1) // 2)) - 1  # bit k stands for odd value 2k+1
    k = len(order)
    # suffix statistics on non-accepting states, used for pruning
    rem_count = [0] * (k + 1)
    rem_top = [-1] * (k + 1)
    for idx in range(k - 1, -1, -1):
        q = order[idx]
        nonacc = not F >> q & 1
        rem_count[idx] = rem_count[idx + 1] + nonacc
        top = max(v for v in choices[idx] if v % 2 == 1) if nonacc and any(v % 2 for v in choices[idx]) else -1
        rem_top[idx] = max(rem_top[idx + 1], top)

    out = []
    vals = [0] * n

    def go(idx, covered):
        missing = need_all & ~covered
        if missing:
            if bin(missing).count("1") > rem_count[idx]:
                return
            if 2 * (missing.bit_length() - 1) + 1 > rem_top[idx]:
                return
        if idx == k:
            out.append(tuple(vals))
            return
        q = order[idx]
        for v in choices[idx]:
            vals[q] = v
            go(idx + 1, covered | (1 << (v >> 1)) if v & 1 else covered)
        vals[q] = 0

    go(0, 0)
    return out


def enumerate_s_tight(S: int, F: int, n: int, upper=None, lower=None):
    """S-tight rankings with rank <= tight_rank_cap, ordered by (rank, assignment)."""
    out = []
    for r in range(1, tight_rank_cap(S, F, n) + 1, 2):
        out.extend(enumerate_tight(n, S, F, r, upper, lower))
    return out


def tight_core(f: Sequence[int], S: int) -> dict[int, int] | None:
    """One tight core: a state per odd value 1..rank, picked lowest id first."""
    if not is_s_tight(f, S):
        return None
    core = {}
    for q in bits(S):
        v = f[q]
        if v % 2 == 1 and v not in core.values():
            core[q] = v
    return core


def format_ranking(f: Sequence[int], S: int, names=None) -> str:
    name = (lambda q: names[q]) if names is not None else str
    return "{" + ", ".join(f"{name(q)}:{f[q]}" for q in bits(S)) + "}"
