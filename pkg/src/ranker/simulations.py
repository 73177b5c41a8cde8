"""Direct simulation and the static odd-rank relation.

Relations are stored as one bit mask per row: q is in rows[p] iff (p, q)
is related.
"""

from __future__ import annotations

from dataclasses import dataclass

from .automaton import BuchiAutomaton, bits
from .rankings import odd_mask


@dataclass(frozen=True)
class Relation:
    rows: tuple[int, ...]
    kind: str = "direct-sim"

    def __contains__(self, pair) -> bool:
        p, q = pair
        return bool(self.rows[p] >> q & 1)

    def pairs(self):
        for p, row in enumerate(self.rows):
            for q in bits(row):
                yield p, q

    def __len__(self) -> int:
        return sum(bin(r).count("1") for r in self.rows)

    @classmethod
    def from_pairs(cls, n, pairs, kind="direct-sim"):
        rows = [0] * n
        for p, q in pairs:
            rows[p] |= 1 << q
        return cls(tuple(rows), kind)


def direct_simulation(aut: BuchiAutomaton) -> Relation:
    n, k = aut.num_states, len(aut.alphabet)
    F = aut.accepting_mask
    full = (1 << n) - 1
    rows = [full if not F >> p & 1 else F for p in range(n)]
    succ = aut.succ_mask
    changed = True
    while changed:
        changed = False
        for p in range(n):
            row = rows[p]
            for q in bits(row):
                for a in range(k):
                    target = succ[q][a]
                    if any(not rows[x] & target for x in bits(succ[p][a])):
                        row &= ~(1 << q)
                        break
            if row != rows[p]:
                rows[p] = row
                changed = True
    return Relation(tuple(rows), "direct-sim")


def odd_rank_relation(aut: BuchiAutomaton, dirsim: Relation | None = None) -> Relation:
    """Least relation containing direct simulation and closed under the
    successor rule: (p, r) whenever, for every symbol, every non-accepting
    successor of p is related to every non-accepting successor of r.
    Empty successor sets satisfy the rule vacuously."""
    if dirsim is None:
        dirsim = direct_simulation(aut)
    n, k = aut.num_states, len(aut.alphabet)
    keep = ~aut.accepting_mask
    nonacc = [[aut.succ_mask[p][a] & keep for a in range(k)] for p in range(n)]
    rows = list(dirsim.rows)
    changed = True
    while changed:
        changed = False
        for p in range(n):
            for r in range(n):
                if rows[p] >> r & 1:
                    continue
                if all(
                    rows[x] & nonacc[r][a] == nonacc[r][a]
                    for a in range(k)
                    for x in bits(nonacc[p][a])
                ):
                    rows[p] |= 1 << r
                    changed = True
    return Relation(tuple(rows), "odd-rank")


def transitive_closure(rows):
    rows = list(rows)
    for mid in range(len(rows)):
        bit = 1 << mid
        row_mid = rows[mid]
        for i in range(len(rows)):
            if rows[i] & bit:
                rows[i] |= row_mid
    return rows


def rank_sim_closure(rel: Relation, f) -> Relation:
    """Restrict to pairs with both ranks odd, then close transitively."""
    odd = odd_mask(f)
    rows = [rel.rows[p] & odd if odd >> p & 1 else 0 for p in range(len(rel.rows))]
    return Relation(tuple(transitive_closure(rows)), rel.kind)


def rank_sim_ok(S: int, f, oddrank: Relation) -> bool:
    closure = rank_sim_closure(oddrank, f)
    for p in bits(S):
        for r in bits(closure.rows[p] & S):
            if f[p] > f[r]:
                return False
    return True


def purge_di_ok(S: int, f, dirsim: Relation) -> bool:
    for p in bits(S):
        for r in bits(dirsim.rows[p] & S):
            if f[p] > f[r]:
                return False
    return True
