"""Text formats: the line-based BA format and a subset of HOA v1."""

from __future__ import annotations

import re

from .automaton import BuchiAutomaton


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


_BA_TRANS = re.compile(r"([^,\[\]]+?)\s*,\s*\[([^\[\]]+)\]\s*->\s*\[([^\[\]]+)\]")
_BA_STATE = re.compile(r"\[([^\[\]]+)\]")


def parse_ba(text: str) -> BuchiAutomaton:
    states: dict[str, int] = {}
    symbols: dict[str, int] = {}
    edges = []
    initial, accepting = [], []
    seen_any = False

    def intern(table, key):
        if key not in table:
            table[key] = len(table)
        return table[key]

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        seen_any = True
        m = _BA_TRANS.fullmatch(line)
        if m:
            sym, src, dst = (g.strip() for g in m.groups())
            edges.append((intern(states, src), intern(symbols, sym), intern(states, dst)))
            continue
        m = _BA_STATE.fullmatch(line)
        if m:
            q = intern(states, m.group(1).strip())
            (accepting if edges else initial).append(q)
            continue
        raise ParseError(f"malformed line {line!r}", lineno)

    if not seen_any:
        raise ParseError("empty input")
    if not symbols:
        raise ParseError("no transitions, so the alphabet would be empty")
    if not initial:
        initial = [edges[0][0]]
    names = tuple(states)
    return BuchiAutomaton.from_edges(len(names), tuple(symbols), edges, initial, accepting, names)


def _name_key(name: str):
    return (0, int(name), "") if name.isdigit() else (1, 0, name)


def serialize_ba(aut: BuchiAutomaton, single_init: bool = False) -> str:
    """Lines are ordered by name (numerically for numeric names).

    Parsing renumbers states and symbols by first appearance, so ordering by
    name is what makes serialize(parse(text)) a fixpoint.
    """
    if single_init and len(aut.initial) > 1:
        raise ValueError("BA output with --single-init needs exactly one initial state")
    state = [_name_key(aut.name(q)) for q in range(aut.num_states)]
    sym = [_name_key(s) for s in aut.alphabet]
    lines = [f"[{aut.name(q)}]" for q in sorted(aut.initial, key=state.__getitem__)]
    edges = sorted(aut.edges(), key=lambda e: (state[e[0]], sym[e[1]], state[e[2]]))
    lines += [f"{aut.alphabet[a]},[{aut.name(q)}]->[{aut.name(d)}]" for q, a, d in edges]
    lines += [f"[{aut.name(q)}]" for q in sorted(aut.accepting, key=state.__getitem__)]
    return "\n".join(lines) + "\n"


# --- HOA -------------------------------------------------------------------

_HOA_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|/\*.*?\*/)
    |(?P<str>"(?:[^"\\]|\\.)*")
    |(?P<header>[A-Za-z_][A-Za-z0-9_-]*:)
    |(?P<marker>--BODY--|--END--|--ABORT--)
    |(?P<int>\d+)
    |(?P<ident>[A-Za-z_@][A-Za-z0-9_-]*)
    |(?P<punct>[\[\]{}()!&|])
    """,
    re.VERBOSE | re.DOTALL,
)


def _hoa_tokens(text):
    pos, line = 0, 1
    out = []
    while pos < len(text):
        m = _HOA_TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "str":
                value = re.sub(r"\\(.)", r"\1", value[1:-1])
            out.append((kind, value, line))
        line += m.group().count("\n")
        pos = m.end()
    return out


class _LabelParser:
    """Boolean label expressions, evaluated to the set of satisfying assignments."""

    def __init__(self, tokens, num_ap):
        self.toks = tokens
        self.i = 0
        self.universe = frozenset(range(1 << num_ap))
        self.num_ap = num_ap

    def peek(self):
        return self.toks[self.i][1] if self.i < len(self.toks) else None

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def parse(self):
        out = self.disj()
        if self.i != len(self.toks):
            raise ParseError("trailing tokens in label", self.toks[self.i][2])
        return out

    def disj(self):
        out = self.conj()
        while self.peek() == "|":
            self.take()
            out = out | self.conj()
        return out

    def conj(self):
        out = self.atom()
        while self.peek() == "&":
            self.take()
            out = out & self.atom()
        return out

    def atom(self):
        if self.i >= len(self.toks):
            raise ParseError("incomplete label")
        kind, value, line = self.take()
        if value == "!":
            return self.universe - self.atom()
        if value == "(":
            out = self.disj()
            if self.peek() != ")":
                raise ParseError("missing ')' in label", line)
            self.take()
            return out
        if kind == "ident" and value == "t":
            return self.universe
        if kind == "ident" and value == "f":
            return frozenset()
        if kind == "int":
            ap = int(value)
            if ap >= self.num_ap:
                raise ParseError(f"atomic proposition {ap} out of range", line)
            return frozenset(j for j in self.universe if j >> ap & 1)
        raise ParseError(f"unsupported label token {value!r}", line)


def _assignment_name(j, aps):
    if not aps:
        return "t"
    return "&".join(ap if j >> i & 1 else "!" + ap for i, ap in enumerate(aps))


def parse_hoa(text: str) -> BuchiAutomaton:
    toks = _hoa_tokens(text)
    if not toks:
        raise ParseError("empty input")
    i = 0
    num_states = None
    starts = []
    aps: list[str] = []
    acceptance_ok = False
    acc_name_ok = False
    acceptance_seen = False
    symbol_names = None

    def values(start):
        j = start
        while j < len(toks) and toks[j][0] not in ("header", "marker"):
            j += 1
        return toks[start:j], j

    if toks[0][1] != "HOA:":
        raise ParseError("missing 'HOA:' header", toks[0][2])
    while i < len(toks) and toks[i][1] != "--BODY--":
        kind, key, line = toks[i]
        if kind != "header":
            raise ParseError(f"unexpected token {key!r} in header", line)
        vals, i = values(i + 1)
        words = [v for _, v, _ in vals]
        if key == "HOA:":
            if words != ["v1"]:
                raise ParseError("only HOA v1 is supported", line)
        elif key == "States:":
            num_states = int(words[0])
        elif key == "Start:":
            if "&" in words:
                raise ParseError("alternation is not supported", line)
            starts.extend(int(w) for w in words)
        elif key == "AP:":
            count = int(words[0])
            aps = words[1:]
            if len(aps) != count:
                raise ParseError("AP count does not match the listed names", line)
        elif key == "Acceptance:":
            acceptance_seen = True
            acceptance_ok = "".join(words) == "1Inf(0)"
        elif key == "acc-name:":
            acc_name_ok = words[:1] == ["Buchi"]
            if not acc_name_ok:
                raise ParseError("unsupported acceptance", line)
        elif key == "alphabet:":
            symbol_names = words
        elif key in ("Alias:",):
            raise ParseError("aliases are not supported", line)
    if i >= len(toks):
        raise ParseError("missing --BODY--")
    if not (acceptance_ok or (acc_name_ok and not acceptance_seen)):
        raise ParseError("unsupported acceptance")
    i += 1

    num_ap = len(aps)
    k = 1 << num_ap
    names = symbol_names if symbol_names is not None else [_assignment_name(j, aps) for j in range(k)]
    if len(names) > k:
        raise ParseError("alphabet header lists more symbols than AP assignments")

    rows: dict[int, list[set]] = {}
    accepting = set()
    state_names: dict[int, str] = {}
    current = None
    edge_acc: dict[int, list[bool]] = {}
    implicit: dict[int, int] = {}

    def row(q):
        if q not in rows:
            rows[q] = [set() for _ in range(k)]
        return rows[q]

    while i < len(toks) and toks[i][1] != "--END--":
        kind, value, line = toks[i]
        if value == "--ABORT--":
            raise ParseError("aborted automaton", line)
        if value == "State:":
            i += 1
            if i < len(toks) and toks[i][1] == "[":
                raise ParseError("state labels are not supported", line)
            current = int(toks[i][1])
            row(current)
            i += 1
            if i < len(toks) and toks[i][0] == "str":
                state_names[current] = toks[i][1]
                i += 1
            if i < len(toks) and toks[i][1] == "{":
                j = i + 1
                while toks[j][1] != "}":
                    j += 1
                if any(t[1] == "0" for t in toks[i + 1:j]):
                    accepting.add(current)
                i = j + 1
            continue
        if current is None:
            raise ParseError("edge before any State:", line)
        label = None
        if value == "[":
            j = i + 1
            while j < len(toks) and toks[j][1] != "]":
                j += 1
            label = _LabelParser(toks[i + 1:j], num_ap).parse()
            i = j + 1
        else:
            if current in implicit and implicit[current] < 0:
                raise ParseError("mixing implicit and explicit labels", line)
        if i >= len(toks) or toks[i][0] != "int":
            raise ParseError("expected a destination state", toks[min(i, len(toks) - 1)][2])
        dst = int(toks[i][1])
        i += 1
        if i < len(toks) and toks[i][1] == "&":
            raise ParseError("alternation is not supported", line)
        marked = False
        if i < len(toks) and toks[i][1] == "{":
            j = i + 1
            while toks[j][1] != "}":
                j += 1
            marked = any(t[1] == "0" for t in toks[i + 1:j])
            i = j + 1
        if label is None:
            pos = implicit.get(current, 0)
            if pos >= k:
                raise ParseError("too many implicitly labelled edges", line)
            label = {pos}
            implicit[current] = pos + 1
        else:
            if implicit.get(current, 0) > 0:
                raise ParseError("mixing implicit and explicit labels", line)
            implicit[current] = -1
        for a in label:
            row(current)[a].add(dst)
        edge_acc.setdefault(current, []).append(marked)
    if i >= len(toks):
        raise ParseError("missing --END--")

    for q, count in implicit.items():
        if count > 0 and count != k:
            raise ParseError(f"state {q} has {count} implicit edges, expected {k}")
    for q, marks in edge_acc.items():
        if all(marks):
            accepting.add(q)
        elif any(marks):
            raise ParseError(f"state {q}: transition-based acceptance is not supported")

    if num_states is None:
        num_states = max(list(rows) + starts, default=-1) + 1
    n = num_states
    table = []
    for q in range(n):
        r = rows.get(q, [set() for _ in range(k)])
        if any(d >= n for s in r for d in s):
            raise ParseError("edge target out of range")
        table.append(tuple(frozenset(s) for s in r[: len(names)]))
    sn = None
    if state_names:
        sn = tuple(state_names.get(q, str(q)) for q in range(n))
    return BuchiAutomaton(n, tuple(names), tuple(table), frozenset(starts), frozenset(accepting), sn)


def _quote(s):
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_hoa(aut: BuchiAutomaton) -> str:
    k = len(aut.alphabet)
    num_ap = (k - 1).bit_length()
    aps = [f"p{i}" for i in range(num_ap)]
    out = ["HOA: v1", f"States: {aut.num_states}"]
    out += [f"Start: {q}" for q in sorted(aut.initial)]
    out.append(f"AP: {num_ap}" + "".join(" " + _quote(p) for p in aps))
    out.append("acc-name: Buchi")
    out.append("Acceptance: 1 Inf(0)")
    out.append("properties: explicit-labels state-acc")
    # symbols past |alphabet| are dead assignments: no edge ever carries them
    out.append("alphabet:" + "".join(" " + _quote(s) for s in aut.alphabet))
    out.append("--BODY--")
    for q in range(aut.num_states):
        head = f"State: {q}"
        if aut.state_names is not None:
            head += " " + _quote(aut.state_names[q])
        if q in aut.accepting:
            head += " {0}"
        out.append(head)
        for a, succ in enumerate(aut.transitions[q]):
            if num_ap == 0:
                label = "t"
            else:
                label = "&".join(str(i) if a >> i & 1 else f"!{i}" for i in range(num_ap))
            for d in sorted(succ):
                out.append(f"[{label}] {d}")
    out.append("--END--")
    return "\n".join(out) + "\n"


def parse_automaton(text: str) -> BuchiAutomaton:
    """Dispatch on content: HOA if it starts with the HOA header, BA otherwise."""
    if text.lstrip().startswith("HOA:"):
        return parse_hoa(text)
    return parse_ba(text)


def serialize(aut: BuchiAutomaton, fmt: str = "ba", single_init: bool = False) -> str:
    if fmt == "ba":
        return serialize_ba(aut, single_init)
    if fmt == "hoa":
        return serialize_hoa(aut)
    raise ValueError(f"unknown format {fmt!r}")
