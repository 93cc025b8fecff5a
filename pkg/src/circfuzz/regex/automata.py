"""Thompson NFA, subset-construction DFA, complement and enumeration."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple

from ..errors import ResourceError
from .syntax import (
    DEFAULT_ALPHABET,
    Alphabet,
    Alternation,
    CharClass,
    Concat,
    Dot,
    Empty,
    Literal,
    Optional,
    Plus,
    RegexAst,
    Star,
    byte_set,
    parse_regex,
)

DEFAULT_STATE_CAP = 4096


@dataclass(frozen=True)
class Nfa:
    states: int
    start: int
    accepting: frozenset[int]
    transitions: tuple[tuple[int, frozenset[int], int], ...]
    epsilon: tuple[tuple[int, int], ...]
    alphabet: Alphabet = DEFAULT_ALPHABET

    @cached_property
    def _eps_adj(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.states)]
        for a, b in self.epsilon:
            adj[a].append(b)
        return tuple(tuple(x) for x in adj)

    @cached_property
    def _moves(self) -> tuple[tuple[tuple[frozenset[int], int], ...], ...]:
        adj: list[list[tuple[frozenset[int], int]]] = [[] for _ in range(self.states)]
        for a, bs, b in self.transitions:
            adj[a].append((bs, b))
        return tuple(tuple(x) for x in adj)

    def closure(self, states) -> frozenset[int]:
        seen = set(states)
        stack = list(seen)
        adj = self._eps_adj
        while stack:
            s = stack.pop()
            for t in adj[s]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)

    def step(self, states: frozenset[int], byte: int) -> frozenset[int]:
        moves = self._moves
        return self.closure(t for s in states for bs, t in moves[s] if byte in bs)


class _Builder:
    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        self.n = 0
        self.trans: list[tuple[int, frozenset[int], int]] = []
        self.eps: list[tuple[int, int]] = []

    def new(self) -> int:
        self.n += 1
        return self.n - 1

    def frag(self, node: RegexAst) -> tuple[int, int]:
        """Thompson fragment with a single entry and a single exit state."""
        if isinstance(node, (Literal, CharClass, Dot)):
            s, t = self.new(), self.new()
            bs = byte_set(node, self.alphabet)
            if bs:
                self.trans.append((s, bs, t))
            return s, t
        if isinstance(node, Empty):
            s, t = self.new(), self.new()
            self.eps.append((s, t))
            return s, t
        if isinstance(node, Concat):
            first_s, prev_t = self.frag(node.items[0])
            for item in node.items[1:]:
                s, t = self.frag(item)
                self.eps.append((prev_t, s))
                prev_t = t
            return first_s, prev_t
        if isinstance(node, Alternation):
            s, t = self.new(), self.new()
            for item in node.items:
                a, b = self.frag(item)
                self.eps.append((s, a))
                self.eps.append((b, t))
            return s, t
        s, t = self.new(), self.new()
        a, b = self.frag(node.child)
        self.eps.append((s, a))
        self.eps.append((b, t))
        if isinstance(node, (Star, Optional)):
            self.eps.append((s, t))
        if isinstance(node, (Star, Plus)):
            self.eps.append((b, a))
        return s, t


def build_nfa(ast: RegexAst, alphabet: Alphabet = DEFAULT_ALPHABET) -> Nfa:
    b = _Builder(alphabet)
    s, t = b.frag(ast)
    return Nfa(b.n, s, frozenset([t]), tuple(b.trans), tuple(b.eps), alphabet)


def nfa_match(nfa: Nfa, data: bytes) -> bool:
    """Whole-string membership by subset simulation; out-of-alphabet bytes reject."""
    if not nfa.alphabet.contains_all(data):
        return False
    cur = nfa.closure([nfa.start])
    for byte in data:
        if not cur:
            return False
        cur = nfa.step(cur, byte)
    return not cur.isdisjoint(nfa.accepting)


@dataclass(frozen=True)
class Dfa:
    """Complete DFA; ``delta[q][b - alphabet.lo]`` is the successor of ``q`` on ``b``.

    ``dead`` is the absorbing non-accepting sink (accepting after complement).
    It is always present, even when unreachable.
    """

    states: int
    start: int
    accepting: frozenset[int]
    delta: tuple[tuple[int, ...], ...]
    alphabet: Alphabet
    dead: int

    def next(self, q: int, byte: int) -> int:
        return self.delta[q][byte - self.alphabet.lo]

    def run(self, data: bytes) -> int | None:
        """Final state, or ``None`` if ``data`` leaves the alphabet."""
        if not self.alphabet.contains_all(data):
            return None
        q, lo = self.start, self.alphabet.lo
        for byte in data:
            q = self.delta[q][byte - lo]
        return q

    def accepts(self, data: bytes) -> bool:
        q = self.run(data)
        return q is not None and q in self.accepting

    @cached_property
    def edge_groups(self) -> tuple[dict[int, tuple[int, ...]], ...]:
        """Per state: successor -> sorted bytes leading there."""
        out = []
        lo = self.alphabet.lo
        for row in self.delta:
            groups: dict[int, list[int]] = {}
            for off, t in enumerate(row):
                groups.setdefault(t, []).append(lo + off)
            out.append({t: tuple(bs) for t, bs in sorted(groups.items())})
        return tuple(out)

    @cached_property
    def live(self) -> frozenset[int]:
        """States from which some accepting state is reachable."""
        rev: list[set[int]] = [set() for _ in range(self.states)]
        for q, row in enumerate(self.delta):
            for t in set(row):
                rev[t].add(q)
        seen = set(self.accepting)
        stack = list(seen)
        while stack:
            t = stack.pop()
            for q in rev[t]:
                if q not in seen:
                    seen.add(q)
                    stack.append(q)
        return frozenset(seen)

    def accept_table(self, max_len: int) -> list[frozenset[int]]:
        """``table[k]`` = states that reach an accepting state in exactly ``k`` steps."""
        table = [frozenset(self.accepting)]
        succ = [frozenset(row) for row in self.delta]
        for _ in range(max_len):
            prev = table[-1]
            table.append(frozenset(q for q in range(self.states) if not succ[q].isdisjoint(prev)))
        return table


def _byte_classes(nfa: Nfa) -> list[tuple[int, ...]]:
    """Partition the alphabet into bytes no NFA transition can tell apart."""
    sets = sorted({bs for _, bs, _ in nfa.transitions}, key=lambda s: sorted(s))
    sig: dict[tuple[int, ...], list[int]] = {}
    for b in nfa.alphabet:
        key = tuple(i for i, s in enumerate(sets) if b in s)
        sig.setdefault(key, []).append(b)
    return sorted((tuple(v) for v in sig.values()), key=lambda c: c[0])


def determinize(nfa: Nfa, cap: int = DEFAULT_STATE_CAP) -> Dfa:
    classes = _byte_classes(nfa)
    start = nfa.closure([nfa.start])
    index: dict[frozenset[int], int] = {start: 0}
    order = [start]
    rows: list[list[int]] = []
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        row = []
        for cls in classes:
            nxt = nfa.step(cur, cls[0])
            if nxt not in index:
                if len(index) >= cap:
                    raise ResourceError(f"DFA exceeds {cap} states")
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            row.append(index[nxt])
        rows.append(row)
    accepting = {i for i, s in enumerate(order) if not s.isdisjoint(nfa.accepting)}
    class_of = {}
    for ci, cls in enumerate(classes):
        for b in cls:
            class_of[b] = ci
    raw = [tuple(row[class_of[b]] for b in nfa.alphabet) for row in rows]
    return _canonicalize(len(order), 0, accepting, raw, nfa.alphabet, cap)


def _canonicalize(n: int, start: int, accepting: set[int], raw, alphabet: Alphabet, cap: int) -> Dfa:
    """Merge states that cannot reach acceptance into one sink, drop unreachable
    states and renumber in breadth-first byte order with the sink last."""
    rev: list[set[int]] = [set() for _ in range(n)]
    for q, row in enumerate(raw):
        for t in set(row):
            rev[t].add(q)
    live = set(accepting)
    stack = list(live)
    while stack:
        t = stack.pop()
        for q in rev[t]:
            if q not in live:
                live.add(q)
                stack.append(q)
    number: dict[int, int] = {}
    seq: list[int] = []
    if start in live:
        number[start] = 0
        seq.append(start)
        queue = deque([start])
        while queue:
            q = queue.popleft()
            for t in raw[q]:
                if t in live and t not in number:
                    number[t] = len(seq)
                    seq.append(t)
                    queue.append(t)
    dead = len(seq)
    if dead + 1 > cap:
        raise ResourceError(f"DFA exceeds {cap} states")
    delta = [tuple(number.get(t, dead) if t in live else dead for t in raw[q]) for q in seq]
    delta.append(tuple([dead] * len(alphabet)))
    acc = frozenset(number[q] for q in seq if q in accepting)
    return Dfa(dead + 1, 0 if seq else dead, acc, tuple(delta), alphabet, dead)


def complement(dfa: Dfa) -> Dfa:
    flipped = frozenset(q for q in range(dfa.states) if q not in dfa.accepting)
    return Dfa(dfa.states, dfa.start, flipped, dfa.delta, dfa.alphabet, dfa.dead)


def compile_regex(pattern: str | bytes, alphabet: Alphabet = DEFAULT_ALPHABET, cap: int = DEFAULT_STATE_CAP):
    """Parse, build the NFA and determinize: returns ``(ast, nfa, dfa)``."""
    ast = parse_regex(pattern, alphabet)
    nfa = build_nfa(ast, alphabet)
    return ast, nfa, determinize(nfa, cap)


class Enumeration(NamedTuple):
    strings: list[bytes]
    empty: bool  # no accepted string of length <= max_len


def enumerate_accepting_strings(dfa: Dfa, max_len: int, max_count: int) -> Enumeration:
    """Accepted strings by increasing length, lexicographic within a length."""
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    table = dfa.accept_table(max_len)
    empty = not any(dfa.start in table[k] for k in range(max_len + 1))
    out: list[bytes] = []
    for length in range(max_len + 1):
        if len(out) >= max_count:
            break
        if dfa.start not in table[length]:
            continue
        for s in _lex_walk(dfa, table, length):
            out.append(s)
            if len(out) >= max_count:
                break
    return Enumeration(out, empty)


def _lex_walk(dfa: Dfa, table, length: int) -> Iterator[bytes]:
    lo = dfa.alphabet.lo
    buf = bytearray()

    def rec(q: int, remaining: int):
        if remaining == 0:
            yield bytes(buf)
            return
        want = table[remaining - 1]
        row = dfa.delta[q]
        for off, t in enumerate(row):
            if t in want:
                buf.append(lo + off)
                yield from rec(t, remaining - 1)
                buf.pop()

    yield from rec(dfa.start, length)


def enumerate_nfa_paths(nfa: Nfa, max_len: int, max_count: int) -> list[bytes]:
    """Same ordering as :func:`enumerate_accepting_strings`, walking NFA state sets."""
    out: list[bytes] = []
    start = nfa.closure([nfa.start])
    memo: dict[tuple[frozenset[int], int], bool] = {}

    def can(states: frozenset[int], k: int) -> bool:
        key = (states, k)
        if key not in memo:
            if k == 0:
                memo[key] = not states.isdisjoint(nfa.accepting)
            else:
                memo[key] = any(can(nfa.step(states, b), k - 1) for b in nfa.alphabet if states)
        return memo[key]

    def rec(states, remaining, buf):
        if remaining == 0:
            out.append(bytes(buf))
            return
        for b in nfa.alphabet:
            if len(out) >= max_count:
                return
            nxt = nfa.step(states, b)
            if nxt and can(nxt, remaining - 1):
                buf.append(b)
                rec(nxt, remaining - 1, buf)
                buf.pop()

    for length in range(max_len + 1):
        if len(out) >= max_count:
            break
        if can(start, length):
            rec(start, length, bytearray())
    return out[:max_count]
