"""Valid and invalid string generation for one regex.

Valid strings come from two interleaved sources: structural expansion of
the AST and DFA enumeration (breadth-first, then random accepting walks).
Invalid strings come from three: byte mutations of valid strings, random
walks ending in non-accepting states, and accepting walks of the
complement.  Every string is checked against the NFA before it is returned.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..regex.automata import Dfa, Nfa, complement, enumerate_accepting_strings, nfa_match
from ..regex.syntax import (
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
)

STAR_CAP = 8
STAR_CONTINUE = 2 / 3  # geometric, mean 2
MUTATION_OPS = (("substitute", 0.5), ("insert", 0.25), ("delete", 0.25))


class GeneratorBug(AssertionError):
    """A generator emitted a string with the wrong label."""


@dataclass(frozen=True)
class StringBudget:
    rng_seed: int = 0
    max_len: int = 12
    attempts_per_string: int = 20


@dataclass
class Generated:
    strings: list[bytes] = field(default_factory=list)
    sources: list[str] = field(default_factory=list)
    empty_language: bool = False
    universal_language: bool = False

    def add(self, s: bytes, source: str) -> None:
        self.strings.append(s)
        self.sources.append(source)


def _star_count(rng: random.Random) -> int:
    k = 0
    while k < STAR_CAP and rng.random() < STAR_CONTINUE:
        k += 1
    return k


def expand(node: RegexAst, rng: random.Random, alphabet, out: bytearray) -> bool:
    """Append one random member of ``node``'s language; False if stuck on an empty class."""
    if isinstance(node, (Literal, CharClass, Dot)):
        members = sorted(byte_set(node, alphabet))
        if not members:
            return False
        out.append(rng.choice(members))
        return True
    if isinstance(node, Empty):
        return True
    if isinstance(node, Concat):
        return all(expand(x, rng, alphabet, out) for x in node.items)
    if isinstance(node, Alternation):
        return expand(rng.choice(node.items), rng, alphabet, out)
    if isinstance(node, Optional):
        return expand(node.child, rng, alphabet, out) if rng.random() < 0.5 else True
    if not isinstance(node, (Star, Plus)):
        raise TypeError(f"unknown regex node {node!r}")
    k = _star_count(rng)
    if isinstance(node, Plus):
        k = max(k, 1)
    return all(expand(node.child, rng, alphabet, out) for _ in range(k))


def random_walk(dfa: Dfa, rng: random.Random, length: int, table) -> bytes | None:
    """Uniform-per-step walk of exactly ``length`` bytes ending in an accepting state."""
    if dfa.start not in table[length]:
        return None
    q, lo = dfa.start, dfa.alphabet.lo
    buf = bytearray()
    for remaining in range(length, 0, -1):
        want = table[remaining - 1]
        choices = [off for off, t in enumerate(dfa.delta[q]) if t in want]
        off = rng.choice(choices)
        buf.append(lo + off)
        q = dfa.delta[q][off]
    return bytes(buf)


def generate_valid_strings(
    ast: RegexAst, nfa: Nfa, dfa: Dfa, count: int, budget: StringBudget
) -> Generated:
    rng = random.Random(budget.rng_seed)
    res = Generated()
    table = dfa.accept_table(budget.max_len)
    lengths = [k for k in range(budget.max_len + 1) if dfa.start in table[k]]
    if not lengths:
        res.empty_language = True
        return res
    bfs = enumerate_accepting_strings(dfa, budget.max_len, max(1, count // 2)).strings
    horizon = len(bfs[-1]) if bfs else 0
    beyond = [k for k in lengths if k > horizon] or lengths
    seen: set[bytes] = set()

    def structural() -> bytes | None:
        buf = bytearray()
        if not expand(ast, rng, dfa.alphabet, buf) or len(buf) > budget.max_len:
            return None
        return bytes(buf)

    bfs_iter = iter(bfs)

    def enumerated() -> bytes | None:
        nxt = next(bfs_iter, None)
        if nxt is not None:
            return nxt
        return random_walk(dfa, rng, rng.choice(beyond), table)

    sources = (("structural", structural), ("enumeration", enumerated))
    misses = 0
    turn = 0
    while len(res.strings) < count and misses < budget.attempts_per_string * count:
        name, fn = sources[turn % 2]
        turn += 1
        s = fn()
        if s is None or s in seen:
            misses += 1
            continue
        if not nfa_match(nfa, s):
            raise GeneratorBug(f"{name} produced {s!r}, which the NFA rejects")
        seen.add(s)
        res.add(s, name)
    return res


def mutate_bytes(data: bytes, rng: random.Random, alphabet) -> bytes:
    buf = bytearray(data)
    lo, hi = alphabet.lo, alphabet.hi
    for _ in range(rng.randint(1, 3)):
        x = rng.random()
        if x < MUTATION_OPS[0][1] and buf:
            buf[rng.randrange(len(buf))] = rng.randint(lo, hi)
        elif x < MUTATION_OPS[0][1] + MUTATION_OPS[1][1] or not buf:
            buf.insert(rng.randint(0, len(buf)), rng.randint(lo, hi))
        else:
            del buf[rng.randrange(len(buf))]
    return bytes(buf)


def rejecting_walk(dfa: Dfa, rng: random.Random, length: int, live_bias: float = 0.8) -> bytes:
    """Random walk preferring live successors; may end anywhere."""
    q, lo = dfa.start, dfa.alphabet.lo
    live = dfa.live
    buf = bytearray()
    for _ in range(length):
        row = dfa.delta[q]
        live_offs = [o for o, t in enumerate(row) if t in live]
        if live_offs and rng.random() < live_bias:
            off = rng.choice(live_offs)
        else:
            off = rng.randrange(len(row))
        buf.append(lo + off)
        q = row[off]
    return bytes(buf)


def generate_invalid_strings(
    ast: RegexAst, nfa: Nfa, dfa: Dfa, valid_pool: list[bytes], count: int, budget: StringBudget
) -> Generated:
    del ast  # the sources below need only the automata
    rng = random.Random(budget.rng_seed ^ 0x5EED)
    res = Generated()
    comp = complement(dfa)
    ctable = comp.accept_table(budget.max_len)
    clengths = [k for k in range(budget.max_len + 1) if comp.start in ctable[k]]
    if not clengths:
        res.universal_language = True
        return res
    seen: set[bytes] = set()

    def mutation() -> bytes | None:
        if not valid_pool:
            return None
        s = mutate_bytes(rng.choice(valid_pool), rng, dfa.alphabet)
        if len(s) > budget.max_len or nfa_match(nfa, s):
            return None  # accidental match, discarded
        return s

    def walk() -> bytes | None:
        s = rejecting_walk(dfa, rng, rng.randint(0, budget.max_len))
        return None if dfa.accepts(s) else s

    def comp_walk() -> bytes | None:
        return random_walk(comp, rng, rng.choice(clengths), ctable)

    sources = (("mutation", mutation), ("rejecting-walk", walk), ("complement", comp_walk))
    misses = 0
    turn = 0
    while len(res.strings) < count and misses < budget.attempts_per_string * count:
        name, fn = sources[turn % 3]
        turn += 1
        s = fn()
        if s is None or s in seen:
            misses += 1
            continue
        if nfa_match(nfa, s):
            raise GeneratorBug(f"{name} produced {s!r}, which the NFA accepts")
        seen.add(s)
        res.add(s, name)
    return res
