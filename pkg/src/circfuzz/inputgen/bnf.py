"""Weighted BNF grammars and random derivation.

Dialect::

    # comment
    <name> ::= alt | alt {2.5} | ...
    <digit> ::= "0".."9"

An alternative is a sequence of ``<nonterminal>`` references and
double-quoted terminals (``\\"`` and ``\\\\`` escape inside quotes).  A trailing
``{w}`` sets the alternative's weight (default 1).  ``"a".."z"`` as a whole
alternative expands to one single-character alternative per byte.  Rules may
continue on following lines that start with ``|``.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass

from ..errors import GrammarError

Symbol = tuple[str, str]  # ("t", text) or ("n", name)


@dataclass(frozen=True)
class Alternative:
    symbols: tuple[Symbol, ...]
    weight: float = 1.0


@dataclass(frozen=True)
class Grammar:
    rules: dict[str, tuple[Alternative, ...]]
    start: str

    def __post_init__(self) -> None:
        _validate(self)

    @property
    def min_depth(self) -> dict[str, int]:
        cached = self.__dict__.get("_min_depth")
        if cached is None:
            cached = _min_depths(self.rules)
            object.__setattr__(self, "_min_depth", cached)
        return cached

    def alt_depth(self, alt: Alternative) -> int:
        md = self.min_depth
        return 1 + max((md[name] for kind, name in alt.symbols if kind == "n"), default=0)

    def minimal_alternatives(self, name: str) -> tuple[Alternative, ...]:
        target = self.min_depth[name]
        return tuple(a for a in self.rules[name] if self.alt_depth(a) == target)


_TOKEN = re.compile(r'\s*(?:(<[^<>\s]+>)|("(?:[^"\\]|\\.)*")|(\{[^}]*\})|(\.\.)|(\|))')


def _unquote(tok: str) -> str:
    return re.sub(r"\\(.)", r"\1", tok[1:-1])


def parse_bnf(text: str, start: str | None = None) -> Grammar:
    rules: dict[str, list[Alternative]] = {}
    order: list[str] = []
    logical: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("|") and logical:
            logical[-1] = (logical[-1][0], logical[-1][1] + " " + line)
        else:
            logical.append((lineno, line))
    for lineno, line in logical:
        head, sep, body = line.partition("::=")
        head = head.strip()
        if not sep or not re.fullmatch(r"<[^<>\s]+>", head):
            raise GrammarError(f"line {lineno}: expected '<name> ::= ...'")
        name = head[1:-1]
        if name in rules:
            raise GrammarError(f"line {lineno}: rule {name} defined twice")
        rules[name] = _parse_body(body, name, lineno)
        order.append(name)
    if not rules:
        raise GrammarError("grammar has no rules")
    return Grammar({k: tuple(v) for k, v in rules.items()}, start or order[0])


def _parse_body(body: str, name: str, lineno: int) -> list[Alternative]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while body[pos:].strip():
        m = _TOKEN.match(body, pos)
        if not m:
            raise GrammarError(f"line {lineno}: syntax error in rule {name} near {body[pos:].strip()[:20]!r}")
        pos = m.end()
        nt, term, w, dots, bar = m.groups()
        if nt:
            tokens.append(("n", nt[1:-1]))
        elif term:
            tokens.append(("t", _unquote(term)))
        elif w:
            tokens.append(("w", w[1:-1]))
        elif dots:
            tokens.append(("..", ""))
        else:
            tokens.append(("|", ""))

    groups: list[list[tuple[str, str]]] = [[]]
    for tok in tokens:
        if tok[0] == "|":
            groups.append([])
        else:
            groups[-1].append(tok)

    alts: list[Alternative] = []
    for group in groups:
        weight = 1.0
        if group and group[-1][0] == "w":
            try:
                weight = float(group.pop()[1])
            except ValueError:
                raise GrammarError(f"line {lineno}: bad weight in rule {name}") from None
            if not (weight > 0 and math.isfinite(weight)):
                raise GrammarError(f"line {lineno}: weight must be positive in rule {name}")
        if not group:
            raise GrammarError(f"line {lineno}: empty alternative in rule {name}")
        if any(k == "w" for k, _ in group):
            raise GrammarError(f"line {lineno}: weight must end its alternative in rule {name}")
        if any(k == ".." for k, _ in group):
            kinds = [k for k, _ in group]
            lo, hi = group[0][1], group[-1][1]
            if kinds != ["t", "..", "t"] or len(lo) != 1 or len(hi) != 1 or lo > hi:
                raise GrammarError(f"line {lineno}: bad character range in rule {name}")
            alts.extend(Alternative((("t", chr(c)),), weight) for c in range(ord(lo), ord(hi) + 1))
            continue
        alts.append(Alternative(tuple(group), weight))
    return alts


def _min_depths(rules: dict[str, tuple[Alternative, ...]]) -> dict[str, int]:
    depth: dict[str, float] = {n: math.inf for n in rules}
    changed = True
    while changed:
        changed = False
        for name, alts in rules.items():
            for alt in alts:
                d = 1 + max((depth.get(s, math.inf) for k, s in alt.symbols if k == "n"), default=0)
                if d < depth[name]:
                    depth[name] = d
                    changed = True
    return {k: int(v) if v != math.inf else -1 for k, v in depth.items()}


def _validate(g: Grammar) -> None:
    if g.start not in g.rules:
        raise GrammarError(f"start symbol {g.start} is not defined")
    for name, alts in g.rules.items():
        if not alts:
            raise GrammarError(f"rule {name} has no alternatives")
        for alt in alts:
            for kind, sym in alt.symbols:
                if kind == "n" and sym not in g.rules:
                    raise GrammarError(f"undefined nonterminal {sym} (used in rule {name})")
    for name, d in _min_depths(g.rules).items():
        if d < 0:
            raise GrammarError(f"unproductive rule {name}: it cannot derive a finite string")


def restrict(grammar: Grammar, allowed: set[int] | frozenset[int], nonterminals) -> Grammar:
    """Drop alternatives of the given character rules whose terminals use
    bytes outside ``allowed``; then drop anything left unproductive.

    A terminal like ``a-z`` (a class range) is kept only if both ends are allowed.
    """
    nts = set(nonterminals)

    def ok(alt: Alternative) -> bool:
        for kind, text in alt.symbols:
            if kind != "t":
                continue
            data = text.encode()
            if len(data) == 3 and data[1:2] == b"-":
                data = data[:1] + data[2:]
            elif data[:1] == b"\\":
                data = data[1:]
            if any(b not in allowed for b in data):
                return False
        return True

    rules = {n: tuple(a for a in alts if n not in nts or ok(a)) for n, alts in grammar.rules.items()}
    while True:
        rules = {n: a for n, a in rules.items() if a}
        depth = _min_depths(rules) if rules else {}
        dead = {n for n, d in depth.items() if d < 0}
        pruned = {
            n: tuple(a for a in alts if all(k != "n" or (s in rules and s not in dead) for k, s in a.symbols))
            for n, alts in rules.items()
            if n not in dead
        }
        if pruned == rules:
            break
        rules = pruned
    if grammar.start not in rules:
        raise GrammarError("restricted grammar has no derivation")
    return Grammar(rules, grammar.start)


@dataclass(frozen=True)
class GenBudget:
    max_depth: int = 8
    max_regex_len: int = 40
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.max_depth <= 0 or self.max_regex_len <= 0 or self.rng_seed < 0:
            raise GrammarError("budget values must be positive")


def _choose(rng: random.Random, alts) -> Alternative:
    total = sum(a.weight for a in alts)
    x = rng.random() * total
    for a in alts:
        x -= a.weight
        if x < 0:
            return a
    return alts[-1]


def derive(grammar: Grammar, rng: random.Random, max_depth: int, symbol: str | None = None) -> str:
    """One weighted derivation; nodes deeper than ``max_depth`` take minimal alternatives.

    The start symbol sits at depth 1.
    """
    out: list[str] = []
    stack: list[tuple[str, str, int]] = [("n", symbol or grammar.start, 1)]
    while stack:
        kind, sym, depth = stack.pop()
        if kind == "t":
            out.append(sym)
            continue
        alts = grammar.rules[sym] if depth <= max_depth else grammar.minimal_alternatives(sym)
        alt = _choose(rng, alts)
        for k, s in reversed(alt.symbols):
            stack.append((k, s, depth + 1))
    return "".join(out)


MAX_TRIES = 50


def generate_regex(grammar: Grammar, budget: GenBudget) -> str:
    """Weighted random pattern no longer than ``budget.max_regex_len``."""
    rng = random.Random(budget.rng_seed)
    for _ in range(MAX_TRIES):
        pattern = derive(grammar, rng, budget.max_depth)
        if len(pattern) <= budget.max_regex_len:
            return pattern
    # Fall back to a fully minimal derivation.
    return derive(grammar, rng, 0)
