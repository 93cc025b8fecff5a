"""Regex AST and a recursive-descent parser for the supported fragment.

Supported: literals, escaped metacharacters, ``.``, bracket classes with
ranges and negation, concatenation, ``|``, ``*``, ``+``, ``?`` and groups.
Patterns match whole strings.  Everything is byte-oriented; characters must
lie in the configured alphabet.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from ..errors import ConfigError, ParseError, UnsupportedFeatureError


@dataclass(frozen=True)
class Alphabet:
    """Contiguous byte range ``lo..hi`` inclusive."""

    lo: int = 0x20
    hi: int = 0x7E

    def __post_init__(self) -> None:
        if not 0 <= self.lo <= self.hi <= 0xFF:
            raise ConfigError(f"bad alphabet range {self.lo}..{self.hi}")

    @classmethod
    def parse(cls, text: str) -> Alphabet:
        """Accept ``"0x20-0x7e"`` or ``"a-d"``."""
        lo_s, sep, hi_s = text.partition("-") if not text.startswith("-") else ("-", "", "")
        if not sep:
            raise ConfigError(f"alphabet must look like 'lo-hi', got {text!r}")

        def one(s: str) -> int:
            s = s.strip()
            if len(s) == 1:
                return ord(s)
            return int(s, 0)

        return cls(one(lo_s), one(hi_s))

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, byte: object) -> bool:
        return isinstance(byte, int) and self.lo <= byte <= self.hi

    def __iter__(self):
        return iter(range(self.lo, self.hi + 1))

    def __str__(self) -> str:
        return f"{self.lo:#04x}-{self.hi:#04x}"

    def contains_all(self, data: bytes) -> bool:
        return all(self.lo <= b <= self.hi for b in data)


DEFAULT_ALPHABET = Alphabet()

Ranges = tuple[tuple[int, int], ...]


def normalize_ranges(ranges: Iterable[tuple[int, int]]) -> Ranges:
    out: list[list[int]] = []
    for lo, hi in sorted(ranges):
        if lo > hi:
            raise ValueError(f"inverted range {lo}..{hi}")
        if out and lo <= out[-1][1] + 1:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((lo, hi) for lo, hi in out)


@dataclass(frozen=True)
class Literal:
    byte: int


@dataclass(frozen=True)
class CharClass:
    ranges: Ranges
    negated: bool = False


@dataclass(frozen=True)
class Dot:
    pass


@dataclass(frozen=True)
class Concat:
    items: tuple[RegexAst, ...]


@dataclass(frozen=True)
class Alternation:
    items: tuple[RegexAst, ...]


@dataclass(frozen=True)
class Star:
    child: RegexAst


@dataclass(frozen=True)
class Plus:
    child: RegexAst


@dataclass(frozen=True)
class Optional:
    child: RegexAst


@dataclass(frozen=True)
class Empty:
    pass


RegexAst = Union[Literal, CharClass, Dot, Concat, Alternation, Star, Plus, Optional, Empty]


def byte_set(node: Literal | CharClass | Dot, alphabet: Alphabet) -> frozenset[int]:
    """Bytes of the alphabet matched by a single-character node."""
    if isinstance(node, Literal):
        return frozenset([node.byte]) if node.byte in alphabet else frozenset()
    if isinstance(node, Dot):
        return frozenset(alphabet)
    inside = {b for lo, hi in node.ranges for b in range(lo, hi + 1) if b in alphabet}
    if node.negated:
        return frozenset(b for b in alphabet if b not in inside)
    return frozenset(inside)


def nullable(node: RegexAst) -> bool:
    if isinstance(node, (Empty, Star, Optional)):
        return True
    if isinstance(node, (Literal, CharClass, Dot)):
        return False
    if isinstance(node, Plus):
        return nullable(node.child)
    if isinstance(node, Concat):
        return all(nullable(x) for x in node.items)
    return any(nullable(x) for x in node.items)


METACHARS = frozenset(b"\\.*+?|()[]{}^$-/")
_CLASS_ESCAPES = frozenset(b"dDwWsS")
_ANCHOR_ESCAPES = frozenset(b"bBAZz")


class _Parser:
    def __init__(self, pattern: bytes, alphabet: Alphabet):
        self.src = pattern
        self.pos = 0
        self.alphabet = alphabet

    def peek(self) -> int | None:
        return self.src[self.pos] if self.pos < len(self.src) else None

    def take(self) -> int:
        c = self.src[self.pos]
        self.pos += 1
        return c

    def fail(self, msg: str, at: int | None = None) -> ParseError:
        return ParseError(msg, self.pos if at is None else at)

    def parse(self) -> RegexAst:
        node = self.alternation()
        if self.pos != len(self.src):
            c = self.peek()
            if c == ord(")"):
                raise self.fail("unbalanced ')'")
            raise self.fail(f"unexpected {chr(c)!r}")
        return node

    def alternation(self) -> RegexAst:
        items = [self.concat()]
        while self.peek() == ord("|"):
            self.take()
            items.append(self.concat())
        return items[0] if len(items) == 1 else Alternation(tuple(items))

    def concat(self) -> RegexAst:
        items: list[RegexAst] = []
        while True:
            c = self.peek()
            if c is None or c in (ord("|"), ord(")")):
                break
            items.append(self.repeat())
        if not items:
            return Empty()
        return items[0] if len(items) == 1 else Concat(tuple(items))

    def repeat(self) -> RegexAst:
        node = self.atom()
        c = self.peek()
        if c in (ord("*"), ord("+"), ord("?")):
            self.take()
            node = {ord("*"): Star, ord("+"): Plus, ord("?"): Optional}[c](node)
            nxt = self.peek()
            if nxt in (ord("*"), ord("+"), ord("?")):
                if nxt == ord("?"):
                    raise UnsupportedFeatureError("lazy quantifier", self.pos)
                raise self.fail("multiple repeat")
        if self.peek() == ord("{"):
            raise UnsupportedFeatureError("bounded repetition {m,n}", self.pos)
        return node

    def atom(self) -> RegexAst:
        start = self.pos
        c = self.take()
        if c == ord("("):
            if self.peek() == ord("?"):
                raise UnsupportedFeatureError("lookaround or extension group (?...)", start)
            if self.peek() == ord(")"):
                self.take()
                return Empty()
            node = self.alternation()
            if self.peek() != ord(")"):
                raise self.fail("missing ')'")
            self.take()
            return node
        if c == ord("["):
            return self.char_class(start)
        if c == ord("."):
            return Dot()
        if c in (ord("^"), ord("$")):
            raise UnsupportedFeatureError(f"anchor {chr(c)}", start)
        if c == ord("{"):
            raise UnsupportedFeatureError("bounded repetition {m,n}", start)
        if c in (ord("*"), ord("+"), ord("?")):
            raise self.fail("nothing to repeat", start)
        if c == ord("\\"):
            return Literal(self.escape(start))
        return Literal(self.check_byte(c, start))

    def escape(self, start: int) -> int:
        c = self.peek()
        if c is None:
            raise self.fail("dangling backslash", start)
        self.take()
        if ord("1") <= c <= ord("9"):
            raise UnsupportedFeatureError("backreference", start)
        if c in _ANCHOR_ESCAPES:
            raise UnsupportedFeatureError(f"anchor \\{chr(c)}", start)
        if c in _CLASS_ESCAPES:
            raise UnsupportedFeatureError(f"shorthand class \\{chr(c)}", start)
        if c not in METACHARS:
            raise self.fail(f"unknown escape \\{chr(c)}", start)
        return self.check_byte(c, start)

    def check_byte(self, c: int, at: int) -> int:
        if c not in self.alphabet:
            raise self.fail(f"byte {c:#04x} outside alphabet {self.alphabet}", at)
        return c

    def class_char(self) -> int:
        at = self.pos
        c = self.peek()
        if c is None:
            raise self.fail("missing ']'")
        self.take()
        if c == ord("\\"):
            return self.escape(at)
        if c == ord("["):
            raise self.fail("unescaped '[' in class", at)
        return self.check_byte(c, at)

    def char_class(self, start: int) -> CharClass:
        negated = False
        if self.peek() == ord("^"):
            self.take()
            negated = True
        ranges: list[tuple[int, int]] = []
        first = True
        while True:
            c = self.peek()
            if c is None:
                raise self.fail("missing ']'")
            if c == ord("]"):
                if first:
                    raise self.fail("empty character class", self.pos)
                self.take()
                break
            at = self.pos
            lo = self.class_char()
            if self.peek() == ord("-") and self.pos + 1 < len(self.src) and self.src[self.pos + 1] != ord("]"):
                self.take()
                hi = self.class_char()
                if hi < lo:
                    raise self.fail("bad character range", at)
                ranges.append((lo, hi))
            else:
                ranges.append((lo, lo))
            first = False
        return CharClass(normalize_ranges(ranges), negated)


def parse_regex(pattern: str | bytes, alphabet: Alphabet = DEFAULT_ALPHABET) -> RegexAst:
    if isinstance(pattern, str):
        try:
            pattern = pattern.encode("ascii")
        except UnicodeEncodeError as exc:
            raise ParseError("non-ASCII pattern", exc.start) from None
    return _Parser(pattern, alphabet).parse()


def _escape_byte(b: int) -> str:
    ch = chr(b)
    return "\\" + ch if b in METACHARS else ch


def _class_byte(b: int) -> str:
    ch = chr(b)
    return "\\" + ch if ch in "\\]^-[" else ch


def to_pattern(node: RegexAst) -> str:
    """Render an AST back to pattern text that re-parses to the same AST."""
    if isinstance(node, Literal):
        return _escape_byte(node.byte)
    if isinstance(node, Dot):
        return "."
    if isinstance(node, Empty):
        return "()"
    if isinstance(node, CharClass):
        body = "".join(
            _class_byte(lo) if lo == hi else f"{_class_byte(lo)}-{_class_byte(hi)}" for lo, hi in node.ranges
        )
        return f"[{'^' if node.negated else ''}{body}]"
    if isinstance(node, Concat):
        return "".join(
            f"({to_pattern(x)})" if isinstance(x, Alternation) else to_pattern(x) for x in node.items
        )
    if isinstance(node, Alternation):
        return "|".join(to_pattern(x) for x in node.items)
    child = node.child
    inner = to_pattern(child)
    if isinstance(child, (Concat, Alternation, Star, Plus, Optional)):
        inner = f"({inner})"
    suffix = {Star: "*", Plus: "+", Optional: "?"}[type(node)]
    return inner + suffix
