"""Independent oracles used by several test modules."""

from itertools import product

from circfuzz.regex.syntax import Alternation, CharClass, Concat, Dot, Empty, Literal, Optional, Plus, Star


def _ends(node, s, i, alphabet):
    """Positions where a match of ``node`` starting at ``i`` can end."""
    if isinstance(node, Empty):
        return {i}
    if isinstance(node, (Literal, CharClass, Dot)):
        if i >= len(s) or s[i] not in alphabet:
            return set()
        c = s[i]
        if isinstance(node, Literal):
            ok = c == node.byte
        elif isinstance(node, Dot):
            ok = True
        else:
            inside = any(lo <= c <= hi for lo, hi in node.ranges)
            ok = inside != node.negated
        return {i + 1} if ok else set()
    if isinstance(node, Concat):
        cur = {i}
        for item in node.items:
            cur = {e for j in cur for e in _ends(item, s, j, alphabet)}
        return cur
    if isinstance(node, Alternation):
        return {e for item in node.items for e in _ends(item, s, i, alphabet)}
    if isinstance(node, Optional):
        return {i} | _ends(node.child, s, i, alphabet)
    if isinstance(node, Plus):
        first = _ends(node.child, s, i, alphabet)
        return {e for j in first for e in _ends(Star(node.child), s, j, alphabet)}
    if isinstance(node, Star):
        seen, frontier = {i}, {i}
        while frontier:
            nxt = {e for j in frontier for e in _ends(node.child, s, j, alphabet)} - seen
            seen |= nxt
            frontier = nxt
        return seen
    raise TypeError(node)


def naive_match(ast, s: bytes, alphabet) -> bool:
    return len(s) in _ends(ast, s, 0, alphabet)


def all_strings(alphabet, max_len):
    syms = list(alphabet)
    for n in range(max_len + 1):
        for t in product(syms, repeat=n):
            yield bytes(t)
