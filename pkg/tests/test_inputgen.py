import itertools
import logging
import random
from collections import Counter
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circfuzz.errors import GrammarError
from circfuzz.harness.config import data_path
from circfuzz.inputgen import (
    GenBudget,
    StringBudget,
    derive,
    generate_invalid_strings,
    generate_regex,
    generate_valid_strings,
    load_seed_corpus,
    parse_bnf,
)
from circfuzz.regex import Alphabet, compile_regex, nfa_match, parse_regex

SHIPPED = data_path("grammar", "regex-fragment.bnf").read_text()
AB = Alphabet.parse("a-b")


@pytest.fixture(scope="module")
def grammar():
    return parse_bnf(SHIPPED)


def test_shipped_grammar_derives_a(grammar):
    assert grammar.start == "regex"
    rng = random.Random(0)
    seen = {derive(grammar, rng, 8) for _ in range(2000)}
    assert "a" in seen


def test_bnf_errors():
    with pytest.raises(GrammarError, match="undefined nonterminal klass"):
        parse_bnf('<s> ::= "x" <klass>')
    with pytest.raises(GrammarError, match="unproductive"):
        parse_bnf("<S> ::= <S>")
    with pytest.raises(GrammarError, match="line 1"):
        parse_bnf("<s> = x")
    with pytest.raises(GrammarError, match="weight"):
        parse_bnf('<s> ::= "x" {0}')
    with pytest.raises(GrammarError, match="defined twice"):
        parse_bnf('<s> ::= "x"\n<s> ::= "y"')


def test_bnf_dialect():
    g = parse_bnf('<s> ::= "a".."c" {2} | "\\"" <t>\n  | "q"\n<t> ::= "z"')
    assert [a.symbols for a in g.rules["s"]] == [
        (("t", "a"),),
        (("t", "b"),),
        (("t", "c"),),
        (("t", '"'), ("n", "t")),
        (("t", "q"),),
    ]
    assert [a.weight for a in g.rules["s"]] == [2, 2, 2, 1, 1]


def test_budget_validation():
    with pytest.raises(GrammarError):
        GenBudget(max_depth=0)
    with pytest.raises(GrammarError):
        GenBudget(rng_seed=-1)


def test_determinism(grammar):
    assert generate_regex(grammar, GenBudget(rng_seed=42)) == generate_regex(grammar, GenBudget(rng_seed=42))


def test_closure_over_seeds(grammar):
    for seed in range(10_000):
        pattern = generate_regex(grammar, GenBudget(max_regex_len=40, rng_seed=seed))
        assert len(pattern) <= 40
        parse_regex(pattern)


def bounded_language(grammar, height: int, symbol: str) -> frozenset[str]:
    """Every string derivable by a tree of height <= ``height`` (brute force)."""

    @lru_cache(maxsize=None)
    def lang(name: str, h: int) -> frozenset[str]:
        if h <= 0:
            return frozenset()
        out = set()
        for alt in grammar.rules[name]:
            parts = [frozenset([s]) if k == "t" else lang(s, h - 1) for k, s in alt.symbols]
            if all(parts):
                out.update("".join(t) for t in itertools.product(*parts))
        return frozenset(out)

    return lang(symbol, height)


def test_depth_one_draws_minimal_derivations(grammar):
    h = next(k for k in itertools.count(1) if bounded_language(grammar, k, grammar.start))
    minimal = bounded_language(grammar, h, grammar.start)
    outputs = {generate_regex(grammar, GenBudget(max_depth=1, rng_seed=s)) for s in range(3000)}
    assert outputs <= minimal
    assert "a" in outputs and any(o.endswith("*") for o in outputs)


def test_valid_examples():
    ast, nfa, dfa = compile_regex("ab*c")
    first = generate_valid_strings(ast, nfa, dfa, 10, StringBudget(rng_seed=0)).strings
    assert b"ac" in first and b"abc" in first

    ast, nfa, dfa = compile_regex("[0-9]+")
    out = generate_valid_strings(ast, nfa, dfa, 30, StringBudget(rng_seed=3)).strings
    assert out and all(s and s.isdigit() for s in out)

    ast, nfa, dfa = compile_regex("a[^a]", AB)
    assert generate_valid_strings(ast, nfa, dfa, 10, StringBudget(rng_seed=0)).strings == [b"ab"]


def test_empty_and_universal_languages():
    ast, nfa, dfa = compile_regex("[^a-b]", AB)
    res = generate_valid_strings(ast, nfa, dfa, 5, StringBudget())
    assert res.strings == [] and res.empty_language
    ast, nfa, dfa = compile_regex(".*", AB)
    res = generate_invalid_strings(ast, nfa, dfa, [b"ab"], 5, StringBudget())
    assert res.strings == [] and res.universal_language


def test_truncation_mutation_is_rejected():
    ast, nfa, dfa = compile_regex("ab*c", Alphabet.parse("a-c"))
    seen = set()
    for seed in range(40):
        valid = generate_valid_strings(ast, nfa, dfa, 8, StringBudget(rng_seed=seed)).strings
        seen.update(generate_invalid_strings(ast, nfa, dfa, valid, 16, StringBudget(rng_seed=seed)).strings)
    assert b"ab" in seen
    assert not nfa_match(nfa, b"ab")


patterns = st.sampled_from(["ab*c", "[a-c]+@x", "(from|to): [a-z]+", "0x[0-9a-f]+", "(a|b)*abb", "[^a]?b", "a|"])


@settings(max_examples=40, deadline=None)
@given(patterns, st.integers(0, 2**32))
def test_label_soundness(pattern, seed):
    ast, nfa, dfa = compile_regex(pattern)
    valid = generate_valid_strings(ast, nfa, dfa, 16, StringBudget(rng_seed=seed))
    invalid = generate_invalid_strings(ast, nfa, dfa, valid.strings, 16, StringBudget(rng_seed=seed))
    assert all(nfa_match(nfa, s) and len(s) <= 12 for s in valid.strings)
    assert all(not nfa_match(nfa, s) for s in invalid.strings)
    again = generate_valid_strings(ast, nfa, dfa, 16, StringBudget(rng_seed=seed))
    assert again.strings == valid.strings


def test_source_mix():
    corpus = load_seed_corpus(data_path("corpus", "seed-regexes.txt"))
    valid, invalid = Counter(), Counter()
    seed = 0
    while sum(valid.values()) < 1000 or sum(invalid.values()) < 1000:
        for pattern in corpus:
            ast, nfa, dfa = compile_regex(pattern)
            v = generate_valid_strings(ast, nfa, dfa, 16, StringBudget(rng_seed=seed))
            i = generate_invalid_strings(ast, nfa, dfa, v.strings, 16, StringBudget(rng_seed=seed))
            valid.update(v.sources)
            invalid.update(i.sources)
        seed += 1
    assert set(valid) == {"structural", "enumeration"}
    assert set(invalid) == {"mutation", "rejecting-walk", "complement"}
    for counts in (valid, invalid):
        total = sum(counts.values())
        assert all(c / total >= 0.10 for c in counts.values()), counts


def test_shipped_corpus():
    # 13 patterns parse; three aspirational lines do not
    assert len(load_seed_corpus(data_path("corpus", "seed-regexes.txt"))) == 13


def test_corpus_edge_cases(tmp_path, caplog):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert load_seed_corpus(empty) == []
    mixed = tmp_path / "mixed.txt"
    mixed.write_text("ab*c\n# comment\na{2}\n[0-9]+\n")
    with caplog.at_level(logging.INFO):
        assert load_seed_corpus(mixed) == ["ab*c", "[0-9]+"]
    assert "line 3" in caplog.text
    with pytest.raises(OSError):
        load_seed_corpus(tmp_path / "missing.txt")
