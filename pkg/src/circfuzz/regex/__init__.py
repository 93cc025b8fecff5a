from .automata import (
    DEFAULT_STATE_CAP,
    Dfa,
    Enumeration,
    Nfa,
    build_nfa,
    compile_regex,
    complement,
    determinize,
    enumerate_accepting_strings,
    enumerate_nfa_paths,
    nfa_match,
)
from .reference import BuiltinReference, ExternalReference, make_reference
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
    nullable,
    parse_regex,
    to_pattern,
)

__all__ = [
    "DEFAULT_STATE_CAP",
    "Dfa",
    "Enumeration",
    "Nfa",
    "build_nfa",
    "compile_regex",
    "complement",
    "determinize",
    "enumerate_accepting_strings",
    "enumerate_nfa_paths",
    "nfa_match",
    "BuiltinReference",
    "ExternalReference",
    "make_reference",
    "DEFAULT_ALPHABET",
    "Alphabet",
    "Alternation",
    "CharClass",
    "Concat",
    "Dot",
    "Empty",
    "Literal",
    "Optional",
    "Plus",
    "RegexAst",
    "Star",
    "nullable",
    "parse_regex",
    "to_pattern",
]
