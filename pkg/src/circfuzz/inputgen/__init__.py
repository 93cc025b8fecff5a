from .bnf import GenBudget, Grammar, derive, generate_regex, parse_bnf, restrict
from .corpus import load_seed_corpus
from .strings import Generated, StringBudget, generate_invalid_strings, generate_valid_strings

__all__ = [
    "GenBudget",
    "Grammar",
    "derive",
    "generate_regex",
    "parse_bnf",
    "restrict",
    "load_seed_corpus",
    "Generated",
    "StringBudget",
    "generate_invalid_strings",
    "generate_valid_strings",
]
