from __future__ import annotations

import logging
from pathlib import Path

from ..errors import ParseError
from ..regex.syntax import DEFAULT_ALPHABET, Alphabet, parse_regex

log = logging.getLogger(__name__)


def load_seed_corpus(path: str | Path, alphabet: Alphabet = DEFAULT_ALPHABET) -> list[str]:
    """Patterns from a newline-separated file; ``#`` lines are comments.

    Lines outside the supported fragment are logged and skipped.
    """
    text = Path(path).read_text(encoding="utf-8")
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        pattern = line.rstrip("\r\n")
        if not pattern.strip() or pattern.lstrip().startswith("#"):
            continue
        try:
            parse_regex(pattern, alphabet)
        except ParseError as exc:
            log.info("corpus line %d skipped: %s", lineno, exc)
            continue
        out.append(pattern)
    return out
