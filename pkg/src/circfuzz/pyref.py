"""Reference matcher process backed by Python's ``re`` module.

Run as ``python -m circfuzz.pyref``; speaks the line protocol of
:class:`circfuzz.regex.reference.ExternalReference`.
"""

from __future__ import annotations

import re
import sys
from functools import lru_cache

from .regex.reference import decode_query


@lru_cache(maxsize=512)
def _compile(pattern: bytes) -> re.Pattern:
    return re.compile(pattern, re.DOTALL)


def main() -> int:
    out = sys.stdout.buffer
    for line in sys.stdin.buffer:
        if not line.strip():
            continue
        pattern, data = decode_query(line)
        try:
            ok = _compile(pattern).fullmatch(data) is not None
        except re.error:
            ok = False
        out.write(b"1\n" if ok else b"0\n")
        out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
