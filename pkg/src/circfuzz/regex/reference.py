"""Reference matchers answering "does ``pattern`` match all of ``string``?".

The builtin reference goes through the NFA simulator only, never through the
DFA the transpiler consumes.  The external one talks to a child process, one
query per line: ``base64(pattern) TAB base64(string)`` in, ``1`` or ``0`` out.
"""

from __future__ import annotations

import base64
import logging
import select
import shlex
import subprocess
from functools import lru_cache

from ..errors import ReferenceMatcherError
from .automata import Nfa, build_nfa, nfa_match
from .syntax import DEFAULT_ALPHABET, Alphabet, parse_regex

log = logging.getLogger(__name__)

QUERY_TIMEOUT = 1.0


class BuiltinReference:
    name = "builtin"

    def __init__(self, alphabet: Alphabet = DEFAULT_ALPHABET):
        self.alphabet = alphabet
        self._nfa = lru_cache(maxsize=256)(self._build)

    def _build(self, pattern: str) -> Nfa:
        return build_nfa(parse_regex(pattern, self.alphabet), self.alphabet)

    def matches(self, pattern: str, data: bytes) -> bool:
        return nfa_match(self._nfa(pattern), data)

    def close(self) -> None:
        pass


def encode_query(pattern: str, data: bytes) -> bytes:
    return base64.b64encode(pattern.encode()) + b"\t" + base64.b64encode(data) + b"\n"


def decode_query(line: bytes) -> tuple[bytes, bytes]:
    pat, _, data = line.rstrip(b"\r\n").partition(b"\t")
    return base64.b64decode(pat), base64.b64decode(data)


class ExternalReference:
    """Long-lived child process speaking the line protocol."""

    name = "external"

    def __init__(self, command: str | list[str], timeout: float = QUERY_TIMEOUT):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self.proc: subprocess.Popen | None = None

    def _start(self) -> subprocess.Popen:
        if self.proc is None or self.proc.poll() is not None:
            try:
                self.proc = subprocess.Popen(
                    self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL
                )
            except OSError as exc:
                raise ReferenceMatcherError(f"cannot start {self.argv[0]!r}: {exc}") from exc
        return self.proc

    def matches(self, pattern: str, data: bytes) -> bool:
        proc = self._start()
        try:
            proc.stdin.write(encode_query(pattern, data))
            proc.stdin.flush()
        except BrokenPipeError as exc:
            self.close()
            raise ReferenceMatcherError("reference process exited") from exc
        fd = proc.stdout.fileno()
        ready, _, _ = select.select([fd], [], [], self.timeout)
        if not ready:
            self.close()
            raise ReferenceMatcherError(f"reference timed out after {self.timeout}s")
        line = proc.stdout.readline().strip()
        if line not in (b"0", b"1"):
            self.close()
            raise ReferenceMatcherError(f"bad reference response {line!r}")
        return line == b"1"

    def close(self) -> None:
        if self.proc is not None:
            try:
                self.proc.kill()
                self.proc.wait(timeout=1)
            except (OSError, subprocess.TimeoutExpired):
                pass
            self.proc = None

    def __del__(self):
        self.close()


def make_reference(spec: str, alphabet: Alphabet = DEFAULT_ALPHABET):
    """``"builtin"`` or ``"external:<command line>"``."""
    if spec == "builtin":
        return BuiltinReference(alphabet)
    if spec.startswith("external:"):
        return ExternalReference(spec[len("external:"):])
    raise ValueError(f"unknown reference {spec!r}")


__all__ = ["BuiltinReference", "ExternalReference", "make_reference", "encode_query", "decode_query"]
