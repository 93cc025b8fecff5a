"""Constraint coverage.

Each constraint contributes three slots, one per linear combination.  A slot
is exercised once some witness made it zero and some witness made it
nonzero.  Slots made only of the constant signal can never change value and
are left out of the fraction.  Flags are bitmasks so merging is a plain OR.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from ..circuit import ONE, Circuit
from ..errors import MergeError
from ..execute import compiled_constraints


@dataclass(frozen=True)
class CircuitCoverage:
    slots: int
    exercisable: int  # bitmask of slots with a non-constant term
    zero: int = 0
    nonzero: int = 0

    def merge(self, other: CircuitCoverage) -> CircuitCoverage:
        if (self.slots, self.exercisable) != (other.slots, other.exercisable):
            raise MergeError("coverage entries for one circuit disagree on its shape")
        return CircuitCoverage(self.slots, self.exercisable, self.zero | other.zero, self.nonzero | other.nonzero)

    @property
    def covered(self) -> int:
        return self.zero & self.nonzero & self.exercisable

    def flags(self) -> int:
        """Number of set flags, the unit of "new coverage"."""
        return bin(self.zero).count("1") + bin(self.nonzero).count("1")


def _exercisable_mask(circuit: Circuit) -> int:
    cached = circuit.__dict__.get("_coverage_mask")
    if cached is None:
        cached = 0
        bit = 0
        for row in compiled_constraints(circuit).rows:
            for lc in row:
                if any(s != ONE for s, _ in lc):
                    cached |= 1 << bit
                bit += 1
        circuit.__dict__["_coverage_mask"] = cached
    return cached


def observe(circuit: Circuit, values: Sequence[tuple[int, int, int]]) -> CircuitCoverage:
    """Coverage of one witness, from its ``(a, b, c)`` constraint values."""
    zero = nonzero = 0
    bit = 1
    for triple in values:
        for v in triple:
            if v:
                nonzero |= bit
            else:
                zero |= bit
            bit <<= 1
    return CircuitCoverage(3 * len(values), _exercisable_mask(circuit), zero, nonzero)


@dataclass(frozen=True)
class CoverageMap:
    circuits: Mapping[str, CircuitCoverage] = field(default_factory=dict)
    transitions: Mapping[str, Mapping[str, int]] = field(default_factory=dict)  # regex -> "q->r" -> hits

    def fraction(self) -> float:
        ex = sum(bin(c.exercisable).count("1") for c in self.circuits.values())
        if not ex:
            return 0.0
        return sum(bin(c.covered).count("1") for c in self.circuits.values()) / ex

    def flags(self) -> int:
        return sum(c.flags() for c in self.circuits.values())

    def summary(self) -> dict[str, Any]:
        return {
            "circuits": len(self.circuits),
            "exercisable_slots": sum(bin(c.exercisable).count("1") for c in self.circuits.values()),
            "covered_slots": sum(bin(c.covered).count("1") for c in self.circuits.values()),
            "fraction": round(self.fraction(), 6),
            "flags": self.flags(),
            "transition_hits": sum(sum(t.values()) for t in self.transitions.values()),
        }

    def to_json(self) -> dict[str, Any]:
        return {
            "circuits": {
                h: {"slots": c.slots, "exercisable": hex(c.exercisable), "zero": hex(c.zero), "nonzero": hex(c.nonzero)}
                for h, c in sorted(self.circuits.items())
            },
            "transitions": {r: dict(sorted(t.items())) for r, t in sorted(self.transitions.items())},
            "summary": self.summary(),
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> CoverageMap:
        circuits = {
            h: CircuitCoverage(int(c["slots"]), int(c["exercisable"], 16), int(c["zero"], 16), int(c["nonzero"], 16))
            for h, c in doc.get("circuits", {}).items()
        }
        transitions = {r: {k: int(v) for k, v in t.items()} for r, t in doc.get("transitions", {}).items()}
        return cls(circuits, transitions)


EMPTY = CoverageMap()


def coverage_merge(a: CoverageMap, b: CoverageMap) -> CoverageMap:
    """Flag-wise OR per circuit, summed transition hits."""
    circuits = dict(a.circuits)
    for h, c in b.circuits.items():
        circuits[h] = circuits[h].merge(c) if h in circuits else c
    transitions = {r: dict(t) for r, t in a.transitions.items()}
    for r, t in b.transitions.items():
        dst = transitions.setdefault(r, {})
        for k, v in t.items():
            dst[k] = dst.get(k, 0) + v
    return CoverageMap(circuits, transitions)


def merge_all(maps: Iterable[CoverageMap]) -> CoverageMap:
    out = EMPTY
    for m in maps:
        out = coverage_merge(out, m)
    return out


def dfa_transitions(dfa, data: bytes) -> dict[str, int]:
    """Hit counts of the DFA edges taken while reading ``data``."""
    hits: dict[str, int] = {}
    q = dfa.start
    for byte in data:
        r = dfa.next(q, byte)
        key = f"{q}->{r}"
        hits[key] = hits.get(key, 0) + 1
        q = r
    return hits
