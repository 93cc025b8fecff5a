"""Circuit data model: signals, rank-1 constraints and the witness program.

A :class:`Circuit` bundles the two artefacts a ZK DSL compiler emits, the
constraint system and the witness generator, into one immutable value.
Expressions are nested tuples in prefix form::

    ("const", 5) ("sig", 3) ("+", e1, e2, ...) ("*", e1, e2, ...)
    ("-", a, b)  ("neg", a) ("/", a, b)        ("==", lhs, rhs)

``"=="`` only appears at the root of ``constrain`` instructions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Any, Iterable, Mapping

from .errors import CircuitError, ParseError
from .field import FieldElement, FieldModulus

ONE = 0  # index of the constant-one signal

LC = tuple[tuple[int, int], ...]  # ((coeff, signal), ...) sorted by signal
Expr = tuple


class Role(str, Enum):
    PUBLIC_INPUT = "public_input"
    PUBLIC_OUTPUT = "public_output"
    INTERNAL = "internal"


class Kind(str, Enum):
    ASSIGN = "assign"  # <--
    ASSIGN_AND_CONSTRAIN = "assign_and_constrain"  # <==
    CONSTRAIN = "constrain"  # ===


@dataclass(frozen=True)
class Signal:
    index: int
    name: str
    role: Role


def make_lc(terms: Mapping[int, int] | Iterable[tuple[int, int]], p: int) -> LC:
    """Canonical linear combination from ``{signal: coeff}`` or (coeff, signal) pairs."""
    acc: dict[int, int] = {}
    items = terms.items() if isinstance(terms, Mapping) else ((s, c) for c, s in terms)
    for sig, coeff in items:
        acc[sig] = (acc.get(sig, 0) + coeff) % p
    return tuple((c, s) for s, c in sorted(acc.items()) if c)


@dataclass(frozen=True)
class Constraint:
    """``<a,w> * <b,w> - <c,w> == 0``."""

    a: LC
    b: LC
    c: LC
    label: str

    def signals(self) -> set[int]:
        return {s for lc in (self.a, self.b, self.c) for _, s in lc}


@dataclass(frozen=True)
class Instruction:
    kind: Kind
    target: int | None
    expr: Expr
    constraint: str | None = None  # label of the constraint this instruction owns


def expr_signals(expr: Expr) -> set[int]:
    out: set[int] = set()
    stack = [expr]
    while stack:
        e = stack.pop()
        if e[0] == "sig":
            out.add(e[1])
        elif e[0] != "const":
            stack.extend(e[1:])
    return out


@dataclass(frozen=True)
class Circuit:
    modulus: FieldModulus
    signals: tuple[Signal, ...]
    constraints: tuple[Constraint, ...]
    program: tuple[Instruction, ...]
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __getstate__(self) -> dict[str, Any]:
        # Lookup tables and compiled evaluators are rebuilt on demand; the
        # compiled ones hold closures that cannot be pickled.
        return {k: self.__dict__[k] for k in ("modulus", "signals", "constraints", "program", "metadata")}

    # -- lookups -----------------------------------------------------------
    @property
    def p(self) -> int:
        return self.modulus.p

    def __len__(self) -> int:
        return len(self.signals)

    @cached_property
    def by_name(self) -> dict[str, int]:
        return {s.name: s.index for s in self.signals}

    @cached_property
    def inputs(self) -> tuple[Signal, ...]:
        return tuple(s for s in self.signals if s.role is Role.PUBLIC_INPUT)

    @cached_property
    def outputs(self) -> tuple[Signal, ...]:
        return tuple(s for s in self.signals if s.role is Role.PUBLIC_OUTPUT)

    @cached_property
    def constraint_index(self) -> dict[str, int]:
        return {c.label: i for i, c in enumerate(self.constraints)}

    @cached_property
    def defining_instruction(self) -> dict[int, int]:
        """Signal index -> position of the instruction that assigns it."""
        return {ins.target: i for i, ins in enumerate(self.program) if ins.target is not None}

    @cached_property
    def constraints_of_signal(self) -> dict[int, tuple[int, ...]]:
        acc: dict[int, list[int]] = {}
        for ci, c in enumerate(self.constraints):
            for s in c.signals():
                acc.setdefault(s, []).append(ci)
        return {s: tuple(v) for s, v in acc.items()}

    def signal(self, name: str) -> Signal:
        try:
            return self.signals[self.by_name[name]]
        except KeyError:
            raise CircuitError(f"no signal named {name!r}") from None

    # -- validation ----------------------------------------------------------
    def validate(self) -> None:
        n = len(self.signals)
        for i, s in enumerate(self.signals):
            if s.index != i:
                raise CircuitError(f"signal {s.name!r} has index {s.index}, expected {i}")
        if not n or self.signals[ONE].name != "one":
            raise CircuitError("signal 0 must be the constant 'one'")
        if len(self.by_name) != n:
            raise CircuitError("signal names are not unique")
        labels = [c.label for c in self.constraints]
        if len(set(labels)) != len(labels):
            raise CircuitError("constraint labels are not unique")
        for c in self.constraints:
            for s in c.signals():
                if not 0 <= s < n:
                    raise CircuitError(f"constraint {c.label!r} references undeclared signal {s}")
        assigned = {ONE} | {s.index for s in self.inputs}
        for pos, ins in enumerate(self.program):
            reads = expr_signals(ins.expr)
            missing = reads - assigned
            if ins.kind is not Kind.CONSTRAIN and missing:
                names = sorted(self.signals[m].name if m < n else str(m) for m in missing)
                raise CircuitError(f"instruction {pos} reads unassigned signal(s) {names}")
            if ins.kind is Kind.CONSTRAIN:
                if ins.target is not None:
                    raise CircuitError(f"constrain instruction {pos} has a target")
                if any(not 0 <= r < n for r in reads):
                    raise CircuitError(f"instruction {pos} references undeclared signal")
            else:
                t = ins.target
                if t is None or not 0 <= t < n:
                    raise CircuitError(f"instruction {pos} has invalid target {t}")
                if t in assigned:
                    raise CircuitError(f"signal {self.signals[t].name!r} assigned twice")
                assigned.add(t)
            if ins.constraint is not None and ins.constraint not in self.constraint_index:
                raise CircuitError(f"instruction {pos} owns unknown constraint {ins.constraint!r}")
        unassigned = set(range(n)) - assigned
        if unassigned:
            names = sorted(self.signals[u].name for u in unassigned)
            raise CircuitError(f"signals never assigned: {names[:5]}")
        self.__dict__["_validated"] = True

    # -- edits ---------------------------------------------------------------
    def with_changes(self, **kw: Any) -> Circuit:
        return replace(self, **kw)

    def strip_to_assign(self, position: int) -> Circuit:
        """Turn an ``<==`` instruction into ``<--``, dropping the constraint it owns."""
        ins = self.program[position]
        if ins.kind is not Kind.ASSIGN_AND_CONSTRAIN:
            raise CircuitError(f"instruction {position} is {ins.kind.value}, not assign_and_constrain")
        program = list(self.program)
        program[position] = Instruction(Kind.ASSIGN, ins.target, ins.expr, None)
        constraints = tuple(c for c in self.constraints if c.label != ins.constraint)
        return replace(self, program=tuple(program), constraints=constraints)

    # -- serialization -------------------------------------------------------
    def to_document(self) -> dict[str, Any]:
        doc = {
            "modulus": str(self.p),
            "modulus_name": self.modulus.name,
            "signals": [{"index": s.index, "name": s.name, "role": s.role.value} for s in self.signals],
            "constraints": [
                {"a": _lc_doc(c.a), "b": _lc_doc(c.b), "c": _lc_doc(c.c), "label": c.label}
                for c in self.constraints
            ],
            "program": [
                {
                    "kind": ins.kind.value,
                    "target": ins.target,
                    "expr": expr_to_doc(ins.expr),
                    "constraint": ins.constraint,
                }
                for ins in self.program
            ],
            "metadata": self.metadata,
        }
        return doc

    @cached_property
    def hash(self) -> str:
        return hashlib.sha256(_canonical(self.to_document())).hexdigest()


def _canonical(doc: Any) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode()


def _lc_doc(lc: LC) -> list[list[Any]]:
    return [[str(c), s] for c, s in lc]


def expr_to_doc(expr: Expr) -> list[Any]:
    head = expr[0]
    if head == "const":
        return ["const", str(expr[1])]
    if head == "sig":
        return ["sig", expr[1]]
    return [head, *(expr_to_doc(e) for e in expr[1:])]


_OPS = {"+", "*", "-", "neg", "/", "=="}


def expr_from_doc(doc: Any, path: str) -> Expr:
    if not isinstance(doc, list) or not doc:
        raise ParseError("expression must be a non-empty array", path)
    head = doc[0]
    if head == "const":
        return ("const", int(doc[1]))
    if head == "sig":
        if len(doc) != 2 or not isinstance(doc[1], int):
            raise ParseError("bad signal reference", path)
        return ("sig", doc[1])
    if head not in _OPS:
        raise ParseError(f"unknown operator {head!r}", path)
    return (head, *(expr_from_doc(e, f"{path}[{i + 1}]") for i, e in enumerate(doc[1:])))


def circuit_to_json(circuit: Circuit) -> bytes:
    doc = circuit.to_document()
    doc["hash"] = circuit.hash
    return json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=True).encode() + b"\n"


def circuit_from_document(doc: Any) -> Circuit:
    try:
        return _from_document(doc)
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed circuit document: {exc!r}", "$") from exc


def circuit_from_json(data: bytes | str) -> Circuit:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.pos) from exc
    return circuit_from_document(doc)


def _lc_from_doc(doc: Any, p: int, path: str) -> LC:
    if not isinstance(doc, list):
        raise ParseError("linear combination must be an array", path)
    return make_lc(((int(c) % p, int(s)) for c, s in doc), p)


def _from_document(doc: Any) -> Circuit:
    if not isinstance(doc, dict):
        raise ParseError("circuit document must be an object", "$")
    for key in ("modulus", "signals", "constraints", "program"):
        if key not in doc:
            raise ParseError(f"missing key {key!r}", "$")
    modulus = FieldModulus(int(doc["modulus"]), doc.get("modulus_name", ""))
    p = modulus.p
    signals = tuple(
        Signal(int(s["index"]), str(s["name"]), Role(s["role"])) for s in doc["signals"]
    )
    constraints = tuple(
        Constraint(
            _lc_from_doc(c["a"], p, f"$.constraints[{i}].a"),
            _lc_from_doc(c["b"], p, f"$.constraints[{i}].b"),
            _lc_from_doc(c["c"], p, f"$.constraints[{i}].c"),
            str(c["label"]),
        )
        for i, c in enumerate(doc["constraints"])
    )
    program = tuple(
        Instruction(
            Kind(ins["kind"]),
            ins["target"],
            expr_from_doc(ins["expr"], f"$.program[{i}].expr"),
            ins.get("constraint"),
        )
        for i, ins in enumerate(doc["program"])
    )
    circuit = Circuit(modulus, signals, constraints, program, dict(doc.get("metadata", {})))
    circuit.validate()
    expected = doc.get("hash")
    if expected is not None and expected != circuit.hash:
        raise ParseError("content hash mismatch", "$.hash")
    return circuit


@dataclass
class Witness:
    """Dense assignment indexed by signal; values are canonical residues."""

    values: list[int]
    modulus: FieldModulus
    hint_events: list[tuple[int, bool]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.values)

    def element(self, index: int) -> FieldElement:
        return FieldElement(self.values[index], self.modulus)

    def get(self, circuit: Circuit, name: str) -> int:
        return self.values[circuit.by_name[name]]

    def copy(self) -> Witness:
        return Witness(list(self.values), self.modulus, list(self.hint_events))

    def outputs(self, circuit: Circuit) -> dict[str, int]:
        return {s.name: self.values[s.index] for s in circuit.outputs}

    def digest(self) -> str:
        return hashlib.sha256(",".join(map(str, self.values)).encode()).hexdigest()
