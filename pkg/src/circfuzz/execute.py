"""Witness generation and the mock prover.

Both work on raw residues for speed; :class:`~circfuzz.circuit.Witness`
carries the modulus so values can be viewed as field elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .circuit import ONE, Circuit, Expr, Kind, Witness
from .errors import CircuitError, InputError
from .field import FieldElement, div_mod

Evaluator = Callable[[Sequence[int], list], int]


def _linear(node: Expr, p: int) -> dict[int, int] | None:
    head = node[0]
    if head == "const":
        return {ONE: node[1] % p}
    if head == "sig":
        return {node[1]: 1}
    if head in ("+", "-", "neg"):
        parts = [_linear(n, p) for n in node[1:]]
        if any(x is None for x in parts):
            return None
        out: dict[int, int] = {}
        for i, part in enumerate(parts):
            sign = -1 if (head == "neg" or (head == "-" and i == 1)) else 1
            for s, c in part.items():
                out[s] = (out.get(s, 0) + sign * c) % p
        return out
    if head == "*":
        acc = _linear(node[1], p)
        for n in node[2:]:
            nxt = _linear(n, p)
            if acc is None or nxt is None:
                return None
            if set(acc) <= {ONE}:
                k = acc.get(ONE, 0)
                acc = {s: c * k % p for s, c in nxt.items()}
            elif set(nxt) <= {ONE}:
                k = nxt.get(ONE, 0)
                acc = {s: c * k % p for s, c in acc.items()}
            else:
                return None
        return acc
    return None


def compile_expr(node: Expr, p: int) -> Evaluator:
    lin = _linear(node, p)
    if lin is not None:
        terms = tuple((s, c) for s, c in lin.items() if c)
        if len(terms) == 1:
            s0, c0 = terms[0]
            if c0 == 1:
                return lambda w, ev: w[s0]
            return lambda w, ev: c0 * w[s0] % p
        return lambda w, ev: sum(c * w[s] for s, c in terms) % p
    head = node[0]
    subs = [compile_expr(n, p) for n in node[1:]]
    if head == "+":
        return lambda w, ev: sum(f(w, ev) for f in subs) % p
    if head == "-":
        f0, f1 = subs
        return lambda w, ev: (f0(w, ev) - f1(w, ev)) % p
    if head == "neg":
        (f0,) = subs
        return lambda w, ev: -f0(w, ev) % p
    if head == "*":
        if len(subs) == 2:
            f0, f1 = subs
            return lambda w, ev: f0(w, ev) * f1(w, ev) % p

        def prod(w, ev):
            acc = 1
            for f in subs:
                acc = acc * f(w, ev) % p
            return acc

        return prod
    if head == "/":
        f0, f1 = subs

        def div(w, ev):
            v, flag = div_mod(f0(w, ev), f1(w, ev), p)
            ev.append(flag)
            return v

        return div
    raise CircuitError(f"cannot evaluate operator {head!r}")


@dataclass(frozen=True)
class CompiledProgram:
    steps: tuple[tuple[int, int, Evaluator], ...]  # (position, target, fn)
    reads: tuple[frozenset[int], ...]  # per program position


@dataclass(frozen=True)
class CompiledConstraints:
    rows: tuple[tuple[tuple[tuple[int, int], ...], ...], ...]  # per constraint: (a, b, c) as ((sig, coeff), ...)


def compiled_program(circuit: Circuit) -> CompiledProgram:
    cached = circuit.__dict__.get("_compiled_program")
    if cached is None:
        from .circuit import expr_signals

        p = circuit.p
        steps = tuple(
            (pos, ins.target, compile_expr(ins.expr, p))
            for pos, ins in enumerate(circuit.program)
            if ins.kind is not Kind.CONSTRAIN
        )
        reads = tuple(frozenset(expr_signals(ins.expr)) for ins in circuit.program)
        cached = CompiledProgram(steps, reads)
        circuit.__dict__["_compiled_program"] = cached
    return cached


def compiled_constraints(circuit: Circuit) -> CompiledConstraints:
    cached = circuit.__dict__.get("_compiled_constraints")
    if cached is None:
        rows = tuple(
            tuple(tuple((s, c) for c, s in lc) for lc in (con.a, con.b, con.c)) for con in circuit.constraints
        )
        cached = CompiledConstraints(rows)
        circuit.__dict__["_compiled_constraints"] = cached
    return cached


def _checked(circuit: Circuit) -> None:
    if not circuit.__dict__.get("_validated"):
        circuit.validate()
        circuit.__dict__["_validated"] = True


def generate_witness(circuit: Circuit, public_inputs: Mapping[str, FieldElement | int]) -> Witness:
    """Run the witness program on ``public_inputs``; constraints are not checked."""
    _checked(circuit)
    p = circuit.p
    expected = {s.name for s in circuit.inputs}
    given = set(public_inputs)
    if given != expected:
        missing, extra = sorted(expected - given), sorted(given - expected)
        raise InputError(f"input mismatch: missing {missing}, unexpected {extra}")
    values = [0] * len(circuit.signals)
    values[ONE] = 1
    for name, v in public_inputs.items():
        if isinstance(v, FieldElement):
            if v.modulus.p != p:
                raise InputError(f"input {name!r} is from a different field")
            v = v.value
        values[circuit.by_name[name]] = int(v) % p
    events: list[tuple[int, bool]] = []
    prog = compiled_program(circuit)
    for pos, target, fn in prog.steps:
        flags: list[bool] = []
        values[target] = fn(values, flags)
        if flags:
            events.append((pos, any(flags)))
    return Witness(values, circuit.modulus, events)


def replay_from(circuit: Circuit, values: list[int], start: int, fixed: set[int] | None = None) -> None:
    """Re-execute program positions ``>= start`` in place, skipping ``fixed`` targets."""
    fixed = fixed or set()
    for pos, target, fn in compiled_program(circuit).steps:
        if pos < start or target in fixed:
            continue
        values[target] = fn(values, [])


@dataclass(frozen=True)
class Violation:
    index: int
    label: str
    lhs: int  # <a,w>*<b,w> - <c,w> mod p


@dataclass(frozen=True)
class MockResult:
    violations: tuple[Violation, ...] = field(default=())

    @property
    def satisfied(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.satisfied


def _dot(terms, w) -> int:
    return sum(c * w[s] for s, c in terms)


def constraint_values(circuit: Circuit, values: Sequence[int]) -> list[tuple[int, int, int]]:
    """Reduced ``(<a,w>, <b,w>, <c,w>)`` for every constraint."""
    p = circuit.p
    return [
        (_dot(a, values) % p, _dot(b, values) % p, _dot(c, values) % p)
        for a, b, c in compiled_constraints(circuit).rows
    ]


def violations_from_values(circuit: Circuit, vals: Sequence[tuple[int, int, int]]) -> MockResult:
    p = circuit.p
    bad = []
    for i, (av, bv, cv) in enumerate(vals):
        lhs = (av * bv - cv) % p
        if lhs:
            bad.append(Violation(i, circuit.constraints[i].label, lhs))
    return MockResult(tuple(bad))


def mock_prove(circuit: Circuit, witness: Witness | Sequence[int]) -> MockResult:
    """Evaluate every constraint and report all violations."""
    values = witness.values if isinstance(witness, Witness) else witness
    if len(values) != len(circuit.signals):
        raise CircuitError(f"witness has {len(values)} values, circuit has {len(circuit.signals)} signals")
    return violations_from_values(circuit, constraint_values(circuit, values))


def check_subset(circuit: Circuit, values: Sequence[int], indices) -> list[int]:
    """Indices among ``indices`` whose constraint is violated by ``values``."""
    p = circuit.p
    rows = compiled_constraints(circuit).rows
    bad = []
    for i in indices:
        a, b, c = rows[i]
        if (_dot(a, values) * _dot(b, values) - _dot(c, values)) % p:
            bad.append(i)
    return bad
