"""Circuit construction with Circom-like ``<--`` / ``<==`` / ``===`` semantics.

Constraint expressions are lowered to rank-1 form.  A product of two
non-constant factors is fine; any further product introduces an auxiliary
signal defined by its own ``<==`` instruction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Union

from .circuit import (
    ONE,
    Circuit,
    Constraint,
    Expr,
    Instruction,
    Kind,
    LC,
    Role,
    Signal,
    make_lc,
)
from .errors import CircuitError, RankError
from .field import FieldModulus

Operand = Union["E", int]


class E:
    """Thin operator-overloading wrapper around a prefix expression tuple."""

    __slots__ = ("node",)

    def __init__(self, node: Expr):
        self.node = node

    @staticmethod
    def lift(x: Operand) -> E:
        return x if isinstance(x, E) else E(("const", int(x)))

    def __add__(self, o: Operand) -> E:
        return E(("+", self.node, E.lift(o).node))

    def __radd__(self, o: Operand) -> E:
        return E(("+", E.lift(o).node, self.node))

    def __sub__(self, o: Operand) -> E:
        return E(("-", self.node, E.lift(o).node))

    def __rsub__(self, o: Operand) -> E:
        return E(("-", E.lift(o).node, self.node))

    def __mul__(self, o: Operand) -> E:
        return E(("*", self.node, E.lift(o).node))

    def __rmul__(self, o: Operand) -> E:
        return E(("*", E.lift(o).node, self.node))

    def __truediv__(self, o: Operand) -> E:
        return E(("/", self.node, E.lift(o).node))

    def __neg__(self) -> E:
        return E(("neg", self.node))

    def __repr__(self) -> str:
        return f"E({self.node!r})"


def sig(index: int) -> E:
    return E(("sig", index))


def const(value: int) -> E:
    return E(("const", value))


def total(parts: Iterable[Operand]) -> E:
    nodes = [E.lift(x).node for x in parts]
    if not nodes:
        return const(0)
    if len(nodes) == 1:
        return E(nodes[0])
    return E(("+", *nodes))


def lc_expr(lc: LC) -> Expr:
    terms = []
    for c, s in lc:
        if s == ONE:
            terms.append(("const", c))
        elif c == 1:
            terms.append(("sig", s))
        else:
            terms.append(("*", ("const", c), ("sig", s)))
    if not terms:
        return ("const", 0)
    return terms[0] if len(terms) == 1 else ("+", *terms)


@dataclass
class _Quad:
    """``a * b + c`` with ``a``/``b`` absent for purely linear values."""

    a: dict[int, int] | None
    b: dict[int, int] | None
    c: dict[int, int]


def _add(x: dict[int, int], y: dict[int, int], k: int, p: int) -> dict[int, int]:
    out = dict(x)
    for s, v in y.items():
        out[s] = (out.get(s, 0) + k * v) % p
    return out


def _scale(x: dict[int, int], k: int, p: int) -> dict[int, int]:
    return {s: v * k % p for s, v in x.items()}


def _constant_of(x: dict[int, int]) -> int | None:
    if all(s == ONE for s, v in x.items() if v):
        return x.get(ONE, 0)
    return None


class CircuitBuilder:
    def __init__(self, modulus: FieldModulus):
        self.modulus = modulus
        self.p = modulus.p
        self.signals: list[Signal] = [Signal(ONE, "one", Role.INTERNAL)]
        self.names: dict[str, int] = {"one": ONE}
        self.constraints: list[Constraint] = []
        self.program: list[Instruction] = []
        self._labels: set[str] = set()
        self._aux = 0

    # -- signals -------------------------------------------------------------
    def signal(self, name: str, role: Role = Role.INTERNAL) -> int:
        if name in self.names:
            raise CircuitError(f"duplicate signal name {name!r}")
        idx = len(self.signals)
        self.signals.append(Signal(idx, name, role))
        self.names[name] = idx
        return idx

    def input(self, name: str) -> int:
        return self.signal(name, Role.PUBLIC_INPUT)

    def output(self, name: str) -> int:
        return self.signal(name, Role.PUBLIC_OUTPUT)

    def __getitem__(self, name: str) -> E:
        return sig(self.names[name])

    # -- instructions ----------------------------------------------------------
    def assign(self, target: int, expr: Operand) -> None:
        """``target <-- expr``: compute only, no constraint."""
        self.program.append(Instruction(Kind.ASSIGN, target, E.lift(expr).node))

    def assign_constrain(self, target: int, expr: Operand, label: str | None = None) -> str:
        """``target <== expr``: compute and constrain ``target - expr == 0``."""
        node = E.lift(expr).node
        label = self._label(label or f"{self.signals[target].name} <== ...")
        q = self._quad(node)
        # target - (A*B + C)  ->  (-A)*B - (C - target)
        if q.a is None:
            diff = _add({target: 1}, q.c, -1, self.p)
            cons = Constraint(make_lc(diff, self.p), make_lc({ONE: 1}, self.p), (), label)
        else:
            cons = Constraint(
                make_lc(_scale(q.a, -1, self.p), self.p),
                make_lc(q.b, self.p),
                make_lc(_add(q.c, {target: 1}, -1, self.p), self.p),
                label,
            )
        self.constraints.append(cons)
        self.program.append(Instruction(Kind.ASSIGN_AND_CONSTRAIN, target, node, label))
        return label

    def constrain(self, lhs: Operand, rhs: Operand, label: str | None = None) -> str:
        """``lhs === rhs``."""
        l_node, r_node = E.lift(lhs).node, E.lift(rhs).node
        label = self._label(label or "=== ...")
        q = self._quad(("-", l_node, r_node))
        if q.a is None:
            cons = Constraint(make_lc(q.c, self.p), make_lc({ONE: 1}, self.p), (), label)
        else:
            cons = Constraint(
                make_lc(q.a, self.p), make_lc(q.b, self.p), make_lc(_scale(q.c, -1, self.p), self.p), label
            )
        self.constraints.append(cons)
        self.program.append(Instruction(Kind.CONSTRAIN, None, ("==", l_node, r_node), label))
        return label

    def raw_constraint(self, a: dict[int, int], b: dict[int, int], c: dict[int, int], label: str) -> str:
        """Append a rank-1 constraint given directly as linear combinations."""
        label = self._label(label)
        cons = Constraint(make_lc(a, self.p), make_lc(b, self.p), make_lc(c, self.p), label)
        self.constraints.append(cons)
        expr = ("==", ("*", lc_expr(cons.a), lc_expr(cons.b)), lc_expr(cons.c))
        self.program.append(Instruction(Kind.CONSTRAIN, None, expr, label))
        return label

    def build(self, metadata: dict[str, Any] | None = None) -> Circuit:
        circuit = Circuit(
            self.modulus,
            tuple(self.signals),
            tuple(self.constraints),
            tuple(self.program),
            dict(metadata or {}),
        )
        circuit.validate()
        return circuit

    # -- lowering --------------------------------------------------------------
    def _label(self, label: str) -> str:
        base, k = label, 1
        while label in self._labels:
            k += 1
            label = f"{base} #{k}"
        self._labels.add(label)
        return label

    def _linearize(self, q: _Quad) -> dict[int, int]:
        if q.a is None:
            return q.c
        self._aux += 1
        aux = self.signal(f"aux{self._aux}")
        node = ("*", lc_expr(make_lc(q.a, self.p)), lc_expr(make_lc(q.b, self.p)))
        self.assign_constrain(aux, E(node), f"aux{self._aux} <== product")
        return _add(q.c, {aux: 1}, 1, self.p)

    def _quad(self, node: Expr) -> _Quad:
        p = self.p
        head = node[0]
        if head == "const":
            return _Quad(None, None, {ONE: node[1] % p})
        if head == "sig":
            return _Quad(None, None, {node[1]: 1})
        if head == "neg":
            q = self._quad(node[1])
            if q.a is None:
                return _Quad(None, None, _scale(q.c, -1, p))
            return _Quad(_scale(q.a, -1, p), q.b, _scale(q.c, -1, p))
        if head == "-":
            return self._quad(("+", node[1], ("neg", node[2])))
        if head == "+":
            acc = _Quad(None, None, {})
            for part in node[1:]:
                q = self._quad(part)
                if q.a is not None and acc.a is not None:
                    q = _Quad(None, None, self._linearize(q))
                if q.a is not None:
                    acc.a, acc.b = q.a, q.b
                acc.c = _add(acc.c, q.c, 1, p)
            return acc
        if head == "*":
            acc = self._quad(node[1])
            for part in node[2:]:
                acc = self._mul(acc, self._quad(part))
            return acc
        if head == "/":
            raise RankError("division cannot appear in a constraint")
        raise RankError(f"cannot lower operator {head!r}")

    def _mul(self, x: _Quad, y: _Quad) -> _Quad:
        p = self.p
        for u, v in ((x, y), (y, x)):
            if u.a is None:
                k = _constant_of(u.c)
                if k is not None:
                    if v.a is None:
                        return _Quad(None, None, _scale(v.c, k, p))
                    return _Quad(_scale(v.a, k, p), v.b, _scale(v.c, k, p))
        lx = self._linearize(x)
        ly = self._linearize(y)
        return _Quad(lx, ly, {})


def build_iszero_gadget(builder: CircuitBuilder, x: int | E, name: str, inv_name: str | None = None) -> int:
    """Allocate ``name.inv`` and ``name`` with ``name == 1`` iff ``x == 0``.

    ``x`` may be a signal index or a linear expression.  Emits::

        inv  <-- x != 0 ? 1 / x : 0
        out  <== 1 - x * inv
        x * out === 0
    """
    xe = sig(x) if isinstance(x, int) else x
    inv = builder.signal(inv_name or f"{name}.inv")
    out = builder.signal(name)
    builder.assign(inv, const(1) / xe)
    builder.assign_constrain(out, 1 - xe * sig(inv), f"{name} <== 1 - x*inv")
    builder.constrain(xe * sig(out), 0, f"{name}: x*out === 0")
    return out
