"""DFA to circuit compiler, plus controlled bug injection.

Encoding for input length ``n`` over states ``Q`` (the sink ``dead`` included)
and alphabet bytes ``A``:

* ``char[i]`` public inputs, ``accept`` public output;
* ``s[i][q]`` one-hot state vector for every step ``0..n``;
* ``inv[i][b]`` / ``eq[i][b]`` iszero gadget on ``char[i] - b``;
* ``m[i][q][r] <== s[i][q] * sum(eq[i][b] for b leading q to r)``.

Constraints, in emission order per step:

1. ``s[0][q] <== [q == start]``
2. ``s[i][q] * (s[i][q] - 1) === 0``
3. one-hot: ``sum_q s[0][q] === 1`` at step 0, afterwards
   ``s[i][dead] <== 1 - sum(live s[i][q])``
4. ``(1 - s[i+1][r]) * sum_q m[i][q][r] === 0``: the successor reached by the
   run must be on.  Together with 2 and 3 every other state is forced off.
5. ``accept <== sum(s[n][q] for accepting q)``
6. ``sum_b eq[i][b] === 1``: the character lies in the alphabet.

Live next states are hints (``<--``) computed as the sum of incoming
products, so downstream replay after a mutation keeps them consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .builder import CircuitBuilder, build_iszero_gadget, const, total
from .circuit import Circuit, Constraint, Kind, make_lc
from .errors import ConfigError, ResourceError
from .field import FieldModulus
from .regex.automata import DEFAULT_STATE_CAP, Dfa

DEFAULT_MAX_LEN = 64
ENCODING = "one-hot/reverse-implication v1"


class InjectionKind(str, Enum):
    DROP_BOOLEANITY = "drop_booleanity"
    DROP_TRANSITION = "drop_transition"
    FLIP_ACCEPT_STATE = "flip_accept_state"
    CLASS_OFF_BY_ONE = "class_off_by_one"
    HINT_UNCONSTRAINED = "hint_unconstrained"


EXPECTED = {
    InjectionKind.DROP_BOOLEANITY: "soundness",
    InjectionKind.DROP_TRANSITION: "soundness",
    InjectionKind.HINT_UNCONSTRAINED: "soundness",
    InjectionKind.FLIP_ACCEPT_STATE: "correctness",
    InjectionKind.CLASS_OFF_BY_ONE: "completeness",
}


@dataclass(frozen=True)
class BugInjection:
    kind: InjectionKind
    site: int = 0
    direction: str | None = None  # class_off_by_one: "shrink" (default) or "grow"

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", InjectionKind(self.kind))
        if self.direction not in (None, "shrink", "grow"):
            raise ConfigError(f"unknown injection direction {self.direction!r}")

    @classmethod
    def parse(cls, text: str) -> BugInjection:
        """``kind[:site[:direction]]``."""
        parts = text.split(":")
        try:
            kind = InjectionKind(parts[0])
        except ValueError:
            raise ConfigError(f"unknown injection kind {parts[0]!r}") from None
        site = int(parts[1]) if len(parts) > 1 and parts[1] else 0
        direction = parts[2] if len(parts) > 2 else None
        return cls(kind, site, direction)

    def tag(self) -> str:
        return f"{self.kind.value}:{self.site}" + (f":{self.direction}" if self.direction else "")


@dataclass(frozen=True)
class TranspileSpec:
    dfa: Dfa
    input_length: int
    pattern: str | None = None
    max_len: int = DEFAULT_MAX_LEN
    state_cap: int = DEFAULT_STATE_CAP
    extra_metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def alphabet(self):
        return self.dfa.alphabet


def class_text(byts) -> str:
    """Compact class notation for constraint labels, e.g. ``[a-fx]``."""
    byts = sorted(byts)

    def ch(b: int) -> str:
        c = chr(b)
        return "\\" + c if c in "\\]-[^" else c

    if len(byts) == 1:
        return ch(byts[0])
    body = "".join(ch(lo) if lo == hi else f"{ch(lo)}-{ch(hi)}" for lo, hi in _runs(byts))
    return f"[{body}]"


def product_label(i: int, q: int, r: int, byts) -> str:
    return f"transition q{q}-{class_text(byts)}->q{r} @ pos {i}"


def constraint_count(dfa: Dfa, n: int) -> int:
    """Closed-form constraint count of :func:`transpile` (no injection)."""
    Q, A = dfa.states, len(dfa.alphabet)
    edges = sum(len(g) for g in dfa.edge_groups)
    return Q + Q * (n + 1) + (n + 1) + 2 * A * n + n + edges * n + Q * n + 1


def transpile(spec: TranspileSpec, modulus: FieldModulus) -> Circuit:
    dfa, n = spec.dfa, spec.input_length
    if n < 0:
        raise ConfigError("input length must be >= 0")
    if n > spec.max_len:
        raise ResourceError(f"input length {n} exceeds cap {spec.max_len}")
    if dfa.states > spec.state_cap:
        raise ResourceError(f"DFA has {dfa.states} states, cap is {spec.state_cap}")
    if modulus.p <= 0xFF:
        raise ConfigError("field too small to encode bytes")

    Q, dead = dfa.states, dfa.dead
    live = [q for q in range(Q) if q != dead]
    groups = dfa.edge_groups
    b = CircuitBuilder(modulus)
    chars = [b.input(f"char[{i}]") for i in range(n)]
    acc = b.output("accept")

    s = [[b.signal(f"s[0][{q}]") for q in range(Q)]]
    for q in range(Q):
        b.assign_constrain(s[0][q], const(int(q == dfa.start)), f"init s[0][{q}]")
    b.constrain(total(b[f"s[0][{q}]"] for q in range(Q)), 1, "one-hot @ step 0")
    _booleanity(b, 0, Q)

    for i in range(n):
        x = b[f"char[{i}]"]
        eqs = {}
        for byte in dfa.alphabet:
            eqs[byte] = build_iszero_gadget(b, x - byte, f"eq[{i}][{byte}]", f"inv[{i}][{byte}]")
        b.constrain(total(b[f"eq[{i}][{byte}]"] for byte in dfa.alphabet), 1, f"range char[{i}]")

        incoming: dict[int, list[str]] = {r: [] for r in range(Q)}
        for q in range(Q):
            for r, byts in groups[q].items():
                name = f"m[{i}][{q}][{r}]"
                m = b.signal(name)
                b.assign_constrain(
                    m, b[f"s[{i}][{q}]"] * total(b[f"eq[{i}][{byte}]"] for byte in byts), product_label(i, q, r, byts)
                )
                incoming[r].append(name)

        nxt = [0] * Q
        for r in live:
            nxt[r] = b.signal(f"s[{i + 1}][{r}]")
            b.assign(nxt[r], total(b[name] for name in incoming[r]))
        nxt[dead] = b.signal(f"s[{i + 1}][{dead}]")
        b.assign_constrain(
            nxt[dead], 1 - total(b[f"s[{i + 1}][{r}]"] for r in live), f"one-hot @ step {i + 1}"
        )
        s.append(nxt)
        for r in range(Q):
            v = total(b[name] for name in incoming[r])
            b.constrain((1 - b[f"s[{i + 1}][{r}]"]) * v, 0, f"next-state q{r} @ pos {i}")
        _booleanity(b, i + 1, Q)

    b.assign_constrain(acc, _accept_expr(b, n, dfa.accepting), "accept <== final states")
    del chars
    meta = {
        "encoding": ENCODING,
        "pattern": spec.pattern,
        "input_length": n,
        "alphabet": [dfa.alphabet.lo, dfa.alphabet.hi],
        "dfa_states": Q,
        "dead_state": dead,
        "start_state": dfa.start,
        "accepting": sorted(dfa.accepting),
        **spec.extra_metadata,
    }
    return b.build(meta)


def _booleanity(b: CircuitBuilder, i: int, Q: int) -> None:
    for q in range(Q):
        S = b[f"s[{i}][{q}]"]
        b.constrain(S * (S - 1), 0, f"bool s[{i}][{q}]")


def _accept_expr(b: CircuitBuilder, n: int, accepting) -> Any:
    return total(b[f"s[{n}][{q}]"] for q in sorted(accepting))


# -- bug injection -------------------------------------------------------------


@dataclass(frozen=True)
class InjectionSite:
    constraint: str  # label of the edited constraint
    signal: str  # signal the edit leaves under- or mis-constrained
    detail: dict[str, Any] = field(default_factory=dict)


def reachable_by_step(dfa: Dfa, n: int) -> list[frozenset[int]]:
    """``reach[k]`` = states some input of exactly ``k`` bytes ends in."""
    reach = [frozenset([dfa.start])]
    for _ in range(n):
        reach.append(frozenset(t for q in reach[-1] for t in set(dfa.delta[q])))
    return reach


def injection_candidates(dfa: Dfa, n: int, injection: BugInjection) -> list[InjectionSite]:
    """Deterministically ordered edit sites for ``injection.kind``.

    Sites are restricted to those some input of length ``n`` can observe; an
    edit no run can reach changes nothing.  If no site qualifies the
    unrestricted list is used.
    """
    kind = injection.kind
    Q, dead = dfa.states, dfa.dead
    live = [q for q in range(Q) if q != dead]
    groups = dfa.edge_groups
    reach = reachable_by_step(dfa, n)
    table = dfa.accept_table(n)

    def on_accepting_run(i: int, q: int) -> bool:
        # an accepted input of length n is in state q after i bytes
        return q in reach[i] and q in table[n - i]

    strict: list[InjectionSite] = []
    loose: list[InjectionSite] = []
    if kind is InjectionKind.DROP_BOOLEANITY:
        # s[n][t] = -1 with the run in another live state r flips accept.
        for q in sorted(dfa.accepting - {dead}):
            if n >= 1:
                site = InjectionSite(f"bool s[{n}][{q}]", f"s[{n}][{q}]", {"step": n, "state": q})
                loose.append(site)
                if any(r != q and r != dead for r in reach[n]):
                    strict.append(site)
        for i in range(1, n + 1):
            for q in live:
                loose.append(InjectionSite(f"bool s[{i}][{q}]", f"s[{i}][{q}]", {"step": i, "state": q}))
        loose.extend(InjectionSite(f"bool s[0][{q}]", f"s[0][{q}]", {"step": 0, "state": q}) for q in range(Q))
    elif kind is InjectionKind.DROP_TRANSITION:
        for i in range(n):
            for r in live:
                site = InjectionSite(f"next-state q{r} @ pos {i}", f"s[{i + 1}][{r}]", {"pos": i, "state": r})
                loose.append(site)
                if on_accepting_run(i + 1, r):
                    strict.append(site)
    elif kind is InjectionKind.HINT_UNCONSTRAINED:
        accept_site = InjectionSite("accept <== final states", "accept")
        strict.append(accept_site)
        loose.append(accept_site)
        for i in range(n):
            for q in live:
                for r, byts in groups[q].items():
                    if r == dead:
                        continue
                    site = InjectionSite(product_label(i, q, r, byts), f"m[{i}][{q}][{r}]")
                    loose.append(site)
                    if on_accepting_run(i, q) and on_accepting_run(i + 1, r):
                        strict.append(site)
    elif kind is InjectionKind.FLIP_ACCEPT_STATE:
        for q in range(Q):
            site = InjectionSite("accept <== final states", "accept", {"state": q, "was_accepting": q in dfa.accepting})
            loose.append(site)
            if q in reach[n]:
                strict.append(site)
    elif kind is InjectionKind.CLASS_OFF_BY_ONE:
        grow = injection.direction == "grow"
        lo_a, hi_a = dfa.alphabet.lo, dfa.alphabet.hi
        for i in range(n):
            for q in live:
                for r, byts in groups[q].items():
                    if r == dead:
                        continue
                    label = product_label(i, q, r, byts)
                    observable = on_accepting_run(i, q) and on_accepting_run(i + 1, r)
                    for lo, hi in _runs(byts):
                        if grow:
                            edits = [g for g in (lo - 1, hi + 1) if lo_a <= g <= hi_a and g not in byts]
                        else:
                            edits = sorted({lo, hi})
                        for g in edits:
                            detail = {"pos": i, "from": q, "to": r, "byte": g, "op": "grow" if grow else "shrink"}
                            site = InjectionSite(label, f"m[{i}][{q}][{r}]", detail)
                            loose.append(site)
                            if observable or (grow and q in reach[i]):
                                strict.append(site)
    return strict or loose


def _runs(byts) -> list[tuple[int, int]]:
    runs: list[list[int]] = []
    for b in sorted(byts):
        if runs and b == runs[-1][1] + 1:
            runs[-1][1] = b
        else:
            runs.append([b, b])
    return [(lo, hi) for lo, hi in runs]


def inject_bug(spec: TranspileSpec, injection: BugInjection, modulus: FieldModulus) -> tuple[Circuit, str]:
    """Transpile and apply one edit; returns the circuit and its expected category."""
    base = transpile(spec, modulus)
    dfa, n = spec.dfa, spec.input_length
    cands = injection_candidates(dfa, n, injection)
    if not cands:
        raise ConfigError(f"no {injection.kind.value} site exists for this DFA at length {n}")
    site = cands[injection.site % len(cands)]
    kind = injection.kind
    category = EXPECTED[kind]

    if kind in (InjectionKind.DROP_BOOLEANITY, InjectionKind.DROP_TRANSITION):
        circuit = _drop_constraint(base, site.constraint)
    elif kind is InjectionKind.HINT_UNCONSTRAINED:
        label = site.constraint
        pos = next(k for k, ins in enumerate(base.program) if ins.constraint == label)
        circuit = base.strip_to_assign(pos)
    elif kind is InjectionKind.FLIP_ACCEPT_STATE:
        accepting = set(dfa.accepting) ^ {site.detail["state"]}
        circuit = _rewire_accept(base, n, accepting)
    else:
        circuit = _edit_class(base, site)
        if site.detail["op"] == "grow":
            q, g = site.detail["from"], site.detail["byte"]
            category = "completeness" if dfa.next(q, g) in dfa.live else "correctness"

    meta = dict(circuit.metadata)
    meta["injection"] = {
        "kind": kind.value,
        "site": injection.site,
        "direction": injection.direction,
        "constraint": site.constraint,
        "signal": site.signal,
        "detail": site.detail,
        "expected_category": category,
    }
    circuit = circuit.with_changes(metadata=meta)
    circuit.validate()
    return circuit, category


def _drop_constraint(c: Circuit, label: str) -> Circuit:
    program = tuple(ins for ins in c.program if not (ins.kind is Kind.CONSTRAIN and ins.constraint == label))
    constraints = tuple(con for con in c.constraints if con.label != label)
    return c.with_changes(program=program, constraints=constraints)


def _rewire_accept(c: Circuit, n: int, accepting: set[int]) -> Circuit:
    label = "accept <== final states"
    b = CircuitBuilder(c.modulus)
    b.signals, b.names = list(c.signals), dict(c.by_name)
    b.assign_constrain(c.by_name["accept"], _accept_expr(b, n, accepting), label)
    new_cons, new_ins = b.constraints[0], b.program[0]
    constraints = tuple(new_cons if con.label == label else con for con in c.constraints)
    program = tuple(new_ins if ins.constraint == label else ins for ins in c.program)
    return c.with_changes(constraints=constraints, program=program)


def _edit_class(c: Circuit, site: InjectionSite) -> Circuit:
    """Add or remove one ``eq`` term in the class sum of a product constraint."""
    d = site.detail
    idx = c.constraint_index[site.constraint]
    con = c.constraints[idx]
    eq_sig = c.by_name[f"eq[{d['pos']}][{d['byte']}]"]
    terms = {s: coeff for coeff, s in con.b}
    if d["op"] == "shrink":
        terms.pop(eq_sig)
    else:
        terms[eq_sig] = 1
    edited = Constraint(con.a, make_lc(terms, c.p), con.c, con.label)
    constraints = c.constraints[:idx] + (edited,) + c.constraints[idx + 1 :]
    return c.with_changes(constraints=constraints)


__all__ = [
    "BugInjection",
    "InjectionKind",
    "InjectionSite",
    "TranspileSpec",
    "EXPECTED",
    "class_text",
    "constraint_count",
    "product_label",
    "inject_bug",
    "injection_candidates",
    "transpile",
]
