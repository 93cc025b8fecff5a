"""Witness mutation and the soundness probe.

A probe starts from an honest, satisfying witness, overwrites one signal,
optionally re-runs the downstream witness program, and asks the mock prover
whether the result still satisfies every constraint.  A satisfying witness
whose public outputs differ from the honest ones proves the circuit
under-constrained: the same public inputs admit two different outputs.
"""

from __future__ import annotations

import heapq
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Mapping

from .circuit import ONE, Circuit, Kind, Role, Witness
from .errors import PlanError
from .execute import check_subset, compiled_program, mock_prove, replay_from

log = logging.getLogger(__name__)

NONE = "none"
REPLAY = "downstream_replay"

ROLE_WEIGHTS = {"hint": 4.0, "internal": 2.0, "output": 1.0}
VALUE_WEIGHTS = {"random": 0.4, "offset": 0.3, "zero": 0.15, "one": 0.15}
MAX_OFFSET = 16
WEIGHT_BOUNDS = (0.05, 50.0)


@dataclass(frozen=True)
class MutationPlan:
    target: int
    new_value: int
    patch_mode: str = REPLAY


def _check_plan(circuit: Circuit, plan: MutationPlan) -> None:
    if not 0 <= plan.target < len(circuit.signals):
        raise PlanError(f"no signal with index {plan.target}")
    sigl = circuit.signals[plan.target]
    if plan.target == ONE or sigl.role is Role.PUBLIC_INPUT:
        raise PlanError(f"{sigl.name!r} is part of the statement and cannot be mutated")
    if plan.patch_mode not in (NONE, REPLAY):
        raise PlanError(f"unknown patch mode {plan.patch_mode!r}")


def mutate_witness(circuit: Circuit, honest: Witness, plan: MutationPlan) -> Witness:
    """Copy of ``honest`` with ``plan.target`` overwritten.

    With ``downstream_replay`` every instruction after the target's defining
    instruction is re-executed, the target itself held fixed.
    """
    _check_plan(circuit, plan)
    out = honest.copy()
    out.values[plan.target] = plan.new_value % circuit.p
    if plan.patch_mode == REPLAY:
        start = circuit.defining_instruction[plan.target] + 1
        replay_from(circuit, out.values, start, fixed={plan.target})
    return out


@dataclass(frozen=True)
class SoundnessFinding:
    circuit_hash: str
    inputs: dict[str, int]
    honest_digest: str
    target: str
    new_value: int
    patch_mode: str
    mutated: tuple[int, ...]
    differing_outputs: tuple[tuple[str, int, int], ...]  # (name, honest, mutated)
    violated: tuple[str, ...] = ()
    reference_contradicted: bool = False
    iteration: int = 0

    def delta(self, honest: Witness | list[int], circuit: Circuit) -> dict[str, str]:
        values = honest.values if isinstance(honest, Witness) else honest
        return {
            circuit.signals[i].name: str(v) for i, (h, v) in enumerate(zip(values, self.mutated)) if h != v
        }


class _Dependents:
    """Program positions reading each signal, for incremental replay."""

    def __init__(self, circuit: Circuit):
        prog = compiled_program(circuit)
        self.fn_at = {pos: (target, fn) for pos, target, fn in prog.steps}
        readers: dict[int, list[int]] = {}
        for pos, reads in enumerate(prog.reads):
            if pos not in self.fn_at:
                continue
            for s in reads:
                readers.setdefault(s, []).append(pos)
        self.readers = readers


def _dependents(circuit: Circuit) -> _Dependents:
    dep = circuit.__dict__.get("_dependents")
    if dep is None:
        dep = _Dependents(circuit)
        circuit.__dict__["_dependents"] = dep
    return dep


def propagate(circuit: Circuit, values: list[int], target: int, replay: bool) -> list[tuple[int, int]]:
    """Apply a write already made to ``values[target]``; returns ``(signal, old)`` undo log.

    Only instructions whose inputs changed are re-run, which yields the same
    witness as a full replay because the program is deterministic.
    """
    undo: list[tuple[int, int]] = []
    if not replay:
        return undo
    dep = _dependents(circuit)
    heap = list(dep.readers.get(target, ()))
    heapq.heapify(heap)
    queued = set(heap)
    while heap:
        pos = heapq.heappop(heap)
        t, fn = dep.fn_at[pos]
        if t == target:
            continue
        new = fn(values, [])
        old = values[t]
        if new != old:
            undo.append((t, old))
            values[t] = new
            for r in dep.readers.get(t, ()):
                if r not in queued:
                    queued.add(r)
                    heapq.heappush(heap, r)
    return undo


def family(name: str) -> str:
    return name.split("[", 1)[0].split(".", 1)[0]


def role_class(circuit: Circuit, index: int) -> str:
    ins = circuit.program[circuit.defining_instruction[index]]
    if ins.kind is Kind.ASSIGN:
        return "hint"
    if circuit.signals[index].role is Role.PUBLIC_OUTPUT:
        return "output"
    return "internal"


@dataclass
class _Selector:
    """Two-level weighted choice: signal group first, then member.

    Groups are (name family, role class) so a family with thousands of
    members competes with a lone hint on equal terms.
    """

    groups: dict[tuple[str, str], list[int]]
    group_w: dict[tuple[str, str], float] = field(default_factory=dict)
    member_w: dict[int, float] = field(default_factory=dict)

    @classmethod
    def build(cls, circuit: Circuit) -> _Selector:
        groups: dict[tuple[str, str], list[int]] = {}
        for s in circuit.signals:
            if s.index == ONE or s.role is Role.PUBLIC_INPUT:
                continue
            key = (family(s.name), role_class(circuit, s.index))
            groups.setdefault(key, []).append(s.index)
        sel = cls(dict(sorted(groups.items())))
        sel.group_w = {k: ROLE_WEIGHTS[k[1]] for k in sel.groups}
        return sel

    def key_of(self, index: int, circuit: Circuit) -> tuple[str, str]:
        return (family(circuit.signals[index].name), role_class(circuit, index))

    def pick(self, rng: random.Random) -> int:
        keys = list(self.groups)
        key = rng.choices(keys, [self.group_w[k] for k in keys])[0]
        members = self.groups[key]
        if len(members) == 1:
            return members[0]
        mw = self.member_w
        if not any(m in mw for m in members):
            return members[rng.randrange(len(members))]
        return rng.choices(members, [mw.get(m, 1.0) for m in members])[0]

    def feedback(self, index: int, key: tuple[str, str], violations: int) -> None:
        if violations <= 1:
            f = 1.5
        elif violations <= 3:
            f = 1.1
        elif violations >= 8:
            f = 0.8
        else:
            f = 0.95
        lo, hi = WEIGHT_BOUNDS
        base = ROLE_WEIGHTS[key[1]]
        self.group_w[key] = min(hi * base, max(lo * base, self.group_w[key] * (f ** 0.5)))
        self.member_w[index] = min(hi, max(lo, self.member_w.get(index, 1.0) * f))


def draw_value(rng: random.Random, honest: int, p: int, weights: Mapping[str, float] = VALUE_WEIGHTS) -> int:
    names = list(weights)
    kind = rng.choices(names, [weights[k] for k in names])[0]
    if kind == "random":
        return rng.randrange(p)
    if kind == "zero":
        return 0
    if kind == "one":
        return 1
    k = 1
    while k < MAX_OFFSET and rng.random() < 0.5:
        k += 1
    return (honest + (k if rng.random() < 0.5 else -k)) % p


@dataclass(frozen=True)
class ProbeBudget:
    iterations: int = 1000
    rng_seed: int = 0
    stop_after: int | None = None  # findings; None = run the whole budget


@dataclass
class ProbeStats:
    iterations: int = 0
    mutations: int = 0
    mock_proofs: int = 0
    violations: Counter = field(default_factory=Counter)


def soundness_probe(
    circuit: Circuit,
    inputs: Mapping[str, int],
    honest: Witness,
    budget: ProbeBudget,
    strategy_weights: Mapping[str, float] = VALUE_WEIGHTS,
    reference_outputs: Mapping[str, int] | None = None,
    stats: ProbeStats | None = None,
) -> list[SoundnessFinding]:
    """Search for satisfying witnesses whose public outputs differ from ``honest``."""
    stats = stats if stats is not None else ProbeStats()
    p = circuit.p
    base = honest.values
    if not mock_prove(circuit, base).satisfied:
        log.debug("honest witness does not satisfy %s; nothing to probe", circuit.hash[:12])
        return []
    rng = random.Random(budget.rng_seed)
    sel = _Selector.build(circuit)
    if not sel.groups:
        return []
    cons_of = circuit.constraints_of_signal
    outputs = [s.index for s in circuit.outputs]
    dep = _dependents(circuit)
    work = list(base)
    findings: list[SoundnessFinding] = []
    seen: set[tuple[str, frozenset[str]]] = set()
    digest = honest.digest()

    for it in range(budget.iterations):
        stats.iterations += 1
        target = sel.pick(rng)
        value = draw_value(rng, base[target], p, strategy_weights)
        if value == base[target]:
            value = (value + 1) % p
        key = sel.key_of(target, circuit)
        modes = (NONE, REPLAY) if target in dep.readers else (NONE,)
        best = None
        for mode in modes:
            stats.mutations += 1
            work[target] = value
            undo = propagate(circuit, work, target, mode == REPLAY)
            touched = {target} | {s for s, _ in undo}
            check = sorted({ci for s in touched for ci in cons_of.get(s, ())})
            bad = check_subset(circuit, work, check)
            best = len(bad) if best is None else min(best, len(bad))
            if not bad:
                diff = tuple(
                    (circuit.signals[o].name, base[o], work[o]) for o in outputs if work[o] != base[o]
                )
                dkey = (circuit.signals[target].name, frozenset(d[0] for d in diff))
                if diff and dkey not in seen:
                    stats.mock_proofs += 1
                    if mock_prove(circuit, work).satisfied and all(
                        work[s.index] == base[s.index] for s in circuit.inputs
                    ):
                        seen.add(dkey)
                        contradicted = bool(reference_outputs) and any(
                            name in reference_outputs and reference_outputs[name] % p != new
                            for name, _, new in diff
                        )
                        findings.append(
                            SoundnessFinding(
                                circuit.hash,
                                {k: int(v) % p for k, v in inputs.items()},
                                digest,
                                circuit.signals[target].name,
                                value,
                                mode,
                                tuple(work),
                                diff,
                                (),
                                contradicted,
                                it,
                            )
                        )
            for s, old in reversed(undo):
                work[s] = old
            work[target] = base[target]
        stats.violations[best] += 1
        sel.feedback(target, key, best)
        if budget.stop_after is not None and len(findings) >= budget.stop_after:
            break
    return findings


def verify_finding(circuit: Circuit, finding: SoundnessFinding) -> bool:
    """Independent re-check of a finding from its stored witnesses."""
    from .execute import generate_witness

    honest = generate_witness(circuit, finding.inputs)
    mutated = list(finding.mutated)
    if not mock_prove(circuit, mutated).satisfied:
        return False
    if any(mutated[s.index] != honest.values[s.index] for s in circuit.inputs):
        return False
    return any(mutated[s.index] != honest.values[s.index] for s in circuit.outputs)


def finding_to_json(f: SoundnessFinding, circuit: Circuit, honest: Witness) -> dict[str, Any]:
    return {
        "circuit_hash": f.circuit_hash,
        "inputs": {k: str(v) for k, v in f.inputs.items()},
        "honest_digest": f.honest_digest,
        "target": f.target,
        "new_value": str(f.new_value),
        "patch_mode": f.patch_mode,
        "witness_delta": f.delta(honest, circuit),
        "differing_outputs": [[n, str(h), str(m)] for n, h, m in f.differing_outputs],
        "violated": list(f.violated),
        "reference_contradicted": f.reference_contradicted,
        "iteration": f.iteration,
    }
