"""Bug classification.

Decision table, first match wins:

1. expected-valid input whose honest run fails or violates a constraint:
   completeness (spec-based).  An expected-invalid input that violates a
   constraint is a compiler defect under computed rejection: correctness,
   tagged ``unexpected-unsat``.
2. honest run succeeds but a public output disagrees with the reference:
   correctness (differential).
3. a soundness finding: soundness, via the differential oracle when the
   forged output contradicts the reference, otherwise via the determinism
   invariant.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Mapping, Sequence

from .errors import EvaluatorError
from .execute import Violation
from .mutator import SoundnessFinding

EXPECTED_VALID = "expected_valid"
EXPECTED_INVALID = "expected_invalid"

CATEGORIES = ("completeness", "correctness", "soundness")


@dataclass(frozen=True)
class Observation:
    circuit_hash: str
    pipeline: str  # "regex" | "fixture" | "witness"
    label: str | None = None
    regex: str | None = None
    string: bytes | None = None
    inputs: Mapping[str, int] = field(default_factory=dict)
    witness_error: str | None = None
    violations: tuple[Violation, ...] | None = None
    outputs: Mapping[str, int] | None = None
    reference: bool | None = None  # regex pipeline verdict
    reference_outputs: Mapping[str, int] | None = None
    findings: tuple[SoundnessFinding, ...] = ()
    seed: int = 0
    injection: str | None = None
    iteration: int = 0
    extra: Mapping[str, Any] = field(default_factory=dict)

    @property
    def accept(self) -> int | None:
        return None if self.outputs is None else self.outputs.get("accept")


@dataclass(frozen=True)
class BugReport:
    id: str
    category: str
    oracle: str
    circuit_hash: str
    reproducer: dict[str, Any]
    evidence: dict[str, Any]
    first_seen_iteration: int = 0
    duplicates: int = 1

    @property
    def site(self) -> str:
        return self.evidence.get("site", "")

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "category": self.category,
            "oracle": self.oracle,
            "circuit_hash": self.circuit_hash,
            "reproducer": self.reproducer,
            "evidence": self.evidence,
            "first_seen_iteration": self.first_seen_iteration,
            "duplicates": self.duplicates,
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> BugReport:
        return cls(
            doc["id"],
            doc["category"],
            doc["oracle"],
            doc["circuit_hash"],
            dict(doc["reproducer"]),
            dict(doc["evidence"]),
            int(doc.get("first_seen_iteration", 0)),
            int(doc.get("duplicates", 1)),
        )


def _content_id(*parts: Any) -> str:
    blob = json.dumps(parts, sort_keys=True, separators=(",", ":"), default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _reproducer(obs: Observation) -> dict[str, Any]:
    rep: dict[str, Any] = {"seed": obs.seed}
    if obs.regex is not None:
        rep["regex"] = obs.regex
    if obs.string is not None:
        rep["string_b64"] = base64.b64encode(obs.string).decode()
        rep["input_length"] = len(obs.string)
    if obs.label is not None:
        rep["label"] = obs.label
    if obs.injection is not None:
        rep["injection"] = obs.injection
    if obs.inputs and obs.string is None:
        rep["inputs"] = {k: str(v) for k, v in sorted(obs.inputs.items())}
    rep.update(obs.extra)
    return rep


def _report(obs: Observation, category: str, oracle: str, evidence: dict[str, Any]) -> BugReport:
    rep = _reproducer(obs)
    rid = _content_id(category, oracle, obs.circuit_hash, rep, evidence)
    return BugReport(rid, category, oracle, obs.circuit_hash, rep, evidence, obs.iteration)


def _check(obs: Observation) -> None:
    if obs.pipeline == "regex":
        if obs.label not in (EXPECTED_VALID, EXPECTED_INVALID):
            raise EvaluatorError("regex observation needs an expected_valid/expected_invalid label")
        if obs.string is None or obs.regex is None:
            raise EvaluatorError("regex observation needs the regex and the string")
        ran = obs.witness_error is None and obs.violations is not None
        if ran and obs.reference is None:
            raise EvaluatorError("regex observation needs a reference verdict")
    elif obs.label is not None and obs.label not in (EXPECTED_VALID, EXPECTED_INVALID):
        raise EvaluatorError(f"unknown input label {obs.label!r}")
    if obs.witness_error is None and obs.violations is None:
        raise EvaluatorError("observation has neither a witness error nor a mock-prove outcome")


Invariant = Callable[[Observation], "BugReport | None"]


def classify(obs: Observation, invariants: Sequence[Invariant] = ()) -> BugReport | None:
    """Apply the decision table; extra ``invariants`` run last, in order."""
    _check(obs)
    failed = obs.witness_error is not None or bool(obs.violations)

    # 1: spec-based
    if obs.label == EXPECTED_VALID and failed:
        if obs.witness_error is not None:
            ev = {"site": "witness-generation", "error": obs.witness_error}
        else:
            ev = _violation_evidence(obs.violations)
        return _report(obs, "completeness", "spec_based", ev)
    if obs.label == EXPECTED_INVALID and obs.violations:
        ev = _violation_evidence(obs.violations)
        ev["tag"] = "unexpected-unsat"
        return _report(obs, "correctness", "spec_based", ev)

    # 2: differential
    if not failed and obs.outputs is not None:
        expected = _expected_outputs(obs)
        diff = sorted(k for k, v in expected.items() if k in obs.outputs and obs.outputs[k] != v)
        if diff:
            ev = {
                "site": diff[0],
                "verdicts": {k: [str(obs.outputs[k]), str(expected[k])] for k in diff},
            }
            return _report(obs, "correctness", "differential", ev)

    # 3: soundness
    if obs.findings:
        f = obs.findings[0]
        oracle = "differential" if f.reference_contradicted else "invariant"
        ev = {
            "site": f.target,
            "target": f.target,
            "new_value": str(f.new_value),
            "patch_mode": f.patch_mode,
            "differing_outputs": [[n, str(h), str(m)] for n, h, m in f.differing_outputs],
            "violated": [],
            "honest_digest": f.honest_digest,
        }
        return _report(obs, "soundness", oracle, ev)
    for inv in invariants:
        report = inv(obs)
        if report is not None:
            return report
    return None


def _violation_evidence(violations: Sequence[Violation]) -> dict[str, Any]:
    return {
        "site": violations[0].label,
        "violated": [v.label for v in violations],
        "lhs": [str(v.lhs) for v in violations],
    }


def _expected_outputs(obs: Observation) -> dict[str, int]:
    if obs.pipeline == "regex":
        return {"accept": int(bool(obs.reference))}
    return dict(obs.reference_outputs or {})


def dedupe_key(r: BugReport) -> tuple[str, str, str]:
    return (r.circuit_hash, r.category, r.site)


def dedupe(reports: Iterable[BugReport], key: Callable[[BugReport], Any] = dedupe_key) -> list[BugReport]:
    """Keep the first report per key; ``duplicates`` counts every occurrence."""
    first: dict[Any, BugReport] = {}
    for r in reports:
        k = key(r)
        if k in first:
            first[k] = replace(first[k], duplicates=first[k].duplicates + r.duplicates)
        else:
            first[k] = r
    return list(first.values())


def reports_to_json(reports: Sequence[BugReport]) -> bytes:
    return json.dumps([r.to_json() for r in reports], sort_keys=True, indent=1).encode() + b"\n"
