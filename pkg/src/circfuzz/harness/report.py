"""Report bundles on disk and replay of a single reproducer."""

from __future__ import annotations

import base64
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Mapping

from ..circuit import Circuit, circuit_from_document
from ..errors import ConfigError, EvaluatorError
from ..execute import generate_witness, mock_prove
from ..fixtures import REFERENCES, FixtureKind
from ..mutator import REPLAY, SoundnessFinding
from ..oracle import BugReport, Observation, classify, reports_to_json
from ..regex import BuiltinReference
from ..regex.syntax import Alphabet


def _write_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(doc: Any) -> bytes:
    return json.dumps(doc, sort_keys=True, indent=1).encode() + b"\n"


def reproducer_document(report: BugReport, circuit: Circuit | None) -> dict[str, Any]:
    doc: dict[str, Any] = {"report": report.to_json()}
    if circuit is not None:
        doc["circuit"] = circuit.to_document()
    return doc


def index_markdown(result, config: Any = None) -> str:
    st = result.stats
    lines = ["# Campaign report", ""]
    if config is not None:
        lines.append(f"Seed {config.seed}, workers {config.workers}, injection {config.injection or 'none'}.")
        lines.append("")
    lines += [
        f"- iterations: {st.iterations}",
        f"- pairs: {st.pairs}",
        f"- circuits: {st.circuits}",
        f"- mock proofs: {st.mock_proofs}",
        f"- constraint coverage: {result.coverage.fraction():.4f}",
        f"- wall time: {st.wall_time:.1f} s",
        "",
        f"## Reports ({len(result.reports)})",
        "",
    ]
    if not result.reports:
        lines.append("No bugs found.")
    else:
        lines.append("| id | category | oracle | site | duplicates | reproducer |")
        lines.append("|---|---|---|---|---|---|")
        for r in result.reports:
            site = str(r.site).replace("|", "\\|")
            lines.append(
                f"| {r.id[:12]} | {r.category} | {r.oracle} | `{site}` | {r.duplicates} | reproducers/{r.id}.json |"
            )
    return "\n".join(lines) + "\n"


def emit_report_bundle(result, outdir: str | Path, config: Any = None) -> Path:
    """Write reports.json, stats.json, coverage.json, config.json, index.md and one reproducer per report."""
    out = Path(outdir)
    _write_atomic(out / "reports.json", reports_to_json(result.reports))
    _write_atomic(out / "stats.json", _dump(result.stats.to_json(result.coverage)))
    _write_atomic(out / "coverage.json", _dump(result.coverage.to_json()))
    if config is not None:
        _write_atomic(out / "config.json", _dump(config.to_json()))
    for r in result.reports:
        doc = reproducer_document(r, result.circuits.get(r.circuit_hash))
        _write_atomic(out / "reproducers" / f"{r.id}.json", _dump(doc))
    _write_atomic(out / "index.md", index_markdown(result, config).encode())
    return out


def load_reports(path: str | Path) -> list[BugReport]:
    return [BugReport.from_json(d) for d in json.loads(Path(path).read_text())]


def _fixture_reference(circuit: Circuit):
    kind = circuit.metadata.get("fixture")
    if kind is None:
        return None
    return REFERENCES.get(FixtureKind(kind))


def replay(doc: Mapping[str, Any], reference=None) -> BugReport | None:
    """Re-run a reproducer from scratch and classify it again."""
    if "circuit" not in doc or "report" not in doc:
        raise ConfigError("reproducer needs 'report' and 'circuit'")
    circuit = circuit_from_document(doc["circuit"])
    original = BugReport.from_json(doc["report"])
    rep = original.reproducer
    p = circuit.p
    if "string_b64" in rep:
        data = base64.b64decode(rep["string_b64"])
        inputs = {f"char[{k}]": b for k, b in enumerate(data)}
        pipeline = "regex"
    elif "inputs" in rep:
        data = None
        inputs = {k: int(v) for k, v in rep["inputs"].items()}
        pipeline = "witness"
    else:
        raise EvaluatorError("reproducer has neither a string nor inputs")

    werr = violations = outputs = None
    witness = None
    try:
        witness = generate_witness(circuit, inputs)
    except Exception as exc:
        werr = f"{type(exc).__name__}: {exc}"
    ref = ref_outputs = None
    if witness is not None:
        violations = mock_prove(circuit, witness).violations
        outputs = witness.outputs(circuit)
    if pipeline == "regex":
        if reference is None:
            lo, hi = circuit.metadata.get("alphabet", (0x20, 0x7E))
            reference = BuiltinReference(Alphabet(int(lo), int(hi)))
        ref = reference.matches(rep["regex"], data)
    else:
        fn = _fixture_reference(circuit)
        if fn is not None:
            ref_outputs = dict(fn(inputs, p))

    findings = ()
    if "witness_delta" in rep and witness is not None:
        finding = _finding_from_delta(circuit, witness, inputs, rep["witness_delta"], original, ref)
        if finding is not None:
            findings = (finding,)
    obs = Observation(
        circuit.hash,
        pipeline,
        rep.get("label"),
        rep.get("regex"),
        data,
        inputs,
        werr,
        violations,
        outputs,
        ref,
        ref_outputs,
        findings,
        rep.get("seed", 0),
        rep.get("injection"),
        original.first_seen_iteration,
        {k: rep[k] for k in ("witness_delta",) if k in rep},
    )
    return classify(obs)


def _finding_from_delta(circuit, honest, inputs, delta, original: BugReport, ref) -> SoundnessFinding | None:
    values = list(honest.values)
    for name, v in delta.items():
        values[circuit.by_name[name]] = int(v) % circuit.p
    if not mock_prove(circuit, values).satisfied:
        return None
    if any(values[s.index] != honest.values[s.index] for s in circuit.inputs):
        return None
    diff = tuple((s.name, honest.values[s.index], values[s.index]) for s in circuit.outputs if values[s.index] != honest.values[s.index])
    if not diff:
        return None
    contradicted = ref is not None and any(n == "accept" and m != int(ref) for n, _, m in diff)
    ev = original.evidence
    target = ev.get("target", next(iter(delta)))
    return SoundnessFinding(
        circuit.hash,
        dict(inputs),
        honest.digest(),
        target,
        int(ev.get("new_value", values[circuit.by_name[target]])),
        ev.get("patch_mode", REPLAY),
        tuple(values),
        diff,
        (),
        contradicted,
        original.first_seen_iteration,
    )


__all__ = ["emit_report_bundle", "replay", "load_reports", "index_markdown", "reproducer_document"]
