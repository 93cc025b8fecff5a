"""Command-line interface.

Exit codes: 0 when the command ran and found nothing, 1 when it found bugs
(or a violated constraint, for ``run``), 2 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .circuit import circuit_from_json, circuit_to_json
from .errors import CircfuzzError
from .execute import generate_witness, mock_prove
from .fixtures import REFERENCES, FixtureKind, build_fixture
from .harness.campaign import random_inputs, run_regex_campaign, run_witness_campaign
from .harness.config import load_config
from .harness.report import emit_report_bundle, index_markdown, load_reports, replay
from .oracle import reports_to_json
from .regex import compile_regex
from .transpiler import BugInjection, TranspileSpec, inject_bug, transpile

EXIT_OK, EXIT_BUGS, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("circfuzz")


def _write(path: str | None, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(path).write_bytes(data)


def _config(args: argparse.Namespace, **overrides: Any):
    flags = {"seed": args.seed, "workers": args.workers, **overrides}
    return load_config(args.config, flags)


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CircfuzzError(f"cannot read {path}: {exc}") from None


def cmd_fixture(args: argparse.Namespace) -> int:
    cfg = _config(args)
    A = args.A if args.A is not None else int(cfg.montgomery_A)
    B = args.B if args.B is not None else int(cfg.montgomery_B)
    circuit = build_fixture(args.kind, cfg.field_modulus, A, B)
    _write(args.out, circuit_to_json(circuit))
    return EXIT_OK


def cmd_transpile(args: argparse.Namespace) -> int:
    cfg = _config(args)
    _, _, dfa = compile_regex(args.regex, cfg.alphabet_range, cfg.dfa_state_cap)
    spec = TranspileSpec(dfa, args.len, args.regex, cfg.max_len, cfg.dfa_state_cap)
    if args.inject:
        circuit, category = inject_bug(spec, BugInjection.parse(args.inject), cfg.field_modulus)
        log.info("injected %s, expected category %s", args.inject, category)
    else:
        circuit = transpile(spec, cfg.field_modulus)
    _write(args.out, circuit_to_json(circuit))
    return EXIT_OK


def _inputs_for(circuit, args: argparse.Namespace) -> dict[str, int]:
    if args.string is not None:
        data = args.string.encode()
        return {f"char[{k}]": b for k, b in enumerate(data)}
    if args.inputs is None:
        raise CircfuzzError("give --inputs or --string")
    doc = _read_json(args.inputs)
    return {k: int(v) for k, v in doc.items()}


def cmd_run(args: argparse.Namespace) -> int:
    circuit = circuit_from_json(Path(args.circuit).read_bytes())
    witness = generate_witness(circuit, _inputs_for(circuit, args))
    result = mock_prove(circuit, witness)
    doc = {
        "outputs": {k: str(v) for k, v in witness.outputs(circuit).items()},
        "satisfied": result.satisfied,
        "violations": [{"index": v.index, "label": v.label, "lhs": str(v.lhs)} for v in result.violations],
        "hint_events": [[pos, flag] for pos, flag in witness.hint_events],
    }
    _write(args.out, json.dumps(doc, indent=1).encode() + b"\n")
    return EXIT_OK if result.satisfied else EXIT_BUGS


def cmd_fuzz_regex(args: argparse.Namespace) -> int:
    cfg = _config(
        args,
        iterations=args.iterations,
        pairs=args.pairs,
        seconds=args.seconds,
        injection=args.inject,
        reference=args.reference,
        out=args.out,
        stop_on=args.stop_on,
    )
    result = run_regex_campaign(cfg)
    if not cfg.out:
        _write(None, reports_to_json(result.reports))
    log.info("%d reports, stats %s", len(result.reports), result.stats.to_json())
    return EXIT_BUGS if result.reports else EXIT_OK


def _input_source(args: argparse.Namespace, circuit, seed: int):
    if args.inputs is None:
        return random_inputs(circuit, seed)
    doc = _read_json(args.inputs)
    return doc if isinstance(doc, list) else [doc]


def cmd_fuzz_witness(args: argparse.Namespace) -> int:
    circuit = circuit_from_json(Path(args.circuit).read_bytes())
    cfg = _config(
        args,
        iterations=args.count,
        seconds=args.seconds,
        probe_iterations=args.budget,
        stop_on=args.stop_on,
    )
    kind = circuit.metadata.get("fixture")
    reference = REFERENCES.get(FixtureKind(kind)) if kind else None
    source = _input_source(args, circuit, cfg.seed)
    if args.inputs is None and cfg.iterations is None and cfg.seconds is None:
        raise CircfuzzError("generated inputs need --count or --seconds")
    result = run_witness_campaign(cfg, circuit, source, reference)
    _write(args.out, reports_to_json(result.reports))
    if args.bundle:
        emit_report_bundle(result, args.bundle, cfg)
    return EXIT_BUGS if result.reports else EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    doc = _read_json(args.reproducer)
    report = replay(doc)
    original = doc["report"]
    same = report is not None and report.category == original["category"]
    print(
        json.dumps(
            {
                "expected": original["category"],
                "replayed": report.category if report else None,
                "oracle": report.oracle if report else None,
                "reproduced": same,
            }
        )
    )
    return EXIT_BUGS if report is not None else EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.bundle)
    reports = load_reports(out / "reports.json")
    if args.format == "json":
        sys.stdout.buffer.write(reports_to_json(reports))
    else:
        index = out / "index.md"
        if index.exists():
            sys.stdout.write(index.read_text())
        else:
            from types import SimpleNamespace

            from .harness.campaign import CampaignStats
            from .harness.coverage import EMPTY

            sys.stdout.write(index_markdown(SimpleNamespace(reports=reports, stats=CampaignStats(), coverage=EMPTY)))
    return EXIT_BUGS if reports else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="campaign seed (overrides config and env)")
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("-v", "--verbose", action="count", default=0)

    ap = argparse.ArgumentParser(prog="circfuzz", description="Fuzz arithmetic circuits and a regex-to-circuit compiler.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", parents=[common], help="emit a reference circuit")
    p.add_argument("kind", choices=[k.value for k in FixtureKind])
    p.add_argument("--A", type=int, default=None)
    p.add_argument("--B", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_fixture)

    p = sub.add_parser("transpile", parents=[common], help="compile a regex to a circuit")
    p.add_argument("--regex", required=True)
    p.add_argument("--len", type=int, required=True)
    p.add_argument("--inject", default=None, help="kind[:site[:direction]]")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_transpile)

    p = sub.add_parser("run", parents=[common], help="generate a witness and mock-prove it")
    p.add_argument("--circuit", required=True)
    p.add_argument("--inputs", default=None, help="JSON object of input values")
    p.add_argument("--string", default=None, help="input string for a regex circuit")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("fuzz-regex", parents=[common], help="fuzz the regex compiler")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--pairs", type=int, default=None)
    p.add_argument("--seconds", type=float, default=None)
    p.add_argument("--inject", default=None)
    p.add_argument("--reference", default=None, help="builtin or external:<command>")
    p.add_argument("--stop-on", default=None)
    p.add_argument("--out", default=None, help="report bundle directory")
    p.set_defaults(fn=cmd_fuzz_regex)

    p = sub.add_parser("fuzz-witness", parents=[common], help="probe one circuit for soundness bugs")
    p.add_argument("--circuit", required=True)
    p.add_argument("--inputs", default=None, help="JSON object or list of objects; random when absent")
    p.add_argument("--budget", type=int, default=None, help="probe iterations per input assignment")
    p.add_argument("--count", type=int, default=None, help="number of input assignments")
    p.add_argument("--seconds", type=float, default=None)
    p.add_argument("--stop-on", default=None)
    p.add_argument("--out", default=None, help="findings (reports) JSON")
    p.add_argument("--bundle", default=None, help="also write a report bundle here")
    p.set_defaults(fn=cmd_fuzz_witness)

    p = sub.add_parser("replay", parents=[common], help="re-run a reproducer file")
    p.add_argument("reproducer")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("report", parents=[common], help="summarize a report bundle")
    p.add_argument("bundle")
    p.add_argument("--format", choices=("md", "json"), default="md")
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except (CircfuzzError, OSError) as exc:
        print(f"circfuzz: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
