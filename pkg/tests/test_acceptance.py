"""Acceptance suite: one test per criterion, one PASS/FAIL line each."""

import json
import time
from collections import Counter

import pytest

from circfuzz.cli import main
from circfuzz.execute import generate_witness, mock_prove
from circfuzz.fixtures import REFERENCES, FixtureKind, build_fixture, build_montgomery_add
from circfuzz.harness import load_config, random_inputs, run_regex_campaign, run_witness_campaign
from circfuzz.harness.campaign import load_grammar
from circfuzz.harness.coverage import EMPTY, coverage_merge
from circfuzz.inputgen import GenBudget, generate_regex
from circfuzz.mutator import ProbeBudget, soundness_probe, verify_finding
from circfuzz.regex import compile_regex, complement, nfa_match
from circfuzz.rng import derive_seed
from circfuzz.transpiler import EXPECTED, InjectionKind

from conftest import ACCEPTANCE_LINES
from naive import all_strings, naive_match


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def config(**kw):
    return load_config(overrides=kw, env={})


# 1 ---------------------------------------------------------------------------


def _fixture_campaign(kind, inputs, **kw):
    cfg = config(**kw)
    circuit = build_fixture(kind, cfg.field_modulus)
    t0 = time.monotonic()
    result = run_witness_campaign(cfg, circuit, inputs, REFERENCES[FixtureKind(kind)])
    return result, time.monotonic() - t0


def test_criterion_1_fixture_oracles():
    checks = []

    cfg = config()
    safe = build_fixture("multiplier_safe", cfg.field_modulus)
    res, t = _fixture_campaign("multiplier_safe", random_inputs(safe, 1), iterations=10_000, probe_iterations=1)
    checks.append(("safe", not res.reports and res.stats.iterations == 10_000 and res.stats.probe_iterations == 10_000, t))
    # one long probe on top of the many short ones
    inputs = {"a": 2, "b": 5}
    t0 = time.monotonic()
    long_probe = soundness_probe(safe, inputs, generate_witness(safe, inputs), ProbeBudget(10_000, 1))
    checks.append(("safe-probe", long_probe == [], time.monotonic() - t0))

    res, t = _fixture_campaign("multiplier_soundness", [inputs], probe_iterations=1000)
    checks.append(("soundness", [r.category for r in res.reports] == ["soundness"], t))

    def off_diagonal(kind):
        circuit = build_fixture(kind, cfg.field_modulus)
        for assignment in random_inputs(circuit, 2):
            if (assignment["a"], assignment["b"]) not in {(0, 0), (0, 2), (2, 0), (2, 2)}:
                yield assignment

    for kind, category in (("multiplier_completeness", "completeness"), ("multiplier_correctness", "correctness")):
        res, t = _fixture_campaign(kind, off_diagonal(kind), iterations=100, stop_on=category)
        found = [r for r in res.raw_reports if r.category == category]
        checks.append((category, bool(found) and res.stats.iterations <= 100, t))
        checks.append((category + "-only", {r.category for r in res.reports} == {category}, 0.0))

    ok = all(good and t < 10 for _, good, t in checks)
    detail = ", ".join(f"{name} {'ok' if good else 'BAD'} {t:.1f}s" for name, good, t in checks)
    verdict(1, ok, detail)


# 2 ---------------------------------------------------------------------------


def test_criterion_2_montgomery():
    p = config().field_modulus
    zero = {"in1[0]": 0, "in1[1]": 0, "in2[0]": 0, "in2[1]": 0}
    rows = []
    for A, B in ((486662, 1), (3, 5), (p.p - 1, 7), (168698, 168700)):
        c = build_montgomery_add(A, B, p)
        t0 = time.monotonic()
        honest = generate_witness(c, zero)
        findings = soundness_probe(c, zero, honest, ProbeBudget(10_000, 0))
        elapsed = time.monotonic() - t0
        good = [
            f
            for f in findings
            if verify_finding(c, f)
            and mock_prove(c, honest).satisfied
            and mock_prove(c, list(f.mutated)).satisfied
            and {n for n, _, _ in f.differing_outputs} & {"out[0]", "out[1]"}
        ]
        rows.append((A, B, len(good), elapsed))
    passing = [r for r in rows if r[2] >= 1 and r[3] < 60]
    detail = "; ".join(f"A={A % 10**6} B={B}: {n} findings {t:.1f}s" for A, B, n, t in rows)
    verdict(2, len(passing) >= 3 and len(passing) == len(rows), detail)


# 3 and 7 share one campaign ---------------------------------------------------


@pytest.fixture(scope="module")
def validity_run():
    t0 = time.monotonic()
    result = run_regex_campaign(config(pairs=1000, workers=1))
    return result, time.monotonic() - t0


def test_criterion_3_transpiler_validity(validity_run):
    result, elapsed = validity_run
    st = result.stats
    cats = Counter(r.category for r in result.raw_reports)
    ok = st.pairs == 1000 and not result.raw_reports and st.witness_errors == 0 and elapsed < 300
    verdict(3, ok, f"{st.pairs} pairs, {st.circuits} circuits, reports {dict(cats)}, {elapsed:.0f}s")


def test_criterion_7_coverage(validity_run):
    result, _ = validity_run
    first = run_regex_campaign(config(pairs=10, workers=1))
    big, small = result.coverage.fraction(), first.coverage.fraction()
    a = result.coverage
    b = first.coverage
    identity = coverage_merge(a, EMPTY).to_json() == a.to_json()
    commutes = coverage_merge(a, b).to_json() == coverage_merge(b, a).to_json()
    merged = coverage_merge(a, b)
    monotone = all(
        cov.zero & ~merged.circuits[h].zero == 0 and cov.nonzero & ~merged.circuits[h].nonzero == 0
        for m in (a, b)
        for h, cov in m.circuits.items()
    )
    ok = big > small and identity and commutes and monotone
    verdict(7, ok, f"coverage 1000 pairs {big:.4f} > first 10 pairs {small:.4f}; merge laws {identity and commutes and monotone}")


# 4 ---------------------------------------------------------------------------


def _efficacy(kind: InjectionKind, seed: int):
    cfg = config(seed=seed, seconds=300, injection=kind.value, stop_on=EXPECTED[kind], workers=1)
    result = run_regex_campaign(cfg)
    hit = next((r for r in result.raw_reports if r.category == EXPECTED[kind]), None)
    site_ok = False
    if hit is not None:
        inj = result.circuits[hit.circuit_hash].metadata["injection"]
        site_ok = hit.site in (inj["constraint"], inj["signal"])
    print(f"{kind.value} seed {seed}: {hit.site if hit else None!r} site {site_ok} {result.stats.wall_time:.0f}s", flush=True)
    return hit is not None, site_ok, result.stats.wall_time


def test_criterion_4_injection_efficacy():
    rows = []
    for kind in InjectionKind:
        runs = [_efficacy(kind, seed) for seed in range(10)]
        rows.append((kind.value, sum(c for c, _, _ in runs), sum(s for _, s, _ in runs), max(t for _, _, t in runs)))
    ok = all(cat >= 9 and site >= 7 for _, cat, site, _ in rows)
    detail = "; ".join(f"{k}: category {c}/10 site {s}/10 max {t:.0f}s" for k, c, s, t in rows)
    verdict(4, ok, detail)


# 5 ---------------------------------------------------------------------------


def test_criterion_5_automata_brute_force():
    cfg = config(alphabet="a-d")
    alphabet = cfg.alphabet_range
    grammar = load_grammar(cfg)
    strings = list(all_strings(alphabet, 6))
    t0 = time.monotonic()
    patterns: list[str] = []
    i = 0
    while len(patterns) < 100:
        pattern = generate_regex(grammar, GenBudget(cfg.regex_max_depth, cfg.regex_max_len, derive_seed(0, "accept5", i)))
        i += 1
        if pattern not in patterns:
            patterns.append(pattern)
    bad = []
    for pattern in patterns:
        ast, nfa, dfa = compile_regex(pattern, alphabet)
        comp = complement(dfa)
        for s in strings:
            expected = naive_match(ast, s, alphabet)
            in_dfa, in_comp = dfa.accepts(s), comp.accepts(s)
            if nfa_match(nfa, s) != expected or in_dfa != expected or in_dfa == in_comp:
                bad.append((pattern, s))
                break
    elapsed = time.monotonic() - t0
    verdict(5, not bad and elapsed < 120, f"{len(patterns)} regexes x {len(strings)} strings, mismatches {bad[:3]}, {elapsed:.0f}s")


# 6 ---------------------------------------------------------------------------


def test_criterion_6_determinism(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"alphabet": "a-d", "injection": "hint_unconstrained"}))

    def run(name, workers):
        out = tmp_path / name
        argv = ["fuzz-regex", "--config", str(cfg_file), "--seed", "7", "--iterations", "16", "--workers", str(workers), "--out", str(out)]
        code = main(argv)
        return code, (out / "reports.json").read_bytes()

    code_a, a = run("a", 1)
    code_b, b = run("b", 1)
    code_c, c = run("c", 4)
    ids = lambda data: {r["id"] for r in json.loads(data)}  # noqa: E731
    n = len(json.loads(a))
    ok = code_a == code_b == code_c == 1 and n > 0 and a == b and ids(a) == ids(c)
    verdict(6, ok, f"{n} reports; workers=1 byte-identical {a == b}; workers=4 same set {ids(a) == ids(c)}")
