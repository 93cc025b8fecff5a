import json
import signal
import subprocess
import sys
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circfuzz.cli import main
from circfuzz.errors import ConfigError, MergeError
from circfuzz.fixtures import REFERENCES, FixtureKind, build_fixture
from circfuzz.harness import (
    CircuitCoverage,
    CoverageMap,
    coverage_merge,
    emit_report_bundle,
    load_config,
    load_reports,
    random_inputs,
    replay,
    run_regex_campaign,
    run_witness_campaign,
)
from circfuzz.harness.coverage import EMPTY, merge_all

SMALL = {"alphabet": "a-d"}


def cfg(**kw):
    return load_config(overrides={**SMALL, **kw}, env={})


# -- configuration -----------------------------------------------------------


def test_config_precedence(tmp_path):
    assert load_config(env={}).seed == 0
    assert load_config(env={}).max_len == 64
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"seed": 5, "workers": 2, "max-string-len": 7}))
    c = load_config(f, env={})
    assert (c.seed, c.workers, c.max_string_len) == (5, 2, 7)
    assert load_config(f, env={"CIRCFUZZ_SEED": "9"}).seed == 9
    assert load_config(f, {"seed": 11, "workers": None}, env={"CIRCFUZZ_SEED": "9"}).seed == 11
    assert load_config(f, {"seed": 11, "workers": None}, env={}).workers == 2


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"colour": 1}')
    with pytest.raises(ConfigError, match="colour"):
        load_config(bad, env={})
    bad.write_text("[1]")
    with pytest.raises(ConfigError):
        load_config(bad, env={})
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json", env={})
    with pytest.raises(ConfigError):
        load_config(env={"CIRCFUZZ_SEED": "x"})
    with pytest.raises(ConfigError, match="budget"):
        cfg().validate()
    with pytest.raises(ConfigError):
        cfg(iterations=0).validate()
    with pytest.raises(ConfigError):
        cfg(iterations=1, workers=0).validate()
    with pytest.raises(ConfigError):
        cfg(iterations=1, grammar=str(tmp_path / "none.bnf")).validate()
    with pytest.raises(ConfigError):
        cfg(iterations=1, stop_on="everything").validate()
    with pytest.raises(ConfigError):
        cfg(iterations=1, injection="nope").validate()
    with pytest.raises(ConfigError):
        cfg(iterations=1, modulus="15").validate()


# -- coverage ----------------------------------------------------------------

SHAPES = {"h1": (6, 0b111101), "h2": (3, 0b011), "h3": (9, 0b111111111)}


@st.composite
def coverage_maps(draw):
    circuits = {}
    for h in draw(st.sets(st.sampled_from(sorted(SHAPES)))):
        slots, ex = SHAPES[h]
        mask = (1 << slots) - 1
        circuits[h] = CircuitCoverage(slots, ex, draw(st.integers(0, mask)), draw(st.integers(0, mask)))
    transitions = draw(
        st.dictionaries(st.sampled_from(["a", "b*"]), st.dictionaries(st.sampled_from(["0->1", "1->1"]), st.integers(0, 9)), max_size=2)
    )
    return CoverageMap(circuits, transitions)


def normal(m):
    return m.to_json()


@settings(max_examples=100, deadline=None)
@given(coverage_maps(), coverage_maps(), coverage_maps())
def test_merge_laws(a, b, c):
    assert normal(coverage_merge(a, EMPTY)) == normal(a)
    assert normal(coverage_merge(a, b)) == normal(coverage_merge(b, a))
    assert normal(coverage_merge(coverage_merge(a, b), c)) == normal(coverage_merge(a, coverage_merge(b, c)))
    m = coverage_merge(a, b)
    for h, cov in a.circuits.items():
        assert cov.zero & ~m.circuits[h].zero == 0
        assert cov.nonzero & ~m.circuits[h].nonzero == 0
    assert m.summary()["covered_slots"] >= a.summary()["covered_slots"]
    assert normal(merge_all([a, b, c])) == normal(coverage_merge(coverage_merge(a, b), c))
    assert normal(CoverageMap.from_json(a.to_json())) == normal(a)


def test_merge_shape_mismatch():
    a = CoverageMap({"h": CircuitCoverage(3, 0b111)})
    b = CoverageMap({"h": CircuitCoverage(6, 0b111)})
    with pytest.raises(MergeError):
        coverage_merge(a, b)


def test_fraction_counts_exercisable_slots():
    m = CoverageMap({"h": CircuitCoverage(6, 0b000111, zero=0b111111, nonzero=0b100011)})
    assert m.fraction() == 2 / 3


# -- regex campaigns ---------------------------------------------------------


def test_zero_report_bundle(tmp_path):
    c = cfg(iterations=3, seed=1)
    result = run_regex_campaign(c)
    assert result.reports == []
    assert result.stats.iterations == 3 and result.stats.stopped_by == "iterations"
    out = emit_report_bundle(result, tmp_path / "b", c)
    assert (out / "reports.json").read_text() == "[]\n"
    stats = json.loads((out / "stats.json").read_text())
    assert stats["iterations"] == 3
    assert stats["coverage"]["fraction"] > 0
    assert "No bugs found." in (out / "index.md").read_text()
    pinned = json.loads((out / "config.json").read_text())
    assert pinned["seed"] == 1 and "MT19937" in pinned["rng"]["generator"]
    assert load_config(out / "config.json", env={}) == c
    cov = CoverageMap.from_json(json.loads((out / "coverage.json").read_text()))
    assert cov.summary() == result.coverage.summary()


def test_pairs_budget():
    result = run_regex_campaign(cfg(pairs=30, seed=2))
    assert result.stats.pairs == 30 and result.stats.stopped_by == "pairs"


@pytest.mark.parametrize(
    "injection,category",
    [("hint_unconstrained", "soundness"), ("flip_accept_state", "correctness"), ("class_off_by_one", "completeness")],
)
def test_reproducers_replay(tmp_path, injection, category):
    c = cfg(iterations=4, seed=4, injection=injection)
    result = run_regex_campaign(c)
    assert result.reports
    assert category in {r.category for r in result.reports}
    out = emit_report_bundle(result, tmp_path, c)
    assert [r.id for r in load_reports(out / "reports.json")] == [r.id for r in result.reports]
    for r in result.reports:
        doc = json.loads((out / "reproducers" / f"{r.id}.json").read_text())
        again = replay(doc)
        assert again is not None and again.category == r.category
        assert doc["circuit"]["metadata"]["injection"]["kind"] == injection


def test_stop_on():
    result = run_regex_campaign(cfg(iterations=20, seed=4, injection="flip_accept_state", stop_on="correctness"))
    assert result.stats.stopped_by == "stop_on"
    assert len(result.raw_reports) == 1


def test_flushes_are_monotone():
    seen = []
    run_regex_campaign(cfg(iterations=24, seed=5, flush_seconds=0.0), flush=lambda r: seen.append(r.coverage.summary()))
    assert len(seen) >= 3
    for before, after in zip(seen, seen[1:]):
        assert after["covered_slots"] >= before["covered_slots"]
        assert after["flags"] >= before["flags"]
        assert after["transition_hits"] >= before["transition_hits"]


# -- witness campaigns -------------------------------------------------------

ZERO = {"in1[0]": 0, "in1[1]": 0, "in2[0]": 0, "in2[1]": 0}


def witness(kind, inputs, **kw):
    c = load_config(overrides=kw, env={})
    circuit = build_fixture(kind, c.field_modulus, int(c.montgomery_A), int(c.montgomery_B))
    return run_witness_campaign(c, circuit, inputs, REFERENCES[FixtureKind(kind)]), circuit


def test_montgomery_zero_inputs():
    result, _ = witness("montgomery_add", [ZERO], probe_iterations=10_000)
    (r,) = result.reports
    assert (r.category, r.oracle) == ("soundness", "invariant")
    assert r.site in ("lambda", "lambda_sq", "out[0]", "out[1]")


def test_safe_multiplier_random_inputs():
    c = load_config(overrides={"iterations": 5, "probe_iterations": 10_000}, env={})
    circuit = build_fixture("multiplier_safe", c.field_modulus)
    result = run_witness_campaign(c, circuit, random_inputs(circuit, 0), REFERENCES[FixtureKind.MULTIPLIER_SAFE])
    assert result.reports == [] and result.stats.iterations == 5


def test_forged_product_campaign():
    result, _ = witness("multiplier_soundness", [{"a": 2, "b": 5}], probe_iterations=1000)
    (r,) = result.reports
    assert (r.category, r.site) == ("soundness", "c")


def test_witness_campaign_replays(tmp_path):
    result, circuit = witness("multiplier_soundness", [{"a": 3, "b": 4}], probe_iterations=1000)
    out = emit_report_bundle(result, tmp_path, None)
    (r,) = result.reports
    doc = json.loads((out / "reproducers" / f"{r.id}.json").read_text())
    assert replay(doc).category == "soundness"


# -- command line ------------------------------------------------------------


def test_cli_exit_codes(tmp_path, capsys):
    safe = tmp_path / "safe.json"
    forged = tmp_path / "forged.json"
    comp = tmp_path / "comp.json"
    assert main(["fixture", "multiplier_safe", "--out", str(safe)]) == 0
    assert main(["fixture", "multiplier_soundness", "--out", str(forged)]) == 0
    assert main(["fixture", "multiplier_completeness", "--out", str(comp)]) == 0
    inputs = tmp_path / "in.json"
    inputs.write_text('{"a": 2, "b": 3}')
    assert main(["run", "--circuit", str(safe), "--inputs", str(inputs)]) == 0
    assert main(["run", "--circuit", str(comp), "--inputs", str(inputs)]) == 1
    assert main(["fuzz-witness", "--circuit", str(safe), "--inputs", str(inputs), "--budget", "500"]) == 0
    bundle = tmp_path / "bundle"
    args = ["fuzz-witness", "--circuit", str(forged), "--inputs", str(inputs), "--budget", "500", "--bundle", str(bundle)]
    assert main(args) == 1
    (rep,) = (bundle / "reproducers").iterdir()
    capsys.readouterr()
    assert main(["replay", str(rep)]) == 1
    assert json.loads(capsys.readouterr().out)["reproduced"] is True
    assert main(["report", str(bundle)]) == 1
    assert "soundness" in capsys.readouterr().out
    assert main(["fuzz-regex", "--iterations", "0"]) == 2
    assert main(["run", "--circuit", str(tmp_path / "missing.json"), "--string", "a"]) == 2
    assert main(["transpile", "--regex", "a(b", "--len", "2"]) == 2


def test_cli_transpile_and_run(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert main(["transpile", "--regex", "ab*c", "--len", "3", "--inject", "hint_unconstrained", "--out", str(out)]) == 0
    meta = json.loads(out.read_text())["metadata"]
    assert (meta["pattern"], meta["input_length"], meta["injection"]["kind"]) == ("ab*c", 3, "hint_unconstrained")
    capsys.readouterr()
    assert main(["run", "--circuit", str(out), "--string", "abc"]) == 0
    assert json.loads(capsys.readouterr().out)["outputs"]["accept"] == "1"


def test_cli_fuzz_regex(tmp_path, capsys):
    bundle = tmp_path / "r"
    argv = ["fuzz-regex", "--iterations", "2", "--seed", "3", "--config", str(tmp_path / "cfg.json"), "--out", str(bundle)]
    (tmp_path / "cfg.json").write_text(json.dumps(SMALL))
    assert main(argv) == 0
    assert json.loads((bundle / "stats.json").read_text())["iterations"] == 2


def test_interrupt_leaves_loadable_bundle(tmp_path):
    bundle = tmp_path / "partial"
    cmd = [sys.executable, "-m", "circfuzz.cli", "fuzz-regex", "--seconds", "120", "--out", str(bundle)]
    proc = subprocess.Popen(cmd, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    time.sleep(4)
    proc.send_signal(signal.SIGINT)
    assert proc.wait(timeout=60) in (0, 1)
    assert isinstance(load_reports(bundle / "reports.json"), list)
    stats = json.loads((bundle / "stats.json").read_text())
    assert stats["stopped_by"] == "signal"
