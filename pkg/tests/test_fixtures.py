import random

import pytest

from circfuzz.errors import ConfigError
from circfuzz.execute import generate_witness, mock_prove
from circfuzz.fixtures import EXPECTED_CATEGORY, FixtureKind, build_montgomery_add, build_multiplier

ZERO = {"in1[0]": 0, "in1[1]": 0, "in2[0]": 0, "in2[1]": 0}


def test_expected_categories():
    assert EXPECTED_CATEGORY == {
        FixtureKind.MULTIPLIER_SAFE: None,
        FixtureKind.MULTIPLIER_SOUNDNESS: "soundness",
        FixtureKind.MULTIPLIER_COMPLETENESS: "completeness",
        FixtureKind.MULTIPLIER_CORRECTNESS: "correctness",
        FixtureKind.MONTGOMERY_ADD: "soundness",
    }


def test_multiplier_programs(bn254):
    shapes = {
        "multiplier_safe": ["assign", "constrain"],
        "multiplier_soundness": ["assign"],
        "multiplier_completeness": ["assign", "constrain"],
        "multiplier_correctness": ["assign", "constrain"],
    }
    for kind, kinds in shapes.items():
        c = build_multiplier(kind, bn254)
        assert [ins.kind.value for ins in c.program] == kinds
        assert [s.name for s in c.inputs] == ["a", "b"]
        assert [s.name for s in c.outputs] == ["c"]
    with pytest.raises(ConfigError):
        build_multiplier("montgomery_add", bn254)


def test_safe_multiplier_is_fully_constrained(small):
    # Brute force over a small field slice: the only satisfying c is a*b.
    c = build_multiplier("multiplier_safe", small)
    rng = random.Random(0)
    p = small.p
    for _ in range(200):
        a, b = rng.randrange(p), rng.randrange(p)
        w = generate_witness(c, {"a": a, "b": b})
        assert mock_prove(c, w).satisfied
        for cand in [rng.randrange(p) for _ in range(20)] + [(a * b + 1) % p]:
            vals = list(w.values)
            vals[c.by_name["c"]] = cand
            assert mock_prove(c, vals).satisfied == (cand == a * b % p)


def test_safe_multiplier_exhaustive_tiny_slice(small):
    c = build_multiplier("multiplier_safe", small)
    for a in range(6):
        for b in range(6):
            w = generate_witness(c, {"a": a, "b": b})
            sat = [v for v in range(64) if mock_prove(c, w.values[:3] + [v]).satisfied]
            assert sat == ([a * b] if a * b < 64 else [])


def test_montgomery_zero_denominator_family(bn254):
    p = bn254.p
    rng = random.Random(1)
    for A, B in ((486662, 1), (3, 5), (0, 7)):
        c = build_montgomery_add(A, B, bn254)
        w = generate_witness(c, ZERO)
        assert mock_prove(c, w).satisfied
        for _ in range(100):
            v = rng.randrange(1, p)
            vals = list(w.values)
            out0 = (B * v * v - A) % p
            vals[c.by_name["lambda"]] = v
            vals[c.by_name["lambda_sq"]] = v * v % p
            vals[c.by_name["out[0]"]] = out0
            vals[c.by_name["out[1]"]] = (-v * out0) % p
            assert mock_prove(c, vals).satisfied


def test_montgomery_honest_runs_satisfy(bn254):
    rng = random.Random(2)
    c = build_montgomery_add(486662, 1, bn254)
    for _ in range(50):
        inputs = {k: rng.randrange(bn254.p) for k in ZERO}
        if inputs["in1[0]"] == inputs["in2[0]"]:
            continue
        assert mock_prove(c, generate_witness(c, inputs)).satisfied


def test_montgomery_requires_nonzero_b(bn254):
    with pytest.raises(ConfigError):
        build_montgomery_add(1, 0, bn254)
    with pytest.raises(ConfigError):
        build_montgomery_add(1, bn254.p, bn254)
