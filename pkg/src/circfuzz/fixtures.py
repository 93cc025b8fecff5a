"""Hand-built reference circuits with known bug categories.

The four multiplier variants differ only in ``<--`` / ``<==`` / ``===`` usage
and in what the witness program computes, which is enough to produce one
circuit per bug category.  ``montgomery_add`` reproduces the classic
under-constrained elliptic-curve addition whose division hint is not
guarded against a zero denominator.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable, Mapping

from .builder import CircuitBuilder
from .circuit import Circuit
from .errors import ConfigError
from .field import FieldElement, FieldModulus


class FixtureKind(str, Enum):
    MULTIPLIER_SAFE = "multiplier_safe"
    MULTIPLIER_SOUNDNESS = "multiplier_soundness"
    MULTIPLIER_COMPLETENESS = "multiplier_completeness"
    MULTIPLIER_CORRECTNESS = "multiplier_correctness"
    MONTGOMERY_ADD = "montgomery_add"


EXPECTED_CATEGORY: dict[FixtureKind, str | None] = {
    FixtureKind.MULTIPLIER_SAFE: None,
    FixtureKind.MULTIPLIER_SOUNDNESS: "soundness",
    FixtureKind.MULTIPLIER_COMPLETENESS: "completeness",
    FixtureKind.MULTIPLIER_CORRECTNESS: "correctness",
    FixtureKind.MONTGOMERY_ADD: "soundness",
}

MULTIPLIERS = (
    FixtureKind.MULTIPLIER_SAFE,
    FixtureKind.MULTIPLIER_SOUNDNESS,
    FixtureKind.MULTIPLIER_COMPLETENESS,
    FixtureKind.MULTIPLIER_CORRECTNESS,
)


def build_multiplier(variant: FixtureKind | str, modulus: FieldModulus) -> Circuit:
    variant = FixtureKind(variant)
    if variant not in MULTIPLIERS:
        raise ConfigError(f"{variant.value} is not a multiplier fixture")
    b = CircuitBuilder(modulus)
    a_, b_ = b.input("a"), b.input("b")
    c_ = b.output("c")
    A, B, C = b["a"], b["b"], b["c"]
    if variant is FixtureKind.MULTIPLIER_SAFE:
        b.assign(c_, A * B)
        b.constrain(C, A * B, "c === a*b")
    elif variant is FixtureKind.MULTIPLIER_SOUNDNESS:
        b.assign(c_, A * B)
    elif variant is FixtureKind.MULTIPLIER_COMPLETENESS:
        b.assign(c_, A + B)
        b.constrain(C, A * B, "c === a*b")
    else:
        b.assign(c_, A + B)
        b.constrain(C, A + B, "c === a+b")
    del a_, b_
    return b.build({"fixture": variant.value, "expected_category": EXPECTED_CATEGORY[variant]})


def build_montgomery_add(A: FieldElement | int, B: FieldElement | int, modulus: FieldModulus) -> Circuit:
    """Montgomery-curve point addition with an unguarded slope hint.

    The slope ``lambda`` is a hint; the only constraint tying it to the inputs
    is ``lambda * (x2 - x1) === y2 - y1``, which holds for every ``lambda``
    once ``x2 == x1`` and ``y2 == y1``.
    """
    p = modulus.p
    a_val, b_val = int(A) % p, int(B) % p
    if b_val == 0:
        raise ConfigError("MontgomeryAdd requires B != 0")
    b = CircuitBuilder(modulus)
    for name in ("in1[0]", "in1[1]", "in2[0]", "in2[1]"):
        b.input(name)
    out0, out1 = b.output("out[0]"), b.output("out[1]")
    lam = b.signal("lambda")
    lam_sq = b.signal("lambda_sq")
    x1, y1, x2, y2 = b["in1[0]"], b["in1[1]"], b["in2[0]"], b["in2[1]"]
    L = b["lambda"]

    b.assign(lam, (y2 - y1) / (x2 - x1))
    b.constrain(L * (x2 - x1), y2 - y1, "lambda * (in2[0] - in1[0]) === in2[1] - in1[1]")
    b.assign_constrain(lam_sq, L * L, "lambda_sq <== lambda * lambda")
    b.assign_constrain(out0, b_val * b["lambda_sq"] - a_val - x1 - x2, "out[0] <== B*lambda^2 - A - in1[0] - in2[0]")
    b.assign_constrain(out1, L * (x1 - b["out[0]"]) - y1, "out[1] <== lambda*(in1[0] - out[0]) - in1[1]")
    del out1
    return b.build(
        {
            "fixture": FixtureKind.MONTGOMERY_ADD.value,
            "expected_category": "soundness",
            "A": str(a_val),
            "B": str(b_val),
        }
    )


def build_fixture(kind: FixtureKind | str, modulus: FieldModulus, A: int = 1, B: int = 1) -> Circuit:
    kind = FixtureKind(kind)
    if kind is FixtureKind.MONTGOMERY_ADD:
        return build_montgomery_add(A, B, modulus)
    return build_multiplier(kind, modulus)


def multiplier_reference(inputs: Mapping[str, int], p: int) -> dict[str, int]:
    """What a multiplier is supposed to output."""
    return {"c": inputs["a"] * inputs["b"] % p}


REFERENCES: dict[FixtureKind, Callable[[Mapping[str, int], int], dict[str, int]] | None] = {
    **{k: multiplier_reference for k in MULTIPLIERS},
    FixtureKind.MONTGOMERY_ADD: None,
}
