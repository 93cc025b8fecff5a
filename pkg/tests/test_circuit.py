import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circfuzz.builder import CircuitBuilder, build_iszero_gadget
from circfuzz.circuit import Kind, circuit_from_json, circuit_to_json
from circfuzz.errors import CircuitError, InputError, ParseError, RankError
from circfuzz.execute import generate_witness, mock_prove
from circfuzz.field import FieldModulus
from circfuzz.fixtures import build_fixture, build_montgomery_add, build_multiplier

BN254 = FieldModulus(21888242871839275222246405745257275088548364400416034343698204186575808495617)


def test_fig2_witness_examples(bn254):
    safe = build_multiplier("multiplier_safe", bn254)
    w = generate_witness(safe, {"a": 2, "b": 5})
    assert w.get(safe, "c") == 10
    assert w.values[0] == 1
    assert mock_prove(safe, w).satisfied

    comp = build_multiplier("multiplier_completeness", bn254)
    assert generate_witness(comp, {"a": 2, "b": 2}).get(comp, "c") == 4


def test_fig2_mock_prove_examples(bn254):
    p = bn254.p
    forged = build_multiplier("multiplier_soundness", bn254)
    w = generate_witness(forged, {"a": 2, "b": 5})
    w.values[forged.by_name["c"]] = 100
    assert mock_prove(forged, w).satisfied

    comp = build_multiplier("multiplier_completeness", bn254)
    res = mock_prove(comp, generate_witness(comp, {"a": 2, "b": 3}))
    assert not res.satisfied
    (v,) = res.violations
    assert v.label == "c === a*b"
    assert v.lhs == p - 1  # 5 - 6


def test_completeness_fixture_domain(bn254):
    comp = build_multiplier("multiplier_completeness", bn254)
    for a, b in ((0, 0), (2, 2)):
        assert mock_prove(comp, generate_witness(comp, {"a": a, "b": b})).satisfied
    assert not mock_prove(comp, generate_witness(comp, {"a": 1, "b": 3})).satisfied


def test_montgomery_all_zero(bn254):
    c = build_montgomery_add(486662, 1, bn254)
    w = generate_witness(c, {n: 0 for n in ("in1[0]", "in1[1]", "in2[0]", "in2[1]")})
    assert w.get(c, "lambda") == 0
    assert w.hint_events and any(flag for _, flag in w.hint_events)
    assert mock_prove(c, w).satisfied


def test_input_errors(bn254):
    c = build_multiplier("multiplier_safe", bn254)
    with pytest.raises(InputError):
        generate_witness(c, {"a": 1})
    with pytest.raises(InputError):
        generate_witness(c, {"a": 1, "b": 2, "z": 3})


def test_witness_length_checked(bn254):
    c = build_multiplier("multiplier_safe", bn254)
    with pytest.raises(CircuitError):
        mock_prove(c, [1, 2, 3])


def _iszero_circuit(m):
    b = CircuitBuilder(m)
    x = b.input("x")
    build_iszero_gadget(b, x, "out", "inv")
    return b.build()


def test_iszero_examples(bn254):
    c = _iszero_circuit(bn254)
    w0 = generate_witness(c, {"x": 0})
    assert w0.get(c, "out") == 1
    w7 = generate_witness(c, {"x": 7})
    assert w7.get(c, "out") == 0
    assert w7.get(c, "inv") * 7 % bn254.p == 1
    bad = w7.copy()
    bad.values[c.by_name["out"]] = 1
    bad.values[c.by_name["inv"]] = 0
    labels = {v.label for v in mock_prove(c, bad).violations}
    assert "out: x*out === 0" in labels


def test_iszero_brute_force(small):
    # Every satisfying (inv, out) for a given x has out == [x == 0].
    c = _iszero_circuit(small)
    p = small.p
    for x in (0, 1, 2, p - 1):
        w = generate_witness(c, {"x": x})
        for out in (0, 1, 2):
            for inv in (0, 1, w.get(c, "inv"), p - 1):
                vals = list(w.values)
                vals[c.by_name["out"]] = out
                vals[c.by_name["inv"]] = inv
                if mock_prove(c, vals).satisfied:
                    assert out == (1 if x == 0 else 0)


def test_rank_errors(bn254):
    b = CircuitBuilder(bn254)
    x = b.input("x")
    y = b.output("y")
    with pytest.raises(RankError):
        b.constrain(b["x"] / 2, b["y"])
    b.assign_constrain(y, b["x"] * b["x"] * b["x"])  # lowered via an aux signal
    c = b.build()
    assert len(c.constraints) == 2
    w = generate_witness(c, {"x": 3})
    assert w.get(c, "y") == 27 and mock_prove(c, w).satisfied
    del x


@pytest.mark.parametrize(
    "kind", ["multiplier_safe", "multiplier_soundness", "multiplier_completeness", "multiplier_correctness", "montgomery_add"]
)
def test_json_round_trip(kind, bn254):
    c = build_fixture(kind, bn254, 3, 5)
    data = circuit_to_json(c)
    back = circuit_from_json(data)
    assert back == c
    assert back.hash == c.hash
    assert circuit_to_json(back) == data


def test_json_errors(bn254):
    data = circuit_to_json(build_fixture("multiplier_safe", bn254))
    with pytest.raises(ParseError):
        circuit_from_json(data[: len(data) // 2])
    with pytest.raises(ParseError):
        circuit_from_json(b"[]")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=2**254), min_size=4, max_size=4))
def test_strip_law(values):
    # assign_and_constrain -> assign drops exactly one constraint and no witness value changes.
    c = build_montgomery_add(486662, 1, BN254)
    inputs = dict(zip(("in1[0]", "in1[1]", "in2[0]", "in2[1]"), values))
    for pos, ins in enumerate(c.program):
        if ins.kind is not Kind.ASSIGN_AND_CONSTRAIN:
            continue
        stripped = c.strip_to_assign(pos)
        assert len(stripped.constraints) == len(c.constraints) - 1
        assert {x.label for x in c.constraints} - {x.label for x in stripped.constraints} == {ins.constraint}
        assert generate_witness(stripped, inputs).values == generate_witness(c, inputs).values


def test_strip_rejects_other_kinds(bn254):
    c = build_multiplier("multiplier_safe", bn254)
    with pytest.raises(CircuitError):
        c.strip_to_assign(0)


def test_mock_prove_is_pure(bn254):
    c = build_montgomery_add(3, 5, bn254)
    w = generate_witness(c, {"in1[0]": 1, "in1[1]": 2, "in2[0]": 3, "in2[1]": 4})
    assert mock_prove(c, w) == mock_prove(c, w)
    assert mock_prove(c, w).satisfied


def test_pickle_drops_compiled_caches(bn254):
    import pickle

    from circfuzz.execute import compiled_program

    c = build_fixture("montgomery_add", bn254)
    compiled_program(c)
    again = pickle.loads(pickle.dumps(c))
    assert again == c and again.hash == c.hash
    assert mock_prove(again, generate_witness(again, {"in1[0]": 1, "in1[1]": 2, "in2[0]": 3, "in2[1]": 4})).satisfied
