import pytest
from hypothesis import given
from hypothesis import strategies as st

from circfuzz.errors import ConfigError, InversionOfZeroError
from circfuzz.field import FieldElement, FieldModulus, fe_arith, fe_div, fe_inverse, is_probable_prime

BN = 21888242871839275222246405745257275088548364400416034343698204186575808495617
M = FieldModulus(BN)
elems = st.integers(min_value=0, max_value=BN - 1).map(M)
nonzero = st.integers(min_value=1, max_value=BN - 1).map(M)


def naive_prime(n):
    return n >= 2 and all(n % d for d in range(2, int(n**0.5) + 1))


def test_miller_rabin_matches_trial_division():
    for n in range(0, 5000):
        assert is_probable_prime(n) == naive_prime(n), n
    assert is_probable_prime(BN)
    assert not is_probable_prime(BN + 2)  # even
    assert not is_probable_prime(561)  # Carmichael


def test_modulus_validation():
    with pytest.raises(ConfigError):
        FieldModulus(65519)  # prime but below 2^16
    with pytest.raises(ConfigError):
        FieldModulus(65537 * 3)
    with pytest.raises(ConfigError):
        FieldModulus(-7)
    assert FieldModulus(65537).p == 65537


def test_arith_examples():
    assert fe_arith("add", M(BN - 1), M(1)).value == 0
    assert fe_arith("mul", M(0), M(12345)).value == 0
    assert fe_arith("sub", M(3), M(5)).value == BN - 2
    with pytest.raises(ValueError):
        fe_arith("pow", M(1), M(2))


def test_mixed_moduli_rejected():
    other = FieldModulus(65537)
    with pytest.raises(ConfigError):
        fe_arith("add", M(1), other(1))
    with pytest.raises(ConfigError):
        fe_div(M(1), other(1))


def test_canonical_reduction():
    assert M(-1).value == BN - 1
    assert M(BN + 5).value == 5
    assert isinstance(M(3), FieldElement)


def test_inverse_examples():
    assert fe_inverse(M(1)).value == 1
    assert fe_inverse(M(BN - 1)).value == BN - 1
    with pytest.raises(InversionOfZeroError):
        fe_inverse(M(0))


def test_div_examples():
    assert fe_div(M(0), M(0)) == (M(0), True)
    assert fe_div(M(6), M(3)) == (M(2), False)
    half, flag = fe_div(M(1), M(2))
    assert (half.value, flag) == ((BN + 1) // 2, False)
    assert fe_arith("mul", half, M(2)).value == 1


@given(elems, elems, elems)
def test_ring_laws(a, b, c):
    assert fe_arith("add", a, b) == fe_arith("add", b, a)
    assert fe_arith("mul", a, b) == fe_arith("mul", b, a)
    assert fe_arith("mul", a, fe_arith("add", b, c)) == fe_arith(
        "add", fe_arith("mul", a, b), fe_arith("mul", a, c)
    )
    assert fe_arith("sub", fe_arith("add", a, b), b) == a


@given(nonzero, elems)
def test_inverse_and_division_laws(a, b):
    assert fe_arith("mul", a, fe_inverse(a)).value == 1
    assert fe_inverse(fe_inverse(a)) == a
    assert fe_div(b, a) == (fe_arith("mul", b, fe_inverse(a)), False)
