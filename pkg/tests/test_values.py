import math
import random

import pytest

from reducto.values import (
    UNDEFINED,
    float_bits,
    freeze,
    thaw,
    value_from_json,
    value_to_json,
    values_equal,
    wrap_int,
)


def test_equality_is_type_strict():
    assert not values_equal(1, 1.0)
    assert not values_equal(1, True)
    assert not values_equal(0, False)
    assert not values_equal("1", 1)
    assert values_equal(1, 1)
    assert values_equal("ab", "ab")


def test_float_equality_is_bit_pattern():
    assert values_equal(float("inf"), float("inf"))
    assert not values_equal(float("inf"), float("-inf"))
    assert values_equal(float("nan"), float("nan"))  # same canonical bits
    assert not values_equal(0.0, -0.0)
    assert values_equal(1.5, 1.5)


def test_array_equality_structural():
    assert values_equal((1, (2, 3)), (1, (2, 3)))
    assert values_equal([1, 2], (1, 2))  # list/tuple are the same array type
    assert not values_equal((1, 2), (1, 2, 3))
    assert not values_equal((1.0,), (1,))


def test_wrap_int_two_complement():
    assert wrap_int(2**63) == -(2**63)
    assert wrap_int(-(2**63) - 1) == 2**63 - 1
    assert wrap_int(2**63 - 1) == 2**63 - 1
    assert wrap_int(-5) == -5
    assert wrap_int((2**62) * 4 + 7) == 7


def test_freeze_and_thaw_round_trip():
    v = [1, [2.5, "x"], True]
    frozen = freeze(v)
    assert frozen == (1, (2.5, "x"), True)
    thawed = thaw(frozen)
    assert thawed == [1, [2.5, "x"], True]
    thawed[1][0] = 9.0
    assert frozen[1][0] == 2.5  # freezing detaches storage


@pytest.mark.parametrize(
    "value",
    [0, 1, -(2**63), 2**63 - 1, True, False, "line\nbreak", "",
     1.5, -0.0, float("inf"), float("-inf"), float("nan"),
     (1, (2, "x"), (True, 0.5))],
)
def test_tagged_json_round_trip(value):
    encoded = value_to_json(value)
    decoded = value_from_json(encoded)
    assert values_equal(decoded, value)
    assert type(decoded) is type(value) or (type(value) is tuple and type(decoded) is tuple)


def test_float_json_uses_bit_pattern():
    encoded = value_to_json(float("nan"))
    assert encoded == {"float": "0x" + float_bits(float("nan")).hex()}
    # `{"float": 1.5}` plain-number form is accepted when reading files
    assert value_from_json({"float": 1.5}) == 1.5


def test_undefined_sentinel():
    assert value_to_json(UNDEFINED) == {"undefined": True}
    assert value_from_json({"undefined": True}) is UNDEFINED
    assert values_equal(UNDEFINED, UNDEFINED)
    assert not values_equal(UNDEFINED, 0)


def test_malformed_literals_rejected():
    for bad in ({"int": "3"}, {"bool": 1}, {"str": 5}, {"array": 3},
                {"int": 3, "bool": True}, "plain", {"what": 1}):
        with pytest.raises(ValueError):
            value_from_json(bad)


def test_value_equality_fuzz_reflexive_symmetric():
    rng = random.Random(7)

    def make(depth=0):
        kind = rng.randrange(6 if depth < 2 else 5)
        if kind == 0:
            return rng.randint(-10, 10)
        if kind == 1:
            return rng.choice([0.5, -0.0, 0.0, float("inf"), math.pi])
        if kind == 2:
            return rng.random() < 0.5
        if kind == 3:
            return rng.choice(["", "a", "bc"])
        if kind == 4:
            return rng.choice(["x", 3, 2.5])
        return tuple(make(depth + 1) for _ in range(rng.randrange(3)))

    for _ in range(500):
        a, b = make(), make()
        assert values_equal(a, a)
        assert values_equal(a, b) == values_equal(b, a)
        enc = value_to_json(a)
        assert values_equal(value_from_json(enc), a)
