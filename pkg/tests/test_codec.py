import json
import math

import pytest
from hypothesis import given, settings

from futurekit.errors import NonExportableError
from futurekit.exprlang import Resource, Vec, decode_value, encode_value, format_value, parse_value_literal
from futurekit.exprlang.values import hex_to_real, real_to_hex
from futurekit.task import FutureOutcome, TaskSpec
from futurekit.relay import RelayRecord

from strategies import REALS, same_value, task_specs, values


@settings(max_examples=500, deadline=None)
@given(values)
def test_value_round_trip_through_json(v):
    wire = json.loads(json.dumps(encode_value(v)))
    assert same_value(decode_value(wire), v)


@settings(max_examples=500, deadline=None)
@given(REALS)
def test_real_bits_exact(x):
    assert real_to_hex(hex_to_real(real_to_hex(x))) == real_to_hex(x)


@settings(max_examples=200, deadline=None)
@given(task_specs)
def test_taskspec_round_trip(task):
    wire = json.loads(json.dumps(task.to_json()))
    back = TaskSpec.from_json(wire)
    assert back == task
    assert all(same_value(back.env[k], task.env[k]) for k in task.env)


def test_int_and_real_stay_distinct():
    assert decode_value(encode_value(1)) == 1 and type(decode_value(encode_value(1))) is int
    assert type(decode_value(encode_value(1.0))) is float
    assert decode_value(encode_value(True)) is True


def test_resource_refuses_to_encode():
    with pytest.raises(NonExportableError):
        encode_value([1, Resource("db")], "xs")


def test_outcome_round_trip_ignores_timing():
    out = FutureOutcome("success", value=[1, 2.5], relay=[RelayRecord("stdout", "hi\n", 0)],
                        rng_used=True, wall_time_ms=12)
    back = FutureOutcome.from_json(json.loads(json.dumps(out.to_json())))
    assert back == out and back.wall_time_ms == 12
    other = FutureOutcome.from_json(out.to_json(timing=False))
    assert other == out


def test_format_value():
    assert format_value([1, 2.5, "a", None, True, Vec("int", (1, 2)), math.nan, -math.inf]) == \
        '(list 1 2.5 "a" null true [1 2] NaN -Inf)'
    assert format_value("top") == "top"
    assert format_value(0.1) == "0.1"


@pytest.mark.parametrize("text, expected", [
    ("41", 41), ("2.5", 2.5), ('"x y"', "x y"), ("bare", "bare"), ("[1 2 3]", Vec("int", (1, 2, 3))),
    ("[1, 2.5]", Vec("real", (1.0, 2.5))), ("null", None), ("true", True),
])
def test_cli_value_literals(text, expected):
    assert parse_value_literal(text) == expected
