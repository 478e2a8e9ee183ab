import json
import math

import numpy as np
from hypothesis import given, strategies as st

from gje.reports import config_hash, dumps, to_plain


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_roundtrip_through_17_digits(x):
    assert json.loads(dumps({"v": x}))["v"] == x


def test_non_finite_become_null_and_keys_sorted():
    text = dumps({"b": float("nan"), "a": [1.0, float("inf")], "c": {"z": 1, "y": 2}})
    data = json.loads(text)
    assert data == {"a": [1.0, None], "b": None, "c": {"y": 2, "z": 1}}
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')


def test_numpy_values_converted():
    obj = to_plain({"a": np.arange(3), "b": np.float64(0.5), "c": np.bool_(True), "d": (1, 2)})
    assert obj == {"a": [0, 1, 2], "b": 0.5, "c": True, "d": [1, 2]}


def test_config_hash_stable_and_sensitive():
    a = {"x": [1, 2], "y": {"k": 1.5}}
    b = {"y": {"k": 1.5}, "x": [1, 2]}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({"x": [1, 2], "y": {"k": 1.25}})
    assert len(config_hash(a)) == 64


def test_dumps_is_deterministic():
    obj = {"v": [math.pi, 1e-300, -0.0], "s": "text"}
    assert dumps(obj) == dumps(obj)
