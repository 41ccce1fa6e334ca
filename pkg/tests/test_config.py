from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaugeflow import ConfigError, ConfigInvariantError, ConfigSyntaxError, UnknownKeyError
from gaugeflow.config import SCHEMA, parse_config, serialize_config
from gaugeflow.scenarios import BUILTINS, builtin_config

MALFORMED = sorted((Path(__file__).parent / "data" / "malformed").glob("*.cfg"))
CATEGORY = {"syntax": ConfigSyntaxError, "unknown-key": UnknownKeyError, "invariant": ConfigInvariantError}

MINIMAL = """
[scenario]
name = minimal
[gauge]
kind = uniform
field = 0, 0, 2
[initial]
q = 0, 0, 0
v = 1, 0, 0
"""


def expected_category(path):
    first = path.read_bytes().splitlines()[0].decode()
    assert first.startswith("# expect: ")
    return first.split(":", 1)[1].strip()


def test_corpus_is_large_enough():
    assert len(MALFORMED) >= 10
    assert {expected_category(p) for p in MALFORMED} == set(CATEGORY)


@pytest.mark.parametrize("path", MALFORMED, ids=lambda p: p.stem)
def test_malformed_input(path):
    category = expected_category(path)
    with pytest.raises(ConfigError) as exc:
        parse_config(path.read_bytes())
    assert type(exc.value) is CATEGORY[category]
    assert exc.value.category == category
    assert str(exc.value).startswith(f"{category} error")
    assert exc.value.exit_code == 2


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.get("integrator", "method") == "rk4"
    assert cfg.get("integrator", "dt") == 1e-3
    assert cfg.get("internal", "charge") == 1.0
    assert cfg.get("output", "stride") == 1
    assert cfg.get("gauge", "field") == (0.0, 0.0, 2.0)
    assert cfg.get("initial", "z") is None


def test_negative_dt_names_the_key():
    with pytest.raises(ConfigInvariantError) as exc:
        parse_config(MINIMAL + "[integrator]\ndt = -1\n")
    assert exc.value.key == "integrator.dt"
    assert "integrator.dt" in str(exc.value)


def test_syntax_error_position():
    with pytest.raises(ConfigSyntaxError) as exc:
        parse_config(MINIMAL + "[quantize]\ncenter = 0, 0, 2x\n")
    assert exc.value.line == 11
    assert exc.value.column == 16


def test_comments_and_quotes():
    cfg = parse_config(MINIMAL + '; comment\n[output]  # trailing\ntrajectory = "my run#1.csv"  ; note\n')
    assert cfg.get("output", "trajectory") == "my run#1.csv"


def test_number_forms():
    cfg = parse_config(MINIMAL + "[integrator]\ndt = .5e-2\nt_end = +3.\n")
    assert cfg.get("integrator", "dt") == 0.005 and cfg.get("integrator", "t_end") == 3.0


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtin_round_trip(name):
    cfg = builtin_config(name)
    text = serialize_config(cfg)
    assert parse_config(text) == cfg
    assert serialize_config(parse_config(text)) == text


def test_replace_rechecks_invariants():
    cfg = builtin_config("lorentz")
    assert cfg.replace("integrator", "dt", 0.01).get("integrator", "dt") == 0.01
    with pytest.raises(ConfigInvariantError):
        cfg.replace("integrator", "dt", 0.0)
    with pytest.raises(UnknownKeyError):
        cfg.replace("integrator", "step", 0.1)


floats = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False)


@given(dt=floats, charge=st.floats(-1e3, 1e3), q=st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
       stride=st.integers(1, 1000), level=st.integers(0, 7))
def test_round_trip_property(dt, charge, q, stride, level):
    cfg = builtin_config("dirac_monopole")
    for sec, key, val in [("integrator", "dt", dt), ("internal", "charge", charge), ("output", "stride", stride),
                          ("quantize", "level", level)]:
        cfg = cfg.replace(sec, key, val)
    text = serialize_config(cfg)
    assert parse_config(text) == cfg


def test_schema_keys_are_documented_names():
    for sec, keys in SCHEMA.items():
        assert sec.isidentifier() and all(k.isidentifier() for k in keys)
