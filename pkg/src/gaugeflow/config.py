"""Scenario configuration files.

Grammar, one item per line::

    line    := blank | comment | header | entry
    comment := ('#' | ';') any
    header  := '[' name ']'
    entry   := key '=' value [comment]
    value   := number | vector | word | '"' chars '"'
    vector  := number (',' number)*
    number  := [+-]? (digits ['.' digits?] | '.' digits) ([eE] [+-]? digits)?

Names and keys are ``[A-Za-z_][A-Za-z0-9_]*``. Every key belongs to a
section; unknown sections and keys are errors, as are repeated keys.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from gaugeflow.errors import ConfigInvariantError, ConfigSyntaxError, UnknownKeyError

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-/]*")


@dataclass(frozen=True)
class Key:
    kind: str  # float | int | vector | word | text
    default: object = None
    choices: tuple = ()


SCHEMA = {
    "scenario": {
        "name": Key("word", "custom"),
        "group": Key("word", "u1", ("u1", "so3", "so2k")),
        "k": Key("int", 1),
    },
    "internal": {
        "kind": Key("word", "point", ("point", "sphere")),
        "charge": Key("float", 1.0),
        "mu": Key("float", 1.0),
    },
    "gauge": {
        "kind": Key("word", "none", ("none", "uniform", "monopole", "constant")),
        "field": Key("vector", (0.0, 0.0, 1.0)),
        "q_m": Key("float", 0.5),
        "patch": Key("word", "north", ("north", "south")),
        "components": Key("vector", ()),
    },
    "lagrangian": {
        "kind": Key("word", "free", ("free", "kepler", "oscillator")),
        "mass": Key("float", 1.0),
        "strength": Key("float", 1.0),
        "omega": Key("float", 1.0),
    },
    "dynamics": {
        "formulation": Key("word", "lagrangian", ("lagrangian", "hamiltonian", "both")),
        "hamiltonian": Key("word", "analytic", ("analytic", "legendre")),
    },
    "initial": {
        "q": Key("vector", None),
        "v": Key("vector", None),
        "z": Key("vector", None),
    },
    "integrator": {
        "method": Key("word", "rk4", ("rk4", "rkf45")),
        "dt": Key("float", 1e-3),
        "tol": Key("float", 1e-10),
        "t_start": Key("float", 0.0),
        "t_end": Key("float", 10.0),
    },
    "output": {
        "trajectory": Key("text", "trajectory.csv"),
        "diagnostics": Key("text", "diagnostics.json"),
        "stride": Key("int", 1),
    },
    "quantize": {
        "cycle": Key("word", "auto", ("auto", "base_sphere", "orbit")),
        "radius": Key("float", 1.0),
        "center": Key("vector", None),
        "level": Key("int", 4),
        "tol": Key("float", 1e-3),
    },
}

MAX_SPHERE_LEVEL = 7


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed configuration with every default filled in.

    ``values[section][key]`` holds floats, ints, strings, or tuples of floats;
    ``initial.z`` is None until ``build_model`` knows the internal dimension.
    """

    values: dict = field(default_factory=dict)

    def __getitem__(self, section):
        return self.values[section]

    def get(self, section, key):
        return self.values[section][key]

    @property
    def name(self):
        return self.values["scenario"]["name"]

    def replace(self, section, key, value):
        """Copy with one value changed; invariants are re-checked."""
        vals = {s: dict(kv) for s, kv in self.values.items()}
        if section not in vals or key not in vals[section]:
            raise UnknownKeyError(f"unknown key {section}.{key}", key=f"{section}.{key}")
        vals[section][key] = _coerce_python(SCHEMA[section][key], value, f"{section}.{key}")
        cfg = ScenarioConfig(vals)
        check_invariants(cfg)
        return cfg


def _coerce_python(entry, value, name):
    if value is None:
        return None
    if entry.kind == "vector":
        return tuple(float(x) for x in value)
    if entry.kind == "float":
        return float(value)
    if entry.kind == "int":
        if int(value) != value:
            raise ConfigInvariantError(f"{name} must be an integer", key=name)
        return int(value)
    value = str(value)
    if entry.choices and value not in entry.choices:
        raise ConfigInvariantError(f"{name} must be one of {', '.join(entry.choices)}", key=name)
    return value


def _strip_comment(line):
    """Drop a trailing comment that is not inside a quoted string."""
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch in "#;" and not quoted:
            return line[:i]
    return line


def _parse_value(raw, entry, lineno, col, name):
    text = raw.strip()
    if not text:
        raise ConfigSyntaxError(f"missing value for {name}", lineno, col, name)
    if entry.kind == "text" and text.startswith('"'):
        if len(text) < 2 or not text.endswith('"') or '"' in text[1:-1]:
            raise ConfigSyntaxError(f"unterminated or malformed string for {name}", lineno, col, name)
        return text[1:-1]
    if entry.kind in ("word", "text"):
        if not _WORD.fullmatch(text):
            raise ConfigSyntaxError(f"expected a bare word for {name}, got {text!r}", lineno, col, name)
        if entry.choices and text not in entry.choices:
            raise ConfigInvariantError(
                f"{name} = {text} is not one of {', '.join(entry.choices)}", lineno, col, name)
        return text
    parts = text.split(",")
    if entry.kind != "vector" and len(parts) > 1:
        raise ConfigSyntaxError(f"{name} takes a single number", lineno, col, name)
    numbers = []
    offset = col + (len(raw) - len(raw.lstrip()))
    for part in parts:
        token = part.strip()
        pos = offset + (len(part) - len(part.lstrip()))
        if not _NUMBER.fullmatch(token):
            raise ConfigSyntaxError(f"malformed number {token!r} in {name}", lineno, pos, name)
        numbers.append(token)
        offset += len(part) + 1
    if entry.kind == "int":
        if not re.fullmatch(r"[+-]?\d+", numbers[0]):
            raise ConfigSyntaxError(f"{name} must be an integer, got {numbers[0]!r}", lineno, col, name)
        return int(numbers[0])
    if entry.kind == "float":
        return float(numbers[0])
    return tuple(float(t) for t in numbers)


def parse_config(text):
    """Parse config text into a ScenarioConfig, checking invariants."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigSyntaxError(f"config is not valid UTF-8 ({exc.reason})") from None
    seen = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line)
        stripped = body.strip()
        if not stripped:
            continue
        indent = len(body) - len(body.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigSyntaxError("section header is missing ']'", lineno, indent)
            name = stripped[1:-1].strip()
            if not _NAME.fullmatch(name):
                raise ConfigSyntaxError(f"bad section name {name!r}", lineno, indent + 1)
            if name not in SCHEMA:
                raise UnknownKeyError(f"unknown section [{name}]", lineno, indent + 1, name)
            if name in seen:
                raise ConfigSyntaxError(f"section [{name}] appears twice", lineno, indent)
            seen[name] = {}
            section = name
            continue
        if "=" not in body:
            raise ConfigSyntaxError("expected 'key = value' or '[section]'", lineno, indent)
        eq = body.index("=")
        key = body[:eq].strip()
        if not _NAME.fullmatch(key):
            raise ConfigSyntaxError(f"bad key {key!r}", lineno, indent)
        if section is None:
            raise ConfigSyntaxError(f"key {key!r} appears before any [section]", lineno, indent, key)
        full = f"{section}.{key}"
        if key not in SCHEMA[section]:
            raise UnknownKeyError(f"unknown key {full}", lineno, indent, full)
        if key in seen[section]:
            raise ConfigSyntaxError(f"{full} is set twice", lineno, indent, full)
        seen[section][key] = _parse_value(body[eq + 1:], SCHEMA[section][key], lineno, eq + 2, full)
    values = {}
    for sec, keys in SCHEMA.items():
        given = seen.get(sec, {})
        values[sec] = {k: given.get(k, entry.default) for k, entry in keys.items()}
    cfg = ScenarioConfig(values)
    check_invariants(cfg)
    return cfg


def _require(cond, message, key):
    if not cond:
        raise ConfigInvariantError(message, key=key)


def check_invariants(cfg: ScenarioConfig):
    s = cfg.values
    group, k = s["scenario"]["group"], s["scenario"]["k"]
    _require(k >= 1, "scenario.k must be at least 1", "scenario.k")
    _require(group != "so2k" or k == 1,
             "scenario.k > 1 is not supported (no Ad*-fixed point orbit to build from)", "scenario.k")
    algebra_dim = {"u1": 1, "so3": 3, "so2k": 1}[group]

    internal = s["internal"]
    _require(internal["mu"] > 0, "internal.mu must be positive", "internal.mu")
    if internal["kind"] == "sphere":
        _require(group == "so3", "internal.kind = sphere needs scenario.group = so3", "internal.kind")
    elif algebra_dim != 1:
        _require(internal["charge"] == 0.0,
                 "a point orbit of so3 must have charge 0 (the only coadjoint-fixed point)", "internal.charge")

    init = s["initial"]
    for key in ("q", "v"):
        _require(init[key] is not None, f"initial.{key} is required", f"initial.{key}")
    n = len(init["q"])
    _require(n >= 1, "initial.q must not be empty", "initial.q")
    _require(len(init["v"]) == n, "initial.v and initial.q differ in length", "initial.v")
    m2 = 2 if internal["kind"] == "sphere" else 0
    if init["z"] is not None:
        _require(len(init["z"]) == m2, f"initial.z must have {m2} entries for internal.kind = {internal['kind']}",
                 "initial.z")
        if m2:
            _require(abs(init["z"][1]) < internal["mu"], "initial.z lies outside the sphere chart", "initial.z")

    gauge = s["gauge"]
    if gauge["kind"] in ("uniform", "monopole"):
        _require(algebra_dim == 1, f"gauge.kind = {gauge['kind']} needs a one-dimensional group", "gauge.kind")
        _require(n == 3, f"gauge.kind = {gauge['kind']} needs a three-dimensional base", "initial.q")
    if gauge["kind"] == "uniform":
        _require(len(gauge["field"]) == 3, "gauge.field must have three components", "gauge.field")
    if gauge["kind"] == "constant":
        _require(len(gauge["components"]) == n * algebra_dim,
                 f"gauge.components must have {n * algebra_dim} entries (base dim x group dim)", "gauge.components")

    lag = s["lagrangian"]
    _require(lag["mass"] > 0, "lagrangian.mass must be positive", "lagrangian.mass")
    _require(lag["omega"] > 0, "lagrangian.omega must be positive", "lagrangian.omega")

    integ = s["integrator"]
    _require(integ["dt"] > 0, "integrator.dt must be positive", "integrator.dt")
    _require(integ["tol"] > 0, "integrator.tol must be positive", "integrator.tol")
    _require(integ["t_end"] > integ["t_start"], "integrator.t_end must exceed integrator.t_start", "integrator.t_end")

    _require(s["output"]["stride"] >= 1, "output.stride must be at least 1", "output.stride")
    for key in ("trajectory", "diagnostics"):
        _require(s["output"][key] != "", f"output.{key} must not be empty", f"output.{key}")

    quant = s["quantize"]
    _require(quant["radius"] > 0, "quantize.radius must be positive", "quantize.radius")
    _require(0 <= quant["level"] <= MAX_SPHERE_LEVEL, f"quantize.level must lie in 0..{MAX_SPHERE_LEVEL}",
             "quantize.level")
    _require(quant["tol"] > 0, "quantize.tol must be positive", "quantize.tol")
    _require(quant["center"] is None or len(quant["center"]) == n, "quantize.center must match the base dimension", "quantize.center")


def _format_value(entry, value):
    if entry.kind == "vector":
        return ", ".join(repr(float(x)) for x in value)
    if entry.kind == "float":
        return repr(float(value))
    if entry.kind == "int":
        return str(int(value))
    if entry.kind == "text" and not _WORD.fullmatch(value):
        return f'"{value}"'
    return value


def serialize_config(cfg: ScenarioConfig):
    """Config text that parses back to an equal ScenarioConfig.

    Every key is written out; empty vectors and unset values are left out,
    which parses back to the same default.
    """
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key, entry in keys.items():
            value = cfg.values[sec][key]
            if value is None or (entry.kind == "vector" and len(value) == 0):
                continue
            lines.append(f"{key} = {_format_value(entry, value)}")
        lines.append("")
    return "\n".join(lines)
