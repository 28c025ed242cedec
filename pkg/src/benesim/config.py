"""Flat key/value experiment configuration.

One `key = value` per line, `#` starts a comment, lists are
comma-separated. Every experiment the CLI offers is expressible with
scalars and lists, so nothing here nests. parse_config and format_config
round-trip exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional, Tuple

from .simulator import VARIANTS

EXPERIMENTS = ("utility_sweep", "robustness", "adaptation", "scaling",
               "invariants", "capacity_check")


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ExperimentSpec:
    """A validated experiment request with all knobs resolved."""

    experiment: str = "utility_sweep"
    n: int = 4
    v: Tuple[float, ...] = (10.0,)
    eta: float = 0.01
    a_max: int = 2
    slots: int = 100_000
    seed: int = 1
    variant: Tuple[str, ...] = ("exact",)
    n_values: Tuple[int, ...] = (3, 4, 5, 6)
    scaling_slots: int = 30_000
    bias_enhanced: bool = False
    weight: float = 1.0
    traffic: str = "constant"
    lam: Optional[float] = None


_INT_KEYS = {"n", "A_max", "slots", "seed", "scaling_slots"}
_FLOAT_KEYS = {"eta", "weight", "lam"}
_BOOL_KEYS = {"bias_enhanced"}
_LIST_KEYS = {"V", "variant", "n_values"}
_STR_KEYS = {"experiment", "traffic"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _LIST_KEYS | _STR_KEYS

_KEY_TO_FIELD = {"A_max": "a_max", "V": "v"}


def parse_config(text: str) -> ExperimentSpec:
    """Parse a config document; unknown keys and bad values raise ConfigError
    with the offending line number."""
    values = {}
    lam_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        field_name = _KEY_TO_FIELD.get(key, key)
        if field_name in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if key == "lam":
            lam_line = lineno
        values[field_name] = _parse_value(key, val, lineno)
    spec = ExperimentSpec(**values)
    _validate(spec, lam_line)
    return spec


def _parse_value(key: str, val: str, lineno: int):
    try:
        if key in _INT_KEYS:
            return int(val)
        if key in _FLOAT_KEYS:
            return float(val)
        if key in _BOOL_KEYS:
            low = val.lower()
            if low in ("true", "false"):
                return low == "true"
            raise ValueError
        if key == "V":
            return tuple(float(x) for x in _split_list(val))
        if key == "n_values":
            return tuple(int(x) for x in _split_list(val))
        if key == "variant":
            return tuple(_split_list(val))
        return val
    except ValueError:
        raise ConfigError(f"malformed value for {key!r}: {val!r}", lineno) from None


def _split_list(val: str):
    parts = [p.strip() for p in val.split(",")]
    if any(not p for p in parts):
        raise ValueError("empty list element")
    return parts


def _validate(spec: ExperimentSpec, lam_line: Optional[int]) -> None:
    if spec.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {spec.experiment!r}")
    if not 1 <= spec.n <= 7:
        raise ConfigError(f"n must lie in 1..7, got {spec.n}")
    if not spec.v or any(x < 1 for x in spec.v):
        raise ConfigError(f"V entries must be >= 1, got {spec.v}")
    if not 0 < spec.eta < 1:
        raise ConfigError(f"eta must lie in (0, 1), got {spec.eta}")
    if spec.a_max < 0:
        raise ConfigError(f"A_max must be >= 0, got {spec.a_max}")
    if spec.slots < 1:
        raise ConfigError(f"slots must be >= 1, got {spec.slots}")
    if spec.scaling_slots < 1:
        raise ConfigError(f"scaling_slots must be >= 1, got {spec.scaling_slots}")
    if spec.seed < 0:
        raise ConfigError(f"seed must be >= 0, got {spec.seed}")
    if not spec.variant or any(x not in VARIANTS for x in spec.variant):
        raise ConfigError(f"variant entries must come from {VARIANTS}, got {spec.variant}")
    if not spec.n_values or any(not 1 <= x <= 7 for x in spec.n_values):
        raise ConfigError(f"n_values entries must lie in 1..7, got {spec.n_values}")
    if spec.weight <= 0:
        raise ConfigError(f"weight must be positive, got {spec.weight}")
    if spec.traffic not in ("constant", "iid"):
        raise ConfigError(f"traffic must be constant or iid, got {spec.traffic!r}")
    if spec.lam is not None and not 0 <= spec.lam <= spec.a_max:
        raise ConfigError(f"lam must lie in [0, A_max], got {spec.lam}", lam_line)
    if spec.traffic == "iid" and spec.lam is None:
        raise ConfigError("traffic = iid requires lam")


def format_config(spec: ExperimentSpec) -> str:
    """Render a spec back to config text; parse_config inverts this exactly."""
    field_to_key = {v: k for k, v in _KEY_TO_FIELD.items()}
    lines = []
    for f in fields(ExperimentSpec):
        value = getattr(spec, f.name)
        if value is None:
            continue
        key = field_to_key.get(f.name, f.name)
        if isinstance(value, tuple):
            rendered = ",".join(str(x) for x in value)
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        else:
            rendered = str(value)
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"
