"""Run configuration and its flat ``key = value`` file format.

Grammar: one ``key = value`` pair per line; ``#`` starts a comment (whole
line or trailing); blank lines are ignored; keys are the field names of
:class:`RunConfig` and may appear once. The ``ic`` value is a scenario id
optionally followed by ``name=value`` parameters, e.g.
``ic = orszag-tang beta=0.5``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .scenarios import SCENARIOS

REQUIRED = ("nu", "dt", "t_end")


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(ValueError):
    def __init__(self, key: str, constraint: str):
        super().__init__(f"invalid {key!r}: {constraint}")
        self.key, self.constraint = key, constraint


@dataclass(frozen=True)
class RunConfig:
    nu: float
    dt: float
    t_end: float
    dim: int = 2
    n_per_axis: int = 64
    ic: str = "orszag-tang"
    ic_params: dict = field(default_factory=dict)
    seed: int = 0
    diagnostics_cadence: int = 10
    snapshot_cadence: int = 1000
    epsilon_threshold: float = 0.1
    out_dir: str = "out"
    scheme: str = "if-rk4"
    cfl_limit: float = 0.5
    bkm_ceiling: float = 1e6
    max_n_3d: int = 64

    def validate(self, resume: bool = False) -> "RunConfig":
        """Check every field; ``resume`` allows ``t_end = 0`` (a resume may take no steps)."""

        def need(ok, key, constraint):
            if not ok:
                raise ValidationError(key, constraint)

        need(self.nu > 0, "nu", "> 0")
        need(self.dt > 0, "dt", "> 0")
        if resume:
            need(self.t_end >= 0, "t_end", ">= 0")
        else:
            need(self.t_end > 0, "t_end", "> 0")
        need(self.dim in (2, 3), "dim", "in {2, 3}")
        n = self.n_per_axis
        need(n >= 8 and n & (n - 1) == 0, "n_per_axis", "power of two >= 8")
        need(self.dim == 2 or n <= self.max_n_3d, "n_per_axis", f"<= max_n_3d ({self.max_n_3d}) in 3D")
        need(self.diagnostics_cadence >= 1, "diagnostics_cadence", ">= 1")
        need(self.snapshot_cadence >= 1, "snapshot_cadence", ">= 1")
        need(self.epsilon_threshold > 0, "epsilon_threshold", "> 0")
        need(0 < self.cfl_limit <= 1, "cfl_limit", "in (0, 1]")
        need(self.bkm_ceiling > 0, "bkm_ceiling", "> 0")
        need(self.scheme in ("if-rk4", "imex-euler"), "scheme", "one of if-rk4, imex-euler")
        need(self.ic in SCENARIOS, "ic", f"one of {', '.join(SCENARIOS)}")
        need(self.ic != "orszag-tang" or self.dim == 2, "ic", "orszag-tang requires dim = 2")
        return self

    @classmethod
    def from_mapping(cls, raw: dict, resume: bool = False) -> "RunConfig":
        """Build and validate from string or typed values keyed by field name."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in raw.items():
            if key not in known:
                raise ValidationError(key, "unknown key")
            kwargs[key] = _coerce(key, known[key].type, value)
        if "ic" in kwargs and isinstance(raw.get("ic"), str):
            kwargs["ic"], params = parse_ic(raw["ic"])
            kwargs["ic_params"] = {**params, **kwargs.get("ic_params", {})}
        for key in REQUIRED:
            if key not in kwargs:
                raise ValidationError(key, "required")
        return cls(**kwargs).validate(resume)

    def with_overrides(self, resume: bool = False, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        if isinstance(changes.get("ic"), str):
            changes["ic"], changes["ic_params"] = parse_ic(changes["ic"])
        return replace(self, **changes).validate(resume)

    def to_mapping(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["ic_params"] = dict(self.ic_params)
        return out


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_ic(text: str) -> tuple[str, dict]:
    parts = text.split()
    if not parts:
        raise ValidationError("ic", "empty scenario")
    params = {}
    for p in parts[1:]:
        name, sep, value = p.partition("=")
        if not sep or not name:
            raise ValidationError("ic", f"parameter {p!r} is not name=value")
        try:
            params[name] = _number(value)
        except ValueError:
            raise ValidationError("ic", f"parameter {name} is not a number") from None
    return parts[0], params


def _coerce(key, typ, value):
    if key == "ic_params":
        return dict(value)
    if not isinstance(value, str):
        return value
    typ = typ if isinstance(typ, str) else getattr(typ, "__name__", str(typ))
    try:
        if typ == "int":
            return int(value)
        if typ == "float":
            return float(value)
    except ValueError:
        raise ValidationError(key, f"expected {typ}, got {value!r}") from None
    return value


def parse_config_text(text: str) -> dict:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ParseError(lineno, "expected 'key = value'")
        if not key:
            raise ParseError(lineno, "missing key")
        if not value:
            raise ParseError(lineno, f"missing value for {key!r}")
        if key in raw:
            raise ParseError(lineno, f"duplicate key {key!r}")
        raw[key] = value
    return raw


def load_config(path: str | os.PathLike, resume: bool = False, **overrides) -> RunConfig:
    """Parse and validate a config file; ``overrides`` (e.g. from flags) win."""
    raw = parse_config_text(Path(path).read_text())
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_mapping(raw, resume)
