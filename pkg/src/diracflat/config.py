"""
Experiment configuration.

Configs are YAML mappings (JSON also parses).  Unknown keys are rejected so
that a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Tuple

import numpy as np
import yaml

__all__ = ["ExperimentConfig", "ParseError", "ValidationError", "parse_config", "load_config_text"]


class ParseError(ValueError):
    """Malformed document or unknown key; the message carries a line number."""


class ValidationError(ValueError):
    """A value violates a modelling constraint."""


@dataclass
class ExperimentConfig:
    model: str = "dirac"
    n: int = 2
    m: float = 1.0
    gamma: float = 1.0
    Gamma: Tuple[float, ...] = (0.0, 1.0, 1.0)
    L: int = 160
    q: int = 128
    torus_q: int = 96
    offset: str = "half"
    lambda_start: float = 0.05
    lambda_stop: float = 0.4
    lambda_points: int = 10
    output: str = "out"
    seed: int = 0
    exponent_tol: float = 0.10
    ratio_low: float = 0.7
    ratio_high: float = 1.3
    ratio_lambda_max: float = 0.15
    check_admissible: bool = True
    l_doubling: str = "auto"

    def lambda_grid(self) -> np.ndarray:
        """Geometric grid from ``lambda_start`` to ``lambda_stop``."""
        return np.geomspace(self.lambda_start, self.lambda_stop, self.lambda_points)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["Gamma"] = list(self.Gamma)
        return d

    def validate(self) -> "ExperimentConfig":
        if self.model not in ("dirac", "laplace"):
            raise ValidationError("model must be 'dirac' or 'laplace'")
        if self.n < 2:
            raise ValidationError("n must be >= 2 (a flat band needs n >= 2)")
        if self.model == "laplace" and self.n != 2:
            raise ValidationError("the laplace model is defined for n = 2 only")
        if self.m <= 0:
            raise ValidationError("m must be > 0")
        if len(self.Gamma) != self.n + 1:
            raise ValidationError(f"Gamma needs n + 1 = {self.n + 1} entries (Gamma_0..Gamma_n)")
        if self.check_admissible:
            if self.gamma >= self.n:
                raise ValidationError(f"gamma must be < n (gamma={self.gamma}, n={self.n})")
            if self.gamma <= 0:
                raise ValidationError("gamma must be > 0")
            if all(g == 0 for g in self.Gamma[1:]):
                raise ValidationError(
                    "admissibility violated: some Gamma_j with j >= 1 must be nonzero"
                )
        elif self.gamma <= 0:
            raise ValidationError("gamma must be > 0")
        if self.L < 1:
            raise ValidationError("L must be >= 1")
        if self.q < 8:
            raise ValidationError("q must be >= 8")
        if self.torus_q < 2:
            raise ValidationError("torus_q must be >= 2")
        if self.offset not in ("half", "none"):
            raise ValidationError("offset must be 'half' or 'none'")
        if self.lambda_points < 1:
            raise ValidationError("lambda_points must be >= 1")
        top = self.m if self.model == "dirac" else 1.0
        if not (0 < self.lambda_start < top and 0 < self.lambda_stop < top):
            raise ValidationError(f"lambda grid must lie inside (0, {top:g})")
        if self.lambda_start > self.lambda_stop:
            raise ValidationError("lambda_start must not exceed lambda_stop")
        if not self.ratio_low < self.ratio_high:
            raise ValidationError("ratio_low must be < ratio_high")
        if self.l_doubling not in ("auto", "always", "never"):
            raise ValidationError("l_doubling must be 'auto', 'always' or 'never'")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_INT = {"n", "L", "q", "torus_q", "lambda_points", "seed"}
_FLOAT = {"m", "gamma", "lambda_start", "lambda_stop", "exponent_tol", "ratio_low", "ratio_high", "ratio_lambda_max"}


def _coerce(key: str, value: Any, where: str):
    try:
        if key in _INT:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if key in _FLOAT:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if key == "Gamma":
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return tuple(float(v) for v in value)
        if key == "check_admissible":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if key == "l_doubling" and isinstance(value, bool):
            return "always" if value else "never"
        return str(value)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: bad value {value!r} for {key!r}") from None


def load_config_text(text: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Parse a YAML document, apply ``overrides`` (non-None values) and validate."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "unknown line"
        raise ParseError(f"{where}: {getattr(exc, 'problem', exc)}") from None
    values = {}
    if node is not None:
        if not isinstance(node, yaml.MappingNode):
            raise ParseError(f"line {node.start_mark.line + 1}: top level must be a key-value mapping")
        data = yaml.safe_load(text)
        for key_node, _ in node.value:
            key = key_node.value
            line = key_node.start_mark.line + 1
            if key not in _FIELDS:
                raise ParseError(f"line {line}: unknown key {key!r}")
            if key in values:
                raise ParseError(f"line {line}: duplicate key {key!r}")
            values[key] = _coerce(key, data[key], f"line {line}")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ParseError(f"unknown option {key!r}")
        values[key] = _coerce(key, value, f"option {key}")
    return ExperimentConfig(**values).validate()


def parse_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read and validate a config file.

    Raises
    ------
    ParseError
        Malformed YAML, non-mapping document, bad value type or unknown key.
    ValidationError
        A modelling constraint is violated (``gamma < n``, admissibility, grid range).
    """
    text = Path(path).read_text()
    return load_config_text(text, overrides)
