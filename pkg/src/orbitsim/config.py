"""Configuration file loading.

The config file is JSON with two optional sections::

    {"world": {...WorldConfig fields...},
     "experiment": {...ExperimentSpec fields...}}

Unknown keys fail closed with a nearest-match suggestion; invariant
violations are reported with the offending field name.  An empty file
(or empty object) yields all defaults.
"""

from __future__ import annotations

import dataclasses
import difflib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from orbitsim.world import WorldConfig


class ConfigError(ValueError):
    """Invalid configuration file or field value."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Experiment-level knobs shared by the CLI subcommands."""

    policy: str = "greedy"
    episodes: int = 100
    seed: int = 0
    jobs: int = 1
    runs: int = 5
    instances: int = 100
    train_sizes: Sequence[int] = (3, 5)
    test_sizes: Sequence[int] = (3, 5, 10)
    phi_grid_deg: Sequence[float] = (0.0, 28.0, 45.0, 54.0, 63.0, 72.0, 81.0, 90.0)
    rho_max_km: float = 1.0
    rho_step_km: float = 0.02
    window_span_km: float = 0.2

    def validate(self) -> None:
        for name in ("episodes", "jobs", "runs", "instances"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("rho_max_km", "rho_step_km", "window_span_km"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")


def _check_keys(section: str, given: dict, known: Sequence[str]) -> None:
    for key in given:
        if key not in known:
            suggestion = difflib.get_close_matches(key, known, n=1)
            hint = f"; did you mean {suggestion[0]!r}?" if suggestion else ""
            raise ConfigError(f"unknown key {key!r} in [{section}]{hint}")


def _build(section: str, cls, data: dict):
    fields = [f.name for f in dataclasses.fields(cls)]
    _check_keys(section, data, fields)
    try:
        obj = cls(**data)
    except TypeError as err:
        raise ConfigError(f"bad [{section}] section: {err}") from err
    try:
        obj.validate()
    except ValueError as err:
        raise ConfigError(f"invalid [{section}] config: {err}") from err
    return obj


def resolve_config(data: dict) -> tuple[WorldConfig, ExperimentSpec]:
    """Build and validate (WorldConfig, ExperimentSpec) from a mapping."""
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    _check_keys("root", data, ["world", "experiment"])
    world = _build("world", WorldConfig, dict(data.get("world", {})))
    experiment = _build("experiment", ExperimentSpec, dict(data.get("experiment", {})))
    return world, experiment


def load_config(path: Union[str, Path]) -> tuple[WorldConfig, ExperimentSpec]:
    """Parse a config file; missing fields take the documented defaults."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if not text.strip():
        data: dict = {}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    return resolve_config(data)


def config_as_dict(world: WorldConfig, experiment: Optional[ExperimentSpec] = None) -> dict:
    """Resolved configuration echo for the run manifest."""
    out = {"world": dataclasses.asdict(world)}
    if experiment is not None:
        exp = dataclasses.asdict(experiment)
        exp["train_sizes"] = list(exp["train_sizes"])
        exp["test_sizes"] = list(exp["test_sizes"])
        exp["phi_grid_deg"] = list(exp["phi_grid_deg"])
        out["experiment"] = exp
    return out
