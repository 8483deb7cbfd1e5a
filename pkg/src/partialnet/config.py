"""Experiment configuration: defaults, desk-scale preset, TOML file, env overrides."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Mapping, get_args, get_origin, get_type_hints

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

ENV_PREFIX = "PARTIALNET_"
ENGINES = ("classical", "bayesian")

DESK_SCALE = {"p": 20, "n_list": [10, 50, 100, 200], "tree_count": 50}

#: ``--cap-sweep default``: these caps plus ``n // 10`` for each sample size.
DEFAULT_CAP_GRID = [2, 5, 10, 20]


@dataclass
class ExperimentConfig:
    p: int = 100
    n_list: list[int] = field(default_factory=lambda: [50, 250, 500, 1000])
    tree_count: int = 500
    engines: list[str] = field(default_factory=lambda: list(ENGINES))
    mode: Literal["full", "local", "auto"] = "auto"
    alpha: float = 0.05
    e_threshold: float = 0.05
    neighborhood_alpha: float = 0.05
    mc_draws: int = 1000
    grid_size: int = 512
    cap_override: int | None = None
    cap_sweep: list[int] = field(default_factory=list)
    cap_sweep_tenth: bool = False
    master_seed: int = 0
    output_dir: str = "results"
    jobs: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.n_list:
            raise ValueError("n_list must not be empty")
        if self.tree_count < 1:
            raise ValueError("tree_count must be >= 1")
        if self.mc_draws < 2:
            raise ValueError("mc_draws must be >= 2")
        if self.p < 2 or any(n < 2 for n in self.n_list):
            raise ValueError("need p >= 2 and every n >= 2")
        if not self.engines or any(e not in ENGINES for e in self.engines):
            raise ValueError(f"engines must be a non-empty subset of {ENGINES}")
        if self.mode not in ("full", "local", "auto"):
            raise ValueError(f"mode must be full, local or auto, got {self.mode!r}")
        if self.master_seed < 0 or self.master_seed >= 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if any(c < 0 for c in self.cap_sweep) or (self.cap_override is not None and self.cap_override < 0):
            raise ValueError("caps must be non-negative")

    def mode_for(self, n: int) -> str:
        """Resolved mode for sample size ``n``: ``auto`` picks full iff ``n > p``."""
        if self.mode == "auto":
            return "full" if n > self.p else "local"
        return self.mode

    def caps_for(self, n: int) -> list[int]:
        """Cap-sweep grid at sample size ``n``."""
        caps = set(self.cap_sweep)
        if self.cap_sweep_tenth:
            caps.add(n // 10)
        return sorted(caps)

    def workers(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)

    def snapshot(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _coerce(name: str, raw: Any, hint) -> Any:
    """Convert ``raw`` (TOML value or env string) to the field type ``hint``."""
    origin = get_origin(hint)
    args = get_args(hint)
    if origin is list:
        if isinstance(raw, str):
            raw = [part for part in raw.replace(";", ",").split(",") if part.strip()]
        return [_coerce(name, item, args[0]) for item in raw]
    if origin is Literal:
        if raw not in args:
            raise ValueError(f"{name}: expected one of {args}, got {raw!r}")
        return raw
    if type(None) in args:  # Optional[X]
        if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none", "null")):
            return None
        inner = next(a for a in args if a is not type(None))
        return _coerce(name, raw, inner)
    if hint is bool:
        if isinstance(raw, str):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return bool(raw)
    if hint in (int, float, str):
        if hint is int and isinstance(raw, str):
            return int(raw.strip(), 0)
        return hint(raw.strip() if isinstance(raw, str) else raw)
    raise TypeError(f"{name}: unsupported field type {hint}")


def _hints() -> dict[str, Any]:
    return get_type_hints(ExperimentConfig)


def apply_overrides(config: ExperimentConfig, values: Mapping[str, Any], source: str) -> ExperimentConfig:
    hints = _hints()
    changes = {}
    for key, raw in values.items():
        if key not in hints:
            raise ValueError(f"{source}: unknown config key {key!r}")
        changes[key] = _coerce(key, raw, hints[key])
    return config.replace(**changes)


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    hints = _hints()
    out = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX) :].lower()
            if key in hints:
                out[key] = value
    return out


def load_config(
    path: str | Path | None = None,
    *,
    desk_scale: bool = False,
    environ: Mapping[str, str] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> ExperimentConfig:
    """Build a config: defaults, then the desk-scale preset, the TOML file, env vars, explicit overrides."""
    config = ExperimentConfig()
    if desk_scale:
        config = apply_overrides(config, DESK_SCALE, "desk-scale preset")
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        data = data.get("experiment", data)
        config = apply_overrides(config, data, str(path))
    config = apply_overrides(config, env_overrides(environ), "environment")
    if overrides:
        config = apply_overrides(config, {k: v for k, v in overrides.items() if v is not None}, "command line")
    return config
