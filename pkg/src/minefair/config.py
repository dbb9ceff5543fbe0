"""Configuration system for minefair.

Priority chain (lowest to highest):
  dataclass defaults → ~/.minefair/config.toml → .minefair.toml → CLI flags

Model files (the network being analysed) are separate documents, read
by :func:`load_model_file`.
"""

from __future__ import annotations

import json
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import tomli_w

from .model import ModelConfig, ModelError

GLOBAL_CONFIG_PATH = Path("~/.minefair/config.toml").expanduser()
PROJECT_CONFIG_PATH = Path(".minefair.toml")

# Fields that need conversion when set via CLI strings
_INT_FIELDS = {"max_iter", "rounds", "trim_heights", "window", "workers"}
_FLOAT_FIELDS = {"epsilon"}
_BOOL_FIELDS = {"resample_delays"}
_INT_LIST_FIELDS = {"seeds"}


@dataclass
class CalcConfig:
    epsilon: float = 1e-12
    max_iter: int = 1_000_000


@dataclass
class SimulationConfig:
    rounds: int = 10_000_000
    trim_heights: int = 100
    window: int = 1000


@dataclass
class HarnessConfig:
    seeds: list[int] = field(default_factory=lambda: list(range(1, 11)))
    workers: int = 1
    resample_delays: bool = True


@dataclass
class OutputConfig:
    format: str = "json"


@dataclass
class MineFairConfig:
    calc: CalcConfig = field(default_factory=CalcConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


# -- Section name → dataclass mapping for typed reconstruction --
_SECTION_CLASSES: dict[str, type] = {
    "calc": CalcConfig,
    "simulation": SimulationConfig,
    "harness": HarnessConfig,
    "output": OutputConfig,
}


def _default_dict() -> dict[str, Any]:
    """Return MineFairConfig defaults as a nested dict."""
    return asdict(MineFairConfig())


def load_config_file(path: Path | str) -> dict[str, Any]:
    """Read a TOML config file, returning a nested dict (or {} if missing)."""
    p = Path(path).expanduser()
    if not p.is_file():
        return {}
    with open(p, "rb") as f:
        return tomllib.load(f)


def deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """Recursively merge *override* into *base*.

    ``None`` values in *override* are treated as "not set" and skipped.
    """
    merged = dict(base)
    for key, val in override.items():
        if val is None:
            continue
        if isinstance(val, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], val)
        else:
            merged[key] = val
    return merged


def _dict_to_config(d: dict[str, Any]) -> MineFairConfig:
    """Convert a nested dict to a MineFairConfig, ignoring unknown keys."""
    kwargs: dict[str, Any] = {}
    for section_name, cls in _SECTION_CLASSES.items():
        section_data = d.get(section_name, {})
        if not isinstance(section_data, dict):
            continue
        valid = {f.name for f in fields(cls)}
        filtered = {k: v for k, v in section_data.items() if k in valid}
        kwargs[section_name] = cls(**filtered)
    return MineFairConfig(**kwargs)


def resolve_config(cli_overrides: dict[str, Any] | None = None) -> MineFairConfig:
    """Layer all config sources and return the final MineFairConfig.

    Priority (lowest → highest):
      defaults → global TOML → project TOML → cli_overrides
    """
    result = _default_dict()
    result = deep_merge(result, load_config_file(GLOBAL_CONFIG_PATH))
    result = deep_merge(result, load_config_file(PROJECT_CONFIG_PATH))
    if cli_overrides:
        result = deep_merge(result, cli_overrides)
    cfg = _dict_to_config(result)
    if cfg.output.format not in ("json", "csv"):
        raise ValueError(f"output.format must be 'json' or 'csv', got {cfg.output.format!r}")
    return cfg


def save_config(cfg_dict: dict[str, Any], path: Path | str) -> None:
    """Write a config dict to a TOML file."""
    p = Path(path).expanduser()
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "wb") as f:
        tomli_w.dump(cfg_dict, f)


def _split_key(key: str) -> tuple[str, str]:
    """``"calc.epsilon"`` -> ``("calc", "epsilon")``, checked against the sections."""
    section, sep, name = key.partition(".")
    if not sep or "." in name:
        raise ValueError(f"Key must be section.field (got {key!r})")
    cls = _SECTION_CLASSES.get(section)
    if cls is None or name not in {f.name for f in fields(cls)}:
        raise KeyError(f"Unknown config key: {key}")
    return section, name


def get_config_value(key: str, cfg: MineFairConfig | None = None) -> Any:
    section, name = _split_key(key)
    return getattr(getattr(cfg or resolve_config(), section), name)


def _convert(field_name: str, value: Any) -> Any:
    if not isinstance(value, str):
        return value
    if field_name in _INT_FIELDS:
        return int(value)
    if field_name in _FLOAT_FIELDS:
        return float(value)
    if field_name in _BOOL_FIELDS:
        lowered = value.strip().lower()
        if lowered not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"Expected a boolean for {field_name}, got {value!r}")
        return lowered in ("true", "1", "yes")
    if field_name in _INT_LIST_FIELDS:
        return parse_seeds(value)
    return value


def set_config_value(key: str, value: Any, *, project: bool = False) -> None:
    """Persist ``section.field = value`` to the global or (*project*) project TOML.

    String values are converted for numeric, boolean and seed-list fields.
    """
    section, field_name = _split_key(key)
    path = PROJECT_CONFIG_PATH if project else GLOBAL_CONFIG_PATH
    existing = load_config_file(path)
    existing.setdefault(section, {})[field_name] = _convert(field_name, value)
    save_config(existing, path)


def parse_seeds(text: str) -> list[int]:
    """Parse ``"1,2,5"`` or ``"1-10"`` (or a mix, ``"1-3,7"``) into a seed list."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            start, stop = int(lo), int(hi)
            if stop < start:
                raise ValueError(f"Empty seed range: {part!r}")
            seeds.extend(range(start, stop + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"No seeds in {text!r}")
    return seeds


# ----------------------------------------------------------------------
# Model files
# ----------------------------------------------------------------------


def load_model_file(path: Path | str) -> ModelConfig:
    """Read a model document (``.json`` or ``.toml``) into a ModelConfig."""
    p = Path(path).expanduser()
    if not p.is_file():
        raise ModelError(f"Model file not found: {p}")
    try:
        if p.suffix.lower() == ".toml":
            with open(p, "rb") as f:
                data = tomllib.load(f)
        else:
            data = json.loads(p.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ModelError(f"Cannot parse model file {p}: {exc}") from exc
    if not isinstance(data, dict):
        raise ModelError(f"Model file {p} must hold an object at the top level")
    return ModelConfig.from_dict(data)


def save_model_file(model: ModelConfig, path: Path | str) -> None:
    """Write a ModelConfig as JSON (or TOML for a ``.toml`` path)."""
    p = Path(path).expanduser()
    p.parent.mkdir(parents=True, exist_ok=True)
    data = model.to_dict()
    if p.suffix.lower() == ".toml":
        with open(p, "wb") as f:
            tomli_w.dump(data, f)
    else:
        p.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
