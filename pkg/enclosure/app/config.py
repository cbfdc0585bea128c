from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any

try:
    import yaml
except ModuleNotFoundError:
    yaml = None

_REPO_ROOT = Path(__file__).resolve().parents[2]
_LOCAL_STATE_DIR = _REPO_ROOT / ".enclosure"

DEFAULT_THREADS = 1
DEFAULT_GAMMA = 0.5
DEFAULT_DELTA = 0.05
DEFAULT_OMEGA_COUNT = 16
DEFAULT_BRACKET = 1.0e4
DEFAULT_M = 160


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() in {"1", "true", "yes", "on"}


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except (TypeError, ValueError):
        return default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except (TypeError, ValueError):
        return default


def _env_json_list(name: str, default: list[Any]) -> list[Any]:
    raw = os.getenv(name)
    if not raw:
        return list(default)
    try:
        data = json.loads(raw)
    except json.JSONDecodeError:
        return list(default)
    if isinstance(data, list):
        return data
    return list(default)


def get_data_dir() -> Path:
    custom = os.getenv("ENCLOSURE_DATA_DIR")
    if custom:
        return Path(custom).expanduser()
    return _LOCAL_STATE_DIR


def get_config_path() -> Path:
    custom = os.getenv("ENCLOSURE_CONFIG")
    if custom:
        return Path(custom).expanduser()
    return get_data_dir() / "enclosure_config.yaml"


def get_fixtures_dir() -> Path:
    return _REPO_ROOT / "fixtures"


def parse_config_text(raw: str) -> dict[str, Any]:
    """Parse a YAML or JSON document; a top-level `options:` block is unwrapped."""
    if yaml is not None:
        data = yaml.safe_load(raw) or {}
    else:
        data = json.loads(raw or "{}")
    if not isinstance(data, dict):
        return {}
    options = data.get("options")
    if isinstance(options, dict):
        return options
    return data


def load_persisted_config(path: Path | None = None) -> dict[str, Any]:
    """
    Read the settings file.

    An explicit path is strict: parse errors propagate so the CLI can report them.
    The implicit default location is lenient, like a missing file.
    """
    explicit = path is not None
    path = path if path is not None else get_config_path()
    if not path.exists():
        if explicit:
            raise FileNotFoundError(f"config file not found: {path}")
        return {}
    raw = path.read_text()
    if explicit:
        return parse_config_text(raw)
    try:
        return parse_config_text(raw)
    except Exception:
        return {}


def save_persisted_config(data: dict[str, Any], path: Path | None = None) -> None:
    path = path if path is not None else get_config_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    if yaml is not None:
        path.write_text(yaml.safe_dump(data, sort_keys=False))
    else:
        path.write_text(json.dumps(data, indent=2))


def load_runtime_settings(path: Path | None = None) -> dict[str, Any]:
    settings: dict[str, Any] = {
        "threads": _env_int("ENCLOSURE_THREADS", DEFAULT_THREADS),
        "seed": _env_int("ENCLOSURE_SEED", 0),
        "log_level": os.getenv("LOG_LEVEL", "INFO"),
        "gamma": _env_float("ENCLOSURE_GAMMA", DEFAULT_GAMMA),
        "delta": _env_float("ENCLOSURE_DELTA", DEFAULT_DELTA),
        "omega_count": _env_int("ENCLOSURE_OMEGA_COUNT", DEFAULT_OMEGA_COUNT),
        "n_list": _env_json_list("ENCLOSURE_N_LIST", [1, 2]),
        "N_min": _env_int("ENCLOSURE_N_MIN", 8),
        "N_max": _env_int("ENCLOSURE_N_MAX", 24),
        "epsilon": _env_float("ENCLOSURE_EPSILON", 0.1),
        "uniform_radius": _env_float("ENCLOSURE_UNIFORM_RADIUS", 2.0),
        "bracket": _env_float("ENCLOSURE_BRACKET", DEFAULT_BRACKET),
        "M": _env_int("ENCLOSURE_M", DEFAULT_M),
        "noise": _env_float("ENCLOSURE_NOISE", 0.0),
        "progress": _env_bool("ENCLOSURE_PROGRESS", True),
    }
    overrides = load_persisted_config(path)
    settings.update({key: value for key, value in overrides.items() if value is not None})
    return settings
