"""
Run configuration loader.

Reads flat key=value configuration from an optional file and command-line
tokens, coerces values to their types and builds a RunConfig. No defaults are
invented here beyond the RunConfig dataclass.
"""
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ymgap.app.models import (
    AlgebraName,
    ConfigError,
    EnergyForm,
    InitialData,
    RunConfig,
    Subcommand,
)
from ymgap.app.validator import validate_config

logger = logging.getLogger(__name__)


def _int_list(raw: str) -> List[int]:
    return [int(item) for item in raw.split(",") if item.strip()]


def _float_list(raw: str) -> List[float]:
    return [float(item) for item in raw.split(",") if item.strip()]


def _subsets(raw: str) -> List[List[int]]:
    return [_int_list(group) for group in raw.split(";")]


_COERCERS: Dict[str, Callable[[str], object]] = {
    "algebra": str,
    "L": float,
    "kmax": int,
    "D": int,
    "k_eigs": int,
    "form": str,
    "N": int,
    "dt": float,
    "t_end": float,
    "seed": int,
    "amplitude": float,
    "initial": str,
    "record_every": int,
    "L_list": _float_list,
    "D_list": _int_list,
    "subsets": _subsets,
    "modes": _int_list,
    "dense_threshold": int,
    "out": str,
    "run_id": str,
}

CONFIG_KEY = "config"


def parse_tokens(tokens: Sequence[str]) -> Tuple[Optional[Path], Dict[str, str]]:
    """
    Split command-line tokens into a config file path and raw overrides.

    Args:
        tokens: Items of the form key=value; config=FILE names a config file

    Returns:
        Tuple of (config_path or None, key -> raw string value)

    Raises:
        ConfigError: If a token has no '=' or a key is empty
    """
    config_path = None
    overrides: Dict[str, str] = {}
    for token in tokens:
        if "=" not in token:
            raise ConfigError(f"Expected key=value, got '{token}'")
        key, value = token.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"Empty key in '{token}'")
        if key == CONFIG_KEY:
            config_path = Path(value.strip())
        else:
            overrides[key] = value.strip()
    return config_path, overrides


def read_config_file(path: Path) -> Dict[str, str]:
    """
    Read a flat key=value file; '#' starts a comment, blank lines are skipped.

    Raises:
        ConfigError: If the file is missing or a line is malformed
    """
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    values: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{number}: expected key=value, got '{raw.rstrip()}'")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def coerce_values(raw: Dict[str, str]) -> Dict[str, object]:
    """
    Convert raw strings to typed values.

    Raises:
        ConfigError: On an unknown key or an unparseable value
    """
    typed: Dict[str, object] = {}
    for key, value in raw.items():
        if key not in _COERCERS:
            raise ConfigError(f"Unknown config key '{key}'")
        try:
            typed[key] = _COERCERS[key](value)
        except ValueError as e:
            raise ConfigError(f"Invalid value for '{key}': '{value}' ({e})") from e
    return typed


def load_run_config(subcommand: Subcommand, tokens: Sequence[str]) -> RunConfig:
    """
    Resolve the configuration of one run.

    Precedence, lowest first: RunConfig defaults, config file, tokens.

    Args:
        subcommand: Experiment being configured
        tokens: Command-line key=value tokens

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: On missing required keys, unknown keys, bad values or
            schema violations
    """
    subcommand = Subcommand(subcommand)
    config_path, overrides = parse_tokens(tokens)
    raw: Dict[str, str] = {}
    if config_path is not None:
        raw.update(read_config_file(config_path))
        logger.debug("Read %d keys from %s", len(raw), config_path)
    raw.update(overrides)

    given = coerce_values(raw)
    missing = [key for key in subcommand.required_keys() if key not in given]
    if missing:
        raise ConfigError(f"Missing required config key(s) for {subcommand.value}: {', '.join(missing)}")

    is_valid, errors = validate_config({"subcommand": subcommand.value, **given})
    if not is_valid:
        raise ConfigError("Invalid configuration: " + "; ".join(errors))

    kwargs: Dict[str, object] = dict(given)
    if "algebra" in kwargs:
        kwargs["algebra"] = AlgebraName(kwargs["algebra"])
    if "form" in kwargs:
        kwargs["form"] = EnergyForm(kwargs["form"])
    if "initial" in kwargs:
        kwargs["initial"] = InitialData(kwargs["initial"])
    if "out" in kwargs:
        kwargs["out"] = Path(kwargs["out"])
    try:
        return RunConfig(subcommand=subcommand, **kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from e
