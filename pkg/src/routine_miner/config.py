"""Flat ``key = value`` configuration files.

Precedence is command-line flag, then config file, then built-in default.
The file named by ``ROUTINE_MINER_CONFIG`` is used when no ``--config`` is
given. Lines starting with ``#`` and blank lines are ignored.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

from .errors import ConfigError

ENV_VAR = "ROUTINE_MINER_CONFIG"


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s: str):
    v = s.strip().lower()
    if v in ("", "none", "sweep"):
        return None
    return float(v)


def _opt_int(s: str):
    v = s.strip().lower()
    if v in ("", "none"):
        return None
    return int(v)


def _sweep(s: str) -> tuple[float, float, float]:
    parts = s.split(":")
    if len(parts) != 3:
        raise ValueError(f"sweep must be lo:hi:step, got {s!r}")
    lo, hi, step = (float(p) for p in parts)
    return lo, hi, step


def _k(s: str) -> float:
    v = s.strip().lower()
    if v in ("", "none", "inf", "unbounded"):
        return math.inf
    return float(v)


# key -> (parser, default)
SCHEMA = {
    "slot_minutes": (int, 30),
    "frq": (float, 0.5),
    "object_min_count": (int, 10),
    "object_conf_min": (float, 0.5),
    "sigma": (float, 3.0),
    "threshold": (_opt_float, None),
    "sweep": (_sweep, (0.0, 0.05, 0.002)),
    "K": (_k, math.inf),
    "min_pattern_nodes": (int, 2),
    "min_pattern_days": (int, 2),
    "min_silhouette": (float, 0.25),
    "max_patterns": (_opt_int, None),
    "reembed": (_bool, True),
    "eps": (float, 0.5),
    "min_pts": (int, 3),
    "time_weight": (float, 1.0),
    "seed": (int, 0),
    "svg": (_bool, False),
}


def defaults() -> dict:
    return {k: d for k, (_, d) in SCHEMA.items()}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"{source}:{line_no}: expected key = value")
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{line_no}: unknown key {key!r}")
        try:
            out[key] = SCHEMA[key][0](value.strip())
        except ValueError as exc:
            raise ConfigError(f"{source}:{line_no}: {exc}") from None
    return out


def load_config(path: str | os.PathLike | None = None) -> dict:
    """Values from ``path`` or, failing that, from the env-var file."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text(), str(p))


def resolve(cli: dict, file_values: dict) -> dict:
    """Merge with precedence CLI (non-None) > file > default."""
    eff = defaults()
    eff.update(file_values)
    eff.update({k: v for k, v in cli.items() if k in SCHEMA and v is not None})
    return eff


def format_config(cfg: dict) -> str:
    lines = []
    for key in SCHEMA:
        v = cfg[key]
        if key == "sweep":
            v = ":".join(repr(float(x)) for x in v)
        elif v is None:
            v = "none"
        elif isinstance(v, float) and math.isinf(v):
            v = "inf"
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"
