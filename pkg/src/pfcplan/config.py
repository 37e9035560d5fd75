"""Study configuration: one JSON file, flag overrides, content-based hashing.

Paths in the file are resolved relative to the file's own directory, so a
study folder can be moved wholesale. The config hash covers every parameter
that influences results plus the bytes of every input file; it keys the stage
caches, so editing an input or a threshold forces a recompute while re-running
an untouched study is cheap.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

from .network import SeasonCalendar


class ConfigError(ValueError):
    """Bad study configuration."""


_INPUT_KEYS = (
    "buses",
    "lines",
    "generators",
    "demand",
    "bus_shares",
    "res_availability",
)

# which parameters each pipeline stage depends on; out_dir and workers never
# affect results and stay out of every hash
_DISPATCH_PARAMS = ("scenario", "slack_bus", "system_base_mva", "snsp_cap")
_SCREEN_PARAMS = _DISPATCH_PARAMS + (
    "voltage_levels",
    "derate",
    "near_pct",
    "overload_pct",
    "summer_months",
    "screen_from_stage1",
)
_SITING_PARAMS = _SCREEN_PARAMS + ("pfc_cap_pct", "bisection_tol_pp")
_SCOPE_PARAMS = {
    "dispatch": _DISPATCH_PARAMS,
    "screen": _SCREEN_PARAMS,
    "siting": _SITING_PARAMS,
    "all": _SITING_PARAMS,
}


@dataclass(frozen=True)
class StudyConfig:
    inputs: dict[str, str]
    scenario: str = "base"
    slack_bus: str | None = None
    system_base_mva: float = 100.0
    voltage_levels: tuple[float, ...] = (110.0,)
    snsp_cap: float = 0.65
    derate: float = 0.10
    near_pct: float = 90.0
    overload_pct: float = 100.0
    pfc_cap_pct: float = 40.0
    bisection_tol_pp: float = 0.1
    summer_months: tuple[int, ...] = (4, 5, 6, 7, 8, 9)
    workers: int = 1
    out_dir: str = "out"
    screen_from_stage1: bool = False

    def __post_init__(self):
        missing = [k for k in _INPUT_KEYS if k not in self.inputs]
        if missing:
            raise ConfigError(f"config inputs missing entries: {missing}")
        if not (0 < self.near_pct < self.overload_pct):
            raise ConfigError("need 0 < near threshold < overload threshold")
        if not (0 < self.pfc_cap_pct <= 100):
            raise ConfigError("pfc cap must lie in (0, 100] percent")
        if not (0 < self.snsp_cap <= 1):
            raise ConfigError("snsp_cap must lie in (0, 1]")
        if not (0 <= self.derate < 0.5):
            raise ConfigError("derate must lie in [0, 0.5)")
        if self.bisection_tol_pp <= 0:
            raise ConfigError("bisection tolerance must be > 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        bad = [m for m in self.summer_months if not 1 <= m <= 12]
        if bad:
            raise ConfigError(f"summer_months outside 1..12: {bad}")

    def calendar(self) -> SeasonCalendar:
        return SeasonCalendar.from_months(
            summer_months=tuple(self.summer_months), derate_factor=self.derate
        )

    def content_hash(self, scope: str = "all") -> str:
        """sha256 over the input file bytes and the parameters a stage uses.

        Scoped hashing keeps caches precise: changing the PFC cap must not
        invalidate a year of dispatch, while touching an input file
        invalidates everything.
        """
        if scope not in _SCOPE_PARAMS:
            raise ConfigError(f"unknown hash scope {scope!r}")
        params = {}
        for name in _SCOPE_PARAMS[scope]:
            value = getattr(self, name)
            params[name] = list(value) if isinstance(value, tuple) else value
        digest = hashlib.sha256()
        digest.update(json.dumps(params, sort_keys=True).encode())
        for key in _INPUT_KEYS:
            path = Path(self.inputs[key])
            digest.update(key.encode())
            if path.exists():
                digest.update(path.read_bytes())
        return digest.hexdigest()

    def parameter_echo(self) -> dict:
        """The defaults/settings block printed into summary.json."""
        return {
            "voltage_levels": list(self.voltage_levels),
            "derate": self.derate,
            "near_pct": self.near_pct,
            "overload_pct": self.overload_pct,
            "pfc_cap_pct": self.pfc_cap_pct,
            "bisection_tol_pp": self.bisection_tol_pp,
            "snsp_cap": self.snsp_cap,
            "summer_months": list(self.summer_months),
            "system_base_mva": self.system_base_mva,
            "screen_from_stage1": self.screen_from_stage1,
        }


_KNOWN_KEYS = {
    "inputs",
    "scenario",
    "slack_bus",
    "system_base_mva",
    "voltage_levels",
    "snsp_cap",
    "derate",
    "near_pct",
    "overload_pct",
    "pfc_cap_pct",
    "bisection_tol_pp",
    "summer_months",
    "workers",
    "out_dir",
    "screen_from_stage1",
}


def load_config(path) -> StudyConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    if "inputs" not in raw or not isinstance(raw["inputs"], dict):
        raise ConfigError(f"{path}: config needs an 'inputs' object")

    base = path.parent
    inputs = {
        key: str((base / value).resolve()) if not Path(value).is_absolute() else value
        for key, value in raw["inputs"].items()
    }
    kwargs = {"inputs": inputs}
    for key, value in raw.items():
        if key == "inputs":
            continue
        if key in ("voltage_levels", "summer_months"):
            value = tuple(value)
        kwargs[key] = value
    if "out_dir" in kwargs and not Path(kwargs["out_dir"]).is_absolute():
        kwargs["out_dir"] = str((base / kwargs["out_dir"]).resolve())
    return StudyConfig(**kwargs)


def apply_overrides(
    config: StudyConfig,
    out_dir: str | None = None,
    workers: int | None = None,
    voltage_levels: tuple[float, ...] | None = None,
    pfc_cap_pct: float | None = None,
    screen_from_stage1: bool | None = None,
) -> StudyConfig:
    """Command-line flags win over the config file."""
    updates = {}
    if out_dir is not None:
        updates["out_dir"] = out_dir
    if workers is not None:
        updates["workers"] = workers
    if voltage_levels is not None:
        updates["voltage_levels"] = voltage_levels
    if pfc_cap_pct is not None:
        updates["pfc_cap_pct"] = pfc_cap_pct
    if screen_from_stage1 is not None:
        updates["screen_from_stage1"] = screen_from_stage1
    return replace(config, **updates) if updates else config
