"""TOML experiment configuration.

Schema (every key optional)::

    [delay_line]        # DelayLineConfig fields
    num_carry8 = 60
    nominal_element_delay = 5.0
    mismatch_sigma = 1.0
    skew_steps = [[120, 15.0]]
    falling_speed_ratio = 1.1
    element_jitter_sigma = 0.16
    seed = 7

    [launcher]          # LauncherConfig fields (``enabled`` follows the variant)
    pulse_width = 1200.0
    launcher_jitter_lut = 1.45

    [system]
    variant = "WU"      # plain | WU | DS | DSWU | binned-DSWU
    decimation = 8
    clock_jitter = 4.42
    clock_period = 1200.0
    phase_offset = 0.0

    [interval]          # time-interval test defaults
    start = 0.0
    step = 9.41
    steps = 100
    reps = 50000
    calib_samples = 1000000
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import tomli

from .harness import TdcSystem, VARIANTS, make_system
from .tdl_model import DelayLineConfig
from .wave_union import LauncherConfig


class ConfigError(ValueError):
    pass


_SECTIONS = ("delay_line", "launcher", "system", "interval")
_SYSTEM_KEYS = ("variant", "decimation", "clock_jitter", "clock_period", "phase_offset")
_INTERVAL_KEYS = ("start", "step", "steps", "reps", "calib_samples")


@dataclass
class ExperimentConfig:
    delay: DelayLineConfig
    launcher: LauncherConfig
    system: dict = field(default_factory=dict)
    interval: dict = field(default_factory=dict)

    @property
    def variant(self) -> str:
        return self.system.get("variant", "plain")

    def build_system(self, variant: str | None = None) -> TdcSystem:
        kw = {k: v for k, v in self.system.items() if k != "variant"}
        return make_system(variant or self.variant, self.delay, self.launcher, **kw)


def _check_keys(section: str, data: dict, allowed) -> None:
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {', '.join(sorted(unknown))}")


def from_dict(raw: dict) -> ExperimentConfig:
    _check_keys("top level", raw, _SECTIONS)
    dl = dict(raw.get("delay_line", {}))
    _check_keys("delay_line", dl, [f.name for f in fields(DelayLineConfig)])
    if "skew_steps" in dl:
        try:
            dl["skew_steps"] = tuple((int(i), float(x)) for i, x in dl["skew_steps"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[delay_line] skew_steps must be [[index, extra_ps], ...]: {exc}")
    if "falling_multipliers" in dl:
        dl["falling_multipliers"] = tuple(float(x) for x in dl["falling_multipliers"])
    la = dict(raw.get("launcher", {}))
    _check_keys("launcher", la, [f.name for f in fields(LauncherConfig)])
    system = dict(raw.get("system", {}))
    _check_keys("system", system, _SYSTEM_KEYS)
    if system.get("variant", "plain") not in VARIANTS:
        raise ConfigError(f"[system] variant must be one of {', '.join(VARIANTS)}")
    interval = dict(raw.get("interval", {}))
    _check_keys("interval", interval, _INTERVAL_KEYS)
    try:
        cfg = ExperimentConfig(DelayLineConfig(**dl), LauncherConfig(**la), system, interval)
        cfg.build_system()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(raw)
