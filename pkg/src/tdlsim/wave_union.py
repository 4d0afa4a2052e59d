"""Wave-union (WU-A) launcher and the combined-edge resolution arithmetic."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LAUNCHER_ELEMENTS = 8


@dataclass(frozen=True)
class LauncherConfig:
    """LUT launcher emitting an idle-high negative pulse on each hit.

    ``pulse_width`` None means half the rising range of the line it drives.
    ``width_jitter`` adds independent per-shot pulse-width noise (sensitivity
    studies only; the launcher nominally moves both edges together).
    """

    enabled: bool = False
    pulse_width: float | None = None
    launcher_jitter_lut: float = 0.0
    launcher_jitter_elements: int = LAUNCHER_ELEMENTS
    element_jitter_sigma: float = 0.0
    width_jitter: float = 0.0

    def __post_init__(self):
        if self.enabled and self.pulse_width is not None and not self.pulse_width > 0:
            raise ValueError("pulse_width must be > 0")
        if min(self.launcher_jitter_lut, self.element_jitter_sigma, self.width_jitter) < 0:
            raise ValueError("jitters must be >= 0")
        if self.launcher_jitter_elements < 0:
            raise ValueError("launcher_jitter_elements must be >= 0")

    @property
    def jitter(self) -> float:
        return math.sqrt(self.launcher_jitter_elements * self.element_jitter_sigma ** 2
                         + self.launcher_jitter_lut ** 2)


@dataclass(frozen=True)
class WaveUnionSignal:
    falling_launch: float
    rising_launch: float
    idle_level: str = "high"

    def __post_init__(self):
        if not self.rising_launch > self.falling_launch:
            raise ValueError("rising edge must follow the falling edge")

    @property
    def pulse_width(self) -> float:
        return self.rising_launch - self.falling_launch


def launch_batch(hit_times, cfg: LauncherConfig, rng: np.random.Generator, pulse_width=None):
    """Vectorised launch: returns (falling_launch, rising_launch) arrays."""
    if not cfg.enabled:
        raise ValueError("launcher is disabled")
    width = cfg.pulse_width if pulse_width is None else pulse_width
    if width is None or not width > 0:
        raise ValueError("pulse_width must be > 0")
    hits = np.atleast_1d(np.asarray(hit_times, dtype=float))
    falling = hits + cfg.jitter * rng.standard_normal(hits.shape)
    rising = falling + width
    if cfg.width_jitter > 0:
        rising = rising + cfg.width_jitter * rng.standard_normal(hits.shape)
    return falling, rising


def launch(hit_time: float, cfg: LauncherConfig, rng: np.random.Generator,
           pulse_width: float | None = None) -> WaveUnionSignal:
    falling, rising = launch_batch([hit_time], cfg, rng, pulse_width)
    return WaveUnionSignal(float(falling[0]), float(rising[0]))


def wu_lsb(lsb_rising: float, lsb_falling: float) -> float:
    """LSB of a two-edge wave union from the single-edge LSBs."""
    if not (lsb_rising > 0 and lsb_falling > 0):
        raise ValueError("LSBs must be > 0")
    return lsb_rising * lsb_falling / (lsb_rising + lsb_falling)


@dataclass(frozen=True)
class WuResolution:
    mr: float
    n_rising: int
    n_falling: int

    @property
    def n_wu(self) -> int:
        return self.n_rising + self.n_falling

    @property
    def lsb_rising(self) -> float:
        return self.mr / self.n_rising

    @property
    def lsb_falling(self) -> float:
        return self.mr / self.n_falling

    @property
    def lsb_wu(self) -> float:
        return self.mr / self.n_wu
