"""Behavioral model of a carry-chain tapped delay line.

Times are picoseconds (float64). A tap is "passed" by an edge once the edge's
cumulative propagation delay to that tap is <= the elapsed time between the
edge entering the line and the sampling clock.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from ._io import text_out as _text_out

Polarity = Literal["rising", "falling"]

ELEMENTS_PER_CARRY8 = 8


@dataclass(frozen=True)
class DelayLineConfig:
    """Physical parameters of one simulated delay line.

    ``skew_steps`` entries are ``(element_index, extra_ps)``; the extra delay is
    added to that element (without dual sampling element index == tap index).
    ``falling_multipliers`` optionally overrides ``falling_speed_ratio`` per
    element. ``bubble_window_clip`` truncates the per-shot flip-flop sampling
    perturbation to +-clip ps; ``sample_offset_sigma`` draws static per-tap
    sampling offsets from the seed.
    """

    num_carry8: int = 60
    dual_sampling: bool = False
    nominal_element_delay: float = 5.0
    mismatch_sigma: float = 0.0
    s_tap_offset: float | None = None
    skew_steps: Sequence[tuple[int, float]] = ()
    falling_speed_ratio: float = 1.0
    falling_multipliers: Sequence[float] | None = None
    bubble_window_sigma: float = 0.0
    bubble_window_clip: float | None = None
    sample_offset_sigma: float = 0.0
    element_jitter_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.num_carry8 < 1:
            raise ValueError("num_carry8 must be >= 1")
        if not self.nominal_element_delay > 0:
            raise ValueError("nominal_element_delay must be > 0")
        if not self.falling_speed_ratio > 0:
            raise ValueError("falling_speed_ratio must be > 0")
        for name in ("mismatch_sigma", "bubble_window_sigma", "sample_offset_sigma",
                     "element_jitter_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.s_tap_offset is not None and self.s_tap_offset < 0:
            raise ValueError("s_tap_offset must be >= 0")
        if self.bubble_window_clip is not None and self.bubble_window_clip <= 0:
            raise ValueError("bubble_window_clip must be > 0")
        if self.falling_multipliers is not None:
            if len(self.falling_multipliers) != self.n_elements:
                raise ValueError("falling_multipliers needs one entry per element")
            if min(self.falling_multipliers) <= 0:
                raise ValueError("falling_multipliers must be > 0")
        for idx, extra in self.skew_steps:
            if not 0 <= idx < self.n_elements:
                raise ValueError(f"skew step index {idx} outside the line")
            if extra < 0:
                raise ValueError("skew step extra delay must be >= 0")

    @property
    def n_elements(self) -> int:
        return ELEMENTS_PER_CARRY8 * self.num_carry8

    @property
    def tap_count(self) -> int:
        return self.n_elements * (2 if self.dual_sampling else 1)


@dataclass(frozen=True, eq=False)
class TapProfile:
    """Ground-truth tap timing of a built delay line (immutable)."""

    rising_cum: np.ndarray
    falling_cum: np.ndarray
    sample_offsets: np.ndarray
    # number of carry elements an edge has crossed once it passes each tap
    element_of_tap: np.ndarray
    bubble_window_sigma: float = 0.0
    bubble_window_clip: float | None = None
    element_jitter_sigma: float = 0.0
    dual_sampling: bool = False

    def __post_init__(self):
        n = len(self.rising_cum)
        for name in ("falling_cum", "sample_offsets", "element_of_tap"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length differs from rising_cum")
        for arr in (self.rising_cum, self.falling_cum, self.sample_offsets, self.element_of_tap):
            arr.setflags(write=False)

    @property
    def tap_count(self) -> int:
        return len(self.rising_cum)

    @property
    def n_elements(self) -> int:
        return int(self.element_of_tap[-1])

    def cum(self, polarity: Polarity) -> np.ndarray:
        if polarity == "rising":
            return self.rising_cum
        if polarity == "falling":
            return self.falling_cum
        raise ValueError(f"unknown polarity {polarity!r}")

    def bin_widths(self, polarity: Polarity = "rising") -> np.ndarray:
        """Width of each single-edge code bin; code k covers [cum[k-1], cum[k])."""
        return np.diff(self.cum(polarity), prepend=0.0)

    @property
    def range(self) -> float:
        return float(self.rising_cum[-1])


def _positive_normal(rng: np.random.Generator, mean: float, sigma: float, n: int) -> np.ndarray:
    # Normal truncated to > 0 by rejection.
    out = mean + sigma * rng.standard_normal(n)
    bad = out <= 0
    while bad.any():
        out[bad] = mean + sigma * rng.standard_normal(int(bad.sum()))
        bad = out <= 0
    return out


def build_profile(config: DelayLineConfig) -> TapProfile:
    """Draw per-element delays and assemble cumulative tap arrays."""
    rng = np.random.default_rng(config.seed)
    n = config.n_elements
    if config.mismatch_sigma > 0:
        rise = _positive_normal(rng, config.nominal_element_delay, config.mismatch_sigma, n)
    else:
        rise = np.full(n, config.nominal_element_delay)
    for idx, extra in config.skew_steps:
        rise[idx] += extra
    if config.falling_multipliers is not None:
        mult = np.asarray(config.falling_multipliers, dtype=float)
    else:
        mult = np.full(n, config.falling_speed_ratio)
    fall = rise * mult

    c_rise = np.cumsum(rise)
    c_fall = np.cumsum(fall)
    elements = np.arange(1, n + 1)
    if config.dual_sampling:
        s_off = (config.s_tap_offset if config.s_tap_offset is not None
                 else config.nominal_element_delay / 2)
        # S-tap i sits after C-tap i; clipped so it never overtakes C-tap i+1
        next_rise = np.append(rise[1:], np.inf)
        off_r = np.minimum(s_off, next_rise)
        off_f = np.minimum(s_off * mult, np.append(fall[1:], np.inf))
        c_rise = np.column_stack([c_rise, c_rise + off_r]).ravel()
        c_fall = np.column_stack([c_fall, c_fall + off_f]).ravel()
        elements = np.repeat(elements, 2)

    if config.sample_offset_sigma > 0:
        offsets = config.sample_offset_sigma * rng.standard_normal(len(c_rise))
    else:
        offsets = np.zeros(len(c_rise))

    for arr in (c_rise, c_fall):
        if np.any(np.diff(arr) < 0) or arr[0] <= 0:
            raise ValueError("cumulative tap delays are not increasing")

    return TapProfile(
        rising_cum=c_rise,
        falling_cum=c_fall,
        sample_offsets=offsets,
        element_of_tap=elements,
        bubble_window_sigma=config.bubble_window_sigma,
        bubble_window_clip=config.bubble_window_clip,
        element_jitter_sigma=config.element_jitter_sigma,
        dual_sampling=config.dual_sampling,
    )


def edge_position(profile: TapProfile, polarity: Polarity, elapsed):
    """Number of taps an edge has passed after ``elapsed`` ps (vectorised)."""
    cum = profile.cum(polarity)
    pos = np.searchsorted(cum, elapsed, side="right")
    if np.ndim(pos) == 0:
        return int(pos)
    return pos


def elements_passed(profile: TapProfile, polarity: Polarity, elapsed):
    """Carry elements crossed after ``elapsed`` ps; drives element-jitter accumulation."""
    taps = np.asarray(edge_position(profile, polarity, elapsed))
    # on a dual-sampled line tap pairs share an element
    padded = np.concatenate([[0], profile.element_of_tap])
    return padded[taps]


def _sampling_noise(profile: TapProfile, shape, rng: np.random.Generator) -> np.ndarray:
    sigma = profile.bubble_window_sigma
    if sigma == 0:
        return np.zeros(shape)
    noise = rng.standard_normal(shape)
    clip = profile.bubble_window_clip
    if clip is not None:
        limit = clip / sigma
        bad = np.abs(noise) > limit
        while bad.any():
            noise[bad] = rng.standard_normal(int(bad.sum()))
            bad = np.abs(noise) > limit
    return sigma * noise


def sample_batch(profile: TapProfile, rising_elapsed=None, falling_elapsed=None,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """Capture one word per shot; returns a (shots, tap_count) bool array.

    With a single edge the bits mark taps that edge has passed. With both
    edges (wave union, idle-high negative pulse) the bits are line levels:
    high where the rising edge has re-risen the tap or the falling edge has
    not reached it yet.
    """
    if rising_elapsed is None and falling_elapsed is None:
        raise ValueError("need at least one edge")
    ref = rising_elapsed if rising_elapsed is not None else falling_elapsed
    ref = np.atleast_1d(np.asarray(ref, dtype=float))
    shape = (len(ref), profile.tap_count)
    if rng is None:
        rng = np.random.default_rng()
    # per flip-flop deviation of the sampling instant, shared by both edges
    shift = profile.sample_offsets + _sampling_noise(profile, shape, rng)

    def passed(polarity, elapsed):
        e = np.atleast_1d(np.asarray(elapsed, dtype=float))[:, None]
        return profile.cum(polarity)[None, :] <= e + shift

    if falling_elapsed is None:
        return passed("rising", rising_elapsed)
    if rising_elapsed is None:
        return passed("falling", falling_elapsed)
    return passed("rising", rising_elapsed) | ~passed("falling", falling_elapsed)


@dataclass(frozen=True, eq=False)
class CapturedWord:
    bits: np.ndarray

    def __len__(self):
        return len(self.bits)

    def __str__(self):
        return "".join("1" if b else "0" for b in self.bits)


def sample(profile: TapProfile, edges: Sequence[tuple[Polarity, float]],
           rng: np.random.Generator | None = None) -> CapturedWord:
    """Capture a single word from at most one rising and one falling edge."""
    if not 1 <= len(edges) <= 2:
        raise ValueError("a word carries one or two edges")
    by_pol: dict[str, float] = {}
    for pol, elapsed in edges:
        if pol not in ("rising", "falling"):
            raise ValueError(f"unknown polarity {pol!r}")
        if pol in by_pol:
            raise ValueError(f"two {pol} edges in one word")
        by_pol[pol] = elapsed
    bits = sample_batch(profile, by_pol.get("rising"), by_pol.get("falling"), rng)[0]
    return CapturedWord(bits)


def profile_to_csv(profile: TapProfile, path) -> None:
    with _text_out(path) as fh:
        fh.write("tap_index,rising_cum,falling_cum\n")
        for i, (r, f) in enumerate(zip(profile.rising_cum, profile.falling_cum)):
            fh.write(f"{i},{float(r)!r},{float(f)!r}\n")
