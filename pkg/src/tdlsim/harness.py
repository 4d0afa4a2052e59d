"""Full-system code-density and time-interval experiments.

Measured quantity convention: for single-edge systems ``q`` is the elapsed
time between the hit entering the line and the sampling clock; for wave-union
systems it is the elapsed time of the trailing (rising) edge, the leading
falling edge being ``pulse_width`` further down the line.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import calibrate as cal
from .calibrate import CalTable, CompensationMap, DensityHistogram
from .encoder import SubTdlLayout, encode_batch
from .linearity import report
from .tdl_model import DelayLineConfig, TapProfile, build_profile, edge_position, elements_passed, sample_batch
from .uncertainty import JitterBudget
from .wave_union import LauncherConfig, launch_batch

VARIANTS = ("plain", "WU", "DS", "DSWU", "binned-DSWU")
SHARD_SIZE = 1 << 16
THREADS_ENV = "TDLSIM_THREADS"


def default_threads() -> int:
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


@dataclass(frozen=True, eq=False)
class Calibration:
    """Maps raw fine codes to time (in the measured-quantity frame)."""

    table: CalTable
    code_offset: int
    phase_offset: float = 0.0
    cmap: CompensationMap | None = None
    binned: bool = False

    def to_time(self, codes, rng: np.random.Generator) -> np.ndarray:
        local = np.asarray(codes, dtype=np.int64) - self.code_offset
        if self.binned:
            local = local // 2
        if self.cmap is None:
            local = np.clip(local, 0, self.table.n_bins - 1)
            return self.phase_offset + self.table.centers[local]
        n_raw = len(self.cmap.bcf_m)
        local = np.clip(local, 0, n_raw - 1)
        target = self.cmap.bcf_m[local]
        comp = self.cmap.bcf_c[local]
        # events of a split code go to the compensation bin with its share
        to_c = (comp >= 0) & (rng.random(len(local)) < self.cmap.split_fraction[local])
        target = np.where(to_c, comp, target)
        # void codes (never observed during calibration) read as their raw centre
        target = np.where(target < 0, local, target)
        lsb = self.table.measurement_range / self.cmap.n_ideal
        return self.phase_offset + (target + 0.5) * lsb


@dataclass(frozen=True, eq=False)
class TdcSystem:
    delay: DelayLineConfig
    launcher: LauncherConfig = field(default_factory=LauncherConfig)
    variant: str = "plain"
    decimation: int = 8
    clock_jitter: float = 0.0
    clock_period: float | None = None
    phase_offset: float = 0.0
    calibration: Calibration | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        wu = "WU" in self.variant
        ds = "DS" in self.variant
        if wu != self.launcher.enabled:
            raise ValueError(f"variant {self.variant} requires launcher enabled={wu}")
        if ds != self.delay.dual_sampling:
            raise ValueError(f"variant {self.variant} requires dual_sampling={ds}")
        if self.clock_jitter < 0:
            raise ValueError("clock_jitter must be >= 0")
        if self.clock_period is not None and not self.clock_period > 0:
            raise ValueError("clock_period must be > 0")

    @property
    def is_wu(self) -> bool:
        return self.launcher.enabled

    @property
    def binned(self) -> bool:
        return self.variant == "binned-DSWU"

    @cached_property
    def profile(self) -> TapProfile:
        return build_profile(self.delay)

    @cached_property
    def layout(self) -> SubTdlLayout:
        return SubTdlLayout(self.profile.tap_count, self.decimation, self.is_wu)

    @cached_property
    def pulse_width(self) -> float:
        if self.launcher.pulse_width is not None:
            return self.launcher.pulse_width
        return self.profile.range / 2

    @cached_property
    def measurement_range(self) -> float:
        """Width of the hit-phase window (one clock period)."""
        if self.clock_period is not None:
            return self.clock_period
        r = self.profile.range
        if self.is_wu:
            # both edges must stay inside the line over the whole window
            r = min(r, float(self.profile.falling_cum[-1]) - self.pulse_width)
        return r - self.phase_offset

    def nominal_code(self, q):
        """Noise-free fine code for measured quantity ``q``."""
        prof = self.profile
        if not self.is_wu:
            return edge_position(prof, "rising", q)
        return (edge_position(prof, "rising", q)
                + edge_position(prof, "falling", np.asarray(q) + self.pulse_width))

    def nominal_code_span(self) -> tuple[int, int]:
        lo = self.phase_offset
        hi = np.nextafter(self.phase_offset + self.measurement_range, -np.inf)
        return int(self.nominal_code(lo)), int(self.nominal_code(hi))

    def true_bin_widths(self) -> np.ndarray:
        """Noise-free code bin widths over the phase window, from tap geometry.

        Every tap crossing inside the window advances the code by one;
        coincident crossings skip a code and leave a zero-width bin.
        """
        prof = self.profile
        lo = self.phase_offset
        hi = lo + self.measurement_range
        cross = prof.rising_cum
        if self.is_wu:
            cross = np.concatenate([cross, prof.falling_cum - self.pulse_width])
        cross = np.sort(cross[(cross > lo) & (cross < hi)])
        return np.diff(np.concatenate([[lo], cross, [hi]]))

    def shoot(self, q, rng: np.random.Generator, word_level: bool = True):
        """Run one shot per entry of ``q``; returns ``(codes, fault_mask)``."""
        q = np.asarray(q, dtype=float)
        prof = self.profile
        n = len(q)
        clock = self.clock_jitter * rng.standard_normal(n) if self.clock_jitter > 0 else 0.0
        if self.is_wu:
            falling, rising = launch_batch(-(q + self.pulse_width), self.launcher, rng,
                                           self.pulse_width)
            e_r = clock - rising
            e_f = clock - falling
        else:
            e_r = clock + q
            e_f = None
        sigma_cy = prof.element_jitter_sigma
        if sigma_cy > 0:
            # accumulated per-element jitter of each edge at its stop position
            e_r = e_r + sigma_cy * np.sqrt(elements_passed(prof, "rising", e_r)) * rng.standard_normal(n)
            if e_f is not None:
                e_f = e_f + sigma_cy * np.sqrt(elements_passed(prof, "falling", e_f)) * rng.standard_normal(n)
        if word_level:
            words = sample_batch(prof, e_r, e_f, rng)
            codes, _, _, fault = encode_batch(words, self.layout)
            return codes, fault
        codes = edge_position(prof, "rising", e_r)
        if e_f is not None:
            codes = codes + edge_position(prof, "falling", e_f)
        return np.asarray(codes), np.zeros(n, dtype=bool)

    def needs_word_level(self) -> bool:
        prof = self.profile
        return prof.bubble_window_sigma > 0 or bool(np.any(prof.sample_offsets != 0))


def make_system(variant: str, delay: DelayLineConfig, launcher: LauncherConfig | None = None,
                **kw) -> TdcSystem:
    """Assemble a variant, forcing the DS / launcher flags it implies."""
    ds = "DS" in variant
    wu = "WU" in variant
    delay = replace(delay, dual_sampling=ds)
    launcher = launcher or LauncherConfig()
    launcher = replace(launcher, enabled=wu)
    if wu and launcher.element_jitter_sigma == 0:
        launcher = replace(launcher, element_jitter_sigma=delay.element_jitter_sigma)
    return TdcSystem(delay=delay, launcher=launcher, variant=variant, **kw)


def _run_shards(fn, n_shards: int, threads: int | None):
    threads = threads or default_threads()
    if threads == 1 or n_shards == 1:
        return [fn(i) for i in range(n_shards)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_shards)))


def code_density_run(sys: TdcSystem, samples: int, seed: int = 0, threads: int | None = None,
                     word_level: bool | None = None) -> DensityHistogram:
    """Histogram fine codes for hits uniformly distributed over one clock period.

    Shard ``i`` draws from ``default_rng([seed, i])``, so the result does not
    depend on the thread count. ``word_level`` None captures and encodes full
    tap words only when sampling noise can create bubbles; noise-free lines
    give identical codes straight from the edge positions.
    """
    if samples <= 0:
        raise ValueError("samples must be > 0")
    prof = sys.profile
    max_code = prof.tap_count * (2 if sys.is_wu else 1)
    n_shards = math.ceil(samples / SHARD_SIZE)
    word_level = bool(word_level) or sys.needs_word_level()

    def shard(i):
        size = min(SHARD_SIZE, samples - i * SHARD_SIZE)
        rng = np.random.default_rng([seed, i])
        q = sys.phase_offset + sys.measurement_range * rng.random(size)
        codes, fault = sys.shoot(q, rng, word_level)
        good = codes[~fault]
        return np.bincount(np.clip(good, 0, max_code), minlength=max_code + 1), int(fault.sum())

    results = _run_shards(shard, n_shards, threads)
    counts = sum(r[0] for r in results)
    faults = sum(r[1] for r in results)
    lo, hi = sys.nominal_code_span()
    seen = np.flatnonzero(counts)
    if len(seen):
        lo, hi = min(lo, int(seen[0])), max(hi, int(seen[-1]))
    return DensityHistogram(counts[lo:hi + 1], sys.measurement_range, code_offset=lo, faults=faults)


def calibrate_system(sys: TdcSystem, hist: DensityHistogram | None = None, samples: int = 1_000_000,
                     seed: int = 0, compensate: bool | None = None) -> TdcSystem:
    """Attach a calibration built from a code-density histogram.

    Binned systems merge bin pairs and then compensate; ``compensate``
    defaults to True for WU and binned variants.
    """
    if hist is None:
        hist = code_density_run(sys, samples, seed)
    if compensate is None:
        compensate = sys.variant in ("WU", "binned-DSWU")
    work = cal.bin_pairs(hist) if sys.binned else hist
    table = cal.boundaries(work)
    cmap = cal.build_compensation(table) if compensate else None
    calib = Calibration(table, hist.code_offset, sys.phase_offset, cmap, sys.binned)
    return replace(sys, calibration=calib)


@dataclass
class IntervalResult:
    true_interval: np.ndarray
    mean_measured: np.ndarray
    std: np.ndarray
    faults: int = 0

    @property
    def mean_error(self) -> np.ndarray:
        return self.mean_measured - self.true_interval

    @property
    def rms(self) -> tuple[float, float]:
        return rms_resolution(self.std)

    def to_dict(self) -> dict:
        rms, sigma = self.rms
        return {
            "rms_resolution_ps": rms,
            "sigma_rms_ps": sigma,
            "faults": self.faults,
            "intervals": [
                {"true_interval_ps": float(t), "mean_measured_ps": float(m),
                 "mean_error_ps": float(e), "std_ps": float(s)}
                for t, m, e, s in zip(self.true_interval, self.mean_measured,
                                      self.mean_error, self.std)
            ],
        }


def rms_resolution(stds) -> tuple[float, float]:
    """Mean and spread of per-interval single-shot standard deviations."""
    s = np.asarray(stds, dtype=float)
    if s.size == 0:
        raise ValueError("no intervals")
    return float(s.mean()), float(s.std())


def time_interval_run(sys: TdcSystem, start: float = 0.0, step: float = 9.41,
                      steps: int | None = None, reps: int = 50_000, seed: int = 0,
                      threads: int | None = None, word_level: bool | None = None) -> IntervalResult:
    """Measure fixed intervals ``start + j*step`` ``reps`` times each.

    ``steps`` defaults to as many intervals as fit in one clock period.
    """
    if sys.calibration is None:
        raise ValueError("time_interval_run needs a calibrated system")
    if reps <= 0:
        raise ValueError("reps must be > 0")
    if steps is None:
        steps = max(1, int((sys.measurement_range - start) // step))
    if word_level is None:
        word_level = sys.needs_word_level()
    taus = sys.phase_offset + start + step * np.arange(steps)
    chunks = math.ceil(reps / SHARD_SIZE)

    def shard(idx):
        j, c = divmod(idx, chunks)
        size = min(SHARD_SIZE, reps - c * SHARD_SIZE)
        rng = np.random.default_rng([seed, j, c])
        codes, fault = sys.shoot(np.full(size, taus[j]), rng, word_level)
        t = sys.calibration.to_time(codes[~fault], rng)
        return t, int(fault.sum())

    results = _run_shards(shard, steps * chunks, threads)
    means, stds, faults = [], [], 0
    for j in range(steps):
        part = results[j * chunks:(j + 1) * chunks]
        t = np.concatenate([p[0] for p in part])
        faults += sum(p[1] for p in part)
        means.append(t.mean() if t.size else np.nan)
        stds.append(t.std() if t.size else np.nan)
    return IntervalResult(taus, np.asarray(means), np.asarray(stds), faults)


def system_from_budget(b: JitterBudget, decimation: int = 8, seed: int = 0) -> TdcSystem:
    """A jitter-matched system whose uniform bins reproduce the budget's sigma_eq.

    With a launcher it is a symmetric WU line whose edges interleave at half
    an element; without, a plain single-edge line.
    """
    if b.n_elements % 8:
        raise ValueError("n_elements must be a multiple of 8")
    bin_width = b.sigma_eq * math.sqrt(12.0)
    if not bin_width > 0:
        raise ValueError("sigma_eq must be > 0")
    if b.has_launcher:
        nominal = 2 * bin_width
        n = b.n_elements
        # half-element offset makes rising and falling boundaries interleave
        launcher = LauncherConfig(enabled=True, pulse_width=nominal * (n // 2 + 0.5),
                                  launcher_jitter_lut=b.sigma_lut,
                                  element_jitter_sigma=b.sigma_cy)
        variant = "WU"
    else:
        nominal = bin_width
        launcher = LauncherConfig()
        variant = "plain"
    delay = DelayLineConfig(num_carry8=b.n_elements // 8, nominal_element_delay=nominal,
                            element_jitter_sigma=b.sigma_cy, seed=seed)
    return TdcSystem(delay=delay, launcher=launcher, variant=variant, decimation=decimation,
                     clock_jitter=b.sigma_clk)


def linearity_pipeline(hist: DensityHistogram, variant: str) -> dict:
    """Table-style linearity summary for a variant's processed histogram."""
    stages = {}
    if variant == "binned-DSWU":
        merged = cal.bin_pairs(hist)
        comp, cmap = cal.compensate(merged)
        stages["binned-DSWU"] = (comp, cmap)
    elif variant == "WU":
        stages["WU"] = (hist, None)
        comp, cmap = cal.compensate(hist)
        stages["compensated-WU"] = (comp, cmap)
    else:
        stages[variant] = (hist, None)
    out = {}
    for name, (h, cmap) in stages.items():
        rep = report(h).summary()
        if cmap is not None:
            rep["missing_codes"] = len(cmap.missing_codes)
        out[name] = rep
    return out


def compare(delay: DelayLineConfig, launcher: LauncherConfig | None = None, samples: int = 1_000_000,
            seed: int = 0, decimation: int = 8, threads: int | None = None) -> dict:
    """Run every variant on one mismatch profile and return per-variant linearity summaries."""
    out = {}
    for variant in ("WU", "DS", "DSWU", "binned-DSWU"):
        sys = make_system(variant, delay, launcher, decimation=decimation)
        if variant == "binned-DSWU":
            hist = dswu_hist
        else:
            hist = code_density_run(sys, samples, seed, threads)
        if variant == "DSWU":
            dswu_hist = hist
        out.update(linearity_pipeline(hist, variant))
    return out
