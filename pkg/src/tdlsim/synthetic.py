"""Noise-free histograms and wave-union mismatch profiles for calibration studies."""
from __future__ import annotations

import numpy as np

from .calibrate import DensityHistogram, _largest_remainder
from .harness import TdcSystem, make_system
from .tdl_model import DelayLineConfig


def hist_from_widths(widths, total: int = 10_000_000, code_offset: int = 0) -> DensityHistogram:
    """Expected code-density histogram for the given bin widths (ps).

    Counts are rounded by largest remainder so they sum to ``total``.
    """
    w = np.asarray(widths, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w < 0) or not w.sum() > 0:
        raise ValueError("widths must be a non-empty, non-negative vector")
    counts = _largest_remainder(w / w.sum() * total, total)
    return DensityHistogram(counts, float(w.sum()), code_offset=code_offset)


def wu_profile(seed: int, num_carry8: int = 30, mismatch_sigma: float = 3.0,
               skew_ps: float = 10.0, n_skews: int = 2, falling_speed_ratio: float = 1.13,
               nominal: float = 5.0) -> np.ndarray:
    """Combined-code bin widths of a mismatched wave-union line.

    Carry-chain-like texture: truncated-normal element delays, a few
    block-boundary skews and a slower falling edge, so that the single-edge
    bins include ultra-wide and ultra-small ones.
    """
    rng = np.random.default_rng([seed, 0x5EED])
    n = 8 * num_carry8
    skews = tuple((int(i), float(skew_ps)) for i in rng.choice(n, n_skews, replace=False)) if skew_ps else ()
    delay = DelayLineConfig(num_carry8=num_carry8, nominal_element_delay=nominal,
                            mismatch_sigma=mismatch_sigma, skew_steps=skews,
                            falling_speed_ratio=falling_speed_ratio, seed=seed)
    return make_system("WU", delay).true_bin_widths()


def system_histogram(sys: TdcSystem, total: int = 10_000_000) -> DensityHistogram:
    """Noise-free code-density histogram of a system, labelled with its raw codes."""
    return hist_from_widths(sys.true_bin_widths(), total, sys.nominal_code_span()[0])
