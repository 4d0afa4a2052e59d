"""Code-density histograms, bin boundaries, compensation and pairwise binning."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._io import text_out as _text_out


@dataclass(frozen=True, eq=False)
class DensityHistogram:
    """Per-code event counts from a code-density run.

    ``code_offset`` is the raw fine code of ``counts[0]``; ``faults`` counts
    shots dropped for encoding faults; ``dropped`` counts events removed by
    binning (odd tail bin).
    """

    counts: np.ndarray
    measurement_range: float
    code_offset: int = 0
    faults: int = 0
    dropped: int = 0

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1:
            raise ValueError("counts must be one-dimensional")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        if not self.measurement_range > 0:
            raise ValueError("measurement_range must be > 0")
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def widths(self) -> np.ndarray:
        return self.measurement_range * self.counts / self.total

    def __add__(self, other: "DensityHistogram") -> "DensityHistogram":
        if (self.n_bins, self.code_offset) != (other.n_bins, other.code_offset):
            raise ValueError("histograms cover different code ranges")
        return DensityHistogram(self.counts + other.counts, self.measurement_range,
                                self.code_offset, self.faults + other.faults,
                                self.dropped + other.dropped)


@dataclass(frozen=True, eq=False)
class CalTable:
    boundaries: np.ndarray
    lsb_ideal: float

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.boundaries[:-1] + self.boundaries[1:])

    @property
    def n_bins(self) -> int:
        return len(self.boundaries) - 1

    @property
    def measurement_range(self) -> float:
        return float(self.boundaries[-1])

    @property
    def ideal_boundaries(self) -> np.ndarray:
        n = self.n_bins
        return self.measurement_range * (np.arange(n + 1) / n)

    def to_dict(self) -> dict:
        return {"boundaries_ps": self.boundaries.tolist(), "centers_ps": self.centers.tolist(),
                "lsb_ideal_ps": self.lsb_ideal}


def boundaries(hist: DensityHistogram) -> CalTable:
    """Cumulative bin boundaries T[k] from a code-density histogram."""
    if hist.n_bins == 0 or hist.total <= 0:
        raise ValueError("empty histogram")
    mr = hist.measurement_range
    cum = np.concatenate([[0], np.cumsum(hist.counts)])
    # integer prefix sums keep T[N] == MR exactly and match the ideal grid bit-for-bit
    t = mr * (cum / hist.total)
    return CalTable(boundaries=t, lsb_ideal=mr / hist.n_bins)


@dataclass(frozen=True, eq=False)
class CompensationMap:
    """Per raw code: main target, optional compensation target (-1 = void) and
    the fraction of the code's mass sent to the compensation target."""

    bcf_m: np.ndarray
    bcf_c: np.ndarray
    split_fraction: np.ndarray
    n_ideal: int
    missing_codes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "bcf_m": self.bcf_m.tolist(),
            "bcf_c": [None if c < 0 else int(c) for c in self.bcf_c],
            "split_fraction": self.split_fraction.tolist(),
            "missing_codes": list(self.missing_codes),
        }


SURPLUS_RULES = ("share", "main")


def build_compensation(table: CalTable, surplus: str = "share") -> CompensationMap:
    """Assign every actual bin to at most two ideal bins.

    The main target is the ideal bin holding the actual bin's lower boundary;
    if the actual bin reaches past the next ideal boundary, that next bin is
    the compensation target and receives the overlapping share. Ideal bins
    lying wholly inside an ultra-wide actual bin are unreachable and become
    missing codes. The mass they would have carried (the surplus) is split
    evenly between the two targets (``surplus="share"``) or left entirely on
    the main target (``surplus="main"``).
    """
    if surplus not in SURPLUS_RULES:
        raise ValueError(f"surplus must be one of {SURPLUS_RULES}")
    t_act = table.boundaries
    t_ideal = table.ideal_boundaries
    n = table.n_bins
    bcf_m = np.full(n, -1, dtype=np.int64)
    bcf_c = np.full(n, -1, dtype=np.int64)
    split = np.zeros(n)
    for k in range(n):
        lo, hi = t_act[k], t_act[k + 1]
        width = hi - lo
        if width <= 0:
            continue
        m = int(np.searchsorted(t_ideal, lo, side="right")) - 1
        m = min(max(m, 0), n - 1)
        bcf_m[k] = m
        if m + 1 < n and hi > t_ideal[m + 1]:
            bcf_c[k] = m + 1
            overlap = min(hi, t_ideal[m + 2]) - t_ideal[m + 1]
            if surplus == "share" and hi > t_ideal[m + 2]:
                overlap += 0.5 * (hi - t_ideal[m + 2])
            split[k] = min(overlap / width, 1.0)
    hit = np.zeros(n, dtype=bool)
    hit[bcf_m[bcf_m >= 0]] = True
    hit[bcf_c[bcf_c >= 0]] = True
    missing = [int(j) for j in np.flatnonzero(~hit)]
    return CompensationMap(bcf_m, bcf_c, split, n, missing)


def _largest_remainder(alloc: np.ndarray, total: int) -> np.ndarray:
    base = np.floor(alloc).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        order = np.argsort(-(alloc - base), kind="stable")
        base[order[:short]] += 1
    return base


def apply_compensation(hist: DensityHistogram, cmap: CompensationMap) -> DensityHistogram:
    """Redistribute counts onto the ideal grid; totals are preserved exactly."""
    if hist.n_bins != len(cmap.bcf_m):
        raise ValueError("histogram and compensation map cover different codes")
    counts = hist.counts.astype(float)
    alloc = np.zeros(cmap.n_ideal)
    has_m = cmap.bcf_m >= 0
    has_c = cmap.bcf_c >= 0
    np.add.at(alloc, cmap.bcf_m[has_m], counts[has_m] * (1 - cmap.split_fraction[has_m]))
    np.add.at(alloc, cmap.bcf_c[has_c], counts[has_c] * cmap.split_fraction[has_c])
    # zero-count bins with void targets carry no mass
    out = _largest_remainder(alloc, hist.total)
    return replace(hist, counts=out)


def drop_codes(hist: DensityHistogram, codes) -> DensityHistogram:
    """Abandon codes (zero-width or missing); the kept codes are renumbered."""
    keep = np.ones(hist.n_bins, dtype=bool)
    keep[list(codes)] = False
    removed = int(hist.counts[~keep].sum())
    kept = hist.counts[keep]
    mr = hist.measurement_range * (int(kept.sum()) / hist.total) if removed else hist.measurement_range
    return replace(hist, counts=kept, measurement_range=mr, dropped=hist.dropped + removed)


def bin_pairs(hist: DensityHistogram) -> DensityHistogram:
    """Merge consecutive bin pairs; an odd tail bin is dropped and reported."""
    n = hist.n_bins
    if n < 2:
        raise ValueError("need at least two bins to merge")
    half = n // 2
    merged = hist.counts[: 2 * half].reshape(half, 2).sum(axis=1)
    tail = int(hist.counts[2 * half:].sum())
    mr = hist.measurement_range
    if tail:
        mr = mr * (int(merged.sum()) / hist.total)
    return DensityHistogram(merged, mr, hist.code_offset, hist.faults, hist.dropped + tail)


def code_to_time(code: int, table: CalTable) -> float:
    """Bin-by-bin calibration: a code reads as the centre of its bin."""
    if not 0 <= code < table.n_bins:
        raise IndexError(f"code {code} outside 0..{table.n_bins - 1}")
    return float(table.centers[code])


def compensate(hist: DensityHistogram, drop_missing: bool = True, surplus: str = "share"):
    """Boundaries -> compensation map -> redistributed histogram.

    Missing codes are abandoned by default (the resolution degrades slightly).
    Returns ``(compensated_hist, cmap)``.
    """
    cmap = build_compensation(boundaries(hist), surplus)
    out = apply_compensation(hist, cmap)
    if drop_missing and cmap.missing_codes:
        out = drop_codes(out, cmap.missing_codes)
    return out, cmap


def read_histogram_csv(path, measurement_range: float | None = None) -> DensityHistogram:
    codes, counts = [], []
    mr = measurement_range
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(",")
                if key == "measurement_range_ps" and mr is None:
                    mr = float(val)
                continue
            a, b = line.split(",")
            if a == "code":
                continue
            codes.append(int(a))
            counts.append(int(b))
    if not codes:
        raise ValueError(f"{path}: no histogram rows")
    if mr is None:
        raise ValueError(f"{path}: measurement range not given")
    lo = min(codes)
    arr = np.zeros(max(codes) - lo + 1, dtype=np.int64)
    arr[np.asarray(codes) - lo] = counts
    return DensityHistogram(arr, mr, code_offset=lo)


def write_histogram_csv(hist: DensityHistogram, path) -> None:
    with _text_out(path) as fh:
        fh.write(f"# measurement_range_ps,{float(hist.measurement_range)!r}\n")
        fh.write("code,count\n")
        for i, c in enumerate(hist.counts):
            fh.write(f"{hist.code_offset + i},{int(c)}\n")
