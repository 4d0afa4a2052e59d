"""DNL/INL and equivalent-bin-width statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from ._io import text_out as _text_out

from .calibrate import DensityHistogram

ULTRA_SMALL_DNL = -0.90


def dnl(hist: DensityHistogram) -> np.ndarray:
    """DNL in LSB with the mean bin width as the ideal width."""
    if hist.n_bins == 0 or hist.total <= 0:
        raise ValueError("empty histogram")
    # product first: uniform counts give exactly 1.0
    return hist.counts * hist.n_bins / hist.total - 1.0


def inl(dnl_array) -> np.ndarray:
    return np.cumsum(np.asarray(dnl_array, dtype=float))


def eq_width_stats(widths) -> tuple[float, float]:
    """Equivalent bin width and its quantisation standard deviation.

    sigma_eq^2 = sum(W^2/12 * W/W_total), w_eq = sigma_eq * sqrt(12).
    """
    w = np.asarray(widths, dtype=float)
    if np.any(w < 0):
        raise ValueError("bin widths must be >= 0")
    total = math.fsum(w)
    if not total > 0:
        raise ValueError("bin widths sum to zero")
    var = math.fsum(w ** 3) / (12.0 * total)
    sigma = math.sqrt(var)
    return sigma * math.sqrt(12.0), sigma


@dataclass
class LinearityReport:
    dnl: np.ndarray
    inl: np.ndarray
    dnl_range: tuple[float, float]
    inl_range: tuple[float, float]
    dnl_pkpk: float
    inl_pkpk: float
    sigma_dnl: float
    sigma_inl: float
    w_eq: float
    sigma_eq: float
    lsb: float
    n_bins: int
    zero_bins: int
    ultra_small_bins: int
    faults: int = 0

    def summary(self) -> dict:
        d = asdict(self)
        del d["dnl"], d["inl"]
        d["dnl_range"] = list(self.dnl_range)
        d["inl_range"] = list(self.inl_range)
        return d

    def to_dict(self) -> dict:
        d = self.summary()
        d["dnl"] = self.dnl.tolist()
        d["inl"] = self.inl.tolist()
        return d


def report(hist: DensityHistogram, widths=None) -> LinearityReport:
    """Full linearity summary; ``widths`` (ps) defaults to the histogram estimate."""
    d = dnl(hist)
    i = inl(d)
    w = hist.widths if widths is None else np.asarray(widths, dtype=float)
    w_eq, s_eq = eq_width_stats(w)
    zero = int(np.count_nonzero(hist.counts == 0))
    return LinearityReport(
        dnl=d,
        inl=i,
        dnl_range=(float(d.min()), float(d.max())),
        inl_range=(float(i.min()), float(i.max())),
        dnl_pkpk=float(d.max() - d.min()),
        inl_pkpk=float(i.max() - i.min()),
        sigma_dnl=float(d.std()),
        sigma_inl=float(i.std()),
        w_eq=w_eq,
        sigma_eq=s_eq,
        lsb=hist.measurement_range / hist.n_bins,
        n_bins=hist.n_bins,
        zero_bins=zero,
        ultra_small_bins=int(np.count_nonzero(d <= ULTRA_SMALL_DNL)) - zero,
        faults=hist.faults,
    )


def write_dnl_csv(rep: LinearityReport, path) -> None:
    with _text_out(path) as fh:
        fh.write("bin,dnl,inl\n")
        for k, (a, b) in enumerate(zip(rep.dnl, rep.inl)):
            fh.write(f"{k},{float(a)!r},{float(b)!r}\n")
