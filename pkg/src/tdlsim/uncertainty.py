"""Error-source model of single-stage TDL-TDC precision and ring-oscillator fits."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict, fields

import numpy as np

from .wave_union import LAUNCHER_ELEMENTS


@dataclass(frozen=True)
class JitterBudget:
    sigma_clk: float = 0.0
    sigma_cy: float = 0.0
    sigma_lut: float = 0.0
    n_elements: int = 1
    sigma_eq: float = 0.0
    has_launcher: bool = True
    # alternate start/INL/quantisation/extra decomposition
    sigma_start: float | None = None
    sigma_inl: float | None = None
    sigma_qav: float | None = None
    sigma_extra: float | None = None

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("n_elements must be >= 1")
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name.startswith("sigma") and v is not None and v < 0:
                raise ValueError(f"{f.name} must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "JitterBudget":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown budget fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def for_line(cls, delay, **kw) -> "JitterBudget":
        """Budget whose n counts the carry elements of ``delay`` (S-taps add none)."""
        return cls(n_elements=delay.n_elements, **kw)


@dataclass(frozen=True)
class UncertaintyReport:
    sigma_wu: float
    sigma_dl: float
    sigma_sig: float
    sigma_tdc: float
    sigma_system: float
    # same chain with the n/2 approximation of the delay-line term
    sigma_dl_approx: float
    sigma_sig_approx: float
    sigma_tdc_approx: float
    sigma_system_approx: float
    # element-only signal path with 8 extra routing elements: sqrt(n/2 + 8) * sigma_CY
    sigma_sig_alt: float

    def to_dict(self) -> dict:
        return asdict(self)


def sigma_wu(b: JitterBudget) -> float:
    if not b.has_launcher:
        return 0.0
    return math.sqrt(LAUNCHER_ELEMENTS * b.sigma_cy ** 2 + b.sigma_lut ** 2)


def expected_sigma_dl(n: int, sigma_cy: float, approx: bool = False) -> float:
    """Delay-line jitter for a uniformly likely stop position among n elements."""
    factor = n / 2 if approx else (n + 1) / 2
    return math.sqrt(factor) * sigma_cy


def budget(b: JitterBudget) -> UncertaintyReport:
    wu = sigma_wu(b)
    out = {}
    for approx, suffix in ((False, ""), (True, "_approx")):
        dl = expected_sigma_dl(b.n_elements, b.sigma_cy, approx)
        sig = math.hypot(wu, dl)
        tdc = math.hypot(sig, b.sigma_eq)
        system = math.hypot(tdc, b.sigma_clk)
        out.update({f"sigma_dl{suffix}": dl, f"sigma_sig{suffix}": sig,
                    f"sigma_tdc{suffix}": tdc, f"sigma_system{suffix}": system})
    alt = math.sqrt(b.n_elements / 2 + LAUNCHER_ELEMENTS) * b.sigma_cy
    return UncertaintyReport(sigma_wu=wu, sigma_sig_alt=alt, **out)


def budget_eq7(b: JitterBudget) -> float:
    """Start-jitter / INL / average-quantisation / extra decomposition."""
    parts = {"sigma_start": b.sigma_start, "sigma_inl": b.sigma_inl,
             "sigma_qav": b.sigma_qav, "sigma_extra": b.sigma_extra}
    for name, v in parts.items():
        if v is None:
            raise ValueError(f"{name} is required")
    return math.sqrt(math.fsum(v ** 2 for v in parts.values()))


RO_WEIGHTS = ("relative", "none")


def ro_extract(points, weights: str = "relative") -> tuple[float, float]:
    """Fit sigma_RO^2 = sigma_LUT^2 + m * sigma_CY^2 by least squares.

    ``points`` is an iterable of ``(m, sigma_ro_ps)``. Measured standard
    deviations carry relative errors, so by default each squared residual is
    weighted by 1/sigma_RO^4; ``weights="none"`` gives ordinary least squares.
    Returns ``(sigma_cy, sigma_lut)``; negative fitted variances are clamped
    to zero with a warning.
    """
    if weights not in RO_WEIGHTS:
        raise ValueError(f"weights must be one of {RO_WEIGHTS}")
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise ValueError("need at least two (m, sigma_ro) points")
    m, s = pts[:, 0], pts[:, 1]
    if np.unique(m).size < 2:
        raise ValueError("need at least two distinct element counts")
    if np.any(s <= 0):
        raise ValueError("sigma_ro values must be > 0")
    design = np.column_stack([np.ones_like(m), m])
    target = s ** 2
    if weights == "relative":
        design = design / target[:, None]
        target = np.ones_like(target)
    (var_lut, var_cy), *_ = np.linalg.lstsq(design, target, rcond=None)
    if var_cy < 0:
        warnings.warn(f"fitted sigma_CY^2 = {var_cy:.3g} < 0, clamped to 0")
        var_cy = 0.0
    if var_lut < 0:
        warnings.warn(f"fitted sigma_LUT^2 = {var_lut:.3g} < 0, clamped to 0")
        var_lut = 0.0
    return math.sqrt(var_cy), math.sqrt(var_lut)


def read_ro_csv(path) -> list[tuple[float, float]]:
    pts = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split(",")[:2]
            try:
                pts.append((float(a), float(b)))
            except ValueError:
                if pts:
                    raise
                # header row
    return pts
