"""Bjontegaard-Delta rate between two rate-quality curves.

log10(bpp) is interpolated as a function of quality with monotone piecewise
cubics (Fritsch-Carlson slopes, one-sided endpoint rule) and integrated
exactly over the overlapping quality interval; the classic degree-3
polynomial fit is available as method="cubic" for cross-checking.
Negative results mean the test curve saves rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class RateQualityPoint:
    bpp: float
    quality: float

    def __post_init__(self):
        if not self.bpp > 0:
            raise ConfigError(f"bpp must be positive, got {self.bpp}")
        if not np.isfinite(self.quality):
            raise ConfigError(f"quality must be finite, got {self.quality}")


@dataclass(frozen=True)
class RateQualityCurve:
    label: str
    points: tuple

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ConfigError(f"curve {self.label!r} needs >= 2 points, got {len(pts)}")
        bpps = [p.bpp for p in pts]
        if any(b2 <= b1 for b1, b2 in zip(bpps, bpps[1:])):
            raise ConfigError(f"curve {self.label!r}: bpp must be strictly increasing, got {bpps}")

    @property
    def bpps(self) -> np.ndarray:
        return np.array([p.bpp for p in self.points])

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points])

    @classmethod
    def from_pairs(cls, label: str, pairs) -> "RateQualityCurve":
        return cls(label, tuple(RateQualityPoint(float(b), float(q)) for b, q in pairs))


def _edge_slope(h0: float, h1: float, m0: float, m1: float) -> float:
    d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
    if np.sign(d) != np.sign(m0):
        return 0.0
    if np.sign(m0) != np.sign(m1) and abs(d) > 3.0 * abs(m0):
        return 3.0 * m0
    return d


def pchip_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Shape-preserving derivative estimates at the knots."""
    h = np.diff(x)
    m = np.diff(y) / h
    n = len(x)
    if n == 2:
        return np.array([m[0], m[0]])
    d = np.zeros(n)
    for i in range(1, n - 1):
        if np.sign(m[i - 1]) != np.sign(m[i]) or m[i - 1] == 0.0 or m[i] == 0.0:
            d[i] = 0.0
        else:
            w1 = 2.0 * h[i] + h[i - 1]
            w2 = h[i] + 2.0 * h[i - 1]
            d[i] = (w1 + w2) / (w1 / m[i - 1] + w2 / m[i])
    d[0] = _edge_slope(h[0], h[1], m[0], m[1])
    d[-1] = _edge_slope(h[-1], h[-2], m[-1], m[-2])
    return d


def pchip_integral(x: np.ndarray, y: np.ndarray, lo: float, hi: float) -> float:
    """Exact integral of the PCHIP interpolant over [lo, hi] inside the knots."""
    if lo < x[0] - 1e-12 or hi > x[-1] + 1e-12:
        raise ConfigError(f"integration range [{lo}, {hi}] outside knots [{x[0]}, {x[-1]}]")
    d = pchip_slopes(x, y)
    total = 0.0
    for i in range(len(x) - 1):
        a, b = max(lo, x[i]), min(hi, x[i + 1])
        if b <= a:
            continue
        h = x[i + 1] - x[i]
        m = (y[i + 1] - y[i]) / h
        c2 = (3.0 * m - 2.0 * d[i] - d[i + 1]) / h
        c3 = (d[i] + d[i + 1] - 2.0 * m) / (h * h)

        def antiderivative(t):
            return y[i] * t + d[i] * t * t / 2.0 + c2 * t ** 3 / 3.0 + c3 * t ** 4 / 4.0

        total += antiderivative(b - x[i]) - antiderivative(a - x[i])
    return total


def _check_quality_monotone(curve: RateQualityCurve) -> None:
    q = curve.qualities
    if np.any(np.diff(q) <= 0):
        raise ConfigError(
            f"curve {curve.label!r}: quality must be strictly increasing with bpp "
            f"for BD-rate, got {q.tolist()}"
        )


def bd_rate(anchor: RateQualityCurve, test: RateQualityCurve, method: str = "pchip") -> float:
    """Average bitrate difference of test vs anchor at equal quality, in percent."""
    if method not in ("pchip", "cubic"):
        raise ConfigError(f"unknown BD-rate method {method!r}")
    _check_quality_monotone(anchor)
    _check_quality_monotone(test)
    qa, qt = anchor.qualities, test.qualities
    lo = max(qa.min(), qt.min())
    hi = min(qa.max(), qt.max())
    if not hi > lo:
        raise ConfigError(
            f"no overlapping quality range between {anchor.label!r} and {test.label!r}"
        )
    for curve, q in ((anchor, qa), (test, qt)):
        inside = np.count_nonzero((q >= lo - 1e-12) & (q <= hi + 1e-12))
        if inside < 2:
            raise ConfigError(f"curve {curve.label!r} has {inside} point(s) in the quality overlap")
    la = np.log10(anchor.bpps)
    lt = np.log10(test.bpps)
    if method == "pchip":
        int_a = pchip_integral(qa, la, lo, hi)
        int_t = pchip_integral(qt, lt, lo, hi)
    else:
        pa = np.polyint(np.polyfit(qa, la, 3))
        pt = np.polyint(np.polyfit(qt, lt, 3))
        int_a = np.polyval(pa, hi) - np.polyval(pa, lo)
        int_t = np.polyval(pt, hi) - np.polyval(pt, lo)
    delta = (int_t - int_a) / (hi - lo)
    return float((10.0 ** delta - 1.0) * 100.0)
