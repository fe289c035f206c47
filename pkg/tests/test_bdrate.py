import numpy as np
import pytest
from scipy import interpolate

from semfilter.bdrate import (
    RateQualityCurve,
    RateQualityPoint,
    bd_rate,
    pchip_integral,
    pchip_slopes,
)
from semfilter.errors import ConfigError


def curve(label, pairs):
    return RateQualityCurve.from_pairs(label, pairs)


def dense_oracle_bd_rate(anchor, test, samples=200_001):
    """Independent route: scipy PCHIP sampled densely + trapezoid integration."""
    lo = max(anchor.qualities.min(), test.qualities.min())
    hi = min(anchor.qualities.max(), test.qualities.max())
    xs = np.linspace(lo, hi, samples)
    va = interpolate.pchip_interpolate(anchor.qualities, np.log10(anchor.bpps), xs)
    vt = interpolate.pchip_interpolate(test.qualities, np.log10(test.bpps), xs)
    delta = (np.trapezoid(vt, xs) - np.trapezoid(va, xs)) / (hi - lo)
    return (10.0**delta - 1.0) * 100.0


ANCHOR = curve("anchor", [(0.25, 60.0), (0.5, 66.0), (1.1, 71.0), (2.3, 74.0)])


def test_identical_curves_zero():
    assert bd_rate(ANCHOR, curve("same", [(p.bpp, p.quality) for p in ANCHOR.points])) == 0.0


def test_half_rate_analytic():
    test = curve("half", [(p.bpp / 2.0, p.quality) for p in ANCHOR.points])
    assert bd_rate(ANCHOR, test) == pytest.approx(-50.0, abs=0.01)
    assert bd_rate(ANCHOR, test, method="cubic") == pytest.approx(-50.0, abs=0.01)


def test_four_point_fixture_matches_dense_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        qa = np.sort(rng.uniform(40, 80, size=4))
        qt = np.sort(rng.uniform(40, 80, size=4))
        while np.any(np.diff(qa) < 1e-3) or np.any(np.diff(qt) < 1e-3):
            qa = np.sort(rng.uniform(40, 80, size=4))
            qt = np.sort(rng.uniform(40, 80, size=4))
        overlap_lo, overlap_hi = max(qa[0], qt[0]), min(qa[-1], qt[-1])
        if not (np.count_nonzero((qa >= overlap_lo) & (qa <= overlap_hi)) >= 2
                and np.count_nonzero((qt >= overlap_lo) & (qt <= overlap_hi)) >= 2):
            continue
        anchor = curve("a", list(zip(np.sort(rng.uniform(0.1, 3.0, size=4)), qa)))
        test = curve("t", list(zip(np.sort(rng.uniform(0.1, 3.0, size=4)), qt)))
        got = bd_rate(anchor, test)
        assert got == pytest.approx(dense_oracle_bd_rate(anchor, test), abs=0.01)


def test_opposite_signs():
    test = curve("t", [(0.2, 60.0), (0.45, 66.0), (0.9, 71.0), (2.0, 74.0)])
    forward = bd_rate(ANCHOR, test)
    backward = bd_rate(test, ANCHOR)
    assert forward != 0
    assert np.sign(forward) == -np.sign(backward)


def test_rate_scale_invariance():
    test = curve("t", [(0.2, 60.0), (0.45, 66.0), (0.9, 71.0), (2.0, 74.0)])
    base = bd_rate(ANCHOR, test)
    for factor in (0.01, 7.3, 1000.0):
        a2 = curve("a2", [(p.bpp * factor, p.quality) for p in ANCHOR.points])
        t2 = curve("t2", [(p.bpp * factor, p.quality) for p in test.points])
        assert bd_rate(a2, t2) == pytest.approx(base, abs=1e-9)


def test_pchip_matches_scipy_pointwise():
    rng = np.random.default_rng(7)
    x = np.sort(rng.uniform(0, 10, size=6))
    y = rng.uniform(-2, 2, size=6)
    d_mine = pchip_slopes(x, y)
    d_scipy = interpolate.PchipInterpolator(x, y).derivative()(x)
    np.testing.assert_allclose(d_mine, d_scipy, rtol=1e-12, atol=1e-12)
    # integral cross-check on a subinterval
    lo, hi = x[0] + 0.3, x[-1] - 0.7
    mine = pchip_integral(x, y, lo, hi)
    ref = interpolate.PchipInterpolator(x, y).antiderivative()
    assert mine == pytest.approx(float(ref(hi) - ref(lo)), rel=1e-12)


def test_curve_validation():
    with pytest.raises(ConfigError):
        RateQualityPoint(0.0, 50.0)
    with pytest.raises(ConfigError):
        RateQualityPoint(1.0, float("nan"))
    with pytest.raises(ConfigError):
        curve("short", [(0.5, 50.0)])
    with pytest.raises(ConfigError, match="strictly increasing"):
        curve("bad", [(0.5, 50.0), (0.4, 55.0)])


def test_nonmonotone_quality_rejected():
    bad = curve("bad", [(0.2, 60.0), (0.5, 58.0), (1.0, 65.0)])
    with pytest.raises(ConfigError, match="quality"):
        bd_rate(ANCHOR, bad)


def test_no_overlap_rejected():
    far = curve("far", [(0.2, 10.0), (0.5, 20.0)])
    with pytest.raises(ConfigError, match="overlap"):
        bd_rate(ANCHOR, far)


def test_insufficient_points_in_overlap():
    # only one anchor point falls inside the shared quality range
    a = curve("a", [(0.2, 10.0), (0.4, 20.0), (0.8, 70.0)])
    t = curve("t", [(0.3, 60.0), (0.6, 80.0)])
    with pytest.raises(ConfigError, match="overlap"):
        bd_rate(a, t)


def test_bad_method():
    with pytest.raises(ConfigError):
        bd_rate(ANCHOR, ANCHOR, method="spline")
