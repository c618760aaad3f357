import numpy as np
import pytest

from boundggm.analysis import (
    DOWN, UP, ScanSeries, calibrate_noise_floor, j1j2_chain, make_grid, mg_point_detector,
    scan_ggm, second_derivative, xy_thermo, zero_crossings,
)
from boundggm.errors import DomainError, FeatureNotFoundError, IndeterminateReportError, SizeError


def series_of(mu, values, degenerate=None):
    mu = np.asarray(mu, float)
    n = len(mu)
    deg = np.zeros(n, bool) if degenerate is None else np.asarray(degenerate)
    d = np.diff(mu)
    return ScanSeries(mu=mu, spacing=float(d.min()), energy=np.zeros(n), gap=np.ones(n),
                      ggm=np.asarray(values, float), degenerate=deg,
                      argmax_mask=np.ones(n, np.int64), block_L=np.zeros(n, np.int64))


def with_bound(mu, bound):
    s = series_of(mu, bound)
    s.bound = np.asarray(bound, float)
    s.endpoint_flag = np.zeros(len(mu), bool)
    return s


def test_stencil_exact_on_quadratic():
    mu = make_grid(0.0, 1.0, 0.125)
    s = second_derivative(series_of(mu, 3 * mu**2 - mu + 2))
    assert np.abs(s.d2 - 6).max() < 1e-12
    assert s.endpoint_flag[0] and s.endpoint_flag[-1] and not s.endpoint_flag[1:-1].any()
    assert np.allclose(s.bound, s.ggm - s.d2)


def test_stencil_on_sine():
    mu = make_grid(0.0, 1.0, 0.005)
    s = second_derivative(series_of(mu, np.sin(mu)))
    assert np.abs(s.d2[1:-1] + np.sin(mu[1:-1])).max() < 1e-4


def test_stencil_linearity(rng):
    mu = make_grid(0.0, 0.5, 0.01)
    a, b = rng.standard_normal(len(mu)), rng.standard_normal(len(mu))
    da = second_derivative(series_of(mu, a)).d2
    db = second_derivative(series_of(mu, b)).d2
    dab = second_derivative(series_of(mu, 2 * a - 3 * b)).d2
    assert np.allclose(dab, 2 * da - 3 * db, atol=1e-8)


def test_constant_series_bound_equals_value():
    mu = make_grid(0.0, 0.1, 0.01)
    s = second_derivative(series_of(mu, np.full(len(mu), 0.3)))
    assert np.allclose(s.d2, 0, atol=1e-10)
    assert np.allclose(s.bound, 0.3)


def test_exclusion_band_makes_two_runs():
    mu = make_grid(0.0, 0.2, 0.01, exclude=(0.1, 0.025))
    assert 0.1 not in mu and 0.08 not in mu and 0.07 in mu and 0.13 in mu
    s = second_derivative(series_of(mu, mu**2))
    assert np.allclose(s.d2, 2, atol=1e-9)
    assert s.endpoint_flag.sum() == 4


def test_degenerate_point_interpolated():
    mu = make_grid(0.0, 1.0, 0.1)
    vals = mu**2
    vals[5] = 10.0  # a kink the stencils must not see
    deg = np.zeros(len(mu), bool)
    deg[5] = True
    s = second_derivative(series_of(mu, vals, deg))
    assert s.interpolated[4:7].all() and s.interpolated.sum() == 3
    assert np.allclose(s.d2[4:7], 2, atol=1e-9)


def test_grid_validation():
    with pytest.raises(SizeError):
        scan_ggm(xy_thermo(1.0), [0.1, 0.2, 0.3])
    with pytest.raises(DomainError):
        scan_ggm(xy_thermo(1.0), [0.1, 0.2, 0.3, 0.35, 0.5, 0.6, 0.7][::-1])
    with pytest.raises(DomainError):
        scan_ggm(xy_thermo(1.0), [0.1, 0.2, 0.3, 0.33, 0.5, 0.6, 0.7])
    with pytest.raises(DomainError):
        make_grid(0, 1, -0.1)


def test_single_crossing_example():
    r = zero_crossings(with_bound([0, 1, 2, 3], [-1.0, -0.5, 0.5, 1.0]))
    assert r.crossings == [(1.5, UP)]
    assert [seg[2] for seg in r.segments] == ["-", "+"]
    assert r.segments[0][:2] == (0.0, 1.5) and r.segments[-1][:2] == (1.5, 3.0)


def test_no_crossings():
    r = zero_crossings(with_bound([0, 1, 2], [1.0, 2.0, 3.0]))
    assert r.crossings == []
    assert r.segments == [(0.0, 2.0, "+", r.segments[0][3])]


def test_indeterminate_below_floor():
    with pytest.raises(IndeterminateReportError):
        zero_crossings(with_bound([0, 1, 2], [1e-14, -1e-14, 0.0]))


def test_floor_masks_small_values():
    r = zero_crossings(with_bound([0, 1, 2, 3, 4], [1.0, 1e-6, -1e-6, 1.0, 2.0]), noise_floor=1e-3)
    assert r.crossings == []


def test_segments_alternate():
    mu = np.arange(9.0)
    r = zero_crossings(with_bound(mu, [1, 1, -1, -1, 1, 1, -1, -1, -1]))
    assert [d for _, d in r.crossings] == [DOWN, UP, DOWN]
    signs = [seg[2] for seg in r.segments]
    assert signs == ["+", "-", "+", "-"]
    for a, b in zip(r.segments[:-1], r.segments[1:]):
        assert a[1] == b[0]


def test_mg_detector_kink():
    mu = make_grid(0.0, 1.0, 0.01)
    s = series_of(mu, np.abs(mu - 0.5) + 0.1 * mu)
    f = mg_point_detector(s)
    assert abs(f.mu - 0.5) < 0.011


def test_mg_detector_smooth_series():
    mu = make_grid(0.0, 1.0, 0.01)
    with pytest.raises(FeatureNotFoundError):
        mg_point_detector(series_of(mu, mu**3))


def test_xy_thermo_scan():
    s = scan_ggm(xy_thermo(1.0), make_grid(0.2, 0.5, 0.05))
    assert np.all(np.isnan(s.energy))
    assert np.all(s.block_L >= 1)
    # ordered side: starts near the GHZ-like value 1/2 and falls as the field grows
    assert 0.44 < s.ggm[0] < 0.5
    assert np.all(np.diff(s.ggm) < 0)


def test_calibrated_floor_is_tiny():
    floor = calibrate_noise_floor(j1j2_chain(8), 0.2)
    assert 1e-12 <= floor < 1e-8


@pytest.mark.slow
def test_ring_scan_degenerate_only_at_mg_point():
    s = scan_ggm(j1j2_chain(8), make_grid(0.0, 1.0, 0.01))
    assert len(s) == 101
    assert list(np.nonzero(s.degenerate)[0]) == [50]
    s = second_derivative(s)
    r = zero_crossings(s)
    first = [m for m, d in r.crossings if 0.05 <= m <= 0.45]
    assert len(first) == 1
