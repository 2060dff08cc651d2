"""Layer profile: closed-form Lipschitz constants, bands, four-coloring."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvlorentz.bv import compose_scalar
from bvlorentz.grid import GridFunction, UnsupportedDimensionError
from bvlorentz.layers import (
    BAND_SUM_FACTOR,
    BAND_SUM_SLACK,
    active_scales,
    band_bounds,
    build_profile,
    chi_function,
    color_class,
    layer_energy_audit,
    level_band,
    scaled_chi_function,
)
from bvlorentz.corpus import corpus_grids


def test_profile_constants_2d():
    p = build_profile(2)
    assert p.lower == 0.5
    assert p.plateau_hi == 2.0
    assert p.upper == 4.0
    assert p.derivative_bound == pytest.approx(25.0 / 9.0, rel=1e-15)
    assert p.value_scale(3) == 8.0


def test_profile_constants_3d():
    p = build_profile(3)
    assert p.lower == 0.25
    assert p.plateau_hi == 4.0
    assert p.upper == 16.0
    assert p.derivative_bound == pytest.approx(1.8, rel=1e-12)
    with pytest.raises(UnsupportedDimensionError):
        build_profile(1)


def test_chi_plateau_is_identity_and_odd():
    p = build_profile(2)
    chi = chi_function(p)
    ts = np.linspace(1.0, 2.0, 41)
    np.testing.assert_allclose(chi(ts), ts, atol=0)
    np.testing.assert_array_equal(chi(-ts), -chi(ts))
    # vanishes outside [lower, upper]
    assert np.all(chi(np.array([0.0, 0.25, 0.5, 4.0, 7.0])) == 0.0)
    # continuous at the ramp ends
    eps = 1e-9
    assert chi(np.array([1.0 - eps]))[0] == pytest.approx(1.0, abs=1e-7)
    assert chi(np.array([2.0 + eps]))[0] == pytest.approx(2.0, abs=1e-7)


def test_sampled_slope_within_stored_bound():
    for dim in (2, 3):
        p = build_profile(dim)
        chi = chi_function(p)
        ts = np.linspace(-1.5 * p.upper, 1.5 * p.upper, 4001)
        slopes = np.abs(np.diff(chi(ts)) / np.diff(ts))
        assert np.max(slopes) <= p.derivative_bound * (1 + 1e-6)


def test_bound_is_sharp_from_below():
    # the interior ramp maximum must approach the stored constant
    p = build_profile(2)
    chi = chi_function(p)
    ts = np.linspace(p.lower, 1.0, 200001)
    slopes = np.abs(np.diff(chi(ts)) / np.diff(ts))
    assert np.max(slopes) >= p.derivative_bound * (1 - 1e-5)


def test_scaled_chi_same_bound_and_scaling():
    p = build_profile(2)
    for j in (-2, 0, 1, 3):
        cj = scaled_chi_function(p, j)
        assert cj.derivative_bound == p.derivative_bound
        s = p.value_scale(j)
        # identity on the rescaled plateau
        ts = s * np.linspace(1.0, p.plateau_hi, 17)
        np.testing.assert_allclose(cj(ts), ts, atol=1e-12 * s)
        # conjugation identity chi_j(t) = s chi(t/s)
        chi = chi_function(p)
        xs = np.linspace(-3 * s * p.upper, 3 * s * p.upper, 101)
        np.testing.assert_allclose(cj(xs), s * chi(xs / s), atol=1e-12 * s)


def test_band_bounds():
    p = build_profile(2)
    assert band_bounds(p, 0) == (1.0, 2.0)
    assert band_bounds(p, 0, wide=True) == (0.5, 4.0)
    assert band_bounds(p, 2) == (4.0, 8.0)


def test_color_class_period():
    assert [color_class(j) for j in range(-2, 6)] == [3, 4, 1, 2, 3, 4, 1, 2]
    for j in range(-10, 10):
        assert 1 <= color_class(j) <= 4
        assert color_class(j) == color_class(j + 4)


def test_same_color_layers_have_disjoint_support():
    p = build_profile(2)
    chi = chi_function(p)
    # wide supports (lower*s_j, upper*s_j) of scales 4 apart cannot meet:
    # the ratio upper/lower = 8 < 2^4
    for j in range(-4, 5):
        s1 = p.value_scale(j)
        s2 = p.value_scale(j + 4)
        assert p.upper * s1 <= p.lower * s2


def test_level_band_masks_values(checker2d):
    p = build_profile(2)
    band = level_band(checker2d, p, 0)
    # checkerboard values {0, 1}: only the 1s fall in [1, 2)
    assert band.measure() == pytest.approx(
        np.count_nonzero(checker2d.values) * checker2d.cell_measure, abs=1e-15
    )


def test_active_scales_bracket_value_range():
    u = GridFunction(2, 0, (0, 0), (2, 2), np.array([[0.75, 3.0], [12.0, 0.0]]))
    p = build_profile(2)
    scales = active_scales(u, p)
    # 0.75 sits in wide bands j = -1, 0; 3.0 in j = 0, 1; 12.0 in j = 2, 3
    for j in scales:
        lo, hi = band_bounds(p, j, wide=True)
        assert np.any((np.abs(u.values) >= lo) & (np.abs(u.values) < hi))
    assert -1 in scales and 3 in scales
    z = GridFunction(2, 0, (0, 0), (1, 1), np.zeros((1, 1)))
    assert active_scales(z, p) == []


def test_audit_on_corpus():
    for u in corpus_grids(seed=3, dim=2, count=12):
        audit = layer_energy_audit(u)
        assert audit.ok, audit.to_dict()
        assert audit.band_tv_sum <= BAND_SUM_FACTOR * audit.tv_total * (
            1 + BAND_SUM_SLACK
        )
        for rep in audit.chain_reports.values():
            assert rep.ok


def test_audit_dict_shape(checker2d):
    d = layer_energy_audit(checker2d).to_dict()
    assert set(d) == {
        "scales",
        "tv_total",
        "band_tv",
        "band_tv_sum",
        "band_sum_ok",
        "chain_ok",
        "color_disjoint_ok",
        "ok",
    }
    assert d["ok"] is True


@given(st.integers(min_value=-6, max_value=6))
@settings(max_examples=40, deadline=None)
def test_chain_rule_at_every_scale(j):
    p = build_profile(2)
    u = GridFunction(
        2, 1, (0, 0), (3, 3), p.value_scale(j) * np.array(
            [[0.0, 1.5, 0.0], [1.0, 2.0, 0.7], [0.0, 3.5, 0.0]]
        )
    )
    _, rep = compose_scalar(scaled_chi_function(p, j), u)
    assert rep.ok
    assert rep.tv_composed <= rep.bound * (1 + 1e-9)
