import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvberry import (
    RotationParams, SingularGeometry, critical_ratio, effective_field, resonance_condition,
    z_crossing_times,
)
from nvberry.rotoframe import field_angular, field_angular_rate

from conftest import at_critical

angles = st.floats(0.05, math.pi - 0.05)


def test_beta_zero_field_is_static(static_beta0):
    s = static_beta0
    f = field_angular(s, np.linspace(0, s.period, 17))
    assert np.all(f == f[0])
    assert not np.any(field_angular_rate(s, np.linspace(0, s.period, 17)))


def test_no_nutation_field_is_b0(no_nutation):
    s = no_nutation
    r = s.rotation
    for t in np.linspace(0, s.period, 7):
        b = effective_field(s, t).vector
        assert np.linalg.norm(b) == pytest.approx(abs(r.omega_gamma / s.species.gyro_ratio), rel=1e-14)
        # polar angle of B0 is pi - theta for positive omega_gamma / gamma
        sign = np.sign(r.omega_gamma / s.species.gyro_ratio)
        polar = math.acos(sign * b[2] / np.linalg.norm(b))
        assert polar == pytest.approx(math.pi - r.theta, abs=1e-12)


def test_aligned_axes(nv):
    s = nv.with_rotation(theta=0.0, beta=0.0)
    b = effective_field(s, 0.123 * s.period).vector
    want = -(s.rotation.omega_gamma + s.omega_alpha_eff) / s.species.gyro_ratio
    np.testing.assert_allclose(b, [0.0, 0.0, want], rtol=1e-15, atol=0)


def test_lab_field_enters_through_effective_rate(nv):
    s = nv.replace(B_lab=1e-3)
    s2 = nv.with_rotation(omega_alpha=s.omega_alpha_eff)
    t = np.linspace(0, nv.period, 9)
    np.testing.assert_allclose(field_angular(s, t), field_angular(s2, t), rtol=1e-12, atol=1e-6)


@given(angles, angles, st.floats(-3, 3))
def test_field_periodic_and_bounded(theta, beta, ratio):
    s = at_critical(1.0, 0.5).with_rotation(theta=theta, beta=beta).with_ratio(ratio)
    T = s.period
    t = np.linspace(0, T, 101)
    f = field_angular(s, t)
    scale = np.max(np.abs(f))
    np.testing.assert_allclose(field_angular(s, t + T), f, rtol=0, atol=1e-12 * scale * 10)
    bound = abs(s.rotation.omega_gamma) + abs(s.omega_alpha_eff)
    assert np.all(np.linalg.norm(f, axis=-1) <= bound * (1 + 1e-12))


@given(angles, angles, st.floats(-3, 3), st.floats(0.0, 0.5))
def test_field_symmetry_about_half_period(theta, beta, ratio, frac):
    s = at_critical(1.0, 0.5).with_rotation(theta=theta, beta=beta).with_ratio(ratio)
    T = s.period
    a = field_angular(s, T / 2 + frac * T)
    b = field_angular(s, T / 2 - frac * T)
    tol = 1e-12 * np.max(np.abs(field_angular(s, np.linspace(0, T, 33))))
    assert abs(a[1] + b[1]) <= 10 * tol
    assert abs(a[0] - b[0]) <= 10 * tol and abs(a[2] - b[2]) <= 10 * tol


def test_rate_matches_finite_difference(nv):
    s = nv.with_rotation(theta=0.7, beta=0.4).with_ratio(-0.8)
    T = s.period
    d = 1e-6 * T
    for t in np.linspace(0, T, 11):
        fd = (field_angular(s, t + d) - field_angular(s, t - d)) / (2 * d)
        np.testing.assert_allclose(field_angular_rate(s, t), fd, rtol=1e-8,
                                   atol=1e-8 * np.max(np.abs(fd)))


def test_critical_ratio_values():
    assert critical_ratio(math.pi / 2, math.pi / 2) == pytest.approx(0.0, abs=1e-16)
    assert critical_ratio(math.pi / 3, math.pi / 2) == pytest.approx(-0.5773503, abs=1e-7)
    with pytest.raises(SingularGeometry):
        critical_ratio(0.3, 0.3 + math.pi / 2)


def test_resonance_examples():
    v = resonance_condition(RotationParams(0.7, 1.0, math.pi / 4, math.pi / 2), 0.7)
    assert v.lhs == pytest.approx(-0.49 / 2, rel=1e-12) and v.resonant
    v = resonance_condition(RotationParams(-0.5, 1.0, math.pi / 6, math.pi / 4), -0.5)
    assert v.lhs == pytest.approx(0.577697 * 0.224144, rel=1e-5) and not v.resonant
    c = critical_ratio(0.9, 0.4)
    v = resonance_condition(RotationParams(c, 1.0, 0.4, 0.9), c)
    assert abs(v.lhs) < 1e-15 and v.resonant
    assert v.critical_ratio == c


def test_crossings_at_critical_include_half_period():
    s = at_critical(math.pi / 4, math.pi / 6)
    roots = z_crossing_times(s)
    assert any(abs(r - s.period / 2) <= 1e-9 * s.period for r in roots)


def test_crossings_empty_when_not_resonant(nv):
    s = nv.with_rotation(theta=math.pi / 4, beta=math.pi / 6).with_ratio(-0.5)
    assert not resonance_condition(s.rotation, s.omega_alpha_eff).resonant
    assert z_crossing_times(s) == []
    # independent dense scan: no sign change either
    bz = field_angular(s, np.linspace(0, s.period, 200_001))[:, 2]
    assert np.all(bz > 0) or np.all(bz < 0)


def test_two_crossings_for_interior_resonance(nv):
    s = nv.with_rotation(theta=math.pi / 4, beta=math.pi / 6).with_ratio(-1.0)
    assert resonance_condition(s.rotation, s.omega_alpha_eff).lhs < 0
    roots = z_crossing_times(s)
    assert len(roots) == 2
    scale = np.max(np.linalg.norm(field_angular(s, np.linspace(0, s.period, 1001)), axis=-1))
    for r in roots:
        assert abs(field_angular(s, r)[2]) < 1e-12 * scale


@given(angles, angles, st.floats(-4, 4))
def test_resonance_matches_crossing_oracle(theta, beta, ratio):
    s = at_critical(1.0, 0.5).with_rotation(theta=theta, beta=beta).with_ratio(ratio)
    v = resonance_condition(s.rotation, s.omega_alpha_eff)
    if abs(v.lhs) > 1e-6:
        assert v.resonant == bool(z_crossing_times(s))
