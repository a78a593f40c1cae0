import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvberry import (
    AmbiguousTracking, BlochPoint, GapFloorViolation, OpenTrajectory, PhaseUnwrapFailure,
    adiabatic_phases, berry_integrand_phase, bloch_trajectory, branch_trajectory,
    geometric_phase_shift, solid_angle,
)
from nvberry.phases import bloch_arrays, loop_phase, state_angles, wrap_phase

from conftest import at_critical

# overlap-product result at 1e5 steps, confirmed by the integrand route to < 1e-9
GOLDEN_PHI_G1_4PI9 = -0.20431236242716855
# default scenario, 2e4 steps
GOLDEN_DEFAULT_PHI_G = (-0.028961077180937878, 0.029912117165611818, -0.0009510399850864992)


def test_wrap_phase_range():
    x = np.array([-np.pi, np.pi, 3 * np.pi, -3 * np.pi + 1e-3, 0.0])
    y = wrap_phase(x)
    assert np.all(y > -np.pi) and np.all(y <= np.pi)
    assert y[0] == np.pi and y[1] == np.pi


@pytest.mark.parametrize("fixture", ["no_nutation", "static_beta0"])
def test_null_geometric_phases(fixture, request):
    s = request.getfixturevalue(fixture)
    led = adiabatic_phases(s)
    assert np.max(np.abs(led.phi_geometric)) < 1e-10
    assert berry_integrand_phase(s, 1) == 0.0
    assert abs(geometric_phase_shift(s)) < 1e-10


def test_golden_value_cross_checked():
    s = at_critical(4 * math.pi / 9, 4 * math.pi / 9, 0.98)
    led = adiabatic_phases(s)
    assert led.phi_geometric[0] == pytest.approx(GOLDEN_PHI_G1_4PI9, abs=1e-8)
    assert abs(wrap_phase(led.phi_geometric[0] - berry_integrand_phase(s, 1))) < 1e-6


@pytest.mark.slow
def test_dual_method_at_1e5_steps():
    s = at_critical(4 * math.pi / 9, 4 * math.pi / 9, 0.98, steps_per_period=100_000)
    led = adiabatic_phases(s)
    for b in (1, 2, 3):
        assert abs(wrap_phase(led.phi_geometric[b - 1] - berry_integrand_phase(s, b))) < 1e-6


def test_default_measured_values(nv):
    led = adiabatic_phases(nv)
    np.testing.assert_allclose(led.phi_geometric, GOLDEN_DEFAULT_PHI_G, atol=1e-9)
    # branch 3 is small but not below 1e-4 at this operating point
    assert abs(led.phi_geometric[2]) < 2e-3
    assert abs(berry_integrand_phase(nv, 3)) < 2e-3


def test_shift_relative_to_twice_branch_one(nv):
    led = adiabatic_phases(nv)
    dphi = geometric_phase_shift(nv)
    assert dphi == pytest.approx(led.phi_geometric[0] - led.phi_geometric[1], abs=1e-15)
    # deviation from 2 phi_g1 equals the branch-3 phase (frame completeness)
    assert abs(dphi - 2 * led.phi_geometric[0] - led.phi_geometric[2]) < 1e-6


@settings(max_examples=15)
@given(st.floats(0.1, 1.45), st.floats(0.1, 1.45), st.floats(0.3, 1.5))
def test_geometric_phases_sum_to_zero(theta, beta, factor):
    try:
        s = at_critical(theta, beta, factor, steps_per_period=4000)
        led = adiabatic_phases(s)
    except (GapFloorViolation, AmbiguousTracking):
        return
    assert abs(wrap_phase(sum(led.phi_geometric))) < 1e-6


def test_gauge_randomisation(nv, rng):
    tr = branch_trajectory(at_critical(0.9, 0.5, 0.95))
    ref = loop_phase(tr.vectors)
    ph = np.exp(1j * rng.uniform(-np.pi, np.pi, size=(tr.vectors.shape[0], 1, 3)))
    ph[-1] = ph[0]
    out = loop_phase(tr.vectors * ph)
    assert np.max(np.abs(wrap_phase(out - ref))) < 1e-10


def test_grid_convergence(nv):
    a = adiabatic_phases(nv).phi_geometric[0]
    b = adiabatic_phases(nv.replace(steps_per_period=2 * nv.steps_per_period)).phi_geometric[0]
    assert abs(a - b) < 1e-8


def test_dynamic_difference_shrinks_toward_critical():
    diffs = []
    for f in np.linspace(0.1, 0.99, 10):
        led = adiabatic_phases(at_critical(math.pi / 4, math.pi / 6, f))
        diffs.append(abs(led.phi_dynamic[0] - led.phi_dynamic[1]))
    assert np.all(np.diff(diffs) < 0)


def test_dynamic_phase_is_minus_integral(no_nutation):
    led = adiabatic_phases(no_nutation)
    tr = branch_trajectory(no_nutation)
    np.testing.assert_allclose(led.phi_dynamic, -tr.values[0] * no_nutation.period, rtol=1e-12)


def test_branch_antisymmetry():
    s = at_critical(math.pi / 4, math.pi / 6, 0.98)
    tr = branch_trajectory(s)
    _, th2 = state_angles(tr.vectors)
    z = np.abs(tr.vectors[:, 1, :]) ** 2
    mask = (z[:, 0] < 0.01) & (z[:, 1] < 0.01)
    assert mask.sum() > 1000
    assert np.max(np.abs(th2[mask, 0] + th2[mask, 1] - np.pi)) < 2e-2


def test_unwrap_failure_when_transverse_field_vanishes(nv):
    th, be = math.pi / 4, math.pi / 6
    s = nv.with_rotation(theta=th, beta=be).with_ratio(-math.sin(th) / math.sin(th - be))
    with pytest.raises(PhaseUnwrapFailure):
        berry_integrand_phase(s, 1)


@pytest.mark.parametrize("fixture", ["no_nutation", "static_beta0"])
def test_bloch_static_single_point(fixture, request):
    traj = bloch_trajectory(request.getfixturevalue(fixture), 1)
    assert len({(p.polar, p.azimuth) for p in traj}) == 1
    assert solid_angle(traj) == 0.0


def test_bloch_default_properties(nv):
    traj = bloch_trajectory(nv, 1)
    a, b = traj[0], traj[-1]
    assert abs(a.polar - b.polar) < 1e-8 and abs(wrap_phase(a.azimuth - b.azimuth)) < 1e-8
    assert max(p.residual_zero_weight for p in traj) < 0.05
    pol = np.array([p.polar for p in traj])
    zw = np.array([p.residual_zero_weight for p in traj])
    assert np.all((pol >= 0) & (pol <= np.pi)) and np.all((zw >= 0) & (zw <= 1))


def test_bloch_rejects_branch_three(nv):
    with pytest.raises(ValueError):
        bloch_trajectory(nv, 3)


def test_solid_angle_synthetic():
    assert solid_angle([]) == 0.0
    assert solid_angle([BlochPoint(0, 1.0, 2.0, 0)]) == 0.0
    az = np.linspace(0, 2 * np.pi, 1001)
    assert solid_angle((np.full_like(az, np.pi / 2), az)) == pytest.approx(2 * np.pi, abs=1e-12)
    # small cap of half-angle a about the pole: 2 pi (1 - cos a)
    a = 0.3
    assert solid_angle((np.full_like(az, a), az)) == pytest.approx(2 * np.pi * (1 - math.cos(a)), rel=1e-5)
    with pytest.raises(OpenTrajectory):
        solid_angle((np.full(3, 1.0), np.array([0.0, 1.0, 2.0])))


def test_solid_angle_consistency(nv):
    t, polar, az, _ = bloch_arrays(nv, 1)
    omega = solid_angle((polar, az))
    g1 = adiabatic_phases(nv).phi_geometric[0]
    assert abs(wrap_phase(g1 + omega / 2)) < 5e-3
