import math

import numpy as np
import pytest

from nvberry import (
    NoFeasiblePoint, ZeroSlope, critical_ratio, default_scenario, optimize_parameters,
    phase_slope, rotation_noise_floor, sensitivity, sensitivity_sweep,
)
from nvberry.sensing import evaluate_point, operating_point

from conftest import at_critical

COARSE = dict(steps_per_period=2000)


def test_slope_zero_without_nutation_axis_tilt(static_beta0):
    p = phase_slope(static_beta0)
    assert p.value == 0.0 and p.uncertainty == 0.0


def test_slope_two_step_sizes(nv):
    a = phase_slope(nv, 1e-3).value
    b = phase_slope(nv, 5e-4).value
    assert a == pytest.approx(b, rel=1e-6)
    assert a == pytest.approx(2.3195, rel=1e-3)


def test_slope_peaks_near_critical():
    th, be = math.pi / 4, math.pi / 6
    c = critical_ratio(th, be)
    at_c = abs(phase_slope(at_critical(th, be, 1.0), 1e-3).value)
    for f in (0.2, 2.5):
        assert abs(phase_slope(at_critical(th, be, f), 1e-3).value) < at_c
    assert c < 0


def test_slope_locally_constant(nv):
    r0 = nv.ratio
    centre = phase_slope(nv, 5e-4).value
    vals = [phase_slope(nv.with_ratio(r0 + d), 5e-4).value for d in (-1e-3, -5e-4, 5e-4, 1e-3)]
    # each offset agrees with the operating-point slope to 2%
    assert max(abs(v - centre) for v in vals) / abs(centre) < 0.02


def test_sensitivity_formula():
    sp = default_scenario().species
    eta = sensitivity(2.0, sp, 10e-3, 1)
    assert eta == pytest.approx(2 * math.pi / (abs(sp.gyro_ratio) * math.sqrt(10e-3) * 2.0), rel=1e-15)
    assert sensitivity(-2.0, sp, 10e-3, 1) == eta
    assert sensitivity(2.0, sp, 10e-3, 4) == eta / 2
    assert sensitivity(2.0, sp, 10e-3, 10 ** 6) == pytest.approx(eta / 1000, rel=1e-14)
    with pytest.raises(ZeroSlope):
        sensitivity(0.0, sp, 10e-3, 1)


@pytest.mark.parametrize("n", [1, 7, 100, 10 ** 6])
def test_eta_sqrt_n_invariant(n):
    sp = default_scenario().species
    base = sensitivity(3.3, sp, 1e-2, 1)
    assert sensitivity(3.3, sp, 1e-2, n) * math.sqrt(n) == pytest.approx(base, rel=1e-14)


def test_default_operating_point_measured(nv):
    p = operating_point(nv)
    # single 14N spin: about 1.4e-6 T/sqrt(Hz) here
    assert p.eta == pytest.approx(1.401e-6, rel=1e-3)


def test_electron_measured():
    s = default_scenario("electron")
    p = operating_point(s)
    assert 1e-11 < p.eta < 1e-9


def test_sweep_rows_and_flags():
    s = default_scenario(**COARSE)
    betas = [0.05, 1.2, 0.1 + math.pi / 2, 2.5]
    rows = sensitivity_sweep(0.1, betas, s)
    assert [r.beta for r in rows] == betas
    sing = rows[2]
    assert sing.singular and sing.eta is None and sing.error
    assert rows[1].eta > 0 and not rows[1].singular
    assert rows[0].error and "SlopeUnresolved" in rows[0].error


def test_sweep_order_invariant():
    s = default_scenario(**COARSE)
    betas = [0.9, 1.3, 2.0]
    a = {r.beta: r for r in sensitivity_sweep(1.2, betas, s)}
    b = {r.beta: r for r in sensitivity_sweep(1.2, betas[::-1], s)}
    assert a == b


def test_row_reproducible_from_inputs():
    s = default_scenario(**COARSE)
    row = sensitivity_sweep(1.2, [0.9], s)[0]
    assert evaluate_point(s, row.theta, row.beta) == row


def test_optimizer_singular_strip():
    s = default_scenario(**COARSE)
    with pytest.raises(NoFeasiblePoint):
        optimize_parameters((0.3, 0.3), (0.3 + math.pi / 2, 0.3 + math.pi / 2), s,
                            n_theta=1, n_beta=3)


def test_optimizer_near_quarter_turn():
    # the default threshold marks this region infeasible; relax it explicitly
    s = default_scenario(epsilon_threshold=0.3, **COARSE)
    bounds = ((math.pi / 2 - 0.1, math.pi / 2 - 0.02), (math.pi / 2 - 0.3, math.pi / 2 + 0.3))
    p = optimize_parameters(*bounds, s, n_theta=2, n_beta=5, n_candidates=1)
    assert bounds[1][0] <= p.beta <= bounds[1][1] and p.feasible
    assert 1e-7 < p.eta < 5e-6
    coarse = [r for th in np.linspace(*bounds[0], 2)
              for r in sensitivity_sweep(th, np.linspace(*bounds[1], 5), s)
              if r.feasible and r.eta is not None]
    assert p.eta <= min(r.eta for r in coarse)


def test_optimizer_default_threshold_finds_nothing_near_quarter_turn():
    s = default_scenario(**COARSE)
    with pytest.raises(NoFeasiblePoint):
        optimize_parameters((math.pi / 2 - 0.1, math.pi / 2 - 0.02), (1.3, 1.8), s,
                            n_theta=2, n_beta=3)


def test_noise_floor(nv):
    p = operating_point(nv)
    assert rotation_noise_floor(p, 0.0) == 0.0
    a = rotation_noise_floor(p, 1e-12)
    assert rotation_noise_floor(p, 3e-12) == pytest.approx(3 * a, rel=1e-15)
    assert 1e-13 / 3 <= a <= 3e-13
    assert a == pytest.approx(1e-12 * abs(nv.rotation.omega_alpha) / abs(nv.species.gyro_ratio))


def test_noise_floor_rejects_singular():
    s = default_scenario(**COARSE)
    row = sensitivity_sweep(0.1, [0.1 + math.pi / 2], s)[0]
    with pytest.raises(ValueError):
        rotation_noise_floor(row, 1e-12)
