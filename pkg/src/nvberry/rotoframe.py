"""Rotation-induced effective fields in the NV body frame and resonance tests.

The rotation acts on the spin like a static field along
``e0 = (-sin theta, 0, cos theta)`` of strength ``omega_gamma / gamma`` plus a
field of strength ``omega'_alpha / gamma`` precessing about it at
``omega_gamma``.  The lab field only enters through ``omega'_alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import SingularGeometry
from .model import RotationParams, ScenarioConfig

SINGULAR_COS = 1e-12


@dataclass(frozen=True)
class BodyFieldSample:
    t: float
    bx: float
    by: float
    bz: float

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.bx, self.by, self.bz])


@dataclass(frozen=True)
class ResonanceVerdict:
    lhs: float
    resonant: bool
    critical_ratio: float


def nutation_axis(beta: float, theta: float, wt):
    """Unit vector u(t) of the precessing field, evaluated at phase ``wt``.

    Returns an array of shape ``wt.shape + (3,)``.
    """
    wt = np.asarray(wt, dtype=float)
    c, s = np.cos(wt), np.sin(wt)
    sb, cb = math.sin(beta), math.cos(beta)
    st, ct = math.sin(theta), math.cos(theta)
    return np.stack(
        [-(cb * st + sb * ct * c), sb * s, cb * ct - sb * st * c], axis=-1
    )


def _nutation_axis_rate(beta: float, theta: float, wt, omega: float):
    wt = np.asarray(wt, dtype=float)
    c, s = np.cos(wt), np.sin(wt)
    sb = math.sin(beta)
    st, ct = math.sin(theta), math.cos(theta)
    return omega * np.stack([sb * ct * s, sb * c, sb * st * s], axis=-1)


def field_angular(s: ScenarioConfig, t):
    """gamma * B'(t) in rad/s for scalar or array ``t``; shape ``t.shape + (3,)``."""
    r = s.rotation
    wg = r.omega_gamma
    e0 = np.array([-math.sin(r.theta), 0.0, math.cos(r.theta)])
    u = nutation_axis(r.beta, r.theta, wg * np.asarray(t, dtype=float))
    return -wg * e0 - s.omega_alpha_eff * u


def field_angular_rate(s: ScenarioConfig, t):
    """Time derivative of :func:`field_angular` (rad/s^2)."""
    r = s.rotation
    wg = r.omega_gamma
    du = _nutation_axis_rate(r.beta, r.theta, wg * np.asarray(t, dtype=float), wg)
    return -s.omega_alpha_eff * du


def effective_field(s: ScenarioConfig, t: float) -> BodyFieldSample:
    """Total body-frame field B' = B + B0 + B1 (tesla) at time ``t``."""
    f = field_angular(s, float(t)) / s.species.gyro_ratio
    return BodyFieldSample(float(t), float(f[0]), float(f[1]), float(f[2]))


def critical_ratio(theta: float, beta: float) -> float:
    """omega'_alpha / omega_gamma at which the field turns purely transverse at T/2."""
    c = math.cos(theta - beta)
    if abs(c) < SINGULAR_COS:
        raise SingularGeometry(
            f"cos(theta - beta) = {c:.3g}: critical drive diverges (beta - theta -> pi/2)"
        )
    return -math.cos(theta) / c


def resonance_condition(r: RotationParams, omega_alpha_eff: float) -> ResonanceVerdict:
    """Sign test for a zero of the body-frame z field over one period."""
    x = omega_alpha_eff / r.omega_gamma
    ct = math.cos(r.theta)
    lhs = (x * math.cos(r.theta + r.beta) + ct) * (x * math.cos(r.theta - r.beta) + ct)
    try:
        crit = critical_ratio(r.theta, r.beta)
    except SingularGeometry:
        crit = math.nan
    return ResonanceVerdict(lhs=lhs, resonant=lhs <= 0.0, critical_ratio=crit)


def z_crossing_times(s: ScenarioConfig, n_grid: int = 10_000) -> list[float]:
    """All t in [0, T) where the body-frame z field vanishes.

    Transversal roots are bracketed on a dense grid and refined by Brent's
    method; tangential roots are found at the extrema of b_z (located the same
    way from its analytic derivative).
    """
    T = s.period
    n = max(int(n_grid), 10_000)
    grid = np.linspace(0.0, T, n + 1)

    def bz(t):
        return float(field_angular(s, t)[2])

    def dbz(t):
        return float(field_angular_rate(s, t)[2])

    scale = float(np.max(np.linalg.norm(field_angular(s, grid), axis=-1)))
    if scale == 0.0:
        return [0.0]
    tol = 1e-12 * scale
    xtol = 1e-15 * T

    d = field_angular_rate(s, grid)[:, 2]
    if not np.any(d):
        # b_z is constant over the period
        return [0.0] if abs(bz(0.0)) <= tol else []

    extrema = []
    for k in np.nonzero(d[:-1] == 0.0)[0]:
        extrema.append(grid[k])
    for k in np.nonzero(d[:-1] * d[1:] < 0.0)[0]:
        extrema.append(brentq(dbz, grid[k], grid[k + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
    knots = sorted(set([0.0, T] + [float(e) for e in extrema]))

    roots = []
    for t in knots[:-1]:
        if abs(bz(t)) <= tol:
            roots.append(t)
    for a, b in zip(knots[:-1], knots[1:]):
        fa, fb = bz(a), bz(b)
        if abs(fa) <= tol or abs(fb) <= tol:
            continue
        if fa * fb < 0.0:
            sub = grid[(grid > a) & (grid < b)]
            pts = np.concatenate([[a], sub, [b]])
            vals = np.array([bz(p) for p in pts]) if len(pts) < 64 else field_angular(s, pts)[:, 2]
            k = int(np.nonzero(vals[:-1] * vals[1:] <= 0.0)[0][0])
            lo, hi = pts[k], pts[k + 1]
            if vals[k] == 0.0:
                roots.append(float(lo))
            else:
                roots.append(brentq(bz, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps))

    out: list[float] = []
    for t in sorted(roots):
        t = t % T
        if t >= T * (1 - 1e-15):
            t = 0.0
        if not any(abs(t - u) <= 1e-12 * T for u in out):
            out.append(float(t))
    return sorted(out)
