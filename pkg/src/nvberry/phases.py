"""Dynamic and geometric phases over one rotation period.

Two independent routes to the geometric phase are provided:

* :func:`adiabatic_phases` multiplies successive eigenvector overlaps around
  the closed loop (gauge invariant, needs no parametrisation);
* :func:`berry_integrand_phase` integrates the closed-form expression in the
  (theta1, theta2, phi) parametrisation of the eigenstates, with phi the
  azimuth of the transverse body-frame field.

Closed-loop phases are only defined modulo 2 pi.  Geometric phases are
reported on the principal branch (-pi, pi]; parameter sweeps unwrap along the
swept parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GapFloorViolation, OpenTrajectory, PhaseUnwrapFailure
from .model import ScenarioConfig
from .spinham import BranchTrajectory, branch_trajectory

PAIRS = ((1, 2), (1, 3), (2, 3))


def wrap_phase(x):
    """Map angles onto (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    y = np.where(y == -np.pi, np.pi, y)
    return float(y) if np.ndim(y) == 0 else y


def _trapezoid(y, x, axis=0):
    return np.trapezoid(y, x, axis=axis) if hasattr(np, "trapezoid") else np.trapz(y, x, axis=axis)


@dataclass(frozen=True)
class PhaseLedger:
    """Per-branch phases over one period (index 0 is branch 1).

    ``min_gap[(m, n)]`` is the smallest |lambda_m - lambda_n| on the grid and
    ``min_gap_time[(m, n)]`` where it occurs.
    """

    phi_dynamic: tuple
    phi_geometric: tuple
    min_gap: dict
    min_gap_time: dict
    period: float

    def total(self, branch: int) -> float:
        return self.phi_dynamic[branch - 1] + self.phi_geometric[branch - 1]


@dataclass(frozen=True)
class BlochPoint:
    t: float
    polar: float
    azimuth: float
    residual_zero_weight: float


def loop_phase(vectors) -> np.ndarray:
    """Geometric phase of each column around a closed loop of eigenvectors.

    ``vectors`` has shape (K, 3, n) with ``vectors[-1]`` representing the same
    state as ``vectors[0]``.  Returns ``-sum_k arg <v_k|v_k+1>`` per column on
    the principal branch.
    """
    v = np.asarray(vectors)
    ov = np.einsum("kib,kib->kb", np.conj(v[:-1]), v[1:])
    return wrap_phase(-np.sum(np.angle(ov), axis=0))


def gap_table(tr: BranchTrajectory):
    gaps, times = {}, {}
    for m, n in PAIRS:
        g = np.abs(tr.values[:, m - 1] - tr.values[:, n - 1])
        k = int(np.argmin(g))
        gaps[(m, n)] = float(g[k])
        times[(m, n)] = float(tr.t[k])
    return gaps, times


def check_gap_floor(s: ScenarioConfig, tr: BranchTrajectory, exc=GapFloorViolation):
    gaps, times = gap_table(tr)
    pair = min(gaps, key=gaps.get)
    if gaps[pair] < s.gap_floor:
        raise exc(
            f"eigenvalue gap {gaps[pair]:.4g} rad/s between branches {pair} at "
            f"t/T = {times[pair] / tr.period:.6f} is below the floor {s.gap_floor:.4g} rad/s",
            min_gap=gaps[pair], t=times[pair], pair=pair,
        )
    return gaps, times


def adiabatic_phases(s: ScenarioConfig) -> PhaseLedger:
    tr = branch_trajectory(s)
    gaps, times = check_gap_floor(s, tr)
    dyn = -_trapezoid(tr.values, tr.t, axis=0)
    geo = loop_phase(tr.vectors)
    return PhaseLedger(
        phi_dynamic=tuple(float(x) for x in dyn),
        phi_geometric=tuple(float(x) for x in geo),
        min_gap=gaps,
        min_gap_time=times,
        period=s.period,
    )


def _field_azimuth(tr: BranchTrajectory):
    f = tr.field
    perp2 = f[:, 0] ** 2 + f[:, 1] ** 2
    if np.any(perp2 == 0.0):
        raise PhaseUnwrapFailure("transverse field vanishes on the grid; azimuth undefined")
    raw = np.arctan2(f[:, 1], f[:, 0])
    phi = np.unwrap(raw)
    if np.any(np.abs(np.diff(phi)) >= np.pi / 2):
        raise PhaseUnwrapFailure("field azimuth jumps by >= pi/2 between samples; refine the grid")
    rate = (f[:, 0] * tr.field_rate[:, 1] - f[:, 1] * tr.field_rate[:, 0]) / perp2
    return phi, rate


def _is_static(tr: BranchTrajectory) -> bool:
    return not np.any(tr.field_rate)


def state_angles(vectors):
    """(theta1, theta2) of eigenvectors with components (|+1>, |0>, |-1>) on axis -2."""
    p = np.abs(vectors[..., 0, :]) ** 2
    z = np.abs(vectors[..., 1, :]) ** 2
    m = np.abs(vectors[..., 2, :]) ** 2
    th1 = 2 * np.arctan2(np.sqrt(p + m), np.sqrt(z))
    th2 = 2 * np.arctan2(np.sqrt(p), np.sqrt(m))
    return th1, th2


def berry_integrand_phase(s: ScenarioConfig, branch: int) -> float:
    """Geometric phase of ``branch`` (1..3) from the parametrised integrand
    ``-(1/2) phi_dot (1 - cos theta1) cos theta2`` integrated over one period.

    The value is the real integral in the field-azimuth gauge; compare with
    :func:`adiabatic_phases` modulo 2 pi.
    """
    tr = branch_trajectory(s)
    if _is_static(tr):
        return 0.0
    _, rate = _field_azimuth(tr)
    th1, th2 = state_angles(tr.vectors)
    th1, th2 = th1[:, branch - 1], th2[:, branch - 1]
    integrand = -0.5 * rate * (1 - np.cos(th1)) * np.cos(th2)
    return float(_trapezoid(integrand, tr.t))


def geometric_phase_shift(s: ScenarioConfig) -> float:
    """phi_g1 - phi_g2 on the principal branch."""
    led = adiabatic_phases(s)
    return wrap_phase(led.phi_geometric[0] - led.phi_geometric[1])


def bloch_arrays(s: ScenarioConfig, branch: int):
    """(t, polar, azimuth, zero_weight) arrays for ``branch`` in {1, 2}.

    The pseudo-spin sphere has |-1> at polar 0 and |+1> at polar pi; the
    azimuth is the phase of the |+1> amplitude relative to |-1>, i.e.
    ``-2 phi`` with phi the field azimuth, reduced to (-pi, pi].
    """
    if branch not in (1, 2):
        raise ValueError("Bloch trajectories are defined for branches 1 and 2")
    tr = branch_trajectory(s)
    f = tr.field
    phi = np.arctan2(f[:, 1], f[:, 0])
    th2 = state_angles(tr.vectors)[1][:, branch - 1]
    zero = np.abs(tr.vectors[:, 1, branch - 1]) ** 2
    az = wrap_phase(-2.0 * phi)
    if _is_static(tr):
        th2 = np.full_like(th2, th2[0])
        az = np.full_like(az, az[0])
        zero = np.full_like(zero, zero[0])
    return tr.t, th2, az, zero


def bloch_trajectory(s: ScenarioConfig, branch: int) -> list[BlochPoint]:
    t, polar, az, zero = bloch_arrays(s, branch)
    return [BlochPoint(float(a), float(b), float(c), float(d)) for a, b, c, d in zip(t, polar, az, zero)]


def solid_angle(traj) -> float:
    """Signed solid angle enclosed by a closed trajectory, measured from the
    polar-0 pole (counter-clockwise in azimuth is positive).

    ``traj`` is a list of :class:`BlochPoint` or a ``(polar, azimuth)`` pair of
    arrays.  The loop is treated as a geodesic polygon and summed as triangles
    with the pole.
    """
    if isinstance(traj, tuple) and len(traj) == 2:
        polar, az = (np.asarray(x, dtype=float) for x in traj)
    else:
        polar = np.array([p.polar for p in traj], dtype=float)
        az = np.array([p.azimuth for p in traj], dtype=float)
    if polar.size == 0:
        return 0.0
    n = np.stack([np.sin(polar) * np.cos(az), np.sin(polar) * np.sin(az), np.cos(polar)], axis=-1)
    if np.linalg.norm(n[0] - n[-1]) > 1e-6:
        raise OpenTrajectory("trajectory endpoints differ by more than 1e-6")
    a, b = n[:-1], n[1:]
    num = np.cross(a, b)[:, 2]
    den = 1.0 + a[:, 2] + b[:, 2] + np.einsum("ki,ki->k", a, b)
    return float(np.sum(2.0 * np.arctan2(num, den)))
