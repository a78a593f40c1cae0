"""Phase slope, field sensitivity, parameter sweeps and optimisation."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .adiabatic import epsilon_profile
from .errors import NoFeasiblePoint, SlopeUnresolved, ZeroSlope
from .model import ScenarioConfig, SpinSpecies
from .phases import geometric_phase_shift, wrap_phase
from .rotoframe import critical_ratio

SINGULAR_CUTOFF = 1e-3
DEFAULT_RATIO_STEP = 1e-3
RICHARDSON_TOL = 0.01


@dataclass(frozen=True)
class PhaseSlope:
    value: float
    uncertainty: float
    step: float


def _central_difference(s: ScenarioConfig, r0: float, h: float) -> float:
    up = geometric_phase_shift(s.with_ratio(r0 + h))
    dn = geometric_phase_shift(s.with_ratio(r0 - h))
    # the two samples sit on the same sheet for small h
    return wrap_phase(up - dn) / (2 * h)


def phase_slope(s: ScenarioConfig, ratio_step: float = DEFAULT_RATIO_STEP) -> PhaseSlope:
    """d(delta phi_g)/d(omega'_alpha/omega_gamma) at the scenario's ratio.

    Central differences at h and h/2 are combined by Richardson
    extrapolation; their disagreement is reported as the uncertainty.
    """
    h = float(ratio_step)
    if h <= 0:
        raise ValueError("ratio_step must be positive")
    r0 = s.ratio
    d1 = _central_difference(s, r0, h)
    d2 = _central_difference(s, r0, h / 2)
    value = (4 * d2 - d1) / 3
    unc = abs(value - d2)
    if unc > RICHARDSON_TOL * abs(value) and unc > 1e-12:
        raise SlopeUnresolved(
            f"Richardson residual {unc:.3g} exceeds {RICHARDSON_TOL:.0%} of slope {value:.6g} "
            f"(step {h:g}); reduce ratio_step"
        )
    return PhaseSlope(float(value), float(unc), h)


def sensitivity(slope: float, species: SpinSpecies, T_m: float, N: int) -> float:
    """Minimum detectable field in T/sqrt(Hz) for a given phase slope."""
    if slope == 0:
        raise ZeroSlope("phase slope is zero; the field is not encoded")
    return 2 * math.pi / (abs(species.gyro_ratio) * math.sqrt(N * T_m) * abs(slope))


@dataclass(frozen=True)
class SensitivityPoint:
    theta: float
    beta: float
    ratio: float
    slope: float | None
    eta: float | None
    eps_max: float | None
    feasible: bool
    singular: bool
    omega_alpha: float | None = None
    gyro_ratio: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_point(template: ScenarioConfig, theta: float, beta: float,
                   ratio_step: float = DEFAULT_RATIO_STEP) -> SensitivityPoint:
    """One sweep row at the critical drive for (theta, beta). Never raises."""
    gyro = template.species.gyro_ratio
    if abs(math.cos(beta - theta)) < SINGULAR_CUTOFF:
        return SensitivityPoint(theta, beta, math.nan, None, None, None, False, True,
                                None, gyro, "singular geometry: cos(beta - theta) ~ 0")
    ratio = critical_ratio(theta, beta)
    s = template.with_rotation(theta=theta, beta=beta).with_ratio(ratio)
    slope = eta = eps = None
    feasible = False
    errors = []
    try:
        rep = epsilon_profile(s)
        eps, feasible = rep.worst, rep.feasible
    except Exception as exc:  # recorded in-row
        errors.append(f"{type(exc).__name__}: {exc}")
    try:
        slope = phase_slope(s, ratio_step).value
        eta = sensitivity(slope, s.species, s.measurement_time, s.spin_count)
    except Exception as exc:
        errors.append(f"{type(exc).__name__}: {exc}")
    return SensitivityPoint(theta, beta, ratio, slope, eta, eps, bool(feasible), False,
                            s.rotation.omega_alpha, gyro, "; ".join(errors) or None)


def _row(args):
    return evaluate_point(*args)


def sensitivity_sweep(theta: float, beta_grid, s: ScenarioConfig,
                      ratio_step: float = DEFAULT_RATIO_STEP, workers: int = 1):
    """Evaluate every beta in ``beta_grid`` at the critical drive.

    Rows come back in grid order whatever ``workers`` is.
    """
    jobs = [(s, float(theta), float(b), ratio_step) for b in beta_grid]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_row, jobs))
    return [_row(j) for j in jobs]


def _usable(p: SensitivityPoint) -> bool:
    return p.feasible and not p.singular and p.eta is not None


def optimize_parameters(theta_bounds, beta_bounds, s: ScenarioConfig, n_theta: int = 5,
                        n_beta: int = 9, n_candidates: int = 2,
                        ratio_step: float = DEFAULT_RATIO_STEP, workers: int = 1,
                        xatol: float = 1e-4) -> SensitivityPoint:
    """Minimise eta over a (theta, beta) box.

    A coarse grid picks the best feasible rows; each of the best
    ``n_candidates`` thetas is then refined in beta by a bounded scalar
    search inside the neighbouring grid cells.
    """
    thetas = np.linspace(theta_bounds[0], theta_bounds[1], n_theta)
    betas = np.linspace(beta_bounds[0], beta_bounds[1], n_beta)
    coarse = []
    for th in thetas:
        coarse.extend(sensitivity_sweep(th, betas, s, ratio_step, workers))
    good = [p for p in coarse if _usable(p)]
    if not good:
        raise NoFeasiblePoint("no feasible, non-singular point on the coarse grid")
    good.sort(key=lambda p: p.eta)
    best = good[0]
    seen = []
    for cand in good:
        if len(seen) >= n_candidates:
            break
        if any(cand.theta == th for th in seen):
            continue
        seen.append(cand.theta)
        step = betas[1] - betas[0] if n_beta > 1 else 0.0
        lo = max(beta_bounds[0], cand.beta - step)
        hi = min(beta_bounds[1], cand.beta + step)
        if hi <= lo:
            continue
        cache = {}

        def cost(b, th=cand.theta):
            p = evaluate_point(s, th, float(b), ratio_step)
            cache[float(b)] = p
            return p.eta if _usable(p) else math.inf

        minimize_scalar(cost, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
        for p in cache.values():
            if _usable(p) and p.eta < best.eta:
                best = p
    return best


def rotation_noise_floor(point: SensitivityPoint, rel_instability: float) -> float:
    """Equivalent field error from a fractional instability of omega_alpha.

    A drift d omega_alpha shifts the phase exactly like a lab field
    d omega_alpha / gamma, so the slope cancels.
    """
    if point.singular or point.omega_alpha is None:
        raise ValueError("noise floor is undefined at a singular point")
    return abs(rel_instability) * abs(point.omega_alpha) / abs(point.gyro_ratio)


def operating_point(s: ScenarioConfig, ratio_step: float = DEFAULT_RATIO_STEP) -> SensitivityPoint:
    """SensitivityPoint at the scenario's own drive (not forced to critical)."""
    r = s.rotation
    slope = phase_slope(s, ratio_step).value
    rep = epsilon_profile(s)
    return SensitivityPoint(
        r.theta, r.beta, s.ratio, slope,
        sensitivity(slope, s.species, s.measurement_time, s.spin_count),
        rep.worst, rep.feasible, abs(math.cos(r.beta - r.theta)) < SINGULAR_CUTOFF,
        r.omega_alpha, s.species.gyro_ratio,
    )
