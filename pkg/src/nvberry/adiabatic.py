"""Adiabaticity diagnostics along the trajectory and at the critical drive."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGap, SingularGeometry, ZeroDenominator
from .model import ScenarioConfig
from .phases import PAIRS, check_gap_floor
from .rotoframe import SINGULAR_COS
from .spinham import branch_trajectory


@dataclass(frozen=True)
class AdiabaticityReport:
    """Maxima of eps_mn = |<m|dH/dt|n>| / (lambda_n - lambda_m)^2 over one period.

    Keys are branch pairs (m, n) with m < n; eps is symmetric in (m, n).
    """

    eps_max: dict
    argmax_time: dict
    feasible: bool
    chi: float
    threshold: float
    period: float
    profile: dict = field(default=None, repr=False, compare=False)

    @property
    def worst(self) -> float:
        return max(self.eps_max.values())


def epsilon_profile(s: ScenarioConfig) -> AdiabaticityReport:
    tr = branch_trajectory(s)
    check_gap_floor(s, tr, exc=DegenerateGap)
    v = tr.vectors
    # matrix elements <m|hdot|n> for every sample
    hv = np.einsum("kij,kjn->kin", tr.hdot, v)
    elems = np.einsum("kim,kin->kmn", np.conj(v), hv)
    eps_max, arg, prof = {}, {}, {}
    for m, n in PAIRS:
        gap = tr.values[:, n - 1] - tr.values[:, m - 1]
        eps = np.abs(elems[:, m - 1, n - 1]) / gap ** 2
        k = int(np.argmax(eps))
        eps_max[(m, n)] = float(eps[k])
        arg[(m, n)] = float(tr.t[k])
        prof[(m, n)] = eps
    worst = max(eps_max.values())
    return AdiabaticityReport(
        eps_max=eps_max,
        argmax_time=arg,
        feasible=bool(worst < s.epsilon_threshold),
        chi=s.chi,
        threshold=s.epsilon_threshold,
        period=s.period,
        profile={"t": tr.t, **prof},
    )


def epsilon_critical_closed_form(beta: float, theta: float, chi: float, zeta: float) -> float:
    """Closed-form eps_12 at the critical drive.

    ``zeta`` is taken as given; no particular physical reading is imposed.
    """
    c = math.cos(beta - theta)
    if abs(c) < SINGULAR_COS:
        raise SingularGeometry("cos(beta - theta) vanishes")
    if zeta == 0:
        raise ZeroDenominator("zeta = 0 makes the denominator vanish")
    r = math.hypot(chi, zeta)
    den2 = 2.0 * r * (r - chi) ** 3
    if den2 <= 0:
        raise ZeroDenominator("sqrt(chi^2 + zeta^2) must exceed chi")
    return abs(math.sin(beta) * math.cos(theta) / c / math.sqrt(den2))
