"""Physical constants, spin-species presets and scenario configuration.

All frequencies are stored as angular frequencies (rad/s).  Documents on disk
use ordinary frequencies (Hz) and are converted by 2*pi on ingest.
"""

from __future__ import annotations

import dataclasses
import math
import re
import warnings
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import InvalidConfig, ZeroDivisor

TWO_PI = 2.0 * math.pi

# Literature defaults (ordinary frequency).  These are configuration values.
GYRO_14N_HZ_PER_T = 3.077e6
GYRO_E_HZ_PER_T = 28.025e9
Q_14N_HZ = -4.945e6
A_PARALLEL_14N_HZ = -2.14e6
A_PERP_14N_HZ = -2.62e6
D_NV_HZ = 2.87e9

# cot(theta) = 0.05 with beta = pi/2 puts the critical drive at
# |omega_alpha| = 0.05 |omega_gamma|.
DEFAULT_THETA = math.atan(20.0)
DEFAULT_BETA = math.pi / 2


def hz_to_angular(hz: float) -> float:
    return TWO_PI * float(hz)


def angular_to_hz(omega: float) -> float:
    """Inverse of :func:`hz_to_angular`, nudged by a few ulps so that
    ``hz_to_angular(angular_to_hz(w)) == w`` whenever such a value exists."""
    omega = float(omega)
    hz = omega / TWO_PI
    if hz_to_angular(hz) == omega:
        return hz
    for direction in (np.inf, -np.inf):
        cand = hz
        for _ in range(8):
            cand = float(np.nextafter(cand, direction))
            if hz_to_angular(cand) == omega:
                return cand
    return hz


def _angular(doc: Mapping[str, Any], rad_key: str, hz_key: str) -> float:
    """Exact rad/s value if present, else the Hz value converted."""
    if rad_key in doc:
        return float(doc[rad_key])
    return hz_to_angular(doc[hz_key])


@dataclass(frozen=True)
class SpinSpecies:
    """Spin-1 species: signed gyromagnetic ratio (rad/s/T) and the signed
    quadrupole (nuclear, Q') or zero-field (electron, D) splitting (rad/s)."""

    label: str
    gyro_ratio: float
    quad_split: float

    def __post_init__(self):
        if not self.gyro_ratio:
            raise InvalidConfig("gyro_ratio must be nonzero")
        if not self.quad_split:
            raise InvalidConfig("quad_split must be nonzero")
        if not (math.isfinite(self.gyro_ratio) and math.isfinite(self.quad_split)):
            raise InvalidConfig("species constants must be finite")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "gyro_ratio_hz_per_t": angular_to_hz(self.gyro_ratio),
            "quad_split_hz": angular_to_hz(self.quad_split),
            "gyro_ratio_rad_per_s_per_t": self.gyro_ratio,
            "quad_split_rad_per_s": self.quad_split,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SpinSpecies":
        try:
            return cls(
                label=str(doc.get("label", "custom")),
                gyro_ratio=_angular(doc, "gyro_ratio_rad_per_s_per_t", "gyro_ratio_hz_per_t"),
                quad_split=_angular(doc, "quad_split_rad_per_s", "quad_split_hz"),
            )
        except KeyError as exc:
            raise InvalidConfig(f"species is missing field {exc}") from None


@dataclass(frozen=True)
class HyperfineConstants:
    Q: float
    A_parallel: float
    A_perp: float
    D: float


def derive_q_prime(h: HyperfineConstants) -> float:
    """Quadrupole splitting shifted by the second-order hyperfine term,
    ``Q + A_perp**2 / D`` (rad/s)."""
    if h.D == 0:
        raise ZeroDivisor("zero-field splitting D must be nonzero")
    return h.Q + h.A_perp ** 2 / h.D


NV14N_HYPERFINE = HyperfineConstants(
    Q=hz_to_angular(Q_14N_HZ),
    A_parallel=hz_to_angular(A_PARALLEL_14N_HZ),
    A_perp=hz_to_angular(A_PERP_14N_HZ),
    D=hz_to_angular(D_NV_HZ),
)


@dataclass(frozen=True)
class RotationParams:
    """Euler-angle drive: alpha = omega_alpha t, beta fixed, gamma = omega_gamma t,
    plus the fixed tilt theta of the NV axis.  Angles are in radians and kept
    unreduced."""

    omega_alpha: float
    omega_gamma: float
    beta: float
    theta: float

    def __post_init__(self):
        if not self.omega_gamma:
            raise InvalidConfig("omega_gamma must be nonzero (period undefined)")
        for name in ("omega_alpha", "omega_gamma", "beta", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidConfig(f"{name} must be finite")

    @property
    def period(self) -> float:
        return TWO_PI / abs(self.omega_gamma)

    def to_dict(self) -> dict:
        return {
            "omega_alpha_hz": angular_to_hz(self.omega_alpha),
            "omega_gamma_hz": angular_to_hz(self.omega_gamma),
            "omega_alpha_rad_per_s": self.omega_alpha,
            "omega_gamma_rad_per_s": self.omega_gamma,
            "beta": self.beta,
            "theta": self.theta,
        }


def omega_alpha_eff(r: RotationParams, B_lab: float, gyro: float) -> float:
    """Nutation rate seen by the spin once the lab field is folded in."""
    return r.omega_alpha - gyro * B_lab


@dataclass(frozen=True)
class ScenarioConfig:
    species: SpinSpecies
    rotation: RotationParams
    B_lab: float = 0.0
    steps_per_period: int = 20000
    measurement_time: float = 10e-3
    spin_count: int = 1
    gap_floor: float = 1.0
    epsilon_threshold: float = 0.1
    seed: int = 0

    def __post_init__(self):
        problems = _hard_problems(self)
        if problems:
            raise InvalidConfig("; ".join(problems))

    @property
    def period(self) -> float:
        return self.rotation.period

    @property
    def omega_alpha_eff(self) -> float:
        return omega_alpha_eff(self.rotation, self.B_lab, self.species.gyro_ratio)

    @property
    def ratio(self) -> float:
        """omega'_alpha / omega_gamma."""
        return self.omega_alpha_eff / self.rotation.omega_gamma

    @property
    def chi(self) -> float:
        return abs(self.species.quad_split / (2.0 * self.rotation.omega_gamma))

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_rotation(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, rotation=dataclasses.replace(self.rotation, **changes))

    def with_ratio(self, ratio: float) -> "ScenarioConfig":
        """Same scenario with omega_alpha chosen so omega'_alpha / omega_gamma = ratio."""
        wa = ratio * self.rotation.omega_gamma + self.species.gyro_ratio * self.B_lab
        return self.with_rotation(omega_alpha=wa)

    def to_dict(self) -> dict:
        return {
            "species": self.species.to_dict(),
            "rotation": self.rotation.to_dict(),
            "b_lab_tesla": self.B_lab,
            "steps_per_period": self.steps_per_period,
            "measurement_time_s": self.measurement_time,
            "spin_count": self.spin_count,
            "gap_floor_hz": angular_to_hz(self.gap_floor),
            "gap_floor_rad_per_s": self.gap_floor,
            "epsilon_threshold": self.epsilon_threshold,
            "seed": self.seed,
        }


def _hard_problems(s: ScenarioConfig) -> list[str]:
    out = []
    if s.steps_per_period < 100:
        out.append("steps_per_period must be >= 100")
    if not s.measurement_time > 0:
        out.append("measurement_time must be > 0")
    if s.spin_count < 1:
        out.append("spin_count must be >= 1")
    if not s.gap_floor > 0:
        out.append("gap_floor must be > 0")
    if not s.epsilon_threshold > 0:
        out.append("epsilon_threshold must be > 0")
    if not s.rotation.omega_gamma:
        out.append("omega_gamma must be nonzero")
    if not math.isfinite(s.B_lab):
        out.append("B_lab must be finite")
    return out


PRESETS = ("nv14n", "electron")


def preset(kind: str) -> tuple[SpinSpecies, RotationParams]:
    """Species and default rotation for ``"nv14n"`` or ``"electron"``.

    The default rotation sits at chi = |quad_split / 2 omega_gamma| = 1 with the
    drive tuned exactly to the critical ratio at (theta, beta) =
    (atan 20, pi/2), i.e. omega_alpha = 0.05 |omega_gamma|.
    """
    if kind == "nv14n":
        species = SpinSpecies(
            "nv14n",
            gyro_ratio=hz_to_angular(GYRO_14N_HZ_PER_T),
            quad_split=derive_q_prime(NV14N_HYPERFINE),
        )
    elif kind == "electron":
        species = SpinSpecies(
            "electron",
            gyro_ratio=hz_to_angular(GYRO_E_HZ_PER_T),
            quad_split=hz_to_angular(D_NV_HZ),
        )
    else:
        raise InvalidConfig(f"unknown preset {kind!r}; expected one of {PRESETS}")
    wg = species.quad_split / 2.0
    crit = -math.cos(DEFAULT_THETA) / math.cos(DEFAULT_THETA - DEFAULT_BETA)
    rotation = RotationParams(crit * wg, wg, DEFAULT_BETA, DEFAULT_THETA)
    return species, rotation


def default_scenario(kind: str = "nv14n", **overrides) -> ScenarioConfig:
    species, rotation = preset(kind)
    kwargs = dict(species=species, rotation=rotation, gap_floor=1e-4 * abs(species.quad_split))
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)


def validate_scenario(s: ScenarioConfig) -> list[str]:
    """Soft validity checks; returns human readable warnings.

    Hard invariant violations raise :class:`InvalidConfig`.
    """
    problems = _hard_problems(s)
    if problems:
        raise InvalidConfig("; ".join(problems))
    out = []
    gb = abs(s.species.gyro_ratio * s.B_lab)
    wa = abs(s.rotation.omega_alpha)
    if gb > 0 and gb >= 0.1 * wa:
        frac = gb / wa if wa else math.inf
        out.append(
            f"lab field not small against nutation: |gamma B| / |omega_alpha| = {frac:.3g} (>= 0.1)"
        )
    q = abs(s.species.quad_split)
    if wa > q:
        out.append(f"|omega_alpha| exceeds |quad_split| ({wa / q:.3g}x)")
    if abs(s.rotation.omega_gamma) > q:
        out.append(f"|omega_gamma| exceeds |quad_split| ({abs(s.rotation.omega_gamma) / q:.3g}x)")
    return out


# ---------------------------------------------------------------------------
# document ingestion

_ANGLE_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*(deg|rad|°)?\s*$")


def parse_angle(value: Any, degrees: bool = False) -> float:
    """Parse an angle given as a number or a string with a ``deg``/``rad`` suffix.

    Bare numbers are radians unless ``degrees`` is set.
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return math.radians(value) if degrees else float(value)
    m = _ANGLE_RE.match(str(value))
    if not m:
        raise InvalidConfig(f"cannot parse angle {value!r}")
    x = float(m.group(1))
    unit = m.group(2)
    if unit in ("deg", "°") or (unit is None and degrees):
        return math.radians(x)
    return x


def scenario_from_dict(doc: Mapping[str, Any], degrees: bool = False) -> ScenarioConfig:
    """Build a scenario from a JSON-style document (frequencies in Hz)."""
    doc = dict(doc)
    spec = doc.get("species", "nv14n")
    if isinstance(spec, str):
        species, rotation = preset(spec)
    elif isinstance(spec, Mapping):
        if "preset" in spec:
            species, rotation = preset(spec["preset"])
        else:
            species = SpinSpecies.from_dict(spec)
            _, rotation = preset("nv14n")
            wg = species.quad_split / 2.0
            crit = -math.cos(DEFAULT_THETA) / math.cos(DEFAULT_THETA - DEFAULT_BETA)
            rotation = RotationParams(crit * wg, wg, DEFAULT_BETA, DEFAULT_THETA)
    else:
        raise InvalidConfig("species must be a preset name or a mapping")

    rot = dict(doc.get("rotation", {}) or {})
    changes: dict[str, float] = {}
    if "omega_gamma_rad_per_s" in rot or "omega_gamma_hz" in rot:
        changes["omega_gamma"] = _angular(rot, "omega_gamma_rad_per_s", "omega_gamma_hz")
    if "beta" in rot:
        changes["beta"] = parse_angle(rot["beta"], degrees)
    if "theta" in rot:
        changes["theta"] = parse_angle(rot["theta"], degrees)
    try:
        rotation = dataclasses.replace(rotation, **changes)
    except TypeError as exc:  # pragma: no cover - defensive
        raise InvalidConfig(str(exc)) from None

    b_lab = float(doc.get("b_lab_tesla", 0.0))
    if "omega_alpha_rad_per_s" in rot or "omega_alpha_hz" in rot:
        wa = _angular(rot, "omega_alpha_rad_per_s", "omega_alpha_hz")
        rotation = dataclasses.replace(rotation, omega_alpha=wa)
    elif "omega_alpha_ratio" in rot:
        # ratio refers to omega'_alpha / omega_gamma
        r = rot["omega_alpha_ratio"]
        if r == "critical":
            c = math.cos(rotation.theta - rotation.beta)
            if abs(c) < 1e-12:
                raise InvalidConfig("critical ratio undefined for this (theta, beta)")
            r = -math.cos(rotation.theta) / c
        wa = float(r) * rotation.omega_gamma + species.gyro_ratio * b_lab
        rotation = dataclasses.replace(rotation, omega_alpha=wa)
    elif changes:
        c = math.cos(rotation.theta - rotation.beta)
        if abs(c) < 1e-12:
            raise InvalidConfig("omega_alpha not given and critical ratio undefined")
        rotation = dataclasses.replace(
            rotation, omega_alpha=-math.cos(rotation.theta) / c * rotation.omega_gamma
        )

    known = {
        "species", "rotation", "b_lab_tesla", "steps_per_period", "measurement_time_s",
        "spin_count", "gap_floor_hz", "gap_floor_rad_per_s", "epsilon_threshold", "seed",
    }
    unknown = set(doc) - known
    if unknown:
        warnings.warn(f"ignoring unknown config keys: {sorted(unknown)}", stacklevel=2)

    gap_floor = (
        _angular(doc, "gap_floor_rad_per_s", "gap_floor_hz")
        if "gap_floor_hz" in doc or "gap_floor_rad_per_s" in doc
        else 1e-4 * abs(species.quad_split)
    )
    try:
        return ScenarioConfig(
            species=species,
            rotation=rotation,
            B_lab=b_lab,
            steps_per_period=int(doc.get("steps_per_period", 20000)),
            measurement_time=float(doc.get("measurement_time_s", 10e-3)),
            spin_count=int(doc.get("spin_count", 1)),
            gap_floor=gap_floor,
            epsilon_threshold=float(doc.get("epsilon_threshold", 0.1)),
            seed=int(doc.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidConfig):
            raise
        raise InvalidConfig(str(exc)) from None
