"""Exact time-dependent propagation, Ramsey readout and shot-noise statistics.

States are complex arrays of shape (3,) in the basis (|+1>, |0>, |-1>).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FringeExtremum, InvalidConfig, StepTooCoarse
from .model import ScenarioConfig
from .phases import adiabatic_phases, check_gap_floor, wrap_phase
from .spinham import branch_trajectory, hamiltonian_batch, jacobi_eigh

MAX_PHASE_PER_STEP = 0.1


def _step_unitaries(h, dt):
    w, v = jacobi_eigh(h)
    return np.einsum("kij,kj,klj->kil", v, np.exp(-1j * w * dt), np.conj(v)), np.max(np.abs(w))


def _ordered_product(u):
    """u[-1] @ ... @ u[1] @ u[0], reduced pairwise."""
    u = np.asarray(u)
    while u.shape[0] > 1:
        if u.shape[0] % 2:
            u = np.concatenate([u, np.eye(3, dtype=complex)[None]], axis=0)
        u = u[1::2] @ u[0::2]
    return u[0]


def propagator(s: ScenarioConfig, t0: float, t1: float, substeps: int, hamiltonian=None):
    """Midpoint-rule propagator from ``t0`` to ``t1`` as a 3x3 unitary.

    ``hamiltonian`` optionally replaces the scenario Hamiltonian; it maps an
    array of times to a stack of 3x3 Hermitian matrices.
    """
    substeps = int(substeps)
    if substeps < 1:
        raise StepTooCoarse("substeps must be >= 1")
    dt = (t1 - t0) / substeps
    mids = t0 + (np.arange(substeps) + 0.5) * dt
    h = hamiltonian(mids) if hamiltonian is not None else hamiltonian_batch(s, mids)[0]
    u, hmax = _step_unitaries(h, dt)
    if hmax * abs(dt) >= MAX_PHASE_PER_STEP:
        raise StepTooCoarse(
            f"max ||H|| dt = {hmax * abs(dt):.3g} rad per step; need < {MAX_PHASE_PER_STEP}"
        )
    return _ordered_product(u)


def propagate(s: ScenarioConfig, psi0, t0: float, t1: float, substeps: int, hamiltonian=None):
    """Evolve ``psi0`` from ``t0`` to ``t1`` with ``substeps`` midpoint exponentials."""
    psi0 = np.asarray(psi0, dtype=complex)
    return propagator(s, t0, t1, substeps, hamiltonian) @ psi0


def substeps_for(s: ScenarioConfig, span: float, max_phase: float = 0.05) -> int:
    """Substep count keeping ||H|| dt below ``max_phase`` over ``span`` seconds."""
    tr = branch_trajectory(s)
    hmax = float(np.max(np.abs(tr.values)))
    return max(s.steps_per_period, int(math.ceil(hmax * abs(span) / max_phase)))


def adiabatic_fidelity(s: ScenarioConfig, branch: int, substeps: int | None = None) -> float:
    """Population left in the instantaneous ``branch`` eigenstate after one
    period when starting in it at t = 0."""
    tr = branch_trajectory(s)
    check_gap_floor(s, tr)
    T = s.period
    n = substeps or substeps_for(s, T)
    v0 = tr.vectors[0, :, branch - 1]
    psi = propagate(s, v0, 0.0, T, n)
    return float(abs(np.vdot(v0, psi)) ** 2)


def propagated_phase_difference(s: ScenarioConfig, substeps: int | None = None) -> float:
    """Relative phase of branches 1 and 2 after one period from exact evolution.

    Each branch eigenstate is propagated separately and its phase is read off
    from the overlap with the same eigenstate at t = T (= t = 0).
    """
    tr = branch_trajectory(s)
    T = s.period
    n = substeps or substeps_for(s, T)
    u = propagator(s, 0.0, T, n)
    phases = []
    for b in (0, 1):
        v0 = tr.vectors[0, :, b]
        phases.append(np.angle(np.vdot(v0, u @ v0)))
    return wrap_phase(phases[0] - phases[1])


@dataclass(frozen=True)
class RamseyResult:
    delta_psi_true: float
    p_bright: float
    delta_psi_estimates: np.ndarray
    estimator_std: float
    n_periods: int
    discarded_time: float


def fringe(delta_psi):
    """Probability of returning to |0> after the second pi/2 pulse."""
    return 0.5 * (1.0 + np.cos(delta_psi))


def shot_noise_estimates(delta_psi: float, n_spins: int, trials: int, seed: int) -> np.ndarray:
    """Phase estimates from binomial bright counts, one generator per trial.

    Trial ``i`` draws from ``default_rng([seed, i])`` so trials can be split
    across workers without changing the result.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    if abs(math.sin(delta_psi)) < 1e-3:
        raise FringeExtremum(
            f"|sin(delta_psi)| = {abs(math.sin(delta_psi)):.2g}: fringe slope vanishes"
        )
    p = float(fringe(delta_psi))
    counts = np.array(
        [np.random.default_rng([seed, i]).binomial(n_spins, p) for i in range(trials)]
    )
    est = np.arccos(np.clip(2.0 * counts / n_spins - 1.0, -1.0, 1.0))
    if math.sin(delta_psi) < 0:
        est = 2 * np.pi - est
    # report estimates on the same 2 pi sheet as the true phase
    sheet = delta_psi - np.mod(delta_psi, 2 * np.pi)
    return est + sheet


def shot_noise_mc(delta_psi: float, n_spins: int, trials: int, seed: int) -> float:
    """Sample standard deviation of the shot-noise-limited phase estimator."""
    return float(np.std(shot_noise_estimates(delta_psi, n_spins, trials, seed), ddof=1))


def ramsey_phase(s: ScenarioConfig, trials: int = 1000) -> RamseyResult:
    """Relative phase accumulated between branches 1 and 2 over the whole
    measurement time, its bright-state probability, and the Monte Carlo
    estimator spread for ``s.spin_count`` spins."""
    T = s.period
    n = int(math.floor(s.measurement_time / T))
    if n < 1:
        raise InvalidConfig("measurement_time shorter than one rotation period")
    led = adiabatic_phases(s)
    per = led.total(1) - led.total(2)
    dpsi = n * per
    reduced = float(np.mod(dpsi, 2 * np.pi))
    est = shot_noise_estimates(reduced, s.spin_count, trials, s.seed)
    return RamseyResult(
        delta_psi_true=float(dpsi),
        p_bright=float(fringe(reduced)),
        delta_psi_estimates=est,
        estimator_std=float(np.std(est, ddof=1)),
        n_periods=n,
        discarded_time=float(s.measurement_time - n * T),
    )
