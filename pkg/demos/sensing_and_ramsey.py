"""
From phase slope to field sensitivity
=====================================

A lab field along the rotation axis shifts the effective drive ratio, so the
geometric phase shift acts as a field transducer.  This script walks from the
slope to eta, samples a beta sweep, runs the Ramsey shot-noise Monte Carlo,
and estimates the floor set by an unstable rotation rate.
"""

import math

import numpy as np

import nvberry as nb
from nvberry.sensing import operating_point

s = nb.default_scenario("nv14n")
slope = nb.phase_slope(s)
eta = nb.sensitivity(slope.value, s.species, s.measurement_time, s.spin_count)
print(f"slope d(delta phi_g)/d(ratio) = {slope.value:.5f} +- {slope.uncertainty:.1g}")
print(f"eta = {eta:.3e} T/sqrt(Hz) for N = {s.spin_count}, T_m = {s.measurement_time} s")

print("\nbeta sweep at theta = 0.6 (critical drive at every beta)")
for p in nb.sensitivity_sweep(0.6, np.linspace(0.2, 3.0, 8), s):
    eta_txt = f"{p.eta:.3e}" if p.eta is not None else "   --    "
    eps_txt = f"{p.eps_max:7.3f}" if p.eps_max is not None else "    --"
    print(f"  beta = {p.beta:5.3f}  eta = {eta_txt}  eps_max = {eps_txt}  feasible = {p.feasible}")

# Ramsey readout: phase spread vs the 1/sqrt(N) expectation
sr = s.replace(spin_count=10_000)
res = nb.ramsey_phase(sr, trials=2000)
print(f"\nRamsey: {res.n_periods} periods, P_bright = {res.p_bright:.4f}")
print(f"estimator std {res.estimator_std:.5f} vs 1/sqrt(N) = {1 / math.sqrt(sr.spin_count):.5f}")

point = operating_point(s)
print(f"\nnoise floor for 1e-12 rotation instability: {nb.rotation_noise_floor(point, 1e-12):.3e} T")
