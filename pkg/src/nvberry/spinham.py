"""Spin-1 operators, the rotating-frame Hamiltonian, a 3x3 Hermitian Jacobi
eigensolver and overlap-based branch tracking along one rotation period.

Basis ordering everywhere is (|+1>, |0>, |-1>).  Branch ids are 0-based
internally (0, 1, 2) and correspond to the user-facing branches 1, 2, 3:
branch 3 is the state with the largest |0> weight at t = 0, branches 1 and 2
are the remaining (near-degenerate) pair ordered by eigenvalue.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousTracking, NotHermitian
from .model import ScenarioConfig
from .rotoframe import field_angular, field_angular_rate

SQRT2 = np.sqrt(2.0)
TRACK_MARGIN = 0.1
MAX_REFINE_DEPTH = 30


@dataclass(frozen=True)
class SpinOperators:
    iz: np.ndarray
    ix: np.ndarray
    iy: np.ndarray
    iplus: np.ndarray
    iminus: np.ndarray


def spin_one() -> SpinOperators:
    iplus = np.array([[0, SQRT2, 0], [0, 0, SQRT2], [0, 0, 0]], dtype=complex)
    iminus = iplus.conj().T
    ix = (iplus + iminus) / 2
    iy = (iplus - iminus) / 2j
    iz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return SpinOperators(iz=iz, ix=ix, iy=iy, iplus=iplus, iminus=iminus)


@dataclass(frozen=True)
class HamiltonianSample:
    t: float
    h: np.ndarray
    hdot: np.ndarray


def hamiltonian_from_field(quad_split: float, f) -> np.ndarray:
    """Q' Iz^2 + f . I for field vectors ``f`` (rad/s) of shape (..., 3)."""
    f = np.asarray(f, dtype=float)
    h = np.zeros(f.shape[:-1] + (3, 3), dtype=complex)
    minus = (f[..., 0] - 1j * f[..., 1]) / SQRT2
    h[..., 0, 0] = quad_split + f[..., 2]
    h[..., 2, 2] = quad_split - f[..., 2]
    h[..., 0, 1] = minus
    h[..., 1, 2] = minus
    h[..., 1, 0] = minus.conj()
    h[..., 2, 1] = minus.conj()
    return h


def hamiltonian_batch(s: ScenarioConfig, t):
    """(h, hdot) stacked over the times ``t``."""
    t = np.asarray(t, dtype=float)
    h = hamiltonian_from_field(s.species.quad_split, field_angular(s, t))
    hdot = hamiltonian_from_field(0.0, field_angular_rate(s, t))
    return h, hdot


def hamiltonian_at(s: ScenarioConfig, t: float) -> HamiltonianSample:
    h, hdot = hamiltonian_batch(s, float(t))
    return HamiltonianSample(float(t), h, hdot)


# ---------------------------------------------------------------------------
# eigensolver

_PAIRS = ((0, 1), (0, 2), (1, 2))


def jacobi_eigh(h, tol: float = 1e-14, max_sweeps: int = 50):
    """Cyclic complex Jacobi diagonalisation of a stack of 3x3 Hermitian matrices.

    Returns ``(values, vectors)`` with eigenvalues sorted descending along the
    last axis and eigenvectors in the matching columns.
    """
    a = np.array(h, dtype=complex, copy=True)
    single = a.ndim == 2
    if single:
        a = a[None]
    n = a.shape[0]
    v = np.broadcast_to(np.eye(3, dtype=complex), a.shape).copy()
    norm = np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))
    offmask = ~np.eye(3, dtype=bool)
    idx = np.arange(n)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a[:, offmask]) ** 2, axis=-1))
        todo = off > tol * norm
        if not todo.any():
            break
        for p, q in _PAIRS:
            apq = a[:, p, q]
            mag = np.abs(apq)
            act = todo & (mag > 0.0)
            if not act.any():
                continue
            safe = np.where(act, mag, 1.0)
            phase = np.where(act, apq / safe, 1.0)
            th = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe)
            sgn = np.where(th >= 0.0, 1.0, -1.0)
            t = sgn / (np.abs(th) + np.sqrt(th * th + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            sn = t * c
            c = np.where(act, c, 1.0)
            sn = np.where(act, sn, 0.0)
            g = np.broadcast_to(np.eye(3, dtype=complex), a.shape).copy()
            g[:, p, p] = c
            g[:, q, q] = c
            g[:, p, q] = sn * phase
            g[:, q, p] = -sn * phase.conj()
            a = np.conj(np.swapaxes(g, -1, -2)) @ a @ g
            a[idx[act], p, q] = 0.0
            a[idx[act], q, p] = 0.0
            v = v @ g

    w = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    if single:
        return w[0], v[0]
    return w, v


def check_hermitian(h, rtol: float = 1e-12) -> None:
    h = np.asarray(h)
    dev = np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2))))
    scale = np.max(np.abs(h)) if h.size else 0.0
    if dev > rtol * scale:
        raise NotHermitian(f"max |h - h^dagger| = {dev:.3g} exceeds {rtol:g} * max|h|")


@dataclass(frozen=True)
class EigenFrame:
    """Eigen-decomposition at one time.

    ``vectors[:, j]`` is the unit eigenvector for ``values_sorted[j]`` and
    ``branch_of_sorted[j]`` its persistent (0-based) branch id.
    """

    t: float
    values_sorted: np.ndarray
    vectors: np.ndarray
    branch_of_sorted: tuple

    def by_branch(self):
        """(values, vectors) rearranged so that index b is branch b."""
        inv = np.argsort(self.branch_of_sorted)
        return self.values_sorted[inv], self.vectors[:, inv]


def birth_labels(vectors) -> np.ndarray:
    """Branch id per sorted column: the column with most |0> weight is branch 2,
    the other two become branches 0 and 1 in eigenvalue order."""
    vectors = np.asarray(vectors)
    zero = int(np.argmax(np.abs(vectors[1, :]) ** 2))
    labels = np.empty(3, dtype=int)
    labels[zero] = 2
    rest = [j for j in range(3) if j != zero]
    labels[rest[0]] = 0
    labels[rest[1]] = 1
    return labels


def birth_gauge(vectors) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real >= 0."""
    vectors = np.asarray(vectors)
    k = np.argmax(np.abs(vectors), axis=-2)
    pivot = np.take_along_axis(vectors, k[..., None, :], axis=-2)
    mag = np.abs(pivot)
    ph = np.where(mag > 0, np.conj(pivot) / np.where(mag > 0, mag, 1.0), 1.0)
    return vectors * ph


def eigensystem(hs: HamiltonianSample) -> EigenFrame:
    check_hermitian(hs.h)
    w, v = jacobi_eigh(hs.h)
    v = birth_gauge(v)
    return EigenFrame(hs.t, w, v, tuple(int(b) for b in birth_labels(v)))


def _assign(overlap_mag):
    """Greedy row-wise assignment on |<prev_i|next_j>| for a stack of 3x3.

    Returns (assignment, margin, is_permutation).
    """
    o = np.asarray(overlap_mag)
    best = np.argmax(o, axis=-1)
    srt = np.sort(o, axis=-1)
    margin = np.min(srt[..., -1] - srt[..., -2], axis=-1)
    perm_ok = np.sort(best, axis=-1)
    perm_ok = np.all(perm_ok == np.arange(3), axis=-1)
    return best, margin, perm_ok


def track_branches(prev: EigenFrame, next_raw: EigenFrame) -> EigenFrame:
    """Carry branch ids and a continuous gauge from ``prev`` onto ``next_raw``."""
    pv_vals, pv = prev.by_branch()
    ov = np.conj(pv).T @ next_raw.vectors  # ov[b, j] = <prev_b | next_j>
    best, margin, ok = _assign(np.abs(ov))
    if not ok or margin < TRACK_MARGIN:
        raise AmbiguousTracking(
            f"branch assignment margin {float(margin):.3g} below {TRACK_MARGIN}",
            margin=float(margin), t=next_raw.t,
        )
    labels = np.empty(3, dtype=int)
    vecs = next_raw.vectors.copy()
    for b in range(3):
        j = best[b]
        labels[j] = b
        o = ov[b, j]
        if abs(o) > 0:
            vecs[:, j] *= np.conj(o) / abs(o)
    return EigenFrame(next_raw.t, next_raw.values_sorted, vecs, tuple(int(x) for x in labels))


# ---------------------------------------------------------------------------
# trajectory over one period


@dataclass(frozen=True)
class BranchTrajectory:
    """Branch-tracked eigensystem sampled on [0, T].

    ``values[k, b]`` and ``vectors[k, :, b]`` belong to branch b at ``t[k]``.
    Vectors are in the parallel-transport gauge (``<v_k|v_k+1>`` real positive)
    except across the final step, where ``vectors[-1]`` is a copy of
    ``vectors[0]`` so that the loop closes on the t = 0 frame.
    """

    scenario: ScenarioConfig
    t: np.ndarray
    values: np.ndarray
    vectors: np.ndarray
    field: np.ndarray
    field_rate: np.ndarray
    hdot: np.ndarray
    refined_steps: int

    @property
    def period(self) -> float:
        return self.scenario.period


def _raw_frames(s: ScenarioConfig, t):
    h, hdot = hamiltonian_batch(s, t)
    w, v = jacobi_eigh(h)
    return w, v, hdot


def _step_quality(v):
    ov = np.abs(np.einsum("kia,kib->kab", np.conj(v[:-1]), v[1:]))
    return _assign(ov)


def branch_trajectory(s: ScenarioConfig, steps: int | None = None) -> BranchTrajectory:
    """Eigensystem along one period with branch tracking and gauge fixing.

    Steps whose assignment is ambiguous are bisected locally (up to
    ``MAX_REFINE_DEPTH`` times) before giving up with
    :class:`AmbiguousTracking`.
    """
    return _branch_trajectory_cached(s, int(steps or s.steps_per_period))


@functools.lru_cache(maxsize=32)
def _branch_trajectory_cached(s: ScenarioConfig, steps: int) -> BranchTrajectory:
    T = s.period
    t = np.arange(steps + 1) * (T / steps)
    t[-1] = T
    w, v, hdot = _raw_frames(s, t)
    refined = 0
    for _ in range(MAX_REFINE_DEPTH + 1):
        best, margin, ok = _step_quality(v)
        bad = np.nonzero(~ok | (margin < TRACK_MARGIN))[0]
        if bad.size == 0:
            break
        if _ == MAX_REFINE_DEPTH:
            k = int(bad[0])
            raise AmbiguousTracking(
                f"branch tracking failed near t/T = {t[k] / T:.9f} after step refinement",
                margin=float(margin[k]), t=float(t[k]),
            )
        mids = 0.5 * (t[bad] + t[bad + 1])
        wm, vm, hm = _raw_frames(s, mids)
        t = np.insert(t, bad + 1, mids)
        w = np.insert(w, bad + 1, wm, axis=0)
        v = np.insert(v, bad + 1, vm, axis=0)
        hdot = np.insert(hdot, bad + 1, hm, axis=0)
        refined += bad.size

    # compose per-step assignments into persistent branch labels
    n = t.size
    labels = np.empty((n, 3), dtype=int)
    labels[0] = birth_labels(v[0])
    nontrivial = set(np.nonzero(np.any(best != np.arange(3), axis=-1))[0].tolist())
    cur = labels[0].copy()
    for k in range(1, n):
        if k - 1 in nontrivial:
            nxt = np.empty(3, dtype=int)
            nxt[best[k - 1]] = cur
            cur = nxt
        labels[k] = cur
    if not np.array_equal(labels[-1], labels[0]):
        raise AmbiguousTracking("branches do not return to themselves after one period")

    inv = np.argsort(labels, axis=-1)
    values = np.take_along_axis(w, inv, axis=-1)
    vecs = np.take_along_axis(v, inv[:, None, :], axis=-1)

    # parallel transport gauge, seeded by the birth gauge
    vecs[0] = birth_gauge(vecs[0])
    d = np.einsum("kib,kib->kb", np.conj(vecs[:-1]), vecs[1:])
    acc = np.concatenate([np.zeros((1, 3)), np.cumsum(-np.angle(d), axis=0)])
    vecs = vecs * np.exp(1j * acc)[:, None, :]
    vecs[-1] = vecs[0]

    f = field_angular(s, t)
    fr = field_angular_rate(s, t)
    for arr in (t, values, vecs, f, fr, hdot):
        arr.setflags(write=False)
    return BranchTrajectory(s, t, values, vecs, f, fr, hdot, refined)
