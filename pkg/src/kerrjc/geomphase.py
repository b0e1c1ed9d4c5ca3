"""Geometric-phase engine.

Phases are evaluated with the gauge-invariant discrete chain

    phi(t_N) = arg<psi(t_0)|psi(t_N)> - sum_k arg<psi(t_k)|psi(t_{k+1})>

which telescopes away any per-sample phase redefinition exactly, at any
sample density; estimating d/dt of the state by finite differences would
not be gauge safe for tracked density-matrix eigenvectors.  Values along
the grid are accumulated with increments wrapped to (-pi, pi], so the
reported phase is unwrapped without any post-hoc heuristic while genuine
pi-jumps at antipodal crossings survive.

The open-system phase follows the density-matrix eigenvector branch whose
eigenvalue is one at t0, continued by maximal overlap (not by eigenvalue
order, since the branch's eigenvalue decays and may cross others).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import IntegratorConfig, LindbladSpec, TrajectoryRecord, evolve_closed, evolve_lindblad
from .hilbert import SpaceSpec
from .model import InitialStateSpec, ModelParams, hamiltonian, initial_state, sector_analytics

OVERLAP_FLOOR = 0.5
AMBIGUITY_TOL = 1e-6
ENDPOINT_FLOOR = 1e-6
PURITY_TOL = 1e-8
BRANCH_WEIGHT_FLOOR = 1e-12
DEFAULT_N_MAX = 4


class TrackingError(RuntimeError):
    """Eigenvector continuation failed (ambiguity, purity, or overlap floor)."""


class SingularCheckpointError(RuntimeError):
    """Endpoint overlap vanished; the phase is undefined at this checkpoint."""


class CoarseGridError(RuntimeError):
    """Consecutive sample overlap fell below the validity floor."""


@dataclass(frozen=True)
class EigenTrack:
    """Continuously tracked dominant eigenvector branch of a density trajectory."""

    times: np.ndarray
    eigenvalues: np.ndarray
    vectors: np.ndarray
    overlap_floor: float

    def index_of(self, t: float) -> int:
        step = self.times[1] - self.times[0] if len(self.times) > 1 else 1.0
        i = int(round(t / step))
        if i < 0 or i >= len(self.times) or abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not on the track grid")
        return i


@dataclass(frozen=True)
class PhaseResult:
    """Unwrapped closed/open phases and their difference at one checkpoint.

    ``delta_phi`` is the raw difference of the unwrapped phases; at exactly
    geodesic evolutions a sample can land on the antipodal crossing, where
    the pi-jump direction is decided by numerical noise, so the raw value
    carries a possible 2*pi branch offset there.  ``delta_phi_wrapped`` is
    the branch-free value in (-pi, pi].
    """

    phi_u: float
    phi_g: float
    delta_phi: float
    checkpoint_time: float
    m: int
    omega_plus: float = float("nan")

    @property
    def delta_phi_wrapped(self) -> float:
        return wrap_angle(self.delta_phi)


def wrap_angle(x: float) -> float:
    """Map to (-pi, pi]."""
    w = math.remainder(x, 2 * math.pi)
    return math.pi if w <= -math.pi else w


def phase_series(states: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Unwrapped geometric phase at every sample of a normalized state sequence.

    Returns (phases, |endpoint overlaps|, min consecutive |overlap|).
    """
    states = np.asarray(states)
    n = states.shape[0]
    if n < 1:
        raise ValueError("need at least one sample")
    link = np.einsum("ki,ki->k", states[:-1].conj(), states[1:])
    dyn = np.empty(n)
    dyn[0] = 0.0
    np.cumsum(np.angle(link), out=dyn[1:])
    endpoint = np.einsum("i,ki->k", states[0].conj(), states)
    raw = np.angle(endpoint) - dyn
    phi = np.empty(n)
    phi[0] = 0.0
    for k in range(1, n):
        phi[k] = phi[k - 1] + wrap_angle(raw[k] - raw[k - 1])
    min_link = float(np.abs(link).min()) if n > 1 else 1.0
    return phi, np.abs(endpoint), min_link


def _phase_at(states: np.ndarray, idx: int) -> float:
    phi, endpoint_abs, min_link = phase_series(states[: idx + 1])
    if min_link <= OVERLAP_FLOOR:
        raise CoarseGridError(
            f"consecutive overlap {min_link:.3g} <= {OVERLAP_FLOOR}; grid too coarse")
    if endpoint_abs[idx] < ENDPOINT_FLOOR:
        raise SingularCheckpointError(
            f"endpoint overlap {endpoint_abs[idx]:.3g} below {ENDPOINT_FLOOR:g}")
    return float(phi[idx])


def phase_unitary(traj: TrajectoryRecord, t_end: float) -> float:
    """Geometric phase of a pure-state trajectory at a recorded time."""
    if traj.is_density:
        raise ValueError("phase_unitary needs a pure-state trajectory")
    return _phase_at(traj.states, traj.index_of(t_end))


def track_dominant_eigenvector(traj: TrajectoryRecord) -> EigenTrack:
    """Follow the eigenvector branch that starts with eigenvalue one.

    Continuation picks, at every sample, the eigenvector with maximal
    |overlap| against the previous tracked vector and fixes its phase so the
    consecutive overlap is real and nonnegative.
    """
    if not traj.is_density:
        raise ValueError("tracking needs a density-matrix trajectory")
    n = traj.states.shape[0]
    all_w, all_v = np.linalg.eigh(traj.states)
    w0, v0 = all_w[0], all_v[0]
    if w0[-1] < 1.0 - PURITY_TOL:
        raise TrackingError(f"initial state not pure: largest eigenvalue {w0[-1]:.9f}")

    dim = traj.states.shape[1]
    vectors = np.empty((n, dim), dtype=complex)
    eigenvalues = np.empty(n)
    vectors[0] = v0[:, -1]
    eigenvalues[0] = w0[-1]
    floor = 1.0

    prev = vectors[0]
    for k in range(1, n):
        w, v = all_w[k], all_v[k]
        overlaps = np.abs(v.conj().T @ prev)
        order = np.argsort(overlaps)[::-1]
        best, second = order[0], order[1]
        if overlaps[best] - overlaps[second] < AMBIGUITY_TOL:
            raise TrackingError(
                f"eigenvector overlap ambiguity at t={traj.times[k]:g}: "
                f"{overlaps[best]:.8f} vs {overlaps[second]:.8f}")
        if overlaps[best] <= OVERLAP_FLOOR:
            raise TrackingError(
                f"tracking overlap {overlaps[best]:.3g} <= {OVERLAP_FLOOR} "
                f"at t={traj.times[k]:g}")
        vec = v[:, best]
        ov = np.vdot(prev, vec)
        vec = vec * np.exp(-1j * np.angle(ov))
        vectors[k] = vec
        eigenvalues[k] = w[best]
        floor = min(floor, float(overlaps[best]))
        prev = vec

    return EigenTrack(times=traj.times.copy(), eigenvalues=eigenvalues,
                      vectors=vectors, overlap_floor=floor)


def phase_open_pure(track: EigenTrack, t_end: float) -> float:
    """Open-system phase for a pure initial state, from the tracked branch."""
    return _phase_at(track.vectors, track.index_of(t_end))


def phase_open_general(traj: TrajectoryRecord, t_end: float) -> float:
    """Mixed-state kinematic phase: weighted multi-branch overlap sum.

    Every eigenvalue branch with nonzero initial weight is tracked by
    maximal overlap; branch pairings must stay unambiguous.  The reported
    value is arg of sum_k sqrt(w_k(0) w_k(t)) <psi_k(0)|psi_k(t)> e^{-i D_k}
    with D_k the branch's accumulated link phase, unwrapped along the grid.
    """
    if not traj.is_density:
        raise ValueError("phase_open_general needs a density-matrix trajectory")
    idx = traj.index_of(t_end)
    states = traj.states[: idx + 1]
    n = states.shape[0]

    w0, v0 = np.linalg.eigh(states[0])
    keep = np.where(w0 > BRANCH_WEIGHT_FLOOR)[0]
    if keep.size == 0:
        raise ValueError("initial state has no weight above the branch floor")
    prev = v0[:, keep].copy()
    weights0 = w0[keep]
    k_branches = keep.size

    dyn = np.zeros(k_branches)
    weights_t = weights0.copy()
    raw = np.empty(n)
    raw[0] = float(np.angle(np.sum(weights0)))
    phi = np.empty(n)
    phi[0] = raw[0]
    first = prev.copy()

    for s in range(1, n):
        w, v = np.linalg.eigh(states[s])
        overlaps = np.abs(v.conj().T @ prev)  # (dim, branches)
        assignment = overlaps.argmax(axis=0)
        if np.unique(assignment).size != k_branches:
            raise TrackingError(f"branch pairing collision at t={traj.times[s]:g}")
        for b in range(k_branches):
            col = overlaps[:, b]
            top = col[assignment[b]]
            col_sorted = np.sort(col)[::-1]
            if col_sorted[0] - col_sorted[1] < AMBIGUITY_TOL:
                raise TrackingError(
                    f"branch {b} crossing within tolerance at t={traj.times[s]:g}")
            if top <= OVERLAP_FLOOR:
                raise TrackingError(
                    f"branch {b} overlap {top:.3g} below floor at t={traj.times[s]:g}")
        new = v[:, assignment]
        links = np.einsum("ib,ib->b", prev.conj(), new)
        dyn += np.angle(links)
        weights_t = w[assignment]
        prev = new

        terms = (np.sqrt(np.maximum(weights0 * weights_t, 0.0))
                 * np.einsum("ib,ib->b", first.conj(), new)
                 * np.exp(-1j * dyn))
        raw[s] = float(np.angle(terms.sum()))
        phi[s] = phi[s - 1] + wrap_angle(raw[s] - raw[s - 1])

    return float(phi[idx])


def delta_phi(params: ModelParams, initial: InitialStateSpec, m: int,
              space: Optional[SpaceSpec] = None,
              steps_per_period: int = 2000,
              record_stride: int = 4) -> PhaseResult:
    """Closed/open phase difference after m generalized Rabi periods.

    Runs both evolutions on identical grids to tau = m * 2*pi/Omega, where
    Omega is the generalized Rabi frequency of the initial state's sector.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    space = space or SpaceSpec(DEFAULT_N_MAX)
    sa = sector_analytics(params, initial.n)
    period = 2 * math.pi / sa.rabi_frequency
    tau = m * period
    config = IntegratorConfig.for_periods(period, float(m), steps_per_period,
                                          record_stride)

    h = hamiltonian(params, space)
    psi0 = initial_state(initial, space)
    closed = evolve_closed(h, psi0, config, space=space, params=params.closed())
    phi_u = phase_unitary(closed, tau)

    lspec = LindbladSpec.from_params(params, space)
    rho0 = np.outer(psi0, psi0.conj())
    open_traj = evolve_lindblad(lspec, rho0, config, space=space, params=params)
    track = track_dominant_eigenvector(open_traj)
    phi_g = phase_open_pure(track, tau)
    omega_plus = float(track.eigenvalues[track.index_of(tau)])

    return PhaseResult(phi_u=phi_u, phi_g=phi_g, delta_phi=phi_g - phi_u,
                       checkpoint_time=tau, m=m, omega_plus=omega_plus)
