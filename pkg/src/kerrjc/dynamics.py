"""Time evolution: Schrödinger and Lindblad integration with fixed-step RK4.

Both right-hand sides are linear and time independent, so a single RK4 step
is the degree-4 Taylor polynomial of the generator; the integrators
precompute that step matrix once and then advance by one matrix-vector
product per step.  ``lindblad_rhs`` stays available as the direct
matrix-in/matrix-out form, and ``lowex_rhs`` is an independently hand-coded
right-hand side on the five lowest basis states used as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import hilbert
from .hilbert import SpaceSpec, TruncationError
from .linalg import hermiticity_defect
from .model import ModelParams

TRACE_TOL = 1e-9
HERMITICITY_TOL = 1e-9
POSITIVITY_FLOOR = -1e-8
NORM_DRIFT_TOL = 1e-10


class PositivityError(RuntimeError):
    """A recorded density matrix violated trace/Hermiticity/positivity bounds."""


@dataclass(frozen=True)
class LindbladSpec:
    """Hamiltonian plus (collapse operator, rate) channels."""

    hamiltonian: np.ndarray
    collapse_ops: tuple[tuple[np.ndarray, float], ...] = ()

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        if hermiticity_defect(h) >= 1e-10:
            raise ValueError("hamiltonian must be Hermitian to 1e-10")
        for _, rate in self.collapse_ops:
            if rate < 0:
                raise ValueError("collapse rates must be nonnegative")
        object.__setattr__(self, "hamiltonian", h)

    @classmethod
    def from_params(cls, params: ModelParams, spec: SpaceSpec) -> "LindbladSpec":
        from .model import collapse_operators, hamiltonian

        return cls(hamiltonian=hamiltonian(params, spec),
                   collapse_ops=collapse_operators(params, spec))


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step grid: step dt, horizon t_final, samples every record_stride steps."""

    dt: float
    t_final: float
    record_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        n = self.t_final / self.dt
        if abs(n - round(n)) > 1e-6:
            raise ValueError("t_final must be an integer number of steps")
        if round(n) % self.record_stride != 0:
            raise ValueError("record_stride must divide the total step count")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @classmethod
    def for_periods(cls, period: float, periods: float,
                    steps_per_period: int = 2000,
                    record_stride: int = 4) -> "IntegratorConfig":
        """Grid spanning ``periods`` oscillation periods of length ``period``."""
        dt = period / steps_per_period
        n_steps = int(round(periods * steps_per_period))
        if n_steps % record_stride:
            n_steps += record_stride - n_steps % record_stride
        return cls(dt=dt, t_final=n_steps * dt, record_stride=record_stride)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Recorded time series of states plus integration metadata.

    ``states`` has shape (N, dim) for pure evolutions and (N, dim, dim) for
    density matrices.  ``max_norm_drift`` logs the largest per-step norm
    deviation seen before renormalization (pure evolutions only).
    """

    times: np.ndarray
    states: np.ndarray
    config: IntegratorConfig
    params: Optional[ModelParams] = None
    max_norm_drift: float = 0.0

    def __post_init__(self):
        self.times.setflags(write=False)
        self.states.setflags(write=False)

    @property
    def is_density(self) -> bool:
        return self.states.ndim == 3

    def index_of(self, t: float) -> int:
        """Index of a sample time on the recorded grid; raises if off-grid."""
        step = self.times[1] - self.times[0] if len(self.times) > 1 else 1.0
        i = int(round(t / step))
        if i < 0 or i >= len(self.times) or abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not on the recorded grid")
        return i


def dissipator(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Lindblad dissipator O rho O† - (1/2){O†O, rho}."""
    if op.shape != rho.shape:
        raise ValueError(f"shape mismatch: {op.shape} vs {rho.shape}")
    odo = op.conj().T @ op
    return op @ rho @ op.conj().T - 0.5 * (odo @ rho + rho @ odo)


def lindblad_rhs(spec: LindbladSpec, rho: np.ndarray) -> np.ndarray:
    """-i[H, rho] plus the rate-weighted dissipators."""
    h = spec.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    for op, rate in spec.collapse_ops:
        if rate:
            out += rate * dissipator(op, rho)
    return out


def liouvillian(spec: LindbladSpec) -> np.ndarray:
    """Superoperator matrix L with vec(rhs) = L vec(rho), row-major vec."""
    h = spec.hamiltonian
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in spec.collapse_ops:
        if not rate:
            continue
        odo = op.conj().T @ op
        sup += rate * (np.kron(op, op.conj())
                       - 0.5 * (np.kron(odo, eye) + np.kron(eye, odo.T)))
    return sup


def rk4_step_matrix(generator: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step of v' = G v as a matrix (exact for linear G)."""
    a = generator * dt
    d = generator.shape[0]
    m = np.eye(d, dtype=complex) + a / 4
    m = np.eye(d, dtype=complex) + (a / 3) @ m
    m = np.eye(d, dtype=complex) + (a / 2) @ m
    return np.eye(d, dtype=complex) + a @ m


# Eq-system support pattern on the basis |g0>,|e0>,|g1>,|e1>,|g2>:
# populations, the n=1 coherence (1,2) and the n=2 coherence (3,4).
LOWEX_DIM = 5
LOWEX_PATTERN = np.zeros((LOWEX_DIM, LOWEX_DIM), dtype=bool)
LOWEX_PATTERN[0, 0] = True
LOWEX_PATTERN[1:3, 1:3] = True
LOWEX_PATTERN[3:5, 3:5] = True


def lowex_rhs(params: ModelParams, rho: np.ndarray, support_tol: float = 1e-12) -> np.ndarray:
    """Hand-coded low-excitation derivatives on |g0>,|e0>,|g1>,|e1>,|g2>.

    Covers the populations and the two in-sector coherences; all other
    matrix elements are required to vanish (they stay zero under the
    dynamics for this support) and their derivatives are returned as zero.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (LOWEX_DIM, LOWEX_DIM):
        raise ValueError(f"expected a {LOWEX_DIM}x{LOWEX_DIM} block, got {rho.shape}")
    if np.abs(rho[~LOWEX_PATTERN]).max(initial=0.0) > support_tol:
        raise ValueError("support outside the low-excitation pattern")

    d, chi, g = params.delta, params.chi, params.g
    gam, p, pz = params.gamma, params.p, params.p_z
    r2 = np.sqrt(2.0)

    out = np.zeros_like(rho)
    out[0, 0] = p * rho[1, 1] + gam * rho[2, 2]
    out[1, 1] = -1j * g * (rho[2, 1] - rho[1, 2]) - p * rho[1, 1] + gam * rho[3, 3]
    out[2, 2] = (-1j * g * (rho[1, 2] - rho[2, 1]) - gam * rho[2, 2]
                 + 2 * gam * rho[4, 4] + p * rho[3, 3])
    out[1, 2] = (-1j * g * (rho[2, 2] - rho[1, 1]) - 1j * (d - chi) * rho[1, 2]
                 - (gam / 2) * rho[1, 2] - (p / 2) * rho[1, 2]
                 + gam * r2 * rho[3, 4] - 2 * pz * rho[1, 2])
    out[3, 3] = 1j * r2 * g * (rho[3, 4] - rho[4, 3]) - (p + gam) * rho[3, 3]
    # population-difference term enters with +i so that sector-2 population
    # actually flows out of |e1> (consistent with the diagonal lines above)
    out[3, 4] = (1j * r2 * g * (rho[3, 3] - rho[4, 4]) - 1j * (d - 3 * chi) * rho[3, 4]
                 - (p / 2 + 3 * gam / 2 + 2 * pz) * rho[3, 4])
    out[4, 4] = -1j * r2 * g * (rho[3, 4] - rho[4, 3]) - 2 * gam * rho[4, 4]
    out[2, 1] = np.conj(out[1, 2])
    out[4, 3] = np.conj(out[3, 4])
    return out


def _check_density_stack(states: np.ndarray, times: np.ndarray) -> None:
    traces = np.einsum("kii->k", states).real
    bad = np.abs(traces - 1.0) > TRACE_TOL
    if bad.any():
        k = int(np.argmax(bad))
        raise PositivityError(f"trace drifted to {traces[k]:.12g} at t={times[k]:g}")
    defect = np.sqrt((np.abs(states - states.conj().transpose(0, 2, 1)) ** 2)
                     .sum(axis=(1, 2)))
    bad = defect > HERMITICITY_TOL
    if bad.any():
        k = int(np.argmax(bad))
        raise PositivityError(f"Hermiticity lost at t={times[k]:g}")
    mins = np.linalg.eigvalsh(states)[:, 0]
    bad = mins < POSITIVITY_FLOOR
    if bad.any():
        k = int(np.argmax(bad))
        raise PositivityError(f"negative eigenvalue {mins[k]:.3e} at t={times[k]:g} "
                              "(time step too large)")


def _check_truncation_stack(states: np.ndarray, times: np.ndarray,
                            space: Optional[SpaceSpec]) -> None:
    if space is None:
        return
    i_g = hilbert.flat_index(hilbert.ATOM_G, space.n_max, space)
    i_e = hilbert.flat_index(hilbert.ATOM_E, space.n_max, space)
    if states.ndim == 2:
        pops = np.abs(states[:, i_g]) ** 2 + np.abs(states[:, i_e]) ** 2
    else:
        pops = states[:, i_g, i_g].real + states[:, i_e, i_e].real
    bad = pops > hilbert.TOP_LEVEL_TOL
    if bad.any():
        k = int(np.argmax(bad))
        raise TruncationError(
            f"top Fock level population {pops[k]:.3e} at t={times[k]:g}; increase n_max")


def evolve_closed(h: np.ndarray, psi0: np.ndarray, config: IntegratorConfig,
                  space: Optional[SpaceSpec] = None,
                  params: Optional[ModelParams] = None) -> TrajectoryRecord:
    """RK4 integration of psi' = -i H psi with per-step renormalization."""
    psi = np.asarray(psi0, dtype=complex).copy()
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("psi0 must be normalized")
    psi /= norm

    step = rk4_step_matrix(-1j * np.asarray(h, dtype=complex), config.dt)
    n_rec = config.n_steps // config.record_stride + 1
    states = np.empty((n_rec, psi.size), dtype=complex)
    states[0] = psi

    max_drift = 0.0
    rec = 1
    for k in range(1, config.n_steps + 1):
        psi = step.dot(psi)
        norm = math.sqrt(np.vdot(psi, psi).real)
        max_drift = max(max_drift, abs(norm - 1.0))
        psi /= norm
        if k % config.record_stride == 0:
            states[rec] = psi
            rec += 1

    times = np.arange(n_rec) * (config.dt * config.record_stride)
    _check_truncation_stack(states, times, space)
    return TrajectoryRecord(times=times, states=states, config=config,
                            params=params, max_norm_drift=max_drift)


def evolve_lindblad(spec: LindbladSpec, rho0: np.ndarray, config: IntegratorConfig,
                    space: Optional[SpaceSpec] = None,
                    params: Optional[ModelParams] = None,
                    check_health: bool = True) -> TrajectoryRecord:
    """RK4 integration of the Lindblad equation on the full density matrix."""
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    if rho0.shape != (d, d) or spec.hamiltonian.shape != (d, d):
        raise ValueError("rho0 and hamiltonian dimensions disagree")

    # compose record_stride RK4 steps into one matrix; the recorded samples
    # are identical to stepping one dt at a time (up to float associativity)
    step = rk4_step_matrix(liouvillian(spec), config.dt)
    hop = np.linalg.matrix_power(step, config.record_stride)
    v = rho0.reshape(-1).copy()
    n_rec = config.n_steps // config.record_stride + 1
    states = np.empty((n_rec, d, d), dtype=complex)
    states[0] = rho0
    for k in range(1, n_rec):
        v = hop.dot(v)
        states[k] = v.reshape(d, d)

    times = np.arange(n_rec) * (config.dt * config.record_stride)
    if check_health:
        _check_density_stack(states, times)
    _check_truncation_stack(states, times, space)
    return TrajectoryRecord(times=times, states=states, config=config, params=params)


def write_trajectory_csv(record: TrajectoryRecord, path) -> None:
    """Debug dump: t, then row-major Re/Im of the density-matrix entries."""
    if record.is_density:
        mats = record.states
    else:
        mats = np.einsum("ki,kj->kij", record.states, record.states.conj())
    d = mats.shape[1]
    header = ["t"]
    for i in range(d):
        for j in range(d):
            header += [f"re_{i}{j}", f"im_{i}{j}"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for t, m in zip(record.times, mats):
            flat = m.reshape(-1)
            cells = [f"{t:.17g}"]
            for z in flat:
                cells += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            fh.write(",".join(cells) + "\n")
