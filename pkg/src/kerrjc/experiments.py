"""Parameter sweeps: negativity and geometric-phase data products.

Every sweep is deterministic (no randomness anywhere in the pipeline) and
assembles rows in grid order, so re-running an identical spec reproduces
the CSV byte for byte.  Grid points are independent jobs; with
``workers > 1`` they are evaluated by a process pool and reassembled in
order by the single writer.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import __version__
from .dynamics import IntegratorConfig, LindbladSpec, evolve_closed, evolve_lindblad
from .geomphase import (
    SingularCheckpointError,
    TrackingError,
    phase_open_pure,
    phase_unitary,
    track_dominant_eigenvector,
    wrap_angle,
)
from .hilbert import SpaceSpec
from .information import bloch_series, negativity, planarity
from .model import (
    InitialStateSpec,
    ModelParams,
    hamiltonian,
    initial_state,
    is_resonant,
    perpendicular_state,
    sector_analytics,
)

SWEEP_KINDS = ("negativity_theta", "negativity_delta", "gp_theta", "gp_delta",
               "bloch_traj")
DEFAULT_OPEN_RATES = (0.1, 0.0, 0.01)
OMEGA_DEGRADED = 0.05
DEFAULT_N_MAX = 4

GP_COLUMNS = ("param", "m", "tau", "phi_u", "phi_g", "delta_phi_wrapped",
              "delta_phi_raw", "omega_plus", "valid")
NEG_COLUMNS = ("param", "t", "neg_closed", "neg_open")
BLOCH_COLUMNS = ("case", "series", "t", "x", "y", "z", "weight")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep definition: kind, parameter grid, base model, open rates."""

    kind: str
    grid: tuple[float, ...]
    base_params: ModelParams
    m_values: tuple[int, ...] = (1, 2, 3)
    open_rates: tuple[float, float, float] = DEFAULT_OPEN_RATES
    steps_per_period: int = 2000
    record_stride: int = 4
    periods: float = 6.0
    n_max: int = DEFAULT_N_MAX
    workers: int = 1

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"unknown sweep kind {self.kind!r}")
        if len(self.grid) == 0:
            raise ValueError("grid must be nonempty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if any(m < 1 for m in self.m_values):
            raise ValueError("m values must be >= 1")
        if any(r < 0 for r in self.open_rates):
            raise ValueError("open rates must be nonnegative")

    @property
    def open_params(self) -> ModelParams:
        g, p, pz = self.open_rates
        return self.base_params.with_rates(g, p, pz)

    @property
    def space(self) -> SpaceSpec:
        return SpaceSpec(self.n_max)


@dataclass
class SweepResult:
    spec: SweepSpec
    columns: tuple[str, ...]
    rows: list[tuple]
    meta: dict = field(default_factory=dict)


def default_grid(kind: str) -> tuple[float, ...]:
    if kind == "negativity_theta":
        return tuple(np.linspace(0.0, math.pi / 2, 9))
    if kind == "gp_theta":
        return tuple(np.linspace(0.0, 2 * math.pi, 64))
    if kind in ("negativity_delta", "gp_delta"):
        return tuple(np.linspace(-4.0, 4.0, 81))
    return (0.0,)  # bloch_traj carries its cases internally


def default_spec(kind: str, **overrides) -> SweepSpec:
    """Sweep spec with the package defaults for the given kind."""
    base = overrides.pop("base_params", None)
    if base is None:
        chi = 0.0 if kind in ("negativity_delta",) else 0.5
        base = ModelParams(delta=chi, chi=chi)
    kw = dict(kind=kind, grid=default_grid(kind), base_params=base)
    if kind.startswith("negativity"):
        kw["record_stride"] = 16
    if kind == "bloch_traj":
        kw["periods"] = 3.0
    kw.update(overrides)
    return SweepSpec(**kw)


def _negativity_series(states: np.ndarray, space: SpaceSpec) -> np.ndarray:
    """Negativity per sample, batched; keeps the two-formula cross-check."""
    if states.ndim == 2:
        rhos = np.einsum("ki,kj->kij", states, states.conj())
    else:
        rhos = states
    n, d = rhos.shape[0], rhos.shape[1]
    pt = rhos.reshape(n, space.cavity_dim, 2, space.cavity_dim, 2)
    pt = pt.transpose(0, 1, 4, 3, 2).reshape(n, d, d)
    eigs = np.linalg.eigvalsh(pt)
    from_eigs = np.where(eigs < 0, -eigs, 0.0).sum(axis=1)
    from_norm = (np.linalg.svd(pt, compute_uv=False).sum(axis=1) - 1.0) / 2.0
    worst = np.abs(from_eigs - from_norm).max()
    if worst > 1e-10:
        raise ArithmeticError(f"negativity formulas disagree by {worst:.3e}")
    return from_eigs


def _neg_point(args) -> list[tuple]:
    (value, params_open, init, n_max, periods, spp, stride) = args
    space = SpaceSpec(n_max)
    sa = sector_analytics(params_open, init.n)
    period = 2 * math.pi / sa.rabi_frequency
    config = IntegratorConfig.for_periods(period, periods, spp, stride)
    h = hamiltonian(params_open, space)
    psi0 = initial_state(init, space)

    closed = evolve_closed(h, psi0, config, space=space)
    neg_c = _negativity_series(closed.states, space)
    rho0 = np.outer(psi0, psi0.conj())
    lspec = LindbladSpec.from_params(params_open, space)
    opened = evolve_lindblad(lspec, rho0, config, space=space)
    neg_o = _negativity_series(opened.states, space)

    return [(value, float(t), float(nc), float(no))
            for t, nc, no in zip(closed.times, neg_c, neg_o)]


def _gp_point(args) -> list[tuple]:
    (value, params_open, init, n_max, m_values, spp, stride) = args
    space = SpaceSpec(n_max)
    sa = sector_analytics(params_open, init.n)
    period = 2 * math.pi / sa.rabi_frequency
    m_max = max(m_values)
    config = IntegratorConfig.for_periods(period, float(m_max), spp, stride)
    h = hamiltonian(params_open, space)
    psi0 = initial_state(init, space)

    closed = evolve_closed(h, psi0, config, space=space)
    rho0 = np.outer(psi0, psi0.conj())
    lspec = LindbladSpec.from_params(params_open, space)
    opened = evolve_lindblad(lspec, rho0, config, space=space)

    try:
        track = track_dominant_eigenvector(opened)
    except TrackingError:
        nan = float("nan")
        return [(value, m, m * period, nan, nan, nan, nan, nan, "tracking_error")
                for m in m_values]

    rows = []
    for m in m_values:
        tau = m * period
        omega_plus = float(track.eigenvalues[track.index_of(tau)])
        try:
            phi_u = phase_unitary(closed, tau)
            phi_g = phase_open_pure(track, tau)
        except SingularCheckpointError:
            nan = float("nan")
            rows.append((value, m, tau, nan, nan, nan, nan, omega_plus, "singular"))
            continue
        raw = phi_g - phi_u
        wrapped = wrap_angle(raw)
        flag = "degraded" if omega_plus < OMEGA_DEGRADED else "ok"
        rows.append((value, m, tau, phi_u, phi_g, wrapped, raw, omega_plus, flag))
    return rows


def _map_points(fn, jobs, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def run_negativity_theta(spec: SweepSpec) -> SweepResult:
    """Negativity vs time for a family of initial polar angles, on resonance."""
    if not is_resonant(spec.base_params, 1, tol=1e-9):
        raise ValueError("negativity_theta requires sector-1 resonance (delta = chi)")
    if spec.grid[0] < -1e-12 or spec.grid[-1] > math.pi / 2 + 1e-12:
        raise ValueError("negativity_theta grid must lie in [0, pi/2]")
    jobs = [(theta, spec.open_params, InitialStateSpec(theta0=theta, phi0=0.0, n=1),
             spec.n_max, spec.periods, spec.steps_per_period, spec.record_stride)
            for theta in spec.grid]
    rows = [r for point in _map_points(_neg_point, jobs, spec.workers) for r in point]
    return SweepResult(spec=spec, columns=NEG_COLUMNS, rows=rows)


def run_negativity_delta(spec: SweepSpec) -> SweepResult:
    """Negativity vs time over a detuning grid, perpendicular initial state."""
    jobs = []
    for delta in spec.grid:
        params = replace(spec.open_params, delta=delta)
        init = perpendicular_state(params, 1)
        jobs.append((delta, params, init, spec.n_max, spec.periods,
                     spec.steps_per_period, spec.record_stride))
    rows = [r for point in _map_points(_neg_point, jobs, spec.workers) for r in point]
    return SweepResult(spec=spec, columns=NEG_COLUMNS, rows=rows)


def run_gp_theta(spec: SweepSpec) -> SweepResult:
    """Phase difference vs initial polar angle at fixed sector-1 resonance."""
    if not is_resonant(spec.base_params, 1, tol=1e-9):
        raise ValueError("gp_theta requires sector-1 resonance (delta = chi)")
    if spec.grid[0] < -1e-12 or spec.grid[-1] > 2 * math.pi + 1e-12:
        raise ValueError("gp_theta grid must lie in [0, 2*pi]")
    jobs = [(theta, spec.open_params, InitialStateSpec(theta0=theta, phi0=0.0, n=1),
             spec.n_max, spec.m_values, spec.steps_per_period, spec.record_stride)
            for theta in spec.grid]
    rows = [r for point in _map_points(_gp_point, jobs, spec.workers) for r in point]
    return SweepResult(spec=spec, columns=GP_COLUMNS, rows=rows)


def run_gp_delta(spec: SweepSpec) -> SweepResult:
    """Phase difference vs detuning with per-point perpendicular initial states."""
    jobs = []
    for delta in spec.grid:
        params = replace(spec.open_params, delta=delta)
        init = perpendicular_state(params, 1)
        jobs.append((delta, params, init, spec.n_max, spec.m_values,
                     spec.steps_per_period, spec.record_stride))
    rows = [r for point in _map_points(_gp_point, jobs, spec.workers) for r in point]
    return SweepResult(spec=spec, columns=GP_COLUMNS, rows=rows)


def run_bloch_traj(spec: SweepSpec) -> SweepResult:
    """Unitary path, density projection and tracked-eigenvector path per case.

    Runs one resonant case (the base parameters) and one off-resonant case
    (delta = 2g, chi = 0), both from perpendicular initial states, and
    reports a planarity figure against the unitary rotation axis for each
    series.
    """
    if not is_resonant(spec.base_params, 1, tol=1e-9):
        raise ValueError("bloch_traj base parameters must be resonant (delta = chi)")
    g = spec.base_params.g
    cases = (("resonant", spec.open_params),
             ("off_resonant", replace(spec.open_params, delta=2 * g, chi=0.0)))
    space = spec.space
    rows: list[tuple] = []
    reports: dict[tuple[str, str], object] = {}

    for label, params in cases:
        sa = sector_analytics(params, 1)
        period = 2 * math.pi / sa.rabi_frequency
        config = IntegratorConfig.for_periods(period, spec.periods,
                                              spec.steps_per_period,
                                              spec.record_stride)
        init = perpendicular_state(params, 1)
        psi0 = initial_state(init, space)
        h = hamiltonian(params, space)

        closed = evolve_closed(h, psi0, config, space=space)
        rho0 = np.outer(psi0, psi0.conj())
        opened = evolve_lindblad(LindbladSpec.from_params(params, space), rho0,
                                 config, space=space)
        track = track_dominant_eigenvector(opened)

        series = {
            "unitary": bloch_series(closed.states, space),
            "rho_proj": bloch_series(opened.states, space),
            "eigvec": bloch_series(track.vectors, space),
        }
        for name in ("unitary", "rho_proj", "eigvec"):
            data = series[name]
            reports[(label, name)] = planarity(data[:, :3], np.array(sa.axis))
            for t, (x, y, z, w) in zip(closed.times, data):
                rows.append((label, name, float(t), float(x), float(y),
                             float(z), float(w)))

    return SweepResult(spec=spec, columns=BLOCH_COLUMNS, rows=rows,
                       meta={"planarity": reports})


_RUNNERS = {
    "negativity_theta": run_negativity_theta,
    "negativity_delta": run_negativity_delta,
    "gp_theta": run_gp_theta,
    "gp_delta": run_gp_delta,
    "bloch_traj": run_bloch_traj,
}


def run_sweep(spec: SweepSpec) -> SweepResult:
    return _RUNNERS[spec.kind](spec)


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def provenance_lines(spec: SweepSpec, timestamp: Optional[str] = None) -> list[str]:
    """Header lines (# prefixed) recording the full run parameters."""
    p = spec.base_params
    lines = [
        f"# kerrjc {__version__} sweep={spec.kind}",
        f"# model: delta={p.delta:.17g} chi={p.chi:.17g} g={p.g:.17g}",
        f"# open_rates: gamma={spec.open_rates[0]:.17g} p={spec.open_rates[1]:.17g} "
        f"p_z={spec.open_rates[2]:.17g}",
        f"# integrator: steps_per_period={spec.steps_per_period} "
        f"record_stride={spec.record_stride} periods={spec.periods:.17g}",
        f"# space: n_max={spec.n_max}",
        f"# m_values: {','.join(str(m) for m in spec.m_values)}",
        f"# grid: {','.join(f'{v:.17g}' for v in spec.grid)}",
    ]
    if is_resonant(p, 1, tol=1e-9):
        lines.append("# note: sector n=1 resonance (delta = chi)")
    if timestamp is not None:
        lines.append(f"# written: {timestamp}")
    return lines


def write_sweep_csv(result: SweepResult, path, timestamp: Optional[str] = None) -> None:
    """Write one sweep as CSV with '#' provenance header lines."""
    lines = provenance_lines(result.spec, timestamp)
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")
        fh.write(",".join(result.columns) + "\n")
        for row in result.rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
