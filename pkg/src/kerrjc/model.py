"""Kerr-nonlinear Jaynes-Cummings Hamiltonian and its sector structure.

All frequencies and rates are expressed in units of the coupling g
(g = 1 by default).  Excitation sector n is the invariant two-dimensional
subspace spanned by {|e,n-1>, |g,n>}; that ordering fixes every Bloch
projection in the package, with |e,n-1> at the north pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import hilbert
from .hilbert import SpaceSpec

RESONANCE_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters: detuning, Kerr strength, coupling, decay rates.

    delta  -- atom-cavity detuning
    chi    -- Kerr nonlinearity strength
    g      -- atom-field coupling (unit scale)
    gamma  -- cavity photon loss rate
    p      -- atomic relaxation rate
    p_z    -- pure atomic dephasing rate
    """

    delta: float
    chi: float
    g: float = 1.0
    gamma: float = 0.0
    p: float = 0.0
    p_z: float = 0.0

    def __post_init__(self):
        vals = (self.delta, self.chi, self.g, self.gamma, self.p, self.p_z)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("model parameters must be finite")
        if self.g <= 0:
            raise ValueError("coupling g must be positive")
        for name in ("gamma", "p", "p_z"):
            if getattr(self, name) < 0:
                raise ValueError(f"rate {name} must be nonnegative")

    def closed(self) -> "ModelParams":
        """Copy with all dissipation rates set to zero."""
        return replace(self, gamma=0.0, p=0.0, p_z=0.0)

    def with_rates(self, gamma: float, p: float, p_z: float) -> "ModelParams":
        return replace(self, gamma=gamma, p=p, p_z=p_z)


@dataclass(frozen=True)
class SectorAnalytics:
    """Closed-form structure of one excitation sector.

    rabi_frequency -- generalized Rabi frequency sqrt(eff_detuning^2 + 4 g^2 n)
    eff_detuning   -- sector effective detuning delta - chi*(2n - 1)
    e_plus/e_minus -- sector eigenenergies
    energy_offset  -- scalar part of the sector block
    axis           -- unit rotation axis on the sector Bloch sphere (x, y, z)
    axis_polar     -- polar angle of that axis measured from +z
    """

    n: int
    rabi_frequency: float
    eff_detuning: float
    e_plus: float
    e_minus: float
    energy_offset: float
    axis: tuple[float, float, float]
    axis_polar: float


@dataclass(frozen=True)
class InitialStateSpec:
    """Pure sector-n state cos(theta0/2)|e,n-1> + e^{i phi0} sin(theta0/2)|g,n>."""

    theta0: float
    phi0: float = 0.0
    n: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.theta0) and math.isfinite(self.phi0)):
            raise ValueError("angles must be finite")
        if not -1e-12 <= self.theta0 <= 2 * math.pi + 1e-12:
            raise ValueError("theta0 must lie in [0, 2*pi]")
        if not -1e-12 <= self.phi0 <= 2 * math.pi + 1e-12:
            raise ValueError("phi0 must lie in [0, 2*pi]")
        if self.n < 1:
            raise ValueError("sector index n must be >= 1")


def hamiltonian(params: ModelParams, spec: SpaceSpec) -> np.ndarray:
    """(delta/2) sigma_z + chi n^2 + g (sigma_+ a + sigma_- a†) on the full space."""
    nop = hilbert.number_op(spec)
    a = hilbert.annihilation(spec)
    sp = hilbert.sigma_plus(spec)
    sm = hilbert.sigma_minus(spec)
    return (params.delta / 2) * hilbert.sigma_z(spec) + params.chi * (nop @ nop) \
        + params.g * (sp @ a + sm @ a.conj().T)


def sector_block(params: ModelParams, n: int) -> np.ndarray:
    """2x2 Hamiltonian block in the basis {|e,n-1>, |g,n>}."""
    if n < 1:
        raise ValueError("sector n=0 is one-dimensional, no block")
    d, chi, g = params.delta, params.chi, params.g
    return np.array(
        [[d / 2 + chi * (n - 1) ** 2, g * math.sqrt(n)],
         [g * math.sqrt(n), -d / 2 + chi * n**2]],
        dtype=complex,
    )


def sector_analytics(params: ModelParams, n: int) -> SectorAnalytics:
    if n < 1:
        raise ValueError("sector index n must be >= 1")
    d, chi, g = params.delta, params.chi, params.g
    eff = d - chi * (2 * n - 1)
    omega = math.sqrt(eff**2 + 4 * g * g * n)
    e0 = (chi * (n - 1) ** 2 + chi * n**2) / 2
    ax = np.array([g * math.sqrt(n), 0.0, eff / 2])
    ax /= np.linalg.norm(ax)
    # polar angle from +z, so a state at theta0 = axis_polar + pi/2 is
    # exactly perpendicular to the rotation axis
    polar = math.atan2(g * math.sqrt(n), eff / 2)
    return SectorAnalytics(
        n=n,
        rabi_frequency=omega,
        eff_detuning=eff,
        e_plus=e0 + omega / 2,
        e_minus=e0 - omega / 2,
        energy_offset=e0,
        axis=(float(ax[0]), float(ax[1]), float(ax[2])),
        axis_polar=polar,
    )


def dressed_states(params: ModelParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized sector eigenvectors (psi_plus, psi_minus) in {|e,n-1>, |g,n>}.

    Pairing satisfies H_sector psi_pm = E_pm psi_pm.
    """
    sa = sector_analytics(params, n)
    g_comp_plus = -sa.eff_detuning / 2 + sa.rabi_frequency / 2
    g_comp_minus = -sa.eff_detuning / 2 - sa.rabi_frequency / 2
    plus = np.array([params.g * math.sqrt(n), g_comp_plus], dtype=complex)
    minus = np.array([params.g * math.sqrt(n), g_comp_minus], dtype=complex)
    return plus / np.linalg.norm(plus), minus / np.linalg.norm(minus)


def is_resonant(params: ModelParams, n: int, tol: float = RESONANCE_TOL) -> bool:
    """True when the sector-n effective detuning vanishes (delta = chi(2n-1))."""
    return abs(params.delta - params.chi * (2 * n - 1)) <= tol * max(1.0, abs(params.delta))


def resonant_state(params: ModelParams, n: int, t: float, spec: SpaceSpec) -> np.ndarray:
    """Closed-form resonant evolution of |g,n> at time t, on the full space.

    psi(t) = exp(-i E0 t) [cos(Omega t/2)|g,n> - i sin(Omega t/2)|e,n-1>]
    with E0 = chi (n-1/2)^2 + chi/4.  Only valid on sector-n resonance.
    """
    if not is_resonant(params, n, tol=1e-10):
        raise ValueError("closed-form resonant evolution requires delta = chi(2n-1)")
    sa = sector_analytics(params, n)
    e0 = params.chi * (n - 0.5) ** 2 + params.chi / 4
    half = sa.rabi_frequency * t / 2
    i_e, i_g = hilbert.sector_indices(n, spec)
    psi = np.zeros(spec.dim, dtype=complex)
    phase = np.exp(-1j * e0 * t)
    psi[i_g] = phase * math.cos(half)
    psi[i_e] = phase * (-1j) * math.sin(half)
    return psi


def initial_state(init: InitialStateSpec, spec: SpaceSpec) -> np.ndarray:
    """Embed the parametrized sector state into the full space."""
    i_e, i_g = hilbert.sector_indices(init.n, spec)
    psi = np.zeros(spec.dim, dtype=complex)
    psi[i_e] = math.cos(init.theta0 / 2)
    psi[i_g] = np.exp(1j * init.phi0) * math.sin(init.theta0 / 2)
    return psi


def perpendicular_state(params: ModelParams, n: int) -> InitialStateSpec:
    """Initial-state spec perpendicular to the sector rotation axis (phi0 = 0).

    The unitary evolution of this state traces a great circle.
    """
    sa = sector_analytics(params, n)
    return InitialStateSpec(theta0=sa.axis_polar + math.pi / 2, phi0=0.0, n=n)


def collapse_operators(params: ModelParams, spec: SpaceSpec) -> tuple[tuple[np.ndarray, float], ...]:
    """(operator, rate) pairs for photon loss, atomic relaxation and dephasing."""
    ops = []
    if params.gamma > 0:
        ops.append((hilbert.annihilation(spec), params.gamma))
    if params.p > 0:
        ops.append((hilbert.sigma_minus(spec), params.p))
    if params.p_z > 0:
        ops.append((hilbert.sigma_z(spec), params.p_z))
    return tuple(ops)
