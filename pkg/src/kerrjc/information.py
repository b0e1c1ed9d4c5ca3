"""Entanglement and Bloch-sphere diagnostics.

Negativity is computed on the full truncated space (partial transpose over
the two-level atom against the whole cavity ladder) because dissipation
couples excitation sectors.  Bloch projections use the n=1 sector basis
{|e0>, |g1>} with |e0> at the north pole and y = 2 Im<g1|rho|e0>, which
makes the resonant closed evolution of |e0> a right-handed rotation about
+x (north pole toward -y).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert
from .hilbert import SpaceSpec
from .linalg import trace_norm

NEGATIVITY_FORMULA_TOL = 1e-10
PLANARITY_THRESHOLD = 0.02
BLOCH_EPS = 1e-6


@dataclass(frozen=True)
class BlochVector:
    """Sector-projected Bloch components plus the sector population weight."""

    x: float
    y: float
    z: float
    weight: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class PlanarityReport:
    """Largest relative off-plane excursion of a Bloch trajectory."""

    plane_normal: tuple[float, float, float]
    max_off_plane: float
    samples_used: int


def partial_transpose_atom(rho: np.ndarray, spec: SpaceSpec) -> np.ndarray:
    """Transpose the atomic indices only."""
    d = spec.dim
    if rho.shape != (d, d):
        raise ValueError(f"expected shape {(d, d)}, got {rho.shape}")
    blocks = rho.reshape(spec.cavity_dim, 2, spec.cavity_dim, 2)
    return blocks.transpose(0, 3, 2, 1).reshape(d, d)


def negativity(rho: np.ndarray, spec: SpaceSpec) -> float:
    """Entanglement negativity: sum of |negative eigenvalues| of the partial transpose.

    Cross-checked against the trace-norm form (||rho^T_A||_1 - 1)/2; the two
    must agree to NEGATIVITY_FORMULA_TOL or the eigensolve is suspect.
    """
    pt = partial_transpose_atom(rho, spec)
    eigs = np.linalg.eigvalsh(pt)
    from_eigs = float(-eigs[eigs < 0].sum())
    from_norm = (trace_norm(pt) - 1.0) / 2.0
    if abs(from_eigs - from_norm) > NEGATIVITY_FORMULA_TOL:
        raise ArithmeticError(
            f"negativity formulas disagree: {from_eigs:.3e} vs {from_norm:.3e}")
    return from_eigs


def bloch_project_n1(state: np.ndarray, spec: SpaceSpec) -> BlochVector:
    """Project a state (vector or density matrix) onto the n=1 Bloch sphere."""
    i_e, i_g = hilbert.sector_indices(1, spec)
    if state.ndim == 1:
        a = abs(state[i_e]) ** 2
        d = abs(state[i_g]) ** 2
        c = state[i_e] * np.conj(state[i_g])
    else:
        a = state[i_e, i_e].real
        d = state[i_g, i_g].real
        c = state[i_e, i_g]
    return BlochVector(x=2 * c.real, y=-2 * c.imag, z=float(a - d), weight=float(a + d))


def bloch_series(record_states: np.ndarray, spec: SpaceSpec) -> np.ndarray:
    """Bloch components for every sample of a trajectory; shape (N, 4) = x,y,z,weight."""
    i_e, i_g = hilbert.sector_indices(1, spec)
    if record_states.ndim == 2:
        a = np.abs(record_states[:, i_e]) ** 2
        d = np.abs(record_states[:, i_g]) ** 2
        c = record_states[:, i_e] * np.conj(record_states[:, i_g])
    else:
        a = record_states[:, i_e, i_e].real
        d = record_states[:, i_g, i_g].real
        c = record_states[:, i_e, i_g]
    return np.column_stack([2 * c.real, -2 * c.imag, a - d, a + d])


def planarity(points: np.ndarray, reference_normal) -> PlanarityReport:
    """Max of |r·n| / max(|r|, eps) over a Bloch trajectory.

    ``points`` is (N, 3) (a trailing weight column is ignored).  At least two
    samples must have |r| > eps.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] < 3:
        raise ValueError("points must be an (N, >=3) array")
    pts = pts[:, :3]
    normal = np.asarray(reference_normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    radii = np.linalg.norm(pts, axis=1)
    usable = int((radii > BLOCH_EPS).sum())
    if usable < 2:
        raise ValueError("fewer than two samples with |r| above the floor")
    off = np.abs(pts @ normal) / np.maximum(radii, BLOCH_EPS)
    return PlanarityReport(
        plane_normal=(float(normal[0]), float(normal[1]), float(normal[2])),
        max_off_plane=float(off.max()),
        samples_used=usable,
    )
