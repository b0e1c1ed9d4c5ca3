"""Composite atom-cavity Hilbert space with Fock truncation.

The flat basis is ordered |g0>, |e0>, |g1>, |e1>, ... so a level with
``photons`` photons and atomic state ``atom`` sits at index
``2*photons + (1 if atom == 'e' else 0)``.  All full-space operators are
built as kron(cavity, atom) to match that layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATOM_G = "g"
ATOM_E = "e"

# population allowed on the highest kept Fock level before results are suspect
TOP_LEVEL_TOL = 1e-10


class TruncationError(RuntimeError):
    """Dynamics leaked into the highest kept Fock level."""


@dataclass(frozen=True)
class SpaceSpec:
    """Truncated space: cavity levels 0..n_max times a two-level atom."""

    n_max: int
    atom_dim: int = 2

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1 (sectors n=1,2 must exist)")
        if self.atom_dim != 2:
            raise ValueError("atom_dim is fixed at 2")

    @property
    def cavity_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)


def flat_index(atom: str, photons: int, spec: SpaceSpec) -> int:
    """Index of |atom, photons> in the ordered basis."""
    if atom not in (ATOM_G, ATOM_E):
        raise ValueError(f"atom must be 'g' or 'e', got {atom!r}")
    if not 0 <= photons <= spec.n_max:
        raise ValueError(f"photon number {photons} outside [0, {spec.n_max}]")
    return 2 * photons + (1 if atom == ATOM_E else 0)


def basis_label(index: int, spec: SpaceSpec) -> tuple[str, int]:
    """Inverse of flat_index."""
    if not 0 <= index < spec.dim:
        raise ValueError(f"index {index} outside space of dim {spec.dim}")
    return (ATOM_E if index % 2 else ATOM_G, index // 2)


def basis_state(atom: str, photons: int, spec: SpaceSpec) -> np.ndarray:
    v = np.zeros(spec.dim, dtype=complex)
    v[flat_index(atom, photons, spec)] = 1.0
    return v


def identity(spec: SpaceSpec) -> np.ndarray:
    return np.eye(spec.dim, dtype=complex)


def annihilation(spec: SpaceSpec) -> np.ndarray:
    """Cavity annihilation on the full space: a|n> = sqrt(n)|n-1>."""
    a = np.zeros((spec.cavity_dim, spec.cavity_dim), dtype=complex)
    for n in range(1, spec.cavity_dim):
        a[n - 1, n] = np.sqrt(n)
    return np.kron(a, np.eye(2, dtype=complex))


def creation(spec: SpaceSpec) -> np.ndarray:
    return annihilation(spec).conj().T


def number_op(spec: SpaceSpec) -> np.ndarray:
    return np.kron(np.diag(np.arange(spec.cavity_dim, dtype=float)),
                   np.eye(2)).astype(complex)


def sigma_minus(spec: SpaceSpec) -> np.ndarray:
    """Atomic lowering |e,n> -> |g,n> on the full space."""
    sm = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # rows/cols (g, e)
    return np.kron(np.eye(spec.cavity_dim, dtype=complex), sm)


def sigma_plus(spec: SpaceSpec) -> np.ndarray:
    return sigma_minus(spec).conj().T


def sigma_z(spec: SpaceSpec) -> np.ndarray:
    sz = np.diag([-1.0, 1.0]).astype(complex)  # g -> -1, e -> +1
    return np.kron(np.eye(spec.cavity_dim, dtype=complex), sz)


def excitation_number(spec: SpaceSpec) -> np.ndarray:
    """Conserved excitation count a†a + σ+σ-."""
    return number_op(spec) + sigma_plus(spec) @ sigma_minus(spec)


def sector_indices(n: int, spec: SpaceSpec) -> tuple[int, int]:
    """Flat indices of the sector-n basis {|e,n-1>, |g,n>}."""
    if n < 1:
        raise ValueError("sector index n must be >= 1")
    return (flat_index(ATOM_E, n - 1, spec), flat_index(ATOM_G, n, spec))


def top_level_population(state: np.ndarray, spec: SpaceSpec) -> float:
    """Population on the highest kept Fock level (both atomic states)."""
    i_g = flat_index(ATOM_G, spec.n_max, spec)
    i_e = flat_index(ATOM_E, spec.n_max, spec)
    if state.ndim == 1:
        return float(abs(state[i_g]) ** 2 + abs(state[i_e]) ** 2)
    return float(state[i_g, i_g].real + state[i_e, i_e].real)
