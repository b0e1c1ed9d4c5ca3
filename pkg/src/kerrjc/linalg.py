"""Dense complex linear algebra shared by all modules.

Matrices are plain ``numpy.ndarray`` with ``complex128`` entries, row-major.
The truncated atom-cavity spaces used here never exceed a few dozen
dimensions, so everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_RTOL = 1e-8


class NonHermitianError(ValueError):
    """Input violates the Hermiticity precondition of an operation."""


def as_complex_matrix(a) -> np.ndarray:
    """Coerce to a 2-D complex array, rejecting NaN/Inf entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix entries must be finite")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a).conj().T


def trace(a: np.ndarray) -> complex:
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"trace needs a square matrix, got {a.shape}")
    return complex(np.trace(a))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, a-major block ordering."""
    return np.kron(a, b)


def frobenius_distance(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def hermiticity_defect(a: np.ndarray) -> float:
    """Frobenius norm of the anti-Hermitian part relative to max(1, ||a||_F)."""
    return float(np.linalg.norm(a - dagger(a)) / max(1.0, np.linalg.norm(a)))


def is_hermitian(a: np.ndarray, rtol: float = HERMITICITY_RTOL) -> bool:
    return a.shape[0] == a.shape[1] and hermiticity_defect(a) < rtol


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral decomposition of a Hermitian matrix.

    ``eigenvalues`` are real and sorted in descending order;
    ``eigenvectors`` holds the matching orthonormal columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eig(a: np.ndarray, rtol: float = HERMITICITY_RTOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises NonHermitianError when the anti-Hermitian part exceeds ``rtol``
    relative to max(1, ||a||_F).
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got {a.shape}")
    if hermiticity_defect(a) >= rtol:
        raise NonHermitianError(f"matrix is not Hermitian to rtol={rtol:g}")
    w, v = np.linalg.eigh(a)
    return EigenDecomposition(eigenvalues=w[::-1].copy(), eigenvectors=v[:, ::-1].copy())


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values; for Hermitian input this is sum(|eigenvalues|)."""
    a = np.asarray(a, dtype=complex)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got {a.shape}")
    return float(np.linalg.svd(a, compute_uv=False).sum())
