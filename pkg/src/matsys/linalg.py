"""Hermitian linear algebra kernel.

Conventions used across the package: the inner product is the Frobenius one,
<A, B> = tr(A* B), conjugate linear in the first slot, and real spans of
hermitian matrices use its real part.  Eigenvalues are always reported in
ascending order.  All routines work on plain complex ndarrays at desk scale
(n <= 16 or so); nothing here is tuned for large sparse problems.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, DomainError, NonHermitian

__all__ = [
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "EigenDecomposition",
    "direct_sum",
    "frobenius_inner",
    "frobenius_norm",
    "hermitian_eig",
    "hermitian_part",
    "hermitianize",
    "is_psd",
    "matrix_exp",
    "matrix_function",
    "matrix_log",
    "pinv_hermitian",
    "plus_projector",
    "random_density",
    "random_hermitian",
    "schur_psd_test",
]

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _as_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """(A + A*)/2."""
    a = _as_square(a)
    return 0.5 * (a + a.conj().T)


def hermitianize(a: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Symmetrize and check the residual.

    Returns (A + A*)/2 provided the entrywise anti-hermitian residual is below
    tol * (1 + max|A|); raises NonHermitian otherwise.  Symmetrizing first
    absorbs roundoff from upstream arithmetic.
    """
    a = _as_square(a)
    h = 0.5 * (a + a.conj().T)
    scale = 1.0 + float(np.max(np.abs(a))) if a.size else 1.0
    resid = float(np.max(np.abs(a - h))) if a.size else 0.0
    if resid > tol * scale:
        raise NonHermitian(f"anti-hermitian residual {resid:.3e} exceeds tolerance")
    return h


def frobenius_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """tr(A* B), conjugate linear in the first argument."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a)))


@dataclass
class EigenDecomposition:
    """Spectral data of a hermitian matrix.

    eigenvalues are ascending; eigenvectors[:, i] belongs to eigenvalues[i].
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eig(a: np.ndarray, tol: float = 1e-12) -> EigenDecomposition:
    """Full eigendecomposition of a hermitian matrix.

    The input is symmetrized first; a residual above tol raises NonHermitian.
    """
    h = hermitianize(a, tol=tol)
    w, v = np.linalg.eigh(h)
    return EigenDecomposition(eigenvalues=w, eigenvectors=v)


def matrix_function(a: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a scalar function to a hermitian matrix through its spectrum.

    f receives the eigenvalue vector and must return an array of the same
    shape.  Non-finite values in f(eigenvalues) raise DomainError, which is
    how log rejects nonpositive spectra.
    """
    dec = hermitian_eig(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        fw = np.asarray(f(dec.eigenvalues))
    if fw.shape != dec.eigenvalues.shape:
        raise DomainError("scalar function must map the spectrum elementwise")
    if not np.all(np.isfinite(fw)):
        raise DomainError("scalar function not finite on the spectrum")
    v = dec.eigenvectors
    out = (v * fw) @ v.conj().T
    return hermitian_part(out) if np.isrealobj(fw) or np.all(np.isreal(fw)) else out


def matrix_exp(a: np.ndarray) -> np.ndarray:
    """exp(A) for hermitian A, shifted by the top eigenvalue for stability."""
    dec = hermitian_eig(a)
    shift = float(np.max(dec.eigenvalues))
    w = np.exp(dec.eigenvalues - shift)
    v = dec.eigenvectors
    return np.exp(shift) * hermitian_part((v * w) @ v.conj().T)


def matrix_log(a: np.ndarray) -> np.ndarray:
    """log(A) for hermitian positive definite A."""
    return matrix_function(a, np.log)


def is_psd(a: np.ndarray, tol: float = 1e-10) -> bool:
    """Smallest eigenvalue >= -tol."""
    dec = hermitian_eig(a)
    return bool(dec.eigenvalues[0] >= -tol)


def pinv_hermitian(a: np.ndarray, cutoff: float = 1e-10) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a hermitian matrix.

    Eigenvalues below cutoff * max|eigenvalue| are treated as zero.
    """
    dec = hermitian_eig(a)
    w = dec.eigenvalues
    top = float(np.max(np.abs(w))) if w.size else 0.0
    thr = cutoff * top
    inv = np.where(np.abs(w) > thr, 1.0 / np.where(np.abs(w) > thr, w, 1.0), 0.0)
    v = dec.eigenvectors
    return hermitian_part((v * inv) @ v.conj().T)


def schur_psd_test(m: np.ndarray, p: int, tol: float = 1e-10) -> bool:
    """Block criterion for positive semidefiniteness.

    Write M = [[A, B], [B*, C]] with A the leading p x p block.  M is psd
    iff A is psd, range(B) lies in range(A), and the generalized Schur
    complement C - B* A^- B is psd (A^- the Moore-Penrose pseudo-inverse).
    Agrees with is_psd on the full matrix; the block route is the useful one
    when the complement carries meaning of its own.
    """
    m = hermitianize(m)
    n = m.shape[0]
    if not 0 < p < n:
        raise DimensionMismatch(f"block split p={p} outside 1..{n - 1}")
    a = m[:p, :p]
    b = m[:p, p:]
    c = m[p:, p:]
    if not is_psd(a, tol=tol):
        return False
    a_pinv = pinv_hermitian(a)
    # range(B) subset of range(A): residual of B against the range projector
    resid = float(np.linalg.norm(b - a @ (a_pinv @ b)))
    if resid > 1e-8 * (1.0 + float(np.linalg.norm(b))):
        return False
    comp = c - b.conj().T @ (a_pinv @ b)
    return is_psd(comp, tol=tol)


def direct_sum(*blocks: np.ndarray) -> np.ndarray:
    """Block-diagonal direct sum; scalars are treated as 1x1 blocks."""
    mats = []
    for blk in blocks:
        arr = np.asarray(blk, dtype=complex)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        mats.append(_as_square(arr))
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n), dtype=complex)
    k = 0
    for m in mats:
        s = m.shape[0]
        out[k : k + s, k : k + s] = m
        k += s
    return out


def plus_projector() -> np.ndarray:
    """Rank-one projector onto (|0> + |1>)/sqrt(2)."""
    v = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
    return np.outer(v, v.conj())


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * hermitian_part(g)


def random_density(rng: np.random.Generator, n: int) -> np.ndarray:
    """Full-rank random density matrix (Hilbert-Schmidt style)."""
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
