"""Matrix systems and the orthogonal projection between their state bodies.

A matrix system on C^n is a real span R of hermitian matrices containing the
identity.  Projecting the density body D(M_n) onto R under the real Frobenius
scalar product gives a convex body D(R); the projection of a state is the
unique element of R with the same expectation values on the generators.
Membership in D(R) is decided through fiber feasibility: sigma lies in D(R)
exactly when some ambient density matrix projects onto it, which alternating
projections between the psd cone and an affine slice settle numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .errors import DimensionMismatch, NonHermitianGenerator, NotInSystem

__all__ = [
    "MatrixSystem",
    "build_system",
    "density_membership",
    "expectation_vector",
    "project_matrix",
    "support_function",
]


@dataclass(eq=False)
class MatrixSystem:
    """Real span of hermitian matrices containing the identity.

    basis is orthonormal for the real Frobenius scalar product, hermitian,
    and starts with 1/sqrt(n).  Coordinates always refer to this basis in
    this order, so the order is part of the contract.
    """

    dim: int
    generators: tuple
    basis: tuple
    _stack: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self._stack = np.stack(self.basis)

    @property
    def size(self) -> int:
        """Real dimension of the span."""
        return len(self.basis)

    @property
    def basis_stack(self) -> np.ndarray:
        """Basis as a (size, n, n) array; treat as read-only."""
        return self._stack

    def coords(self, a: np.ndarray) -> np.ndarray:
        """Real coordinates Re<b_i, A> of any matrix of matching shape."""
        a = np.asarray(a, dtype=complex)
        if a.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"expected shape {(self.dim, self.dim)}, got {a.shape}")
        return np.einsum("kij,ij->k", self._stack.conj(), a).real

    def from_coords(self, c: Sequence[float]) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.size,):
            raise DimensionMismatch(f"expected {self.size} coordinates, got {c.shape}")
        return np.einsum("k,kij->ij", c, self._stack)


def _orthonormal_identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex) / np.sqrt(n)


def build_system(dim: int, generators: Iterable[np.ndarray], drop_tol: float = 1e-9) -> MatrixSystem:
    """Span the identity together with the given hermitian generators.

    Classical Gram-Schmidt in listed order, identity first, with one
    reorthogonalization pass; directions whose remainder is below
    drop_tol * (1 + |g|_F) are dropped as dependent.
    """
    gens = []
    for g in generators:
        g = np.asarray(g, dtype=complex)
        if g.shape != (dim, dim):
            raise DimensionMismatch(f"generator shape {g.shape} does not match n={dim}")
        try:
            gens.append(linalg.hermitianize(g))
        except Exception as exc:
            raise NonHermitianGenerator(str(exc)) from exc
    basis = [_orthonormal_identity(dim)]
    for g in gens:
        v = g.copy()
        for _ in range(2):  # one reorthogonalization pass
            for b in basis:
                v = v - np.vdot(b, v).real * b
        nrm = float(np.linalg.norm(v))
        if nrm > drop_tol * (1.0 + float(np.linalg.norm(g))):
            basis.append(linalg.hermitian_part(v / nrm))
    return MatrixSystem(dim=dim, generators=tuple(gens), basis=tuple(basis))


def system_from_orthonormal_basis(dim: int, basis: Sequence[np.ndarray], generators: Sequence[np.ndarray] = ()) -> MatrixSystem:
    """Wrap an already orthonormal hermitian basis (identity-first) directly."""
    b0 = np.asarray(basis[0])
    if not np.allclose(b0, _orthonormal_identity(dim), atol=1e-12):
        raise NotInSystem("basis must start with 1/sqrt(n)")
    return MatrixSystem(dim=dim, generators=tuple(generators), basis=tuple(np.asarray(b, dtype=complex) for b in basis))


def project_matrix(sys: MatrixSystem, a: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the span: sum_i Re<b_i, A> b_i.

    Idempotent and trace preserving; self-adjoint for the real scalar
    product on hermitian matrices.
    """
    return sys.from_coords(sys.coords(a))


def expectation_vector(generators: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """Tuple of real expectations (Re tr(A_i rho))_i.

    Depends on rho only through its projection onto the span of the
    generators, which is what makes the projection the right state map.
    """
    rho = np.asarray(rho, dtype=complex)
    return np.array([np.vdot(a, rho).real for a in generators])


def support_function(sys: MatrixSystem, direction: np.ndarray) -> float:
    """Support value max { Re<u, sigma> : sigma in D(R) } for u = pi(direction).

    Every sigma in D(R) is the projection of an ambient density matrix, so
    the maximum over the projected body equals the top eigenvalue of the
    projected direction matrix.
    """
    u = project_matrix(sys, np.asarray(direction, dtype=complex))
    return float(linalg.hermitian_eig(u).eigenvalues[-1])


def density_membership(sys: MatrixSystem, a: np.ndarray, tol: float = 1e-7, max_iter: int = 20000) -> bool:
    """Does a belong to the projected density body D(R)?

    a must lie in the span with unit trace; membership is fiber
    feasibility, decided by alternating projections between the psd cone
    and the affine slice of matrices projecting onto a.  tol is a Frobenius
    distance on the ambient space.
    """
    a = linalg.hermitianize(np.asarray(a, dtype=complex))
    if a.shape != (sys.dim, sys.dim):
        raise DimensionMismatch(f"expected shape {(sys.dim, sys.dim)}, got {a.shape}")
    if abs(np.trace(a).real - 1.0) > 1e-8:
        raise NotInSystem(f"trace {np.trace(a).real!r} is not 1")
    resid = float(np.linalg.norm(a - project_matrix(sys, a)))
    if resid > 1e-8 * (1.0 + float(np.linalg.norm(a))):
        raise NotInSystem(f"projection residual {resid:.3e} outside the span")
    from .openness import membership_gap

    gap = membership_gap(sys, a[None, :, :], tol=tol, max_iter=max_iter)[0]
    return bool(gap <= tol)
