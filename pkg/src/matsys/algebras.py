"""Block subalgebras of M_n and their conditional expectations.

A subalgebra is described structurally: in a fixed unitary frame it is a
direct sum of blocks M_q tensor 1_k (the q-dimensional factor first),
optionally restricted to real entries.  The orthogonal projection onto such
a subspace is closed-form arithmetic: zero the off-diagonal blocks, average
each block over its multiplicity factor, take the entrywise real part when
the algebra is real.  Nothing here tries to discover block structure from
generators; the spec is the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionMismatch, SystemNotContained
from .systems import MatrixSystem, build_system, project_matrix

__all__ = [
    "SubalgebraSpec",
    "algebra_system",
    "conditional_expectation",
    "factored_projection",
    "is_closed_under_product",
]


@dataclass(eq=False)
class SubalgebraSpec:
    """Direct sum of M_q tensor 1_k blocks in a unitary frame.

    blocks lists (q, k) pairs in diagonal order; their sizes q*k must tile
    the ambient dimension.  conjugator U, when given, places the algebra at
    U X U* for block-structured X.  real restricts entries (in the frame)
    to the reals.

    Construction validates the unitary and, for dim <= 16, self-checks that
    products of basis elements stay inside the subspace; the check is a
    guard against inconsistent input, the structure is closed by design.
    """

    dim: int
    blocks: tuple
    real: bool = False
    conjugator: np.ndarray = None

    def __post_init__(self):
        blocks = tuple((int(q), int(k)) for q, k in self.blocks)
        if not blocks or any(q <= 0 or k <= 0 for q, k in blocks):
            raise ValueError("blocks must be a nonempty list of positive (q, k) pairs")
        covered = sum(q * k for q, k in blocks)
        if covered != self.dim:
            raise DimensionMismatch(f"blocks tile {covered}, ambient dimension is {self.dim}")
        self.blocks = blocks
        if self.conjugator is not None:
            u = np.asarray(self.conjugator, dtype=complex)
            if u.shape != (self.dim, self.dim):
                raise DimensionMismatch("conjugator shape does not match the ambient dimension")
            if np.linalg.norm(u @ u.conj().T - np.eye(self.dim)) > 1e-10:
                raise ValueError("conjugator is not unitary within 1e-10")
            self.conjugator = u
        if self.dim <= 16:
            stack = _hermitian_basis(self)
            prods = np.einsum("iab,jbc->ijac", stack, stack).reshape(-1, self.dim, self.dim)
            resid = float(np.max(np.abs(_apply(self, prods) - prods)))
            if resid > 1e-8:
                raise ValueError(f"spec is not closed under products (residual {resid:.3e})")


def _apply(alg: SubalgebraSpec, a: np.ndarray) -> np.ndarray:
    """Conditional expectation on a (..., n, n) stack of complex matrices."""
    u = alg.conjugator
    if u is not None:
        a = np.einsum("ji,...jk,kl->...il", u.conj(), a, u)
    out = np.zeros_like(a)
    off = 0
    for q, k in alg.blocks:
        w = q * k
        sub = a[..., off : off + w, off : off + w]
        sub = sub.reshape(a.shape[:-2] + (q, k, q, k))
        avg = np.einsum("...ambm->...ab", sub) / k
        out[..., off : off + w, off : off + w] = np.einsum(
            "...ab,mn->...ambn", avg, np.eye(k)
        ).reshape(a.shape[:-2] + (w, w))
        off += w
    if alg.real:
        out = out.real.astype(complex)
    if u is not None:
        out = np.einsum("ij,...jk,lk->...il", u, out, u.conj())
    return out


def conditional_expectation(alg: SubalgebraSpec, a: np.ndarray) -> np.ndarray:
    """Orthogonal projection of a complex matrix onto the subalgebra.

    Idempotent, trace preserving, self-adjoint for the real Frobenius
    scalar product, and positivity preserving (each step is: conjugation,
    block restriction, averaging over a group of unitaries, real part).
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (alg.dim, alg.dim):
        raise DimensionMismatch(f"expected shape {(alg.dim, alg.dim)}, got {a.shape}")
    return _apply(alg, a)


def _hermitian_basis(alg: SubalgebraSpec) -> np.ndarray:
    """Orthonormal hermitian basis of the subalgebra as a (s, n, n) stack."""
    n = alg.dim
    mats = []
    off = 0
    for q, k in alg.blocks:
        eye_k = np.eye(k)
        for a in range(q):
            for b in range(a, q):
                h = np.zeros((q, q), dtype=complex)
                if a == b:
                    h[a, a] = 1.0
                else:
                    h[a, b] = h[b, a] = 1.0 / np.sqrt(2.0)
                g = np.zeros((n, n), dtype=complex)
                g[off : off + q * k, off : off + q * k] = np.kron(h, eye_k)
                mats.append(g / np.sqrt(k))
                if a != b and not alg.real:
                    h = np.zeros((q, q), dtype=complex)
                    h[a, b] = -1j / np.sqrt(2.0)
                    h[b, a] = 1j / np.sqrt(2.0)
                    g = np.zeros((n, n), dtype=complex)
                    g[off : off + q * k, off : off + q * k] = np.kron(h, eye_k)
                    mats.append(g / np.sqrt(k))
        off += q * k
    stack = np.stack(mats)
    if alg.conjugator is not None:
        u = alg.conjugator
        stack = np.einsum("ij,sjk,lk->sil", u, stack, u.conj())
    return stack


def algebra_system(alg: SubalgebraSpec) -> MatrixSystem:
    """The hermitian part of the subalgebra as a matrix system.

    The identity is a combination of the block units, so the orthonormal
    span has dimension sum q^2 (complex blocks) or sum q(q+1)/2 (real).
    """
    return build_system(alg.dim, list(_hermitian_basis(alg)))


def is_closed_under_product(sys: MatrixSystem) -> bool:
    """Is the complex span of the system closed under matrix products?

    For every pair of basis elements the product splits as H + iK with H, K
    hermitian; both parts must project back into the span with residual at
    most 1e-8.  True exactly when the system is (the hermitian part of) a
    subalgebra of M_n.
    """
    stack = sys.basis_stack
    prods = np.einsum("iab,jbc->ijac", stack, stack)
    swapped = np.conjugate(np.swapaxes(prods, -1, -2))
    parts = np.stack([(prods + swapped) / 2.0, (prods - swapped) / 2j])
    c = np.einsum("kab,xijab->xijk", stack.conj(), parts).real
    recon = np.einsum("xijk,kab->xijab", c, stack)
    resid = np.linalg.norm(parts - recon, axis=(-2, -1))
    return bool(np.max(resid) <= 1e-8)


def factored_projection(alg: SubalgebraSpec, sys: MatrixSystem, rho: np.ndarray):
    """Factor the state projection through the subalgebra.

    Returns (rho_A, rho_R) with rho_A the conditional expectation of rho
    and rho_R its projection onto the system span.  Valid when the span is
    contained in the subalgebra, so that projecting in two steps agrees
    with projecting directly.
    """
    if alg.dim != sys.dim:
        raise DimensionMismatch("algebra and system live on different ambient spaces")
    stack = sys.basis_stack
    fixed = _apply(alg, stack)
    worst = float(np.max(np.linalg.norm(fixed - stack, axis=(-2, -1))))
    if worst > 1e-8:
        raise SystemNotContained(f"a basis element moves by {worst:.3e} under the expectation")
    rho = linalg.hermitianize(np.asarray(rho, dtype=complex))
    rho_a = _apply(alg, rho)
    rho_r = project_matrix(sys, rho_a)
    return rho_a, rho_r
