"""Qubit tensor products: partial traces, locality patterns, reduced maps.

A locality pattern is a family of cliques (subsets of qubit labels); its
matrix system is spanned by the Pauli words supported inside some clique,
together with the identity.  Projecting a state onto that span carries the
same information as the list of clique marginals, which makes the reduced
density map a concrete instance of the state projection studied elsewhere
in the package.

Qubit 1 is the most significant tensor factor throughout, so |b1 b2 ... bN>
has index b1 2^(N-1) + ... + bN.
"""

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, List, Sequence

import numpy as np

from .errors import BadSubset, DimensionMismatch, TooLarge
from .systems import MatrixSystem, build_system

__all__ = [
    "LocalityPattern",
    "ghz_density",
    "local_hamiltonian_system",
    "marginal_map",
    "partial_trace",
]

MAX_QUBITS = 6

_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_AXES = "abcdefghijkl"


def _check_subset(n_qubits: int, subset: Iterable[int], what: str = "subset") -> tuple:
    items = tuple(int(q) for q in subset)
    if not items:
        raise BadSubset(f"{what} must be nonempty")
    if any(q < 1 or q > n_qubits for q in items):
        raise BadSubset(f"{what} {items} is not within 1..{n_qubits}")
    return tuple(sorted(set(items)))


@dataclass(frozen=True)
class LocalityPattern:
    """A family of cliques over qubits 1..n_qubits.

    Cliques are stored sorted with duplicates (both inside a clique and
    between cliques) removed, first appearance deciding the order.
    """

    n_qubits: int
    cliques: tuple

    def __init__(self, n_qubits: int, cliques: Sequence[Iterable[int]]):
        n = int(n_qubits)
        if n < 1:
            raise BadSubset("n_qubits must be at least 1")
        if not cliques:
            raise BadSubset("the clique family must be nonempty")
        seen = []
        for nu in cliques:
            cleaned = _check_subset(n, nu, what="clique")
            if cleaned not in seen:
                seen.append(cleaned)
        object.__setattr__(self, "n_qubits", n)
        object.__setattr__(self, "cliques", tuple(seen))

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits


def _infer_qubits(rho: np.ndarray) -> int:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {rho.shape}")
    n = int(rho.shape[0]).bit_length() - 1
    if 2 ** n != rho.shape[0] or n < 1:
        raise DimensionMismatch(f"matrix size {rho.shape[0]} is not a power of two")
    return n


def partial_trace(rho: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Trace out every qubit not listed in keep.

    The result acts on the kept qubits in ascending label order.  Adjoint
    to embedding: <A (x) 1, B> = <A, partial_trace(B, keep)> for the
    complementary embedding.
    """
    rho = np.asarray(rho, dtype=complex)
    n = _infer_qubits(rho)
    kept = _check_subset(n, keep, what="keep")
    t = rho.reshape((2,) * (2 * n))
    ket = list(_AXES[:n])
    bra = list(_AXES[n : 2 * n])
    for i in range(n):
        if (i + 1) not in kept:
            bra[i] = ket[i]
    out = "".join(ket[q - 1] for q in kept) + "".join(bra[q - 1] for q in kept)
    reduced = np.einsum("".join(ket) + "".join(bra) + "->" + out, t)
    k = len(kept)
    return reduced.reshape(2 ** k, 2 ** k)


def _pauli_word(n_qubits: int, assignment: dict) -> np.ndarray:
    word = np.ones((1, 1), dtype=complex)
    for q in range(1, n_qubits + 1):
        factor = _PAULI[assignment[q]] if q in assignment else np.eye(2, dtype=complex)
        word = np.kron(word, factor)
    return word


def local_hamiltonian_system(pattern: LocalityPattern) -> MatrixSystem:
    """Span of the identity and all Pauli words supported inside a clique.

    Words are enumerated support by support (lexicographic), letters in
    X < Y < Z order per qubit, so the basis layout is deterministic and
    independent of how the cliques were listed.
    """
    if pattern.n_qubits > MAX_QUBITS:
        raise TooLarge(
            f"{pattern.n_qubits} qubits exceed the supported maximum of {MAX_QUBITS}"
        )
    n = pattern.n_qubits
    supports = set()
    for nu in pattern.cliques:
        for size in range(1, len(nu) + 1):
            supports.update(combinations(nu, size))
    generators = []
    for support in sorted(supports, key=lambda s: (len(s), s)):
        for letters in product("XYZ", repeat=len(support)):
            generators.append(_pauli_word(n, dict(zip(support, letters))))
    return build_system(2 ** n, generators)


def marginal_map(pattern: LocalityPattern, rho: np.ndarray) -> List[np.ndarray]:
    """Reduced densities of rho on each clique, in pattern order."""
    rho = np.asarray(rho, dtype=complex)
    n = _infer_qubits(rho)
    if n != pattern.n_qubits:
        raise DimensionMismatch(
            f"state acts on {n} qubits, the pattern expects {pattern.n_qubits}"
        )
    return [partial_trace(rho, nu) for nu in pattern.cliques]


def ghz_density(n_qubits: int = 3) -> np.ndarray:
    """Density matrix of (|0...0> + |1...1>)/sqrt(2)."""
    if n_qubits < 1:
        raise BadSubset("n_qubits must be at least 1")
    if n_qubits > MAX_QUBITS:
        raise TooLarge(f"{n_qubits} qubits exceed the supported maximum of {MAX_QUBITS}")
    dim = 2 ** n_qubits
    vec = np.zeros(dim, dtype=complex)
    vec[0] = vec[-1] = 1.0 / np.sqrt(2.0)
    return np.outer(vec, vec.conj())
