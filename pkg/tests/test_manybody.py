"""Partial traces, locality patterns and their spans on few qubits.

Oracles:

* tracing factor 2 out of rho (x) sigma returns rho;
* the GHZ pair marginals are (|00><00| + |11><11|)/2;
* Pauli-word counts: N=2 with singleton cliques gives 1 + 3 + 3 = 7,
  the 3-qubit pair pattern gives 1 + 9 + 27 = 37, one full clique spans
  everything;
* the entropy optimum over the GHZ marginals is the classical mixture
  (|000><000| + |111><111|)/2: the pair marginals force support on
  |000>, |111> with equal weights, and any coherence only purifies.
"""

import numpy as np
import pytest

from matsys.errors import BadSubset, DimensionMismatch, TooLarge
from matsys.linalg import random_density
from matsys.manybody import (
    LocalityPattern,
    ghz_density,
    local_hamiltonian_system,
    marginal_map,
    partial_trace,
)
from matsys.maxent import maxent_infer
from matsys.systems import project_matrix

PAIRS = LocalityPattern(3, [[1, 2], [2, 3], [3, 1]])

GHZ_PAIR_MARGINAL = np.zeros((4, 4), dtype=complex)
GHZ_PAIR_MARGINAL[0, 0] = GHZ_PAIR_MARGINAL[3, 3] = 0.5


def test_pattern_cleanup_and_validation():
    p = LocalityPattern(3, [[2, 1, 2], [1, 2], [3]])
    assert p.cliques == ((1, 2), (3,))
    assert p.dim == 8
    with pytest.raises(BadSubset):
        LocalityPattern(3, [[1], []])
    with pytest.raises(BadSubset):
        LocalityPattern(2, [[1, 3]])
    with pytest.raises(BadSubset):
        LocalityPattern(2, [])


def test_partial_trace_on_product_states():
    rng = np.random.default_rng(31)
    rho, sig = random_density(rng, 2), random_density(rng, 2)
    prod = np.kron(rho, sig)
    assert np.linalg.norm(partial_trace(prod, [1]) - rho) < 1e-12
    assert np.linalg.norm(partial_trace(prod, [2]) - sig) < 1e-12
    assert np.linalg.norm(partial_trace(prod, [1, 2]) - prod) == 0.0


def test_partial_trace_ghz_pair_marginals():
    ghz = ghz_density(3)
    for keep in ([1, 2], [2, 3], [1, 3]):
        assert np.linalg.norm(partial_trace(ghz, keep) - GHZ_PAIR_MARGINAL) < 1e-12
    single = partial_trace(ghz, [2])
    assert np.linalg.norm(single - np.eye(2) / 2) < 1e-12


def test_partial_trace_is_adjoint_to_embedding():
    rng = np.random.default_rng(32)
    embeddings = {
        (1,): lambda a: np.kron(a, np.eye(4)),
        (2,): lambda a: np.kron(np.eye(2), np.kron(a, np.eye(2))),
        (3,): lambda a: np.kron(np.eye(4), a),
        (1, 3): lambda a: np.einsum(
            "acbd,ef->aecbfd", a.reshape(2, 2, 2, 2), np.eye(2)
        ).reshape(8, 8),
    }
    for keep, embed in embeddings.items():
        k = 2 ** len(keep)
        for _ in range(5):
            a = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
            b = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
            lhs = np.trace(embed(a).conj().T @ b)
            rhs = np.trace(a.conj().T @ partial_trace(b, list(keep)))
            assert abs(lhs - rhs) < 1e-10


def test_partial_trace_preserves_trace_and_positivity():
    rng = np.random.default_rng(33)
    for _ in range(10):
        rho = random_density(rng, 16)
        red = partial_trace(rho, [2, 4])
        assert abs(np.trace(red).real - 1.0) < 1e-12
        assert np.linalg.eigvalsh(red).min() >= -1e-10


def test_partial_trace_input_errors():
    rho = np.eye(8) / 8
    with pytest.raises(BadSubset):
        partial_trace(rho, [])
    with pytest.raises(BadSubset):
        partial_trace(rho, [0])
    with pytest.raises(BadSubset):
        partial_trace(rho, [4])
    with pytest.raises(DimensionMismatch):
        partial_trace(np.eye(6) / 6, [1])


def test_local_system_word_counts():
    assert local_hamiltonian_system(LocalityPattern(2, [[1], [2]])).size == 7
    assert local_hamiltonian_system(PAIRS).size == 37
    assert local_hamiltonian_system(LocalityPattern(3, [[1, 2, 3]])).size == 64
    # overlapping cliques must not double-count shared words
    assert local_hamiltonian_system(LocalityPattern(2, [[1, 2], [1]])).size == 16
    with pytest.raises(TooLarge):
        local_hamiltonian_system(LocalityPattern(7, [[1]]))


def test_marginals_carry_the_projection_information():
    sys = local_hamiltonian_system(PAIRS)
    rng = np.random.default_rng(34)
    for _ in range(100):
        r1, r2 = random_density(rng, 8), random_density(rng, 8)
        pi_close = (
            np.linalg.norm(project_matrix(sys, r1) - project_matrix(sys, r2)) <= 1e-9
        )
        marg_close = all(
            np.linalg.norm(a - b) <= 1e-8
            for a, b in zip(marginal_map(PAIRS, r1), marginal_map(PAIRS, r2))
        )
        assert pi_close == marg_close
    # states differing by a span-orthogonal, traceless direction share all
    # marginals
    base = 0.85 * random_density(rng, 8) + 0.15 * np.eye(8) / 8
    h = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = (h + h.conj().T) / 2
    perp = h - project_matrix(sys, h)
    perp = perp - np.eye(8) * np.trace(perp).real / 8
    other = base + 0.005 * perp / np.linalg.norm(perp)
    assert np.linalg.eigvalsh(other).min() > 0
    assert np.linalg.norm(project_matrix(sys, base) - project_matrix(sys, other)) < 1e-12
    for a, b in zip(marginal_map(PAIRS, base), marginal_map(PAIRS, other)):
        assert np.linalg.norm(a - b) < 1e-12


def test_marginal_map_checks_the_pattern_dimension():
    with pytest.raises(DimensionMismatch):
        marginal_map(PAIRS, np.eye(4) / 4)


def test_entropy_optimum_over_ghz_marginals_is_the_classical_mixture():
    sys = local_hamiltonian_system(PAIRS)
    sigma = project_matrix(sys, ghz_density(3))
    res = maxent_infer(sys, sigma, mode="PRIMAL_FIBER")
    assert res.converged
    mix = np.zeros((8, 8), dtype=complex)
    mix[0, 0] = mix[7, 7] = 0.5
    assert np.linalg.norm(res.psi - mix) < 1e-6
    assert abs(res.entropy - np.log(2.0)) < 1e-8
    for m in marginal_map(PAIRS, res.psi):
        assert np.linalg.norm(m - GHZ_PAIR_MARGINAL) < 1e-8


def test_ghz_density_basics():
    g = ghz_density(3)
    assert abs(np.trace(g).real - 1.0) < 1e-14
    w = np.linalg.eigvalsh(g)
    assert abs(w[-1] - 1.0) < 1e-14 and np.all(np.abs(w[:-1]) < 1e-14)
    with pytest.raises(TooLarge):
        ghz_density(7)
