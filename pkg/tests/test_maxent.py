"""Entropy solvers, divergence to the exponential family, and scans.

Closed forms used as oracles:

* S(diag(1/4, 3/4)) = (1/4) log 4 + (3/4) log(4/3) = 0.562335...;
* the one-generator family on M_2 with uniform prior and coefficient t on
  Z is diag(e^t, e^-t) / (2 cosh t), with Z-moment tanh(t);
* along the segment rho(lam) from |+><+| (+) 0 to 0 (+) 1 every state
  projects to the same midpoint target, the fiber optimum has entropy
  log 2, and d(rho(lam)) = log 2 - h(lam) with h the binary entropy;
* S(rho || 1/n) = log n - S(rho), and for any family member e the split
  S(rho || e) = d(rho) + S(psi || e) is algebraic because log e lives in
  the span.
"""

import json

import numpy as np
import pytest

from matsys.algebras import SubalgebraSpec, conditional_expectation
from matsys.errors import DimensionMismatch, DomainError, NotInBody
from matsys.linalg import random_density
from matsys.maxent import (
    discontinuity_scan,
    entropy_distance,
    exp_family_state,
    family_distance,
    maxent_infer,
    relative_entropy,
    von_neumann_entropy,
)
from matsys.openness import dykstra_project
from matsys.systems import build_system, project_matrix
from matsys._io import matrix_from_pairs

X_PLUS = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=complex)
Z_ZERO = np.diag([1.0, -1.0, 0.0]).astype(complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def disk_system():
    return build_system(3, [X_PLUS, Z_ZERO])


def z_system():
    return build_system(2, [Z])


def fiber_state(lam: float, z: complex) -> np.ndarray:
    rho = np.zeros((3, 3), dtype=complex)
    rho[:2, :2] = lam * 0.5
    rho[:2, 2] = z / np.sqrt(2)
    rho[2, :2] = np.conj(z) / np.sqrt(2)
    rho[2, 2] = 1.0 - lam
    return rho


MIDPOINT = fiber_state(0.5, 0.0)


def gibbs_state(sys, theta):
    return exp_family_state(sys, None, np.asarray(theta, dtype=float)).state


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * np.log(p) - (1 - p) * np.log(1 - p)


def test_entropy_closed_forms():
    s = von_neumann_entropy(np.diag([0.25, 0.75]).astype(complex))
    assert abs(s - 0.5623) < 1e-4
    assert abs(s - (0.25 * np.log(4.0) + 0.75 * np.log(4.0 / 3.0))) < 1e-12
    pure = np.zeros((3, 3), dtype=complex)
    pure[0, 0] = 1.0
    assert von_neumann_entropy(pure) == 0.0
    for n in (2, 3, 5):
        assert abs(von_neumann_entropy(np.eye(n) / n) - np.log(n)) < 1e-12


def test_entropy_range_and_unitary_invariance():
    rng = np.random.default_rng(11)
    for n in (2, 3, 4):
        for _ in range(5):
            rho = random_density(rng, n)
            s = von_neumann_entropy(rho)
            assert 0.0 <= s <= np.log(n) + 1e-12
            g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            q, r = np.linalg.qr(g)
            q = q * (np.diag(r) / np.abs(np.diag(r)))
            assert abs(von_neumann_entropy(q @ rho @ q.conj().T) - s) < 1e-10


def test_relative_entropy_against_uniform():
    rng = np.random.default_rng(12)
    for n in (2, 3, 4, 6):
        rho = random_density(rng, n)
        lhs = relative_entropy(rho, np.eye(n) / n)
        assert abs(lhs - (np.log(n) - von_neumann_entropy(rho))) < 1e-9


def test_relative_entropy_support_and_sign():
    e0 = np.diag([1.0, 0.0]).astype(complex)
    e1 = np.diag([0.0, 1.0]).astype(complex)
    assert relative_entropy(e0, e1) == np.inf
    assert relative_entropy(e0, e0) < 1e-12
    # supported inside a rank-deficient second argument stays finite
    rho2 = np.diag([0.3, 0.7, 0.0]).astype(complex)
    sig2 = np.diag([0.5, 0.5, 0.0]).astype(complex)
    val = relative_entropy(rho2, sig2)
    assert np.isfinite(val)
    assert abs(val - (0.3 * np.log(0.6) + 0.7 * np.log(1.4))) < 1e-12
    rng = np.random.default_rng(13)
    for _ in range(10):
        a, b = random_density(rng, 3), random_density(rng, 3)
        assert relative_entropy(a, b) >= -1e-12


def test_exp_family_closed_form_on_one_generator():
    sys = z_system()
    scale = sys.basis_stack[1][0, 0].real  # coefficient of Z in the unit basis element
    for t in (-1.5, -0.3, 0.0, 0.8, 2.0):
        point = exp_family_state(sys, None, np.array([t / scale]))
        want = np.diag([np.exp(t), np.exp(-t)]) / (2.0 * np.cosh(t))
        assert np.linalg.norm(point.state - want) < 1e-12
        assert abs(np.trace(point.state).real - 1.0) < 1e-10
        assert np.linalg.eigvalsh(point.state).min() > 0.0
    uniform = exp_family_state(sys, None, np.zeros(1))
    assert np.linalg.norm(uniform.state - np.eye(2) / 2) < 1e-14


def test_exp_family_rejects_bad_input():
    sys = z_system()
    with pytest.raises(DomainError):
        exp_family_state(sys, np.diag([1.0, 0.0]).astype(complex), np.zeros(1))
    with pytest.raises(DimensionMismatch):
        exp_family_state(sys, None, np.zeros(2))
    with pytest.raises(ValueError):
        maxent_infer(disk_system(), MIDPOINT, mode="GRADIENT")


def test_infer_matches_moment_oracles_on_m2():
    sys = z_system()
    scale = sys.basis_stack[1][0, 0].real
    res0 = maxent_infer(sys, np.eye(2) / 2)
    assert res0.converged
    assert np.linalg.norm(res0.psi - np.eye(2) / 2) < 1e-9
    # Z-moment tanh(1) comes from coefficient 1 on Z
    target = (np.eye(2) + np.tanh(1.0) * Z) / 2.0
    res1 = maxent_infer(sys, target)
    assert res1.converged
    assert res1.method == "DUAL_NEWTON"
    assert abs(res1.theta[0] * scale - 1.0) < 1e-6


def test_result_contract_and_json_round_trip():
    sys = disk_system()
    rng = np.random.default_rng(14)
    sigma = project_matrix(sys, random_density(rng, 3))
    res = maxent_infer(sys, sigma)
    assert res.converged
    assert res.residual <= 1e-7
    assert abs(np.trace(res.psi).real - 1.0) < 1e-10
    assert np.linalg.eigvalsh(res.psi).min() > -1e-12
    assert np.linalg.norm(project_matrix(sys, res.psi) - sigma) <= 1e-7
    blob = json.loads(res.to_json())
    assert blob["method"] == res.method
    assert blob["converged"] is True
    psi = matrix_from_pairs(blob["psi"])
    assert np.linalg.norm(psi - res.psi) < 1e-12
    assert abs(blob["entropy"] - res.entropy) < 1e-12


def test_dual_and_primal_agree_inside_the_body():
    sys = disk_system()
    rng = np.random.default_rng(15)
    for _ in range(4):
        sigma = project_matrix(sys, random_density(rng, 3))
        dual = maxent_infer(sys, sigma, mode="DUAL_NEWTON")
        primal = maxent_infer(sys, sigma, mode="PRIMAL_FIBER")
        assert dual.converged and primal.converged
        assert np.linalg.norm(dual.psi - primal.psi) < 1e-5


def test_infer_rejects_targets_outside_the_body():
    sys = disk_system()
    outside = (np.eye(3) + 2.5 * Z_ZERO) / 3.0
    with pytest.raises(NotInBody):
        maxent_infer(sys, outside)
    with pytest.raises(NotInBody):
        maxent_infer(sys, np.eye(3))  # trace 3


def test_entropy_distance_vanishes_on_the_family():
    sys = disk_system()
    rng = np.random.default_rng(16)
    for _ in range(5):
        rho = gibbs_state(sys, rng.normal(scale=1.5, size=2))
        assert entropy_distance(sys, rho) <= 1e-6
        assert entropy_distance(sys, rho) >= -1e-8


def test_entropy_distance_at_the_segment_end():
    # |+><+| (+) 0 projects to the midpoint target whose optimum is the
    # midpoint itself, at entropy log 2; the end state is pure.
    sys = disk_system()
    d = entropy_distance(sys, fiber_state(1.0, 0.0))
    assert abs(d - np.log(2.0)) < 1e-6


def test_entropy_distance_matches_dense_grid():
    rng = np.random.default_rng(17)
    sys1 = z_system()
    grid1 = np.linspace(-8.0, 8.0, 801)
    for _ in range(3):
        rho = random_density(rng, 2)
        brute = min(
            relative_entropy(rho, gibbs_state(sys1, [t])) for t in grid1
        )
        assert abs(brute - entropy_distance(sys1, rho)) < 2e-3
    sys2 = disk_system()
    axis = np.linspace(-6.0, 6.0, 61)
    for _ in range(2):
        rho = random_density(rng, 3)
        brute = min(
            relative_entropy(rho, gibbs_state(sys2, [a, b]))
            for a in axis
            for b in axis
        )
        exact = entropy_distance(sys2, rho)
        assert brute >= exact - 1e-9
        assert abs(brute - exact) < 2e-3


def test_divergence_split_across_the_family():
    # S(rho || e) = d(rho) + S(psi || e) for any member e: log e is an
    # affine combination of the identity and the generators, so rho and
    # psi pair with it identically.
    sys = disk_system()
    rng = np.random.default_rng(18)
    rho = random_density(rng, 3)
    d = entropy_distance(sys, rho)
    psi = maxent_infer(sys, project_matrix(sys, rho)).psi
    for theta in (np.zeros(2), np.array([0.4, -0.2]), np.array([-1.0, 0.7])):
        e = gibbs_state(sys, theta)
        lhs = relative_entropy(rho, e)
        rhs = d + relative_entropy(psi, e)
        assert abs(lhs - rhs) < 1e-8


def test_distance_drop_under_conditional_expectation():
    # For generators inside a subalgebra the drop d(rho) - d(E rho) equals
    # the entropy gain S(E rho) - S(rho); on the subalgebra's own states
    # the two distances agree outright.
    alg = SubalgebraSpec(4, [(2, 1), (2, 1)])
    X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    b1 = np.zeros((4, 4), dtype=complex)
    b1[:2, :2] = X
    b1[2:, 2:] = -Z
    b2 = np.zeros((4, 4), dtype=complex)
    b2[:2, :2] = Z
    b2[2:, 2:] = 0.5 * X
    sys = build_system(4, [b1, b2])
    rng = np.random.default_rng(19)
    for _ in range(3):
        rho = random_density(rng, 4)
        erho = conditional_expectation(alg, rho)
        lhs = entropy_distance(sys, rho)
        rhs = (
            von_neumann_entropy(erho)
            - von_neumann_entropy(rho)
            + entropy_distance(sys, erho)
        )
        assert abs(lhs - rhs) < 1e-5
        block = np.zeros((4, 4), dtype=complex)
        block[:2, :2] = 0.4 * random_density(rng, 2)
        block[2:, 2:] = 0.6 * random_density(rng, 2)
        assert (
            abs(
                entropy_distance(sys, block)
                - entropy_distance(sys, conditional_expectation(alg, block))
            )
            < 1e-5
        )


def test_optimum_dominates_fiber_samples():
    sys = disk_system()
    rng = np.random.default_rng(20)
    sigma = project_matrix(sys, random_density(rng, 3))
    res = maxent_infer(sys, sigma)
    starts = np.stack([random_density(rng, 3) for _ in range(50)])
    tc = np.tile(sys.coords(sigma), (50, 1))
    proj, _, gaps, _ = dykstra_project(sys, tc, starts, tol=1e-10, max_iter=4000)
    for rho, gap in zip(proj, gaps):
        if gap > 1e-8:
            continue
        w = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
        rho = rho * (1.0 / w.sum()) if abs(w.sum() - 1.0) > 1e-12 else rho
        assert von_neumann_entropy(rho) <= res.entropy + 1e-7


def test_scan_is_quiet_on_constant_and_family_paths():
    sys = disk_system()
    rng = np.random.default_rng(21)
    fixed = random_density(rng, 3)
    tab = discontinuity_scan(sys, lambda t: fixed, steps=25)
    assert tab.jumps.size == 0
    assert all(tab.converged)

    def family_path(t):
        return gibbs_state(sys, [2.0 * t - 1.0, 0.5 * np.sin(2.0 * t)])

    tab = discontinuity_scan(sys, family_path, steps=25)
    assert tab.jumps.size == 0
    assert np.nanmax(np.abs(tab.d_values)) <= 1e-6


def test_scan_flags_the_segment_through_the_midpoint_target():
    # Every state on the segment projects to the same boundary target; the
    # distance d(rho(lam)) = log 2 - h(lam) is smooth, but its one-sided
    # limits against the family closure differ across lam = 1/2, which the
    # pointwise classifier picks up on the first half only.
    sys = disk_system()
    tab = discontinuity_scan(
        sys, lambda t: fiber_state(1.0 - t, 0.0), steps=41
    )
    assert all(tab.converged)
    lams = np.asarray(tab.params)
    assert np.allclose(tab.psi_entropies, np.log(2.0), atol=1e-7)
    want_d = np.array([np.log(2.0) - binary_entropy(1.0 - l) for l in lams])
    assert np.max(np.abs(np.asarray(tab.d_values) - want_d)) < 1e-6
    flags = np.asarray(tab.discontinuity_flags)
    assert flags[: 20].all()
    assert not flags[20:].any()
    assert tab.series_jumps.size == 0
    assert tab.flag_jumps.shape == (1,)
    assert abs(tab.flag_jumps[0] - 0.5) < 0.025


def test_scan_spikes_where_the_optimum_is_discontinuous():
    # A curve of projected family states steered tangentially into the
    # midpoint target: the targets converge to it while the optima stay
    # near a fixed face state, so the optimum entropy jumps at t = 1/2.
    sys = disk_system()
    stack = sys.basis_stack
    u0 = np.sqrt(2.0 / 0.8165)

    def path(t):
        d = 2.0 * float(t) - 1.0
        if abs(d) < 1e-14:
            return MIDPOINT.copy()
        s = 50.0 / abs(d)
        theta = np.array([s, np.sign(d) * u0 * np.sqrt(2.0 * s)])
        return project_matrix(sys, gibbs_state(sys, theta))

    tab = discontinuity_scan(sys, path, steps=41)
    assert all(tab.converged)
    ent = np.asarray(tab.psi_entropies)
    assert abs(ent[20] - np.log(2.0)) < 1e-7
    mask = np.ones(41, dtype=bool)
    mask[20] = False
    assert ent[mask].max() < 0.4
    assert tab.series_jumps.shape == (2,)
    assert np.allclose(np.sort(tab.series_jumps), [0.4875, 0.5125], atol=1e-12)
    assert tab.flag_jumps.size == 0
    # targets approach the midpoint while the optima do not
    near = maxent_infer(sys, path(0.475))
    at_mid = maxent_infer(sys, MIDPOINT)
    assert np.linalg.norm(path(0.475) - MIDPOINT) < 0.06
    assert np.linalg.norm(near.psi - at_mid.psi) > 0.3


def test_family_distance_separates_closure_sides():
    sys = disk_system()
    # segment states with lam < 1/2 sit in the closure of the family,
    # those beyond do not
    inside = fiber_state(1.0 - 0.2, 0.0)
    outside = fiber_state(1.0 - 0.8, 0.0)
    assert family_distance(sys, inside) < 1e-3
    assert family_distance(sys, outside) > 1e-2
    rng = np.random.default_rng(22)
    member = gibbs_state(sys, rng.normal(size=2))
    assert family_distance(sys, member) < 1e-8


def test_scan_table_serialization():
    sys = z_system()
    tab = discontinuity_scan(
        sys, lambda t: (np.eye(2) + (2.0 * t - 1.0) * 0.5 * Z) / 2.0, steps=9
    )
    text = tab.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "param,d,entropy_psi,converged"
    assert len(lines) == 10
    first = lines[1].split(",")
    assert len(first) == 4
    assert float(first[0]) == 0.0
    assert first[3] in ("0", "1")
