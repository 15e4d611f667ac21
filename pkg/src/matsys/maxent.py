"""Maximum-entropy inference over matrix systems and entropy-distance scans.

Given a target sigma in the projected body D(R) and a full-rank prior tau,
the inference problem asks for the state of maximal tau-relative entropy
functional phi(rho) = -S(rho, tau) inside the fiber over sigma.  Two solvers
are provided.  DUAL_NEWTON works in the exponential-family coordinates and
moment-matches the target with Newton steps whose Hessian is the exact
covariance matrix of the basis observables (divided differences of the
exponential); it is fast and accurate for interior targets but its
parametrisation only covers the interior, so divergence is reported rather
than patched.  PRIMAL_FIBER climbs phi directly inside the fiber with
projected ascent steps and a Dykstra re-projection after every trial point;
it is slower but remains meaningful at boundary targets.

The entropy distance d(rho) to the exponential family is computed from the
inferred state as a difference of phi values.  Scans along parametrised
paths tabulate d and the entropy of the inferred state, flag jumps in those
series, and additionally classify each path point by a closure criterion:
a point with positive d that is approximated arbitrarily well by family
members is a discontinuity point of d, because the family carries d = 0
right up to it.  The closure test is a finite search over family parameters
(a grid plus simplex refinement) and is documented as an upper bound on the
true distance to the family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from . import linalg
from ._io import matrix_to_pairs
from .errors import DimensionMismatch, DomainError, NonConvergence, NotInBody
from .openness import dykstra_project, membership_gap
from .systems import MatrixSystem, project_matrix

__all__ = [
    "ExponentialFamilyPoint",
    "InferenceResult",
    "ScanTable",
    "von_neumann_entropy",
    "relative_entropy",
    "exp_family_state",
    "maxent_infer",
    "entropy_distance",
    "family_distance",
    "discontinuity_scan",
]

_EIG_FLOOR = 1e-14


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-tr(rho log rho) in nats; eigenvalues below 1e-14 count as exact zeros."""
    rho = linalg.hermitianize(np.asarray(rho, dtype=complex))
    w = np.linalg.eigvalsh(rho)
    w = w[w > _EIG_FLOOR]
    return float(max(0.0, -np.sum(w * np.log(w))))


def relative_entropy(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """tr[rho1 (log rho1 - log rho2)] in nats, +inf on a range violation.

    The support of rho2 is read off at eigenvalue tolerance 1e-10; any rho1
    mass outside it makes the divergence infinite, otherwise logs are taken
    on that support only.
    """
    r1 = linalg.hermitianize(np.asarray(rho1, dtype=complex))
    r2 = linalg.hermitianize(np.asarray(rho2, dtype=complex))
    if r1.shape != r2.shape:
        raise DimensionMismatch(f"shape mismatch {r1.shape} vs {r2.shape}")
    w1 = np.linalg.eigvalsh(r1)
    w2, v2 = np.linalg.eigh(r2)
    support = w2 > 1e-10
    q = np.einsum("ai,ab,bi->i", v2.conj(), r1, v2).real
    if float(q[~support].sum()) > 1e-10:
        return float("inf")
    w1 = w1[w1 > _EIG_FLOOR]
    term1 = float(np.sum(w1 * np.log(w1)))
    qs = np.clip(q[support], 0.0, None)
    term2 = float(np.sum(qs * np.log(w2[support])))
    return max(0.0, term1 - term2)


def _coerce_prior(sys: MatrixSystem, tau: Optional[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Return (tau, log tau), defaulting to the maximally mixed prior."""
    n = sys.dim
    if tau is None:
        tau = np.eye(n, dtype=complex) / n
        return tau, np.log(1.0 / n) * np.eye(n, dtype=complex)
    tau = linalg.hermitianize(np.asarray(tau, dtype=complex))
    if tau.shape != (n, n):
        raise DimensionMismatch(f"prior shape {tau.shape} does not match dimension {n}")
    w, v = np.linalg.eigh(tau)
    if w.min() <= 1e-12 * max(1.0, float(w.max())):
        raise DomainError("prior must be a full-rank density matrix")
    log_tau = (v * np.log(w)) @ v.conj().T
    return tau, log_tau


def _gibbs(log_tau: np.ndarray, a: np.ndarray):
    """Normalized exp(log_tau + a) with its shifted eigensystem."""
    w, v = np.linalg.eigh(log_tau + a)
    e = np.exp(w - w.max())
    z = float(e.sum())
    state = (v * (e / z)) @ v.conj().T
    return state, w, v, e, z


def _phi(rho: np.ndarray, log_tau: np.ndarray) -> float:
    """phi(rho) = -S(rho, tau) = S(rho) + tr(rho log tau); finite for full-rank tau."""
    cross = float(np.einsum("ab,ba->", rho, log_tau).real)
    return von_neumann_entropy(rho) + cross


@dataclass
class ExponentialFamilyPoint:
    """One member exp(log tau + sum theta_i b_i)/Z of the exponential family."""

    system: MatrixSystem
    tau: np.ndarray
    theta: np.ndarray
    state: np.ndarray


def exp_family_state(sys: MatrixSystem, tau: Optional[np.ndarray], theta) -> ExponentialFamilyPoint:
    """Exponential-family member for coefficients theta over the non-identity basis.

    The identity component is absorbed by the normalization, so theta has
    length sys.size - 1.  A rank-deficient prior raises DomainError.
    """
    tau, log_tau = _coerce_prior(sys, tau)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (sys.size - 1,):
        raise DimensionMismatch(
            f"theta must have length {sys.size - 1}, got {theta.shape[0]}"
        )
    a = np.tensordot(theta, sys.basis_stack[1:], axes=1)
    state, _, _, _, _ = _gibbs(log_tau, a)
    return ExponentialFamilyPoint(system=sys, tau=tau, theta=theta, state=state)


@dataclass
class InferenceResult:
    """Outcome of a maximum-entropy inference over one fiber."""

    sigma: np.ndarray
    psi: np.ndarray
    method: str
    converged: bool
    residual: float
    iterations: int
    entropy: float
    theta: Optional[np.ndarray] = None

    def to_json(self) -> str:
        payload = {
            "sigma": matrix_to_pairs(self.sigma),
            "psi": matrix_to_pairs(self.psi),
            "method": self.method,
            "converged": bool(self.converged),
            "residual": float(self.residual),
            "iterations": int(self.iterations),
            "entropy": float(self.entropy),
            "theta": None if self.theta is None else [float(t) for t in self.theta],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _divided_exp(w: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Divided differences (e_i - e_j)/(w_i - w_j) of the shifted exponential.

    Near-degenerate pairs use the stable midpoint value sqrt(e_i e_j).
    """
    dw = w[:, None] - w[None, :]
    de = e[:, None] - e[None, :]
    scale = 1e-12 * (1.0 + float(np.abs(w).max()))
    safe = np.where(np.abs(dw) > scale, dw, 1.0)
    mid = np.sqrt(np.outer(e, e))
    return np.where(np.abs(dw) > scale, de / safe, mid)


def _dual_newton(sys: MatrixSystem, m: np.ndarray, log_tau: np.ndarray,
                 gtol: float = 1e-10, max_iter: int = 200, theta_cap: float = 1e6):
    """Newton iteration on the dual objective log Z(theta) - theta . m.

    Returns (theta, state, iterations).  Raises NonConvergence when the line
    search stalls, the parameters run away, or the iteration budget is spent;
    for boundary targets that divergence is the expected signal.
    """
    stack = sys.basis_stack[1:]
    p = stack.shape[0]
    theta = np.zeros(p)

    def objective(th: np.ndarray) -> float:
        h = log_tau + np.tensordot(th, stack, axes=1)
        w = np.linalg.eigvalsh(h)
        wm = float(w.max())
        return wm + float(np.log(np.exp(w - wm).sum())) - float(th @ m)

    # Roundoff in the covariance assembly keeps the gradient from dropping
    # arbitrarily far; once steps stop moving theta, a gradient this small is
    # convergence, not failure.
    floor_tol = max(100.0 * gtol, 1e-8)

    f = objective(theta)
    for it in range(1, max_iter + 1):
        a = np.tensordot(theta, stack, axes=1)
        state, w, v, e, z = _gibbs(log_tau, a)
        c = np.einsum("kab,ba->k", stack, state).real
        grad = c - m
        gn = float(np.linalg.norm(grad))
        if gn <= gtol:
            return theta, state, it
        b_rot = np.einsum("ak,iab,bl->ikl", v.conj(), stack, v)
        g = _divided_exp(w, e)
        cov = np.einsum("kl,ikl,jkl->ij", g, b_rot, b_rot.conj()).real / z - np.outer(c, c)
        delta = None
        try:
            delta = np.linalg.solve(cov + 1e-13 * np.eye(p), -grad)
        except np.linalg.LinAlgError:
            delta = None
        if delta is None or not np.all(np.isfinite(delta)):
            cov = _fd_hessian(objective, theta)
            try:
                delta = np.linalg.solve(cov + 1e-10 * np.eye(p), -grad)
            except np.linalg.LinAlgError as exc:
                raise NonConvergence("dual Hessian is singular") from exc
        slope = float(grad @ delta)
        if slope >= 0.0:
            delta = -grad
            slope = -gn * gn
        t = 1.0
        accepted = False
        for _ in range(50):
            cand = theta + t * delta
            fc = objective(cand)
            if fc <= f + 1e-4 * t * slope:
                theta, f = cand, fc
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if gn <= floor_tol:
                return theta, state, it
            raise NonConvergence("dual line search stalled; target may sit on the boundary")
        if t * float(np.linalg.norm(delta)) <= 1e-12 * max(1.0, float(np.linalg.norm(theta))):
            if gn <= floor_tol:
                return theta, state, it
            raise NonConvergence("dual steps vanished before the moments matched")
        if float(np.linalg.norm(theta)) > theta_cap:
            raise NonConvergence("dual parameters diverged; target sits on the boundary")
    raise NonConvergence(f"dual Newton did not converge in {max_iter} iterations")


def _fd_hessian(fun: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    p = x.size
    out = np.empty((p, p))
    f0 = fun(x)
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = h
        for j in range(i, p):
            ej = np.zeros(p)
            ej[j] = h
            fpp = fun(x + ei + ej)
            fpm = fun(x + ei - ej)
            fmp = fun(x - ei + ej)
            fmm = fun(x - ei - ej)
            val = (fpp - fpm - fmp + fmm) / (4.0 * h * h)
            out[i, j] = val
            out[j, i] = val
    # fall back to a symmetric second difference on the diagonal for stability
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = h
        out[i, i] = (fun(x + ei) - 2.0 * f0 + fun(x - ei)) / (h * h)
    return out


def _span_projector(sys: MatrixSystem):
    stack = sys.basis_stack

    def project_out(x: np.ndarray) -> np.ndarray:
        coeff = np.einsum("kab,ab->k", stack.conj(), x).real
        return x - np.tensordot(coeff, stack, axes=1)

    return project_out


def _clean_state(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    s = float(w.sum())
    if s <= 0.0:
        raise NonConvergence("iterate collapsed to the zero matrix")
    return (v * (w / s)) @ v.conj().T


def _primal_fiber(sys: MatrixSystem, sigma: np.ndarray, log_tau: np.ndarray,
                  max_iter: int = 3000, dykstra_tol: float = 1e-11):
    """Projected ascent of phi inside the fiber over sigma.

    Every trial point is pulled back onto the fiber with a Dykstra
    projection, so feasibility is maintained up to the projection tolerance
    throughout.  The step length adapts: accepted steps grow it, rejected
    ones halve it.
    """
    tc = sys.coords(sigma)[None, :]
    n = sys.dim
    start = np.eye(n, dtype=complex) / n
    proj, _, _, conv = dykstra_project(sys, tc, start, tol=dykstra_tol)
    rho = _clean_state(proj[0])
    project_out = _span_projector(sys)
    value = _phi(rho, log_tau)
    step = 0.5
    stalls = 0
    it = 0
    for it in range(1, max_iter + 1):
        w, v = np.linalg.eigh(rho)
        wc = np.clip(w, _EIG_FLOOR, None)
        grad = log_tau - (v * (np.log(wc) + 1.0)) @ v.conj().T
        direction = project_out(linalg.hermitian_part(grad))
        gn = float(np.linalg.norm(direction))
        if gn <= 1e-10:
            break
        direction = direction / gn
        improved = False
        while step > 1e-12:
            cand = rho + step * direction
            proj, _, _, conv = dykstra_project(sys, tc, cand, tol=dykstra_tol)
            cand = _clean_state(proj[0])
            cval = _phi(cand, log_tau)
            if cval > value + 1e-14:
                rho, value = cand, cval
                step = min(step * 1.3, 1.0)
                improved = True
                break
            step *= 0.5
        if not improved:
            stalls += 1
            step = max(step, 1e-10)
            if stalls >= 4:
                break
    return rho, it


_MODES = ("auto", "DUAL_NEWTON", "PRIMAL_FIBER")


def maxent_infer(sys: MatrixSystem, sigma: np.ndarray, tau: Optional[np.ndarray] = None,
                 mode: str = "auto") -> InferenceResult:
    """Maximum-entropy state in the fiber over sigma, relative to the prior tau.

    mode selects the solver: "DUAL_NEWTON" or "PRIMAL_FIBER" force one
    route, "auto" tries the dual first and falls back to the primal when the
    dual diverges (the boundary signal).  sigma must belong to the projected
    density body; clear violations raise NotInBody.
    """
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    sigma = linalg.hermitianize(np.asarray(sigma, dtype=complex))
    tau, log_tau = _coerce_prior(sys, tau)
    if abs(float(np.trace(sigma).real) - 1.0) > 1e-8:
        raise NotInBody("target must have unit trace")
    if float(np.linalg.norm(sigma - project_matrix(sys, sigma))) > 1e-8 * (1.0 + float(np.linalg.norm(sigma))):
        raise NotInBody("target does not lie in the system span")
    # Membership is the caller's precondition; the gate here rejects clear
    # violations only.  Near the boundary the fiber can meet the cone
    # tangentially and alternating projections converge sublinearly, leaving
    # a stale gap estimate for points that do belong to the body -- for such
    # targets the solver's own residual is the arbiter.
    gap = membership_gap(sys, sigma[None], tol=1e-7, max_iter=6000)[0]
    if gap > 1e-2:
        raise NotInBody(f"target is outside the projected density body (gap {gap:.3e})")
    m = sys.coords(sigma)[1:]

    psi = None
    method = None
    iterations = 0
    theta = None
    if mode in ("auto", "DUAL_NEWTON"):
        try:
            theta, psi, iterations = _dual_newton(sys, m, log_tau)
            method = "DUAL_NEWTON"
        except NonConvergence:
            if mode == "DUAL_NEWTON":
                raise
    if psi is None:
        psi, iterations = _primal_fiber(sys, sigma, log_tau)
        method = "PRIMAL_FIBER"
        theta = None
    residual = float(np.linalg.norm(project_matrix(sys, psi) - sigma))
    converged = residual <= 1e-7
    return InferenceResult(
        sigma=sigma,
        psi=psi,
        method=method,
        converged=converged,
        residual=residual,
        iterations=iterations,
        entropy=von_neumann_entropy(psi),
        theta=theta,
    )


def entropy_distance(sys: MatrixSystem, rho: np.ndarray, tau: Optional[np.ndarray] = None) -> float:
    """Divergence from rho to the exponential family of the system.

    Computed as phi(psi) - phi(rho) where psi is the inferred
    maximum-entropy state over the projection of rho; with the uniform
    prior this is the entropy gap S(psi) - S(rho).
    """
    rho = linalg.hermitianize(np.asarray(rho, dtype=complex))
    tau, log_tau = _coerce_prior(sys, tau)
    sigma = project_matrix(sys, rho)
    result = maxent_infer(sys, sigma, tau, mode="auto")
    return _phi(result.psi, log_tau) - _phi(rho, log_tau)


def _family_directions(p: int) -> np.ndarray:
    if p == 1:
        return np.array([[1.0], [-1.0]])
    if p == 2:
        ang = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    rng = np.random.default_rng(0)
    dirs = rng.standard_normal((128, p))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    axes = np.concatenate([np.eye(p), -np.eye(p)], axis=0)
    return np.concatenate([dirs, axes], axis=0)


def family_distance(sys: MatrixSystem, rho: np.ndarray, tau: Optional[np.ndarray] = None,
                    mag_max: float = 1e8, refine: bool = True) -> float:
    """Frobenius distance from rho to a finite sample of the exponential family.

    This is an upper bound on the true distance to the family closure: the
    sample covers rays of parameter magnitudes up to mag_max plus, for
    two-parameter systems, square-root transverse charts theta =
    (s, u sqrt(2 s)) that track the parabolic approach to degenerate
    faces, and the best grid point is polished with a Nelder-Mead pass.
    Distances below roughly 1e-3 certify closure membership at scan
    tolerances; the value is not a lower bound.
    """
    rho = linalg.hermitianize(np.asarray(rho, dtype=complex))
    tau, log_tau = _coerce_prior(sys, tau)
    stack = sys.basis_stack[1:]
    p = stack.shape[0]

    def dist_at(theta: np.ndarray) -> float:
        a = np.tensordot(theta, stack, axes=1)
        state, _, _, _, _ = _gibbs(log_tau, a)
        return float(np.linalg.norm(state - rho))

    dirs = _family_directions(p)
    mags = np.concatenate([[0.0], np.logspace(-2.0, np.log10(mag_max), 34)])
    ray_best = (np.inf, np.zeros(p))
    for d in dirs:
        for m in mags:
            theta = m * d
            val = dist_at(theta)
            if val < ray_best[0]:
                ray_best = (val, theta)
    chart_best = {}
    if p == 2:
        ss = np.exp(np.linspace(0.0, np.log(mag_max), 29))
        us = np.linspace(-6.0, 6.0, 41)
        for axis in (0, 1):
            for sign in (1.0, -1.0):
                rec = (np.inf, np.zeros(2))
                for s in ss:
                    for u in us:
                        theta = np.zeros(2)
                        theta[axis] = sign * s
                        theta[1 - axis] = u * np.sqrt(2.0 * s)
                        val = dist_at(theta)
                        if val < rec[0]:
                            rec = (val, theta)
                chart_best[(axis, sign)] = rec
    best = min([ray_best[0]] + [rec[0] for rec in chart_best.values()])
    if not refine:
        return best

    nm_opts = {"maxiter": 400, "fatol": 1e-12, "xatol": 1e-9}
    # polish the best candidate of every chart family, not just the overall
    # winner: the charts overlap and a grid winner can sit in the wrong basin
    for (axis, sign), (val, theta0) in chart_best.items():
        if not np.isfinite(val):
            continue
        s0 = max(abs(theta0[axis]), 1e-12)
        u0 = theta0[1 - axis] / np.sqrt(2.0 * s0)

        def chart_fun(x, axis=axis, sign=sign):
            s = np.exp(np.clip(x[0], -30.0, np.log(mag_max) + 2.0))
            theta = np.zeros(2)
            theta[axis] = sign * s
            theta[1 - axis] = x[1] * np.sqrt(2.0 * s)
            return dist_at(theta)

        res = minimize(chart_fun, [np.log(s0), u0], method="Nelder-Mead", options=nm_opts)
        best = min(best, float(res.fun))
    norm0 = float(np.linalg.norm(ray_best[1]))
    if norm0 <= 1e3:
        res = minimize(dist_at, ray_best[1], method="Nelder-Mead", options=nm_opts)
        best = min(best, float(res.fun))
    else:
        direction = ray_best[1] / norm0

        def radial_fun(x):
            return dist_at(np.exp(np.clip(x[0], -30.0, np.log(mag_max) + 2.0)) * direction)

        res = minimize(radial_fun, [np.log(norm0)], method="Nelder-Mead",
                       options={"maxiter": 200, "fatol": 1e-12})
        best = min(best, float(res.fun))
    return best


@dataclass
class ScanTable:
    """Tabulated entropy-distance scan along a parametrised path.

    d_values and psi_entropies are the raw series; series_jumps lists
    parameter midpoints where a one-sided difference exceeds the jump
    factor times the local variation, and flag_jumps lists midpoints where
    the per-point discontinuity classification switches.  A NaN d value
    marks a path point that is not itself a state.
    """

    params: np.ndarray
    d_values: np.ndarray
    psi_entropies: np.ndarray
    converged: np.ndarray
    discontinuity_flags: np.ndarray
    series_jumps: np.ndarray
    flag_jumps: np.ndarray

    @property
    def jumps(self) -> np.ndarray:
        merged = np.concatenate([self.series_jumps, self.flag_jumps])
        return np.unique(np.round(merged, 12))

    def to_csv(self) -> str:
        lines = ["param,d,entropy_psi,converged"]
        for p, d, e, c in zip(self.params, self.d_values, self.psi_entropies, self.converged):
            lines.append(f"{p:.17g},{d:.17g},{e:.17g},{int(c)}")
        return "\n".join(lines) + "\n"


def _series_jump_params(params: np.ndarray, values: np.ndarray, factor: float) -> list:
    diffs = np.diff(values)
    n = diffs.size
    finite = values[np.isfinite(values)]
    floor = 1e-9 * (1.0 + (float(np.abs(finite).max()) if finite.size else 0.0))
    out = []
    for k in range(n):
        if not np.isfinite(diffs[k]):
            continue
        lo = max(0, k - 6)
        hi = min(n, k + 7)
        window = np.delete(diffs[lo:hi], k - lo)
        window = np.abs(window[np.isfinite(window)])
        local = float(np.median(window)) if window.size else 0.0
        if abs(diffs[k]) > factor * max(local, floor):
            out.append(0.5 * (params[k] + params[k + 1]))
    return out


def discontinuity_scan(sys: MatrixSystem, path, tau: Optional[np.ndarray] = None,
                       steps: int = 200, jump_factor: float = 10.0,
                       family_tol: float = 1e-3, distance_floor: float = 1e-6,
                       mode: str = "auto") -> ScanTable:
    """Scan d and the inferred-state entropy along a path of matrices.

    path is either a callable on [0, 1] returning a matrix or a sequence of
    matrices (then steps is ignored).  Each point is projected onto the
    system, inferred, and tabulated.  Jumps are reported two ways: the
    series detector compares one-sided differences of the d and entropy
    columns against jump_factor times the local variation, and the
    per-point classifier marks points whose d exceeds distance_floor while
    the family approaches within family_tol, which certifies a
    discontinuity of d there; flag_jumps records where that classification
    switches.
    """
    if callable(path):
        params = np.linspace(0.0, 1.0, steps)
        points = [linalg.hermitianize(np.asarray(path(t), dtype=complex)) for t in params]
    else:
        points = [linalg.hermitianize(np.asarray(m, dtype=complex)) for m in path]
        params = np.linspace(0.0, 1.0, len(points))
    count = len(points)
    d_values = np.full(count, np.nan)
    psi_entropies = np.full(count, np.nan)
    converged = np.zeros(count, dtype=bool)
    flags = np.zeros(count, dtype=bool)
    tau, log_tau = _coerce_prior(sys, tau)
    for k, point in enumerate(points):
        sigma = project_matrix(sys, point)
        result = maxent_infer(sys, sigma, tau, mode=mode)
        psi_entropies[k] = result.entropy
        converged[k] = result.converged
        eigs = np.linalg.eigvalsh(point)
        is_state = eigs.min() >= -1e-8 and abs(float(np.trace(point).real) - 1.0) <= 1e-8
        if is_state:
            d_values[k] = _phi(result.psi, log_tau) - _phi(point, log_tau)
            if d_values[k] >= distance_floor:
                flags[k] = family_distance(sys, point, tau) <= family_tol
    series = _series_jump_params(params, d_values, jump_factor)
    series += _series_jump_params(params, psi_entropies, jump_factor)
    flag_params = [0.5 * (params[k] + params[k + 1])
                   for k in range(count - 1) if flags[k] != flags[k + 1]]
    return ScanTable(
        params=params,
        d_values=d_values,
        psi_entropies=psi_entropies,
        converged=converged,
        discontinuity_flags=flags,
        series_jumps=np.array(series, dtype=float),
        flag_jumps=np.array(flag_params, dtype=float),
    )
