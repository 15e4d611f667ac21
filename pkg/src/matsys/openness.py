"""Fibers of the state projection and numerical openness probes.

The projection D(M_n) -> D(R) maps the ambient density body onto the
projected body.  Its fiber over a target sigma is the set of density
matrices projecting onto sigma, a spectrahedron cut out by the psd cone and
an affine slice.  Two solvers share the projection primitives:

* fiber_project computes the Frobenius projection of a state onto a fiber
  (Dykstra's algorithm, correction term on the cone only), and
* membership_gap estimates the distance between the psd cone and an affine
  slice (plain alternating projections with extrapolation), which settles
  whether the fiber is nonempty at all.

openness_probe samples targets at shrinking radii around pi(rho) from two
pools: uniform draws in the coordinate ball, and exposed-face points
obtained by supporting the body in random directions.  The face pool is
what makes the probe sharp.  A direction with a simple top eigenvalue
exposes a boundary point whose fiber is the single state psi psi*, so the
fiber distance is available in closed form, with no iteration to go stale
near a tangency.  The deficiency curve D(r) records the worst fiber
distance per radius; a map open at rho forces D to zero, a plateau
certifies the opposite at sampling resolution.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from ._io import matrix_to_pairs
from .errors import DimensionMismatch, Infeasible, MaxIterExceeded, NotInBody, NotInSystem
from .systems import MatrixSystem, project_matrix

__all__ = [
    "FiberSpec",
    "OpennessReport",
    "fiber_project",
    "membership_gap",
    "openness_probe",
]

DEFAULT_RADII = (0.2, 0.1, 0.05, 0.02, 0.01)


def _psd_project(x: np.ndarray) -> np.ndarray:
    """Eigenvalue clipping, batched over the leading axis."""
    w, v = np.linalg.eigh(x)
    wc = np.clip(w, 0.0, None)
    return (v * wc[:, None, :]) @ np.conjugate(np.swapaxes(v, -1, -2))


def _affine_project(x: np.ndarray, stack: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Project onto {X : coords(X) = target}; exact because the basis is orthonormal."""
    c = np.einsum("kij,bij->bk", stack.conj(), x).real
    return x + np.einsum("bk,kij->bij", target - c, stack)


def _fro(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("bij,bij->b", x.conj(), x).real)


def membership_gap(sys: MatrixSystem, targets: np.ndarray, tol: float = 1e-7, max_iter: int = 20000) -> np.ndarray:
    """Estimated distance between each affine slice and the psd states.

    targets is a (B, n, n) stack of span members with unit trace; the
    return value per item is (an extrapolated estimate of) the limiting
    alternating-projection gap, which is zero exactly on D(R).
    """
    stack = sys.basis_stack
    tc = np.einsum("kij,bij->bk", stack.conj(), targets).real
    x = np.array(targets, dtype=complex)
    b = x.shape[0]
    out = np.full(b, np.inf)
    active = np.ones(b, dtype=bool)
    hist = np.full((3, b), np.nan)  # checkpointed gaps for Aitken
    check_every = 40
    gap = np.full(b, np.inf)
    for k in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        y = _psd_project(x[idx])
        xn = _affine_project(y, stack, tc[idx])
        g = _fro(y - xn)
        x[idx] = xn
        gap[idx] = g
        done = g <= 0.5 * tol
        if np.any(done):
            out[idx[done]] = g[done]
            active[idx[done]] = False
        if k % check_every == 0:
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            hist = np.roll(hist, -1, axis=0)
            hist[2] = np.nan
            hist[2, idx] = gap[idx]
            g0, g1, g2 = hist[0, idx], hist[1, idx], hist[2, idx]
            have = ~np.isnan(g0)
            d1 = g2 - g1
            d0 = g1 - g0
            denom = d1 - d0
            est = np.where(np.abs(denom) > 1e-18, g2 - d1 * d1 / np.where(np.abs(denom) > 1e-18, denom, 1.0), g2)
            est = np.maximum(est, 0.0)
            # settled nonmembers: extrapolated limit clearly above tol and barely moving
            settled = have & (est > 4.0 * tol) & (np.abs(d1) <= 0.02 * np.maximum(g2 - 2.0 * tol, 1e-18))
            if np.any(settled):
                out[idx[settled]] = est[settled]
                active[idx[settled]] = False
    rest = np.flatnonzero(active)
    if rest.size:
        out[rest] = gap[rest]
    return out


def dykstra_project(
    sys: MatrixSystem,
    target_coords: np.ndarray,
    rho: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 20000,
) -> tuple:
    """Batched Dykstra projection of rho onto fibers over the given targets.

    target_coords has shape (B, size).  Returns (projections (B,n,n),
    distances (B,), gaps (B,), converged (B,)).  The returned iterates
    satisfy the affine constraint exactly and are psd up to the gap; a gap
    that refuses to shrink signals an empty fiber.
    """
    stack = sys.basis_stack
    tc = np.atleast_2d(np.asarray(target_coords, dtype=float))
    b = tc.shape[0]
    n = sys.dim
    rho = np.asarray(rho, dtype=complex)
    a = np.broadcast_to(rho, (b, n, n)).copy() if rho.ndim == 2 else np.array(rho, dtype=complex)
    rho0 = a.copy()
    p = np.zeros_like(a)
    active = np.ones(b, dtype=bool)
    gaps = np.zeros(b)
    converged = np.zeros(b, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        s = a[idx] + p[idx]
        y = _psd_project(s)
        p[idx] = s - y
        an = _affine_project(y, stack, tc[idx])
        delta = _fro(an - a[idx])
        gaps[idx] = _fro(y - an)
        a[idx] = an
        done = delta <= tol
        if np.any(done):
            converged[idx[done]] = True
            active[idx[done]] = False
    dist = _fro(a - rho0)
    return a, dist, gaps, converged


@dataclass
class FiberSpec:
    """A fiber of the state projection: ambient densities over one target."""

    system: MatrixSystem
    target: np.ndarray

    def __post_init__(self):
        t = linalg.hermitianize(np.asarray(self.target, dtype=complex))
        if t.shape != (self.system.dim, self.system.dim):
            raise DimensionMismatch("target shape does not match the system dimension")
        if abs(np.trace(t).real - 1.0) > 1e-8:
            raise NotInSystem("target trace is not 1")
        resid = float(np.linalg.norm(t - project_matrix(self.system, t)))
        if resid > 1e-8 * (1.0 + float(np.linalg.norm(t))):
            raise NotInSystem(f"target is outside the span (residual {resid:.3e})")
        self.target = t


def fiber_project(
    spec: FiberSpec,
    rho: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 20000,
    feas_tol: float = 1e-7,
) -> tuple:
    """Frobenius projection of rho onto the fiber over spec.target.

    Returns (rho_star, dist).  Raises Infeasible when the fiber is empty
    and MaxIterExceeded when the budget runs out before either feasibility
    or emptiness is settled; the partial iterate rides on the exception.

    When the projection lands on the relative boundary of a nonempty fiber
    the slice grazes the cone and Dykstra converges sublinearly, so the
    move-size stopping rule may never fire.  Feasibility is then certified
    independently through membership_gap, and the iterate is returned with
    a distance error on the order of its residual cone gap.
    """
    sys = spec.system
    rho = linalg.hermitianize(np.asarray(rho, dtype=complex))
    tc = sys.coords(spec.target)[None, :]
    proj, dist, gaps, _ = dykstra_project(sys, tc, rho, tol=tol, max_iter=max_iter)
    star, d, gap = proj[0], float(dist[0]), float(gaps[0])
    if gap <= feas_tol:
        return star, d
    est = float(membership_gap(sys, spec.target[None], tol=feas_tol, max_iter=max_iter)[0])
    if est > max(100 * feas_tol, 1e-4):
        raise Infeasible(f"slice misses the psd cone by about {est:.3e}; the fiber is empty")
    if est <= 2 * feas_tol:
        # Nonempty fiber but a grazing projection: the minimizer sits on a
        # proper face of the cone and Dykstra crawls tangentially, so hand
        # the iterate to a factorized local solve that is immune to the
        # tangency.  Its answer is a certified fiber point.
        polished = _polish_projection(sys, tc[0], rho, star)
        if polished is not None:
            return polished
    raise MaxIterExceeded(f"feasibility undecided after {max_iter} iterations (gap {gap:.3e})", best=(star, d))


def _polish_projection(sys, sigma, rho, start, feas_tol=1e-8):
    """Refine a grazing fiber projection with a factorized local solve.

    Writing the variable as G G* keeps it psd by construction, so only the
    coordinate constraints remain and the cone tangency that slows Dykstra
    disappears.  The problem is nonconvex in G, but with a full-rank factor
    warm-started at the Dykstra iterate the solver inherits the convex
    geometry of the underlying projection.  Returns (rho_star, dist) on
    success, None when the solver does not close the constraints.
    """
    from scipy.optimize import minimize

    n = sys.dim
    stack = sys.basis_stack
    w, v = np.linalg.eigh(start)
    g0 = v * np.sqrt(np.clip(w, 1e-12, None))[None, :]

    def unpack(x):
        return x[: n * n].reshape(n, n) + 1j * x[n * n :].reshape(n, n)

    def pack(g):
        return np.concatenate([g.real.ravel(), g.imag.ravel()])

    def fun(x):
        g = unpack(x)
        e = g @ g.conj().T - rho
        f = float(np.einsum("ij,ij->", e.conj(), e).real)
        eg = e @ g
        return f, np.concatenate([4.0 * eg.real.ravel(), 4.0 * eg.imag.ravel()])

    def cons_f(x):
        g = unpack(x)
        return np.einsum("kij,ij->k", stack.conj(), g @ g.conj().T).real - sigma

    def cons_j(x):
        g = unpack(x)
        bg = np.einsum("kij,jl->kil", stack, g)
        return np.concatenate([2.0 * bg.real.reshape(stack.shape[0], -1), 2.0 * bg.imag.reshape(stack.shape[0], -1)], axis=1)

    res = minimize(
        fun,
        pack(g0),
        jac=True,
        method="SLSQP",
        constraints=[{"type": "eq", "fun": cons_f, "jac": cons_j}],
        options={"maxiter": 400, "ftol": 1e-14},
    )
    g = unpack(res.x)
    if not np.all(np.isfinite(g)):
        return None
    rho_star = linalg.hermitianize(g @ g.conj().T)
    resid = float(np.linalg.norm(sys.coords(rho_star) - sigma))
    if not resid <= 10 * feas_tol:
        return None
    return rho_star, float(np.linalg.norm(rho_star - rho))


@dataclass
class OpennessReport:
    """Deficiency curve of a pointwise openness probe."""

    center: np.ndarray
    radii: tuple
    deficiency: tuple
    verdict: str
    samples_per_radius: int
    seed: int
    floor: float
    slope: float
    stability: float
    max_gap: float = 0.0
    sigma: np.ndarray = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "center": matrix_to_pairs(self.center),
            "radii": [float(r) for r in self.radii],
            "deficiency": [float(d) for d in self.deficiency],
            "verdict": self.verdict,
            "seed": int(self.seed),
            "params": {
                "samples_per_radius": int(self.samples_per_radius),
                "floor": float(self.floor),
                "slope": float(self.slope),
                "stability": float(self.stability),
                "max_gap": float(self.max_gap),
            },
        }


def _worker_count() -> int:
    raw = os.environ.get("MATSYS_THREADS", "").strip()
    if not raw:
        return 1
    try:
        v = int(raw)
    except ValueError:
        return 1
    if v == 0:
        return os.cpu_count() or 1
    return max(1, v)


def _batched_distances(sys, tc, rho, tol, max_iter, workers):
    if workers <= 1 or tc.shape[0] < 2 * workers:
        proj, dist, gaps, _ = dykstra_project(sys, tc, rho, tol=tol, max_iter=max_iter)
        return proj, dist, gaps
    b = tc.shape[0]
    n = sys.dim
    proj = np.zeros((b, n, n), dtype=complex)
    dist = np.zeros(b)
    gaps = np.zeros(b)
    chunks = np.array_split(np.arange(b), workers)

    def run(ix):
        a, d, g, _ = dykstra_project(sys, tc[ix], rho, tol=tol, max_iter=max_iter)
        proj[ix] = a
        dist[ix] = d
        gaps[ix] = g

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(run, [c for c in chunks if c.size]))
    return proj, dist, gaps


# Only machine-level ties count as degenerate.  The eigenvalue gap closes
# quadratically in the angle to a tangential direction, so a loose cluster
# tolerance would route nearby-but-simple directions into the compressed
# solve, whose subspace restriction is faithful only for exact ties.  Near
# ties stay on the singleton branch; their eigenvector rotation error is at
# most machine epsilon over this gap, far below any verdict scale.
_CLUSTER_TOL = 1e-12


def _support_targets(sys, dirs):
    """Exposed-face targets of D(R) for unit directions in body coordinates.

    Each direction d exposes the face of the body where <d, .> is maximal,
    carried by the top eigenspace of the matrix D = sum_k d_k b_k.  When the
    top eigenvalue is simple the face point coords(psi psi*) has the
    singleton fiber {psi psi*}: any state sharing those coordinates matches
    the maximal expectation of D and must live in the one-dimensional top
    eigenspace.  A degenerate top eigenvalue leaves an isometry V of residual
    freedom, handled by _face_fiber_distance.  Returns a list of
    (target_coords, payload, singleton) triples.
    """
    stack = sys.basis_stack
    dmat = np.einsum("kd,dij->kij", dirs, stack[1:])
    w, v = np.linalg.eigh(dmat)
    out = []
    for i in range(dirs.shape[0]):
        wi, vi = w[i], v[i]
        top = wi[-1]
        m = int(np.sum(wi >= top - _CLUSTER_TOL * max(1.0, abs(top))))
        if m == 1:
            psi = vi[:, -1]
            state = np.outer(psi, psi.conj())
            out.append((sys.coords(state), state, True))
        else:
            iso = vi[:, -m:]
            state = (iso @ iso.conj().T) / m
            out.append((sys.coords(state), iso, False))
    return out


def _boundary_normal(sys, base, rng, tries=4, iters=160):
    """Search for a direction supporting the body at the given point.

    Polyak subgradient steps drive the support slack
    lambda_max(sum_k d_k b_k) - <d, base> toward its infimum; the slack
    vanishes exactly at directions normal to the body at the base point,
    so a small final slack certifies that the point sits on the boundary
    and hands the face pool a direction whose exposed faces lie nearby.
    For an interior point the slack stays bounded away from zero and the
    caller discards the candidate.  Random directions alone cannot play
    this role: the probability that an isotropic draw exposes a face
    within r of a given boundary point decays exponentially with the
    body dimension.
    """
    stack = sys.basis_stack[1:]
    cb = base[1:]
    best_d, best_s = None, np.inf
    center = sys.coords(np.eye(sys.dim) / sys.dim)[1:]
    starts = [cb - center] + [rng.normal(size=cb.size) for _ in range(tries - 1)]
    for d0 in starts:
        nrm = float(np.linalg.norm(d0))
        d = d0 / nrm if nrm > 1e-12 else np.ones_like(cb) / np.sqrt(cb.size)
        for _ in range(iters):
            h = np.tensordot(d, stack, axes=1)
            w, v = np.linalg.eigh(h)
            psi = v[:, -1]
            p = np.einsum("kab,b,a->k", stack, psi, psi.conj()).real
            slack = float(w[-1] - d @ cb)
            if slack < best_s:
                best_s, best_d = slack, d.copy()
            g = p - cb
            g = g - (g @ d) * d
            gn = float(g @ g)
            if slack <= 0.0 or gn <= 1e-18:
                break
            d = d - (slack / gn) * g
            d /= np.linalg.norm(d)
    return best_d, best_s


def _face_fiber_distance(sys, iso, sigma, rho, tol=1e-9, max_iter=5000):
    """Distance from rho to the fiber part supported on the range of iso.

    The fiber over a point exposed by a direction lives inside the top
    eigenspace of that direction, so the problem compresses through the
    isometry iso to a spectrahedron of the eigenspace dimension.  The
    compression also removes the cone tangency that makes the ambient
    iteration crawl near the boundary.  Ambient and compressed distances
    differ by the fixed leakage of rho out of the compressed subspace.

    Returns (dist, gap, resid, w) where w is the compressed iterate (the
    ambient point is iso w iso*), gap the final cone/slice gap, and resid
    the defect of the coordinate constraints; resid stays positive when no
    matrix supported on iso can produce the requested coordinates.
    """
    m = iso.shape[1]
    bt = np.einsum("ai,kab,bj->kij", iso.conj(), sys.basis_stack, iso)
    iu = np.triu_indices(m, 1)

    def vec(h):
        return np.concatenate([np.diag(h).real, np.sqrt(2.0) * h[iu].real, np.sqrt(2.0) * h[iu].imag])

    def unvec(x):
        h = np.diag(x[:m].astype(complex))
        ut = (x[m : m + iu[0].size] + 1j * x[m + iu[0].size :]) / np.sqrt(2.0)
        h[iu] = ut
        h[(iu[1], iu[0])] = ut.conj()
        return h

    kmat = np.stack([vec(bt[k]) for k in range(bt.shape[0])])
    # For an exact top-eigenvalue tie the compressed basis rows are either
    # honest constraints or zero to machine precision; rows in between are
    # artifacts of an imperfect tie and would pin the iterate to a thin,
    # distorted slice of the fiber.  Idealize them away before inverting.
    keep = np.linalg.norm(kmat, axis=1) > 1e-6
    kred = np.where(keep[:, None], kmat, 0.0)
    kinv = np.linalg.pinv(kred, rcond=1e-12)
    comp0 = linalg.hermitianize(iso.conj().T @ rho @ iso)
    a = comp0.copy()
    p = np.zeros_like(a)
    gap = np.inf
    for _ in range(max_iter):
        s = a + p
        ws, vs = np.linalg.eigh(s)
        y = (vs * np.clip(ws, 0.0, None)) @ vs.conj().T
        p = s - y
        an = y + unvec(kinv @ (sigma - kmat @ vec(y)))
        delta = float(np.linalg.norm(an - a))
        gap = float(np.linalg.norm(y - an))
        a = an
        if delta <= tol:
            break
    resid = float(np.linalg.norm(kmat @ vec(a) - sigma))
    leak = float(np.einsum("ij,ij->", rho.conj(), rho).real - np.einsum("ij,ij->", comp0.conj(), comp0).real)
    cdist2 = float(np.einsum("ij,ij->", (a - comp0).conj(), a - comp0).real)
    return np.sqrt(max(cdist2 + leak, 0.0)), gap, resid, a


def _refine_anchor(sys, psi, c0, tol=1e-8, iters=200):
    """Slide a pure state along the pure manifold toward the center fiber.

    Dominant eigenvectors of near-degenerate fiber members carry a tail
    outside the degenerate structure, of order the perturbation over the
    eigenvalue gap, and the tail pushes their image outside the smallest
    sampling balls.  Projected Gauss-Newton descent on the squared image
    error removes it; the objective is smooth and the step uses the exact
    directional derivative, so a failed line search means a local floor
    was reached and the caller's pruning takes over.
    """
    stack = sys.basis_stack
    for _ in range(iters):
        e = sys.coords(np.outer(psi, psi.conj())) - c0
        f = float(e @ e)
        if f <= tol * tol:
            break
        h = np.tensordot(e, stack, axes=1)
        g = h @ psi
        g = g - np.vdot(psi, g) * psi
        gn2 = float(np.vdot(g, g).real)
        if gn2 <= 1e-24:
            break
        t = f / (4.0 * gn2)
        improved = False
        for _ in range(30):
            cand = psi - t * g
            cand = cand / np.linalg.norm(cand)
            e2 = sys.coords(np.outer(cand, cand.conj())) - c0
            f2 = float(e2 @ e2)
            if f2 < f:
                psi = cand
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    return psi


def _pure_anchors(sys, c0, rho, rng, floor, tol, max_iter, tries=6, max_keep=4):
    """Pure states sitting at the fiber over the probe center, far from rho.

    Openness fails when fibers over nearby targets keep their distance
    from rho, and the most rigid nearby targets are images of pure states
    close to the center fiber: a pure state is a member of its own fiber,
    and when it is the only member the distance to rho is pinned.  Dykstra
    runs from random pure starts land near the extreme ends of the center
    fiber; the dominant eigenvectors of those members are the anchors.
    Anchors close to rho are dropped because targets made from them would
    contain near-rho fiber points by construction and witness nothing.
    """
    n = sys.dim
    anchors = []
    for _ in range(tries):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        v /= np.linalg.norm(v)
        start = np.outer(v, v.conj())
        member = dykstra_project(sys, c0[None], start, tol=tol, max_iter=max_iter)[0][0]
        psi = np.linalg.eigh(linalg.hermitianize(member))[1][:, -1]
        psi = _refine_anchor(sys, psi, c0)
        if np.linalg.norm(rho - np.outer(psi, psi.conj())) <= 2.0 * floor:
            continue
        if any(abs(np.vdot(q, psi)) > 0.98 for q in anchors):
            continue
        anchors.append(psi)
        if len(anchors) >= max_keep:
            break
    return anchors


def _anchor_targets(sys, anchors, c0, r, count, rng):
    """Perturb anchors inside the pure manifold; keep images in the r-ball.

    The rotation angle is calibrated per draw: the image moves linearly in
    the angle near an anchor on the fiber, so one or two rescales land the
    target inside the ball.  Anchors whose own image already sits farther
    than r from the center never produce a target, which prunes them
    automatically on bodies where the center fiber holds no pure state.
    Returns (coords, state vector) pairs.
    """
    ts = []
    n = sys.dim
    for psi in anchors:
        for _ in range(count):
            g = rng.normal(size=n) + 1j * rng.normal(size=n)
            g -= np.vdot(psi, g) * psi
            gn = float(np.linalg.norm(g))
            if gn < 1e-12:
                continue
            g /= gn
            eta = 0.5
            for _ in range(6):
                phi = np.cos(eta) * psi + np.sin(eta) * g
                tcand = sys.coords(np.outer(phi, phi.conj()))
                off = float(np.linalg.norm(tcand - c0))
                if off <= r:
                    ts.append((tcand, phi))
                    break
                eta *= min(0.5, 0.8 * r / off)
    return ts


def _exposing_direction(sys, phi, rng, iters=80):
    """Direction whose exposed face is the given pure state, if one exists.

    A direction d supports the body with phi on top exactly when phi is an
    eigenvector of H(d) = sum_k d_k b_k for the largest eigenvalue.  The
    eigenvector condition (1 - phi phi*) H(d) phi = 0 is linear in d, so
    the candidate normals form a nullspace; on it phi stays invariant and
    the margin <phi|H|phi> - lambda_max(H restricted to the complement) is
    concave, so projected supergradient ascent either finds a direction
    with positive margin, certifying that phi is exposed, or stalls at a
    nonpositive value when no direction ranks phi first.  The caller's
    geometric checks discard the output in the latter case.
    """
    stack = sys.basis_stack[1:]
    n = sys.dim
    v = np.einsum("kab,b->ka", stack, phi)
    w = v - np.outer(v @ phi.conj(), phi)
    a = np.concatenate([w.real, w.imag], axis=1)
    u_sv, s_sv, _ = np.linalg.svd(a, full_matrices=True)
    rank = int(np.sum(s_sv > 1e-10 * max(s_sv[0], 1.0)))
    ns = u_sv[:, rank:]
    if ns.shape[1] == 0:
        return None
    q, _ = np.linalg.qr(
        np.eye(n, dtype=complex) - np.outer(phi, phi.conj())
    )
    q = q[:, : n - 1]
    t_vec = np.einsum("ka,a->k", v, phi.conj()).real
    d = ns @ (ns.T @ t_vec)
    nrm = float(np.linalg.norm(d))
    d = d / nrm if nrm > 1e-12 else ns @ rng.normal(size=ns.shape[1])
    d /= np.linalg.norm(d)
    best_d, best_f = d.copy(), -np.inf
    step = 1.0
    for _ in range(iters):
        h = np.tensordot(d, stack, axes=1)
        hq = q.conj().T @ h @ q
        wq, vq = np.linalg.eigh(hq)
        utop = q @ vq[:, -1]
        f = float(d @ t_vec) - float(wq[-1])
        if f > best_f:
            best_f, best_d = f, d.copy()
        g = t_vec - np.einsum("kab,b,a->k", stack, utop, utop.conj()).real
        g = ns @ (ns.T @ g)
        g -= (g @ d) * d
        gn = float(np.linalg.norm(g))
        if gn <= 1e-14:
            break
        d = d + (step / gn) * g
        d /= np.linalg.norm(d)
        step *= 0.93
    return best_d


def openness_probe(
    sys: MatrixSystem,
    rho: np.ndarray,
    radii: tuple = DEFAULT_RADII,
    samples: int = None,
    seed: int = 0,
    floor: float = 0.05,
    slope: float = 10.0,
    stability: float = 0.5,
    dykstra_tol: float = 1e-9,
    max_iter: int = 20000,
) -> OpennessReport:
    """Probe whether the state projection is open at rho.

    For each radius r (decreasing), targets near pi(rho) come from three
    pools.  Ball draws are uniform in the coordinate ball of radius r and
    cover the bulk of the body near the center.  Face draws support the
    body in random directions and keep the exposed-face points that land
    within r; these are exact boundary points, and they carry exact fiber
    data (a simple top eigenvalue pins the fiber to a single pure state).
    The boundary pool exists because that is where openness fails: fibers
    over extreme targets can collapse abruptly, and ball sampling alone
    gives the boundary measure zero.  Directions that produced a keeper are
    recycled, with shrinking perturbations, as candidates at the next
    radius, so the thinning normal cone stays populated as r decreases.
    Anchor draws perturb pure states found at the center fiber; every
    image that lands inside the ball is a boundary point, so its
    supporting direction is recovered and the image joins the face pool.
    This reaches collapse points that random directions essentially never
    expose, such as the extreme points packed around a flat boundary
    face, where direction sampling goes blind in high dimension.  All
    three pools evaluate genuine body points with certified fiber data,
    so extra targets can only sharpen the probe, never bias it: over an
    open center every nearby fiber has near members and the solvers
    report them, while anchor images that fall interior fail the
    supporting-slack test and are dropped.
    The deficiency is D(r) = max over targets of dist(rho, fiber(target)).

    Verdicts: NOT_OPEN when D at the smallest radius sits above `floor`
    and is stable across the two smallest radii; otherwise OPEN when
    D(r) <= slope * r at every radius; otherwise INCONCLUSIVE.  The plateau
    test runs first since a genuine plateau also satisfies the slope bound
    at large radii.
    """
    radii = tuple(float(r) for r in radii)
    if len(radii) < 2 or any(r <= 0 for r in radii) or any(np.diff(radii) >= 0):
        raise ValueError("radii must be a decreasing tuple of positive numbers, length >= 2")
    body_dim = sys.size - 1
    if body_dim == 0:
        raise ValueError("the body is a single point; openness is trivial")
    min_samples = 8 * body_dim
    if samples is None:
        samples = min_samples
    if samples < min_samples:
        raise ValueError(f"samples={samples} below 8 * dim D(R) = {min_samples}")
    rho = linalg.hermitianize(np.asarray(rho, dtype=complex))
    if abs(np.trace(rho).real - 1.0) > 1e-8 or not linalg.is_psd(rho, tol=1e-8):
        raise NotInBody("probe center must be a density matrix")
    sigma = project_matrix(sys, rho)
    c0 = sys.coords(sigma)
    rng = np.random.default_rng(seed)
    workers = _worker_count()
    deficiency = []
    max_gap = 0.0
    kept_dirs = None
    prev_r = None
    seed_dir, seed_slack = _boundary_normal(sys, c0, rng)
    if seed_dir is not None and seed_slack <= 0.5 * radii[-1]:
        kept_dirs = seed_dir[None, :]
    anchors = _pure_anchors(sys, c0, rho, rng, floor, dykstra_tol, max_iter)
    for r in radii:
        # face pool: support the body in random directions, keep hits in the ball
        face_goal = samples // 2
        face = []
        hit_dirs = []
        # anchor route into the face pool: perturbed pure images inside the
        # ball are boundary points whenever the anchors were genuine fiber
        # members; recover each image's supporting direction and let the
        # face machinery read off the exact fiber data.  A slack that fails
        # to vanish means the image is interior and contributes nothing.
        if anchors:
            for t, phi in _anchor_targets(sys, anchors, c0, r, 3, rng):
                d_a = _exposing_direction(sys, phi, rng)
                if d_a is None:
                    continue
                tc_face, payload, single = _support_targets(sys, d_a[None, :])[0]
                if np.linalg.norm(tc_face - c0) <= r:
                    face.append((tc_face, payload, single))
                    hit_dirs.append(d_a)
        budget = 40 * samples
        drawn = 0
        shrink = 1.0 if prev_r is None else r / prev_r
        # anneal the spread around recycled directions: wide first, then
        # tight, so high-dimensional bodies still produce nearby faces
        scale = shrink
        while len(face) < face_goal and drawn < budget:
            nb = min(4 * samples, budget - drawn)
            drawn += nb
            cand = rng.normal(size=(nb, body_dim))
            if kept_dirs is not None and kept_dirs.shape[0] > 0:
                half = nb // 2
                base = kept_dirs[rng.integers(0, kept_dirs.shape[0], size=half)]
                cand[:half] = base + scale * cand[:half]
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            scale = max(0.5 * scale, 1e-3)
            for d_vec, (tc_face, payload, single) in zip(cand, _support_targets(sys, cand)):
                if np.linalg.norm(tc_face - c0) <= r:
                    face.append((tc_face, payload, single))
                    hit_dirs.append(d_vec)
                    if len(face) >= face_goal:
                        break
        if hit_dirs:
            kept_dirs = np.array(hit_dirs)
            prev_r = r
        face_dist = 0.0
        for tc_face, payload, single in face:
            if single:
                fd = float(np.linalg.norm(rho - payload))
            else:
                fd = _face_fiber_distance(sys, payload, tc_face, rho, tol=dykstra_tol)[0]
            face_dist = max(face_dist, fd)
        # ball pool: uniform draws fill the remaining sample budget
        nball = samples - len(face)
        g = rng.normal(size=(nball, body_dim))
        nrm = np.linalg.norm(g, axis=1, keepdims=True)
        nrm[nrm == 0] = 1.0
        u = rng.uniform(size=(nball, 1)) ** (1.0 / body_dim)
        tc = np.tile(c0, (nball, 1))
        tc[:, 1:] += r * u * g / nrm
        proj, dist, gaps = _batched_distances(sys, tc, rho, dykstra_tol, max_iter, workers)
        # Alternating projections crawl along thin tangential fibers and can
        # leave a stale, inflated distance behind.  Rescue stuck targets with
        # the certified polish; when it fails the stale estimate stays, which
        # errs toward INCONCLUSIVE rather than a fake OPEN.
        gap_tol = max(100.0 * dykstra_tol, 1e-7)
        stuck = np.flatnonzero(gaps > gap_tol)
        if stuck.size:
            clean = np.setdiff1d(np.arange(dist.size), stuck, assume_unique=True)
            best = max(float(dist[clean].max()) if clean.size else 0.0, face_dist)
            for k in stuck[np.argsort(-dist[stuck])]:
                if dist[k] <= best:
                    break
                polished = _polish_projection(sys, tc[k], rho, proj[k])
                if polished is None:
                    # Unrescued and dominant: it sets the radius maximum no
                    # matter what the remaining stuck targets polish down to.
                    break
                dist[k] = polished[1]
                gaps[k] = 0.0
                best = max(best, float(dist[k]))
        if gaps.size:
            max_gap = max(max_gap, float(np.max(gaps)))
        deficiency.append(max(float(np.max(dist)) if dist.size else 0.0, face_dist))
    d = np.array(deficiency)
    stable_tail = abs(d[-1] - d[-2]) <= stability * max(d[-1], floor)
    if d[-1] >= floor and stable_tail:
        verdict = "NOT_OPEN"
    elif np.all(d <= slope * np.array(radii)):
        verdict = "OPEN"
    else:
        verdict = "INCONCLUSIVE"
    return OpennessReport(
        center=rho,
        radii=radii,
        deficiency=tuple(deficiency),
        verdict=verdict,
        samples_per_radius=int(samples),
        seed=int(seed),
        floor=float(floor),
        slope=float(slope),
        stability=float(stability),
        max_gap=float(max_gap),
        sigma=sigma,
    )
