"""Weighted free-boundary geodesics and their stability spectrum.

On an annulus (Sigma, g) with weight psi, a critical curve of the weighted
length integral of e^psi runs from boundary to boundary, meets both circles
orthogonally, and satisfies H(s) + <grad psi, nu(s)> = 0.  The second
variation defines the eigenproblem

    -v'' - K v - H^2 v + (Hess psi)(nu, nu) v - <grad psi, gamma'> v' = lam v

with Robin conditions -v'(0) = kappa(gamma(0)) v(0), v'(l) = kappa(gamma(l)) v(l).
From the positive ground state the log-composite w = psi(gamma) + log v
obeys the Riccati bound

    -w'' - n/(2(n-1)) w'^2 + n(n-1)/2 >= 0

whenever the weight hypothesis holds, forcing min{-w'(0), w'(l)} <= n-1.

The minimizer search is projected gradient descent on a polyline: interior
samples move along the discrete normal direction, endpoints slide along the
boundary circles, and the curve is reparametrized to uniform arc length
every few iterations.  The eigensolve is second-order finite differences
on the weighted quadratic form, polished by inverse iteration from a
positive seed; the reported eigenvalue is Richardson-extrapolated across
two grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .comparison import DomainError, NumericalError
from .surfaces import ConformalSurface, WarpedDiskMetric, boundary_data


# ---------------------------------------------------------------------------
# Geodesic representation
# ---------------------------------------------------------------------------

@dataclass
class WeightedGeodesic:
    """Unit-speed polyline from boundary to boundary with the per-sample
    data the stability operator needs."""

    surface: object
    s: np.ndarray                 # arc-length parameter, uniform
    points: np.ndarray            # (N, 2) coordinates ((q, xi) or parameter plane)
    psi: np.ndarray               # psi(gamma(s))
    dpsi_tan: np.ndarray          # <grad psi, gamma'>
    dpsi_nu: np.ndarray           # <grad psi, nu>
    hess_psi_nu: np.ndarray       # (Hess psi)(nu, nu)
    K: np.ndarray                 # Gauss curvature along the curve
    H: np.ndarray                 # geodesic curvature of the curve
    kappa0: float                 # boundary curvature at gamma(0)
    kappal: float                 # boundary curvature at gamma(l)
    weighted_length: float
    grad_residual: float          # final projected-gradient norm
    fields: dict = field(default_factory=dict, repr=False)

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def criticality_residual(self) -> np.ndarray:
        """|H + <grad psi, nu>| at interior samples (zero for minimizers)."""
        return np.abs(self.H + self.dpsi_nu)[1:-1]

    def unit_speed_error(self) -> float:
        seg = np.diff(self.s)
        return float(np.abs(seg / seg[0] - 1.0).max())


# ---------------------------------------------------------------------------
# Warped-annulus geodesics
# ---------------------------------------------------------------------------

def _warped_segment_lengths(surface: WarpedDiskMetric, P):
    dq = np.diff(P[:, 0])
    dxi = np.diff(P[:, 1])
    qm = 0.5 * (P[1:, 0] + P[:-1, 0])
    phim = surface.phi(qm)
    return np.sqrt(dq * dq + (phim * dxi) ** 2), phim, qm


def _warped_energy(surface: WarpedDiskMetric, P):
    ell, _, _ = _warped_segment_lengths(surface, P)
    w = np.exp(0.5 * (surface.psi(P[1:, 0]) + surface.psi(P[:-1, 0])))
    return float((w * ell).sum())


def _warped_energy_grad(surface: WarpedDiskMetric, P):
    """Analytic gradient of the discrete weighted length."""
    N = len(P)
    ell, phim, qm = _warped_segment_lengths(surface, P)
    dq = np.diff(P[:, 0])
    dxi = np.diff(P[:, 1])
    psi_pts = surface.psi(P[:, 0])
    dpsi_pts = surface.dpsi(P[:, 0])
    w = np.exp(0.5 * (psi_pts[1:] + psi_pts[:-1]))
    dphim = surface.dphi(qm)
    g = np.zeros_like(P)
    # segment length derivatives
    dl_dq_lo = (-dq + 0.5 * phim * dphim * dxi * dxi) / ell
    dl_dq_hi = (dq + 0.5 * phim * dphim * dxi * dxi) / ell
    dl_dxi_lo = -(phim**2) * dxi / ell
    dl_dxi_hi = (phim**2) * dxi / ell
    g[:-1, 0] += w * dl_dq_lo + 0.5 * w * dpsi_pts[:-1] * ell
    g[1:, 0] += w * dl_dq_hi + 0.5 * w * dpsi_pts[1:] * ell
    g[:-1, 1] += w * dl_dxi_lo
    g[1:, 1] += w * dl_dxi_hi
    return g


def _warped_reparametrize(surface: WarpedDiskMetric, P):
    ell, _, _ = _warped_segment_lengths(surface, P)
    cum = np.concatenate([[0.0], np.cumsum(ell)])
    target = np.linspace(0.0, cum[-1], len(P))
    q = np.interp(target, cum, P[:, 0])
    xi = np.interp(target, cum, P[:, 1])
    out = np.column_stack([q, xi])
    out[0] = P[0]
    out[-1] = P[-1]
    return out


def _warped_tangent_normal(surface: WarpedDiskMetric, P):
    """Orthonormal-frame tangent/normal of the polyline (frame e1 = d/dq,
    e2 = phi^-1 d/dxi)."""
    ell, phim, _ = _warped_segment_lengths(surface, P)
    phi_pts = surface.phi(P[:, 0])
    # frame components of segment directions
    tx = np.diff(P[:, 0]) / ell
    ty = phim * np.diff(P[:, 1]) / ell
    # vertex tangent: average of adjacent segments
    tvx = np.concatenate([[tx[0]], 0.5 * (tx[1:] + tx[:-1]), [tx[-1]]])
    tvy = np.concatenate([[ty[0]], 0.5 * (ty[1:] + ty[:-1]), [ty[-1]]])
    norm = np.hypot(tvx, tvy)
    tvx /= norm
    tvy /= norm
    return (tvx, tvy), (-tvy, tvx), phi_pts


def find_free_boundary_geodesic(surface, seed=None, n_samples: int = 256,
                                max_iter: int = 4000, gtol: float = 1e-10):
    """Local minimizer of the weighted length among curves joining the two
    boundary circles of an annulus, endpoints sliding along the boundary."""
    if isinstance(surface, WarpedDiskMetric):
        if surface.kind != "annulus":
            raise DomainError("free-boundary geodesics need an annulus surface")
        return _find_geodesic_warped(surface, seed, n_samples, max_iter, gtol)
    if isinstance(surface, ConformalSurface):
        if surface.kind != "annulus":
            raise DomainError("free-boundary geodesics need an annulus surface")
        return _find_geodesic_mesh(surface, seed, n_samples, max_iter, gtol)
    raise DomainError(f"unsupported surface type {type(surface).__name__}")


def _find_geodesic_warped(surface, seed, n_samples, max_iter, gtol):
    if seed is None:
        xi0 = 0.0
        q = np.linspace(surface.s_lo, surface.l, n_samples)
        P = np.column_stack([q, np.full(n_samples, xi0)])
    else:
        seed = np.asarray(seed, dtype=float)
        cum = np.linspace(0, 1, len(seed))
        t = np.linspace(0, 1, n_samples)
        P = np.column_stack([np.interp(t, cum, seed[:, 0]), np.interp(t, cum, seed[:, 1])])
        P[0, 0] = surface.s_lo
        P[-1, 0] = surface.l
    E = _warped_energy(surface, P)
    scale = E / (surface.l - surface.s_lo)
    step = 0.1 * (surface.l - surface.s_lo) / n_samples
    resid = np.inf
    for it in range(max_iter):
        g = _warped_energy_grad(surface, P)
        (tvx, tvy), (nvx, nvy), phi_pts = _warped_tangent_normal(surface, P)
        # metric gradient (frame components): g_frame = (g_q, g_xi / phi)
        gfx = g[:, 0]
        gfy = g[:, 1] / phi_pts
        move = np.zeros_like(P)
        gn = gfx[1:-1] * nvx[1:-1] + gfy[1:-1] * nvy[1:-1]
        move[1:-1, 0] = gn * nvx[1:-1]
        move[1:-1, 1] = gn * nvy[1:-1] / phi_pts[1:-1]
        # endpoints slide along the boundary circles (xi direction only)
        move[0, 1] = g[0, 1] / phi_pts[0] ** 2
        move[-1, 1] = g[-1, 1] / phi_pts[-1] ** 2
        resid = max(np.abs(gn).max() if len(gn) else 0.0,
                    abs(move[0, 1]) * phi_pts[0], abs(move[-1, 1]) * phi_pts[-1])
        if resid <= gtol * scale * n_samples:
            break
        tau = step
        for _ in range(40):
            Pn = P - tau * move
            En = _warped_energy(surface, Pn)
            if En < E:
                break
            tau /= 2
        else:
            break
        P, E = Pn, En
        if (it + 1) % 10 == 0:
            P = _warped_reparametrize(surface, P)
            E = _warped_energy(surface, P)
    P = _warped_reparametrize(surface, P)
    return _warped_geodesic_data(surface, P, resid)


def _warped_geodesic_data(surface, P, resid):
    ell, phim, _ = _warped_segment_lengths(surface, P)
    cum = np.concatenate([[0.0], np.cumsum(ell)])
    q = P[:, 0]
    (tvx, tvy), (nvx, nvy), phi_pts = _warped_tangent_normal(surface, P)
    dpsi_pts = surface.dpsi(q)
    d2psi_pts = surface.d2psi(q)
    dphi_pts = surface.dphi(q)
    # geodesic curvature from second differences plus Christoffel terms
    h = np.gradient(cum)
    qd = np.gradient(q, cum)
    xid = np.gradient(P[:, 1], cum)
    qdd = np.gradient(qd, cum)
    xidd = np.gradient(xid, cum)
    aq = qdd - phi_pts * dphi_pts * xid**2
    axi = xidd + 2.0 * dphi_pts / phi_pts * qd * xid
    H = aq * nvx + axi * phi_pts * nvy
    # radial weight: Hess psi = diag(psi'', (phi'/phi) psi') in the frame
    hess_nu = d2psi_pts * nvx**2 + dphi_pts / phi_pts * dpsi_pts * nvy**2
    K = surface.gauss_curvature(q)
    kap0 = float(-surface.dphi(surface.s_lo) / surface.phi(surface.s_lo))
    kapl = float(surface.dphi(surface.l) / surface.phi(surface.l))
    w = np.exp(0.5 * (surface.psi(q[1:]) + surface.psi(q[:-1])))
    return WeightedGeodesic(
        surface=surface, s=cum, points=P,
        psi=surface.psi(q),
        dpsi_tan=dpsi_pts * tvx,
        dpsi_nu=dpsi_pts * nvx,
        hess_psi_nu=hess_nu,
        K=K, H=H, kappa0=kap0, kappal=kapl,
        weighted_length=float((w * ell).sum()),
        grad_residual=float(resid),
    )


# ---------------------------------------------------------------------------
# Mesh-annulus geodesics
# ---------------------------------------------------------------------------

class _MeshFields:
    """PL interpolation of vertex fields with nearest-triangle lookup."""

    def __init__(self, surface: ConformalSurface):
        from scipy.spatial import cKDTree

        self.surface = surface
        cent = surface.verts[surface.tris].mean(axis=1)
        self.tree = cKDTree(cent)
        self.grad_lam = surface.tri_grad_param(surface.lam)
        self.grad_psi = surface.tri_grad_param(surface.psi)

    def locate(self, pts):
        _, cand = self.tree.query(pts, k=8)
        tris = self.surface.tris
        verts = self.surface.verts
        out = np.zeros(len(pts), dtype=np.int64)
        bary = np.zeros((len(pts), 3))
        for i, p in enumerate(pts):
            best, best_b, best_pen = cand[i][0], None, np.inf
            for ti in cand[i]:
                a, b, c = verts[tris[ti]]
                Tm = np.array([[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]])
                try:
                    lam12 = np.linalg.solve(Tm, p - a)
                except np.linalg.LinAlgError:
                    continue
                l0 = 1.0 - lam12.sum()
                bar = np.array([l0, lam12[0], lam12[1]])
                pen = -min(bar.min(), 0.0)
                if pen < best_pen:
                    best, best_b, best_pen = ti, bar, pen
                if pen == 0.0:
                    break
            out[i] = best
            bary[i] = np.clip(best_b, 0.0, 1.0)
            bary[i] /= bary[i].sum()
        return out, bary

    def eval(self, f, pts):
        ti, bary = self.locate(pts)
        return np.einsum("ij,ij->i", np.asarray(f)[self.surface.tris[ti]], bary)

    def eval_grad(self, grad_tri, pts):
        ti, _ = self.locate(pts)
        return grad_tri[ti]


def _mesh_energy(fields: _MeshFields, P):
    lam = fields.eval(fields.surface.lam, P)
    psi = fields.eval(fields.surface.psi, P)
    w = lam + psi
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    return float((np.exp(0.5 * (w[1:] + w[:-1])) * seg).sum())


def _find_geodesic_mesh(surface, seed, n_samples, max_iter, gtol):
    fields = _MeshFields(surface)
    rads = np.linalg.norm(surface.verts[surface.boundary], axis=1)
    r_in, r_out = rads.min(), rads.max()
    if seed is None:
        t = np.linspace(r_in, r_out, n_samples)
        P = np.column_stack([t, np.zeros(n_samples)])
    else:
        seed = np.asarray(seed, dtype=float)
        t = np.linspace(0, 1, n_samples)
        cum = np.linspace(0, 1, len(seed))
        P = np.column_stack([np.interp(t, cum, seed[:, 0]), np.interp(t, cum, seed[:, 1])])
    P[0] *= r_in / np.linalg.norm(P[0])
    P[-1] *= r_out / np.linalg.norm(P[-1])

    def energy_grad(P):
        # numerical gradient via the PL structure: d(exp chain) analytic,
        # field gradients piecewise constant
        lam = fields.eval(surface.lam, P)
        psi = fields.eval(surface.psi, P)
        wf = 0.5 * (lam + psi)
        gl = fields.eval_grad(fields.grad_lam, P)
        gp = fields.eval_grad(fields.grad_psi, P)
        gw = 0.5 * (gl + gp)
        d = np.diff(P, axis=0)
        seg = np.linalg.norm(d, axis=1)
        wseg = np.exp(wf[1:] + wf[:-1])
        g = np.zeros_like(P)
        dirs = d / seg[:, None]
        g[:-1] += -wseg[:, None] * dirs + (wseg * seg)[:, None] * gw[:-1]
        g[1:] += wseg[:, None] * dirs + (wseg * seg)[:, None] * gw[1:]
        return g

    E = _mesh_energy(fields, P)
    scale = E / max(r_out - r_in, 1e-9)
    step = 0.2 * (r_out - r_in) / n_samples
    resid = np.inf
    for it in range(max_iter):
        g = energy_grad(P)
        d = np.diff(P, axis=0)
        seg = np.linalg.norm(d, axis=1)
        tv = np.vstack([d[0] / seg[0], (d[1:] + d[:-1]) /
                        np.linalg.norm(d[1:] + d[:-1], axis=1)[:, None], d[-1] / seg[-1]])
        nv = np.column_stack([-tv[:, 1], tv[:, 0]])
        move = np.zeros_like(P)
        gn = np.einsum("ij,ij->i", g[1:-1], nv[1:-1])
        move[1:-1] = gn[:, None] * nv[1:-1]
        for endi, r in ((0, r_in), (-1, r_out)):
            tang = np.array([-P[endi, 1], P[endi, 0]])
            tang /= np.linalg.norm(tang)
            move[endi] = (g[endi] @ tang) * tang
        resid = float(np.linalg.norm(move, axis=1).max())
        if resid <= gtol * scale * n_samples:
            break
        tau = step
        for _ in range(40):
            Pn = P - tau * move
            Pn[0] *= r_in / np.linalg.norm(Pn[0])
            Pn[-1] *= r_out / np.linalg.norm(Pn[-1])
            En = _mesh_energy(fields, Pn)
            if En < E:
                break
            tau /= 2
        else:
            break
        P, E = Pn, En
        if (it + 1) % 10 == 0:
            P = _mesh_reparametrize(fields, P)
            E = _mesh_energy(fields, P)
    P = _mesh_reparametrize(fields, P)
    return _mesh_geodesic_data(surface, fields, P, resid)


def _mesh_reparametrize(fields, P):
    lam = fields.eval(fields.surface.lam, P)
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1) * np.exp(0.5 * (lam[1:] + lam[:-1]))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    target = np.linspace(0.0, cum[-1], len(P))
    x = np.interp(target, cum, P[:, 0])
    y = np.interp(target, cum, P[:, 1])
    out = np.column_stack([x, y])
    out[0] = P[0]
    out[-1] = P[-1]
    return out


def _quadratic_fit_hessian(surface, pts, radius_factor=3.5):
    """Euclidean Hessian of psi near each point by local quadratic fitting."""
    from scipy.spatial import cKDTree

    tree = cKDTree(surface.verts)
    mean_h = np.sqrt(surface.verts.ptp(axis=0).prod() / len(surface.verts))
    out = np.zeros((len(pts), 2, 2))
    for i, p in enumerate(pts):
        idx = tree.query_ball_point(p, radius_factor * mean_h)
        if len(idx) < 8:
            _, idx = tree.query(p, k=12)
        X = surface.verts[idx] - p
        yv = surface.psi[idx]
        cols = [np.ones(len(idx)), X[:, 0], X[:, 1],
                0.5 * X[:, 0] ** 2, X[:, 0] * X[:, 1], 0.5 * X[:, 1] ** 2]
        Amat = np.column_stack(cols)
        coef, *_ = np.linalg.lstsq(Amat, yv, rcond=None)
        out[i] = [[coef[3], coef[4]], [coef[4], coef[5]]]
    return out


def _mesh_geodesic_data(surface, fields, P, resid):
    lam = fields.eval(surface.lam, P)
    psi = fields.eval(surface.psi, P)
    seg_e = np.linalg.norm(np.diff(P, axis=0), axis=1)
    seg = seg_e * np.exp(0.5 * (lam[1:] + lam[:-1]))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    d = np.diff(P, axis=0)
    tv = np.vstack([d[0] / seg_e[0], (d[1:] + d[:-1]) /
                    np.linalg.norm(d[1:] + d[:-1], axis=1)[:, None], d[-1] / seg_e[-1]])
    nv = np.column_stack([-tv[:, 1], tv[:, 0]])
    gl = fields.eval_grad(fields.grad_lam, P)
    gp = fields.eval_grad(fields.grad_psi, P)
    el = np.exp(-lam)
    # conformal metric e^{2 lam}: <grad psi, X>_g = e^-lam dpsi(X_e)
    dpsi_tan = el * np.einsum("ij,ij->i", gp, tv)
    dpsi_nu = el * np.einsum("ij,ij->i", gp, nv)
    # curve curvature: k_g = e^-lam (k_e - d lam/d n_e)
    xd = np.gradient(P[:, 0], cum)
    yd = np.gradient(P[:, 1], cum)
    xdd = np.gradient(xd, cum)
    ydd = np.gradient(yd, cum)
    k_e = (xd * ydd - yd * xdd) / np.maximum((xd * xd + yd * yd) ** 1.5, 1e-300)
    # sign: curvature toward the normal nv
    H = el * (k_e * np.sign(np.einsum("ij,ij->i", np.column_stack([-yd, xd]), nv))
              - np.einsum("ij,ij->i", gl, nv))
    hess_e = _quadratic_fit_hessian(surface, P)
    # covariant Hessian in the conformal metric along the unit normal:
    # e^-2lam [psi_nn - 2 lam_n psi_n + <grad lam, grad psi>_e]
    lam_n = np.einsum("ij,ij->i", gl, nv)
    psi_n = np.einsum("ij,ij->i", gp, nv)
    psi_nn = np.einsum("ij,ijk,ik->i", nv, hess_e, nv)
    hess_nu = np.exp(-2 * lam) * (psi_nn - 2 * lam_n * psi_n +
                                  np.einsum("ij,ij->i", gl, gp))
    Kv = surface.gauss_curvature_vertex()
    Kv = np.where(surface.boundary, 0.0, Kv)
    K = fields.eval(Kv, P)
    bdata = boundary_data(surface)
    # match endpoints to boundary components by parameter radius
    kaps = []
    for pt in (P[0], P[-1]):
        best, bestd = None, np.inf
        for comp in bdata.components:
            ids = comp.vertex_ids
            dmin = np.linalg.norm(surface.verts[ids] - pt, axis=1).min()
            if dmin < bestd:
                bestd = dmin
                j = np.argmin(np.linalg.norm(surface.verts[ids] - pt, axis=1))
                best = comp.kappa[j]
        kaps.append(float(best))
    w = np.exp(0.5 * (psi[1:] + psi[:-1]))
    return WeightedGeodesic(
        surface=surface, s=cum, points=P, psi=psi,
        dpsi_tan=dpsi_tan, dpsi_nu=dpsi_nu, hess_psi_nu=hess_nu,
        K=K, H=H, kappa0=kaps[0], kappal=kaps[1],
        weighted_length=float((w * seg).sum()),
        grad_residual=float(resid),
    )


# ---------------------------------------------------------------------------
# Stability spectrum
# ---------------------------------------------------------------------------

def _assemble_form(s, m, V, kappa0, kappal):
    """Tridiagonal stiffness-plus-potential matrix of the quadratic form and
    the lumped mass diagonal."""
    N = len(s)
    h = s[1] - s[0]
    mhalf = 0.5 * (m[1:] + m[:-1])
    diag = np.zeros(N)
    off = -mhalf / h
    diag[:-1] += mhalf / h
    diag[1:] += mhalf / h
    wts = np.full(N, h)
    wts[0] = wts[-1] = h / 2
    diag += V * m * wts
    diag[0] -= m[0] * kappa0
    diag[-1] -= m[-1] * kappal
    mass = m * wts
    return diag, off, mass


def _ground_state(diag, off, mass, max_iter=200, tol=1e-14):
    """Smallest eigenpair of the generalized tridiagonal problem by shifted
    inverse iteration from a positive seed."""
    N = len(diag)
    # conservative lower bound for the shift (Gershgorin on M^-1/2 A M^-1/2)
    sm = np.sqrt(mass)
    d = diag / mass
    e = off / (sm[1:] * sm[:-1])
    radius = np.zeros(N)
    radius[:-1] += np.abs(e)
    radius[1:] += np.abs(e)
    sigma = (d - radius).min() - 1.0
    v = np.ones(N)
    lam_old = np.inf
    for _ in range(max_iter):
        ab = np.zeros((3, N))
        ab[0, 1:] = off
        ab[1] = diag - sigma * mass
        ab[2, :-1] = off
        try:
            y = solve_banded((1, 1), ab, mass * v)
        except np.linalg.LinAlgError:
            sigma -= 1.0
            continue
        y /= np.sqrt(np.sum(mass * y * y))
        Ay = diag * y
        Ay[:-1] += off * y[1:]
        Ay[1:] += off * y[:-1]
        lam = float(np.sum(y * Ay))
        v = y
        if abs(lam - lam_old) < tol * max(1.0, abs(lam)):
            break
        lam_old = lam
        # Rayleigh acceleration, kept strictly below the target
        sigma = lam - max(1e-10, 1e-6 * abs(lam))
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    if np.any(v <= 0):
        raise NumericalError("ground state is not positive; discretization pathology")
    return lam, v / v.max()


@dataclass
class StabilityReport:
    geodesic: WeightedGeodesic
    n: int
    lam: float                   # Richardson-extrapolated smallest eigenvalue
    lam_raw: float               # fine-grid value
    s: np.ndarray
    v: np.ndarray
    w: np.ndarray
    dw0: float                   # w'(0)
    dwl: float                   # w'(l)
    riccati: np.ndarray          # -w'' - n/(2(n-1)) w'^2 + n(n-1)/2
    boundary_bound: float        # min{-w'(0), w'(l)}

    def endpoint_identity_residuals(self):
        g = self.geodesic
        r0 = (-self.dw0) - (-g.dpsi_tan[0] + g.kappa0)
        rl = self.dwl - (g.dpsi_tan[-1] + g.kappal)
        return float(r0), float(rl)


def _spectrum_on_grid(geo: WeightedGeodesic, N: int):
    L = geo.length
    s = np.linspace(0.0, L, N)
    interp = lambda f: np.interp(s, geo.s, f)
    psi = interp(geo.psi)
    m = np.exp(psi)
    V = -(interp(geo.K) + interp(geo.H) ** 2 - interp(geo.hess_psi_nu))
    diag, off, mass = _assemble_form(s, m, V, geo.kappa0, geo.kappal)
    lam, v = _ground_state(diag, off, mass)
    return s, psi, m, V, lam, v


def stability_spectrum(geo: WeightedGeodesic, n: int, N: int = 4097) -> StabilityReport:
    """Ground state of the stability operator and the log-composite w.

    The eigenvalue is Richardson-extrapolated from grids N and (N+1)/2; the
    Riccati residual evaluates w'' through the eigen-ODE (v''/v is exact
    given v and lam), so only first derivatives are differenced.
    """
    s, psi, m, V, lam_f, v = _spectrum_on_grid(geo, N)
    _, _, _, _, lam_c, _ = _spectrum_on_grid(geo, (N + 1) // 2)
    lam = (4.0 * lam_f - lam_c) / 3.0

    logv = np.log(v)
    w = psi + logv
    h = s[1] - s[0]
    # one-sided second-order endpoint derivatives
    dw0 = (-3 * w[0] + 4 * w[1] - w[2]) / (2 * h)
    dwl = (3 * w[-1] - 4 * w[-2] + w[-3]) / (2 * h)
    dlogv = np.gradient(logv, h)
    dpsi = np.gradient(psi, h)
    dw = dpsi + dlogv
    # v''/v from the ODE: -v'' - (K + H^2 - hess) v - <grad psi, t> v' = lam v
    dpsi_tan = np.interp(s, geo.s, geo.dpsi_tan)
    vpp_over_v = V - dpsi_tan * dlogv - lam_f
    d2psi = np.gradient(dpsi, h)
    wpp = d2psi + vpp_over_v - dlogv * dlogv
    riccati = -wpp - n / (2.0 * (n - 1.0)) * dw**2 + n * (n - 1.0) / 2.0
    return StabilityReport(
        geodesic=geo, n=n, lam=float(lam), lam_raw=float(lam_f), s=s, v=v, w=w,
        dw0=float(dw0), dwl=float(dwl), riccati=riccati,
        boundary_bound=float(min(-dw0, dwl)),
    )


def second_variation_form(geo: WeightedGeodesic, zeta, n: int = None, N: int = 4097) -> float:
    """Quadratic form of the weighted second variation on a test function.

    zeta may be a callable on [0, L] or an array sampled on the geodesic
    grid; the form is evaluated through the same discrete assembly as the
    eigenproblem, so form(v) = lam * integral(e^psi v^2) holds exactly.
    """
    if callable(zeta):
        s = np.linspace(0.0, geo.length, N)
        z = np.asarray(zeta(s), dtype=float)
    else:
        z = np.asarray(zeta, dtype=float)
        N = len(z)
        s = np.linspace(0.0, geo.length, N)
    interp = lambda f: np.interp(s, geo.s, f)
    m = np.exp(interp(geo.psi))
    V = -(interp(geo.K) + interp(geo.H) ** 2 - interp(geo.hess_psi_nu))
    diag, off, _ = _assemble_form(s, m, V, geo.kappa0, geo.kappal)
    Az = diag * z
    Az[:-1] += off * z[1:]
    Az[1:] += off * z[:-1]
    return float(z @ Az)


@dataclass
class NondiskReport:
    n: int
    lam: float
    boundary_bound: float
    rhs: float
    inf_boundary_quantity: float
    riccati_min: float
    criticality_max: float
    passed: bool

    def to_json(self) -> str:
        import json

        return json.dumps({k: (bool(v) if isinstance(v, (bool, np.bool_)) else v)
                           for k, v in self.__dict__.items()})


def theorem1_nondisk_report(surface, n: int = None, seed=None, tol: float = 1e-6) -> NondiskReport:
    """Pipeline: geodesic, spectrum, w bounds.  Asserts
    min{-w'(0), w'(l)} <= (n-1) + tol and reports inf(<grad psi,eta> + kappa)."""
    n = surface.n if n is None else n
    geo = find_free_boundary_geodesic(surface)
    rep = stability_spectrum(geo, n)
    bd = boundary_data(surface)
    inf_q = bd.inf_quantity(n) + (n - 1.0)
    return NondiskReport(
        n=n, lam=rep.lam, boundary_bound=rep.boundary_bound, rhs=float(n - 1.0),
        inf_boundary_quantity=float(inf_q),
        riccati_min=float(rep.riccati.min()),
        criticality_max=float(np.max(geo.criticality_residual())) if len(geo.s) > 2 else 0.0,
        passed=bool(rep.boundary_bound <= (n - 1.0) + tol),
    )
