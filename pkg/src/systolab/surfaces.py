"""Weighted surfaces (Sigma, g, psi).

Two representations:

* ``WarpedDiskMetric`` -- rotationally symmetric ds^2 + phi(s)^2 dxi^2 with a
  radial weight psi(s).  Curvature, boundary data and level-set statistics
  all reduce to one-dimensional closed forms.
* ``ConformalSurface`` -- triangulated disk/annulus with per-vertex conformal
  factor lam (log scale) and weight psi.  The discrete metric is the
  polyhedral one induced by the intrinsic edge lengths
  l_ij = |z_i - z_j| exp((lam_i + lam_j)/2); Gaussian curvature is angle
  defect over lumped area and boundary curvature is exterior turning angle
  per boundary length, which makes discrete Gauss-Bonnet exact.

Sign conventions are anchored on the Euclidean unit disk: outward normal
eta, boundary of the round disk has kappa = +1.

The central pointwise quantity is the weight-hypothesis residual

    -2 Lap psi - (n-1)/(n-2) |grad psi|^2 + n(n-1) + 2K

whose nonnegativity is the admission ticket for every monotonicity and
stability statement downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import Delaunay

from .comparison import ComparisonProfile, DomainError, RangeError, eval_G

SURFACE_SCHEMA_VERSION = 1


class MeshError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Rotationally symmetric surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WarpedDiskMetric:
    """ds^2 + phi(s)^2 dxi^2 on [s_lo, l] x (R/T Z) with radial weight psi.

    ``kind`` is "disk" (s_lo = 0, phi(0) = 0, smooth tip T phi'(0) = 2 pi)
    or "annulus" (phi > 0 on the closed domain).  All callables accept
    numpy arrays.
    """

    n: int
    kind: str
    s_lo: float
    l: float
    T: float
    phi: Callable
    dphi: Callable
    d2phi: Callable
    psi: Callable
    dpsi: Callable
    d2psi: Callable

    def __post_init__(self):
        if self.kind not in ("disk", "annulus"):
            raise DomainError(f"kind must be 'disk' or 'annulus', got {self.kind!r}")
        if self.kind == "disk":
            if abs(self.s_lo) > 1e-14:
                raise DomainError("disk metrics start at s_lo = 0")
            tip = self.T * self.dphi(0.0) - 2.0 * np.pi
            if abs(tip) > 1e-6:
                raise DomainError(f"tip is not smooth: T phi'(0) - 2 pi = {tip:.3e}")
        else:
            if self.phi(self.s_lo) <= 0:
                raise DomainError("annulus needs phi > 0 at the inner boundary")
        if not self.l > self.s_lo:
            raise DomainError("empty s-domain")
        if self.phi(self.l) <= 0:
            raise DomainError("boundary length must be positive")

    # -- pointwise geometry --------------------------------------------------

    def gauss_curvature(self, s):
        return -self.d2phi(s) / self.phi(s)

    def laplacian_psi(self, s):
        return self.d2psi(s) + self.dphi(s) / self.phi(s) * self.dpsi(s)

    def grad_psi_sq(self, s):
        return np.square(self.dpsi(s))

    def boundary_length(self) -> float:
        return self.T * float(self.phi(self.l))

    def interior_grid(self, m: int = 1024) -> np.ndarray:
        pad = 1e-3 * (self.l - self.s_lo)
        return np.linspace(self.s_lo + pad, self.l - pad, m)

    def to_json(self, m: int = 2048) -> str:
        s = np.linspace(self.s_lo, self.l, m)
        doc = {
            "schema_version": SURFACE_SCHEMA_VERSION,
            "kind": "warped",
            "warp_kind": self.kind,
            "n": self.n,
            "T": self.T,
            "s_lo": self.s_lo,
            "l": self.l,
            "samples": np.column_stack([s, self.phi(s), self.psi(s)]).tolist(),
        }
        return json.dumps(doc)


def warped_from_samples(kind: str, n: int, T: float, s, phi, psi) -> WarpedDiskMetric:
    """Rebuild a warped metric from (s, phi, psi) samples via cubic splines."""
    s = np.asarray(s, dtype=float)
    sp_phi = CubicSpline(s, np.asarray(phi, dtype=float))
    sp_psi = CubicSpline(s, np.asarray(psi, dtype=float))
    return WarpedDiskMetric(
        n=int(n), kind=kind, s_lo=float(s[0]), l=float(s[-1]), T=float(T),
        phi=sp_phi, dphi=sp_phi.derivative(1), d2phi=sp_phi.derivative(2),
        psi=sp_psi, dpsi=sp_psi.derivative(1), d2psi=sp_psi.derivative(2),
    )


def hm_cross_section(profile: ComparisonProfile, r0: float, l: float) -> WarpedDiskMetric:
    """Model cross-section disk: phi = r0 G (1-G^-n)^(1/2), T = 4 pi/(n r0),
    psi = (n-2) log(r0 G).

    All derivatives come from the two derivative identities of G, so the
    callables are consistent with the comparison ODE to interpolation
    accuracy.  The tip is smooth: phi'(0) = r0 n / 2.
    """
    if r0 <= 0:
        raise DomainError(f"r0 must be positive, got {r0}")
    if l > profile.s_max * (1.0 + 1e-12):
        raise RangeError(f"l = {l} exceeds the profile horizon {profile.s_max}")
    n = profile.n
    nf = float(n)

    def _G(s):
        s = np.asarray(s, dtype=float)
        out = np.ones_like(s)
        pos = s > 0
        if np.any(pos):
            out[pos] = eval_G(profile, s[pos])[0]
        return out

    def phi(s):
        G = _G(s)
        return r0 * G * np.sqrt(1.0 - G ** (-nf))

    def dphi(s):
        G = _G(s)
        w2 = 1.0 - G ** (-nf)
        return r0 * (G * w2 + nf / 2.0 * G ** (1.0 - nf))

    def d2phi(s):
        G = _G(s)
        w = np.sqrt(1.0 - G ** (-nf))
        dG = G * w
        return r0 * dG * (1.0 + (nf * (3.0 - nf) / 2.0 - 1.0) * G ** (-nf))

    def psi(s):
        return (nf - 2.0) * np.log(r0 * _G(s))

    def dpsi(s):
        G = _G(s)
        return (nf - 2.0) * np.sqrt(1.0 - G ** (-nf))

    def d2psi(s):
        G = _G(s)
        return (nf - 2.0) * nf / 2.0 * G ** (-nf)

    return WarpedDiskMetric(
        n=n, kind="disk", s_lo=0.0, l=float(l), T=4.0 * np.pi / (nf * r0),
        phi=phi, dphi=dphi, d2phi=d2phi, psi=psi, dpsi=dpsi, d2psi=d2psi,
    )


# ---------------------------------------------------------------------------
# Warped-product reduction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WarpedProductAnsatz:
    """Rotationally symmetric n-metric ds^2 + phi^2 dxi^2 + sum_i f_i(s)^2 dtheta_i^2
    on B^2 x T^(n-2); ``fibers`` lists (f, f', f'') callable triples."""

    n: int
    kind: str
    s_lo: float
    l: float
    T: float
    phi: Callable
    dphi: Callable
    d2phi: Callable
    fibers: Sequence[tuple]

    def __post_init__(self):
        if len(self.fibers) != self.n - 2:
            raise DomainError(f"expected {self.n - 2} fibers, got {len(self.fibers)}")


def ambient_scalar_curvature(ansatz: WarpedProductAnsatz, s):
    """Scalar curvature of the multiply warped product metric
    ds^2 + sum_a h_a(s)^2 dx_a^2:  R = -2 sum h''/h - 2 sum_{a<b} (h'/h)(h'/h)."""
    s = np.asarray(s, dtype=float)
    hs = [(self_h(s), dh(s), d2h(s)) for (self_h, dh, d2h) in
          [(ansatz.phi, ansatz.dphi, ansatz.d2phi)] + list(ansatz.fibers)]
    R = np.zeros_like(s)
    rates = []
    for h, dh, d2h in hs:
        R -= 2.0 * d2h / h
        rates.append(dh / h)
    for a in range(len(rates)):
        for b in range(a + 1, len(rates)):
            R -= 2.0 * rates[a] * rates[b]
    return R


def reduce_warped_product(n: int, ansatz: WarpedProductAnsatz) -> WarpedDiskMetric:
    """Collapse the torus fibers into the weight psi = sum_i log f_i.

    The reduced surface satisfies
        residual(psi) >= R_ambient + n(n-1)   pointwise,
    with equality when all fibers agree.
    """
    if n != ansatz.n:
        raise DomainError("dimension mismatch between ansatz and reduction")
    probe = ansatz.fibers[0][0](np.linspace(ansatz.s_lo, ansatz.l, 64))
    for f, _, _ in ansatz.fibers:
        vals = f(np.linspace(ansatz.s_lo, ansatz.l, 64))
        if np.any(vals <= 0):
            raise DomainError("fiber lengths must be positive")
    del probe

    fibers = list(ansatz.fibers)

    def psi(s):
        return sum(np.log(f(s)) for f, _, _ in fibers)

    def dpsi(s):
        return sum(df(s) / f(s) for f, df, _ in fibers)

    def d2psi(s):
        return sum(d2f(s) / f(s) - np.square(df(s) / f(s)) for f, df, d2f in fibers)

    return WarpedDiskMetric(
        n=n, kind=ansatz.kind, s_lo=ansatz.s_lo, l=ansatz.l, T=ansatz.T,
        phi=ansatz.phi, dphi=ansatz.dphi, d2phi=ansatz.d2phi,
        psi=psi, dpsi=dpsi, d2psi=d2psi,
    )


def hm_ansatz(profile: ComparisonProfile, r0: float, l: float) -> WarpedProductAnsatz:
    """The model n-metric as a warped-product ansatz (fibers all r0 G(s))."""
    cs = hm_cross_section(profile, r0, l)
    n = profile.n
    nf = float(n)

    def f(s):
        s = np.asarray(s, dtype=float)
        out = np.ones_like(s)
        pos = s > 0
        if np.any(pos):
            out[pos] = eval_G(profile, s[pos])[0]
        return r0 * out

    def df(s):
        return np.exp(cs.psi(s) / (nf - 2.0)) * cs.dpsi(s) / (nf - 2.0)

    def d2f(s):
        h = np.exp(cs.psi(s) / (nf - 2.0))
        a = cs.dpsi(s) / (nf - 2.0)
        b = cs.d2psi(s) / (nf - 2.0)
        return h * (b + a * a)

    return WarpedProductAnsatz(
        n=n, kind="disk", s_lo=0.0, l=float(l), T=cs.T,
        phi=cs.phi, dphi=cs.dphi, d2phi=cs.d2phi,
        fibers=[(f, df, d2f)] * (n - 2),
    )


# ---------------------------------------------------------------------------
# Triangulated conformal surfaces
# ---------------------------------------------------------------------------

class ConformalSurface:
    """Triangulated disk/annulus with conformal factor and weight fields.

    Discrete geometry is derived once from the intrinsic edge lengths:
    triangle areas and angles (Heron / law of cosines), barycentric lumped
    vertex areas, angle defects, cotan weights, per-triangle layouts and
    field gradients.
    """

    def __init__(self, verts, tris, boundary, lam, psi, n, kind="disk"):
        self.verts = np.asarray(verts, dtype=float)
        self.tris = np.asarray(tris, dtype=np.int64)
        self.boundary = np.asarray(boundary, dtype=bool)
        self.lam = np.asarray(lam, dtype=float)
        self.psi = np.asarray(psi, dtype=float)
        self.n = int(n)
        self.kind = kind
        V = len(self.verts)
        if not (len(self.lam) == len(self.psi) == len(self.boundary) == V):
            raise MeshError("field / marker lengths do not match vertex count")
        if self.tris.min() < 0 or self.tris.max() >= V:
            raise MeshError("triangle index out of range")
        self._build()

    # -- connectivity and metric ---------------------------------------------

    def _build(self):
        tris = self.tris
        z = self.verts
        lam = self.lam

        # intrinsic edge lengths per triangle corner (edge opposite corner k)
        e01 = np.linalg.norm(z[tris[:, 0]] - z[tris[:, 1]], axis=1) * np.exp(
            0.5 * (lam[tris[:, 0]] + lam[tris[:, 1]]))
        e12 = np.linalg.norm(z[tris[:, 1]] - z[tris[:, 2]], axis=1) * np.exp(
            0.5 * (lam[tris[:, 1]] + lam[tris[:, 2]]))
        e20 = np.linalg.norm(z[tris[:, 2]] - z[tris[:, 0]], axis=1) * np.exp(
            0.5 * (lam[tris[:, 2]] + lam[tris[:, 0]]))
        self.edge_len = np.column_stack([e12, e20, e01])  # opposite vertex 0,1,2
        if np.any(self.edge_len <= 0):
            raise MeshError("degenerate edge")

        a, b, c = e12, e20, e01
        s2 = (a + b + c) / 2
        h2 = s2 * (s2 - a) * (s2 - b) * (s2 - c)
        if np.any(h2 <= 0):
            raise MeshError("degenerate triangle (Heron)")
        self.tri_area = np.sqrt(h2)

        # angles at corners 0, 1, 2 via law of cosines
        def angle(opp, x, y):
            cosv = (x * x + y * y - opp * opp) / (2 * x * y)
            return np.arccos(np.clip(cosv, -1.0, 1.0))

        ang0 = angle(a, b, c)
        ang1 = angle(b, c, a)
        ang2 = angle(c, a, b)
        self.angles = np.column_stack([ang0, ang1, ang2])

        V = len(z)
        self.vertex_area = np.zeros(V)
        np.add.at(self.vertex_area, tris, (self.tri_area / 3.0)[:, None])

        angle_sum = np.zeros(V)
        np.add.at(angle_sum, tris, self.angles)
        self.angle_defect = np.where(self.boundary, np.pi - angle_sum, 2 * np.pi - angle_sum)

        # cotan weights as a sparse Laplacian action (rows cached as arrays)
        cot = 1.0 / np.tan(self.angles)
        ii = np.concatenate([tris[:, 1], tris[:, 2], tris[:, 0]])
        jj = np.concatenate([tris[:, 2], tris[:, 0], tris[:, 1]])
        ww = 0.5 * np.concatenate([cot[:, 0], cot[:, 1], cot[:, 2]])
        from scipy.sparse import coo_matrix
        W = coo_matrix((ww, (ii, jj)), shape=(V, V))
        W = (W + W.T).tocsr()
        from scipy.sparse import diags
        self._laplacian = W - diags(np.asarray(W.sum(axis=1)).ravel())

        # isometric per-triangle layouts (P0 at origin, P1 on +x, P2 above)
        x2 = (c * c + b * b - a * a) / (2 * c)
        y2 = np.sqrt(np.maximum(b * b - x2 * x2, 1e-300))
        self.layout = np.zeros((len(tris), 3, 2))
        self.layout[:, 1, 0] = c
        self.layout[:, 2, 0] = x2
        self.layout[:, 2, 1] = y2

        self._boundary_loops = None
        self._psi_grad_cache = None

    # -- discrete operators ----------------------------------------------------

    def integrated_laplacian(self, f) -> np.ndarray:
        """Row sums of the cotan Laplacian: (L f)_v ~ integral of Lap f over
        the barycentric cell (minus the boundary flux at boundary vertices).
        Rows sum to zero over the whole surface: exact divergence identity."""
        return np.asarray(self._laplacian @ np.asarray(f, dtype=float))

    def tri_grad(self, f):
        """Per-triangle gradient of a PL vertex field in each layout frame."""
        f = np.asarray(f, dtype=float)
        P = self.layout
        v = f[self.tris]
        # gradient of linear interpolant: sum f_i * rot90(opposite edge)/2A
        g = np.zeros((len(self.tris), 2))
        A2 = 2.0 * self.tri_area
        for i in range(3):
            e = P[:, (i + 2) % 3] - P[:, (i + 1) % 3]  # edge opposite corner i
            g[:, 0] += v[:, i] * (-e[:, 1])
            g[:, 1] += v[:, i] * (e[:, 0])
        g[:, 0] /= A2
        g[:, 1] /= A2
        return g

    def tri_grad_param(self, f):
        """Per-triangle Euclidean gradient of a PL field in parameter coords."""
        f = np.asarray(f, dtype=float)
        z = self.verts[self.tris]
        v = f[self.tris]
        area2 = np.cross(z[:, 1] - z[:, 0], z[:, 2] - z[:, 0])
        g = np.zeros((len(self.tris), 2))
        for i in range(3):
            e = z[:, (i + 2) % 3] - z[:, (i + 1) % 3]
            g[:, 0] += v[:, i] * (-e[:, 1])
            g[:, 1] += v[:, i] * (e[:, 0])
        g /= area2[:, None]
        return g

    def grad_sq_vertex(self, f) -> np.ndarray:
        """|grad f|^2 lumped to vertices (area-weighted triangle average)."""
        g = self.tri_grad(f)
        g2 = np.einsum("ij,ij->i", g, g)
        out = np.zeros(len(self.verts))
        np.add.at(out, self.tris, (g2 * self.tri_area / 3.0)[:, None])
        return out / self.vertex_area

    def gauss_curvature_vertex(self) -> np.ndarray:
        return self.angle_defect / self.vertex_area

    # -- boundary ----------------------------------------------------------------

    def boundary_loops(self):
        """Ordered boundary vertex loops (each a closed index cycle)."""
        if self._boundary_loops is not None:
            return self._boundary_loops
        from collections import defaultdict
        count = defaultdict(int)
        for t in self.tris:
            for i in range(3):
                e = (min(t[i], t[(i + 1) % 3]), max(t[i], t[(i + 1) % 3]))
                count[e] += 1
        adj = defaultdict(list)
        for (u, v), cnt in count.items():
            if cnt == 1:
                adj[u].append(v)
                adj[v].append(u)
        for v, nbrs in adj.items():
            if len(nbrs) != 2:
                raise MeshError(f"boundary vertex {v} has {len(nbrs)} boundary edges")
        seen = set()
        loops = []
        for start in sorted(adj):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            prev, cur = None, start
            while True:
                nxt = [w for w in adj[cur] if w != prev]
                nxt = nxt[0]
                if nxt == start:
                    break
                loop.append(nxt)
                seen.add(nxt)
                prev, cur = cur, nxt
            loops.append(np.array(loop, dtype=np.int64))
        self._boundary_loops = loops
        return loops

    def intrinsic_edge_length(self, u, v) -> float:
        return float(np.linalg.norm(self.verts[u] - self.verts[v]) *
                     np.exp(0.5 * (self.lam[u] + self.lam[v])))

    def boundary_vertex_weights(self):
        """Half the summed intrinsic length of the adjacent boundary edges."""
        w = np.zeros(len(self.verts))
        for loop in self.boundary_loops():
            m = len(loop)
            for i in range(m):
                u, v = loop[i], loop[(i + 1) % m]
                le = self.intrinsic_edge_length(u, v)
                w[u] += le / 2
                w[v] += le / 2
        return w

    def normal_derivative_boundary(self, f) -> np.ndarray:
        """Pointwise <grad f, eta> at boundary vertices.

        Averages the PL gradients of the triangles adjacent to the incident
        boundary edges, expressed in each layout frame where the outward
        normal of a boundary edge is -y (interior laid out above the edge).
        """
        f = np.asarray(f, dtype=float)
        V = len(self.verts)
        acc = np.zeros(V)
        wacc = np.zeros(V)
        # locate boundary edges inside triangles: edge (i, i+1) of tri t is a
        # boundary edge iff both endpoints are boundary and the edge is not shared
        from collections import defaultdict
        owner = defaultdict(list)
        for ti, t in enumerate(self.tris):
            for i in range(3):
                u, v = t[i], t[(i + 1) % 3]
                owner[(min(u, v), max(u, v))].append((ti, i))
        g = self.tri_grad(f)
        for (u, v), occ in owner.items():
            if len(occ) != 1:
                continue
            ti, i = occ[0]
            # layout frame of triangle ti with corner order (0,1,2): edge i runs
            # corner i -> i+1; rotate the gradient into the frame where that edge
            # is the x-axis with the interior above; outward normal is -y.
            P = self.layout[ti]
            a, b = P[i], P[(i + 1) % 3]
            e = b - a
            elen = np.linalg.norm(e)
            tx, ty = e / elen
            # normal pointing away from third corner
            gx, gy = g[ti]
            # components in (tangent, conormal) frame; conormal = rotate tangent by -90
            gn = gx * ty - gy * tx
            le = self.edge_len[ti, (i + 2) % 3]
            acc[u] += gn * le / 2
            acc[v] += gn * le / 2
            wacc[u] += le / 2
            wacc[v] += le / 2
        out = np.zeros(V)
        mask = wacc > 0
        out[mask] = acc[mask] / wacc[mask]
        return out

    def euler_characteristic(self) -> int:
        E = len({(min(u, v), max(u, v)) for t in self.tris for u, v in
                 ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))})
        return len(self.verts) - E + len(self.tris)

    def total_area(self) -> float:
        return float(self.tri_area.sum())

    def to_json(self) -> str:
        doc = {
            "schema_version": SURFACE_SCHEMA_VERSION,
            "kind": "mesh",
            "mesh_kind": self.kind,
            "n": self.n,
            "vertices": self.verts.tolist(),
            "triangles": self.tris.tolist(),
            "boundary": self.boundary.astype(int).tolist(),
            "lam": self.lam.tolist(),
            "psi": self.psi.tolist(),
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "ConformalSurface":
        doc = json.loads(text)
        if doc.get("schema_version") != SURFACE_SCHEMA_VERSION:
            raise MeshError(f"unsupported surface schema version {doc.get('schema_version')!r}")
        return ConformalSurface(
            doc["vertices"], doc["triangles"], np.asarray(doc["boundary"], dtype=bool),
            doc["lam"], doc["psi"], doc["n"], doc.get("mesh_kind", "disk"),
        )


def surface_from_json(text: str):
    doc = json.loads(text)
    if doc.get("kind") == "mesh":
        return ConformalSurface.from_json(text)
    if doc.get("kind") == "warped":
        samples = np.asarray(doc["samples"], dtype=float)
        return warped_from_samples(
            doc["warp_kind"], doc["n"], doc["T"], samples[:, 0], samples[:, 1], samples[:, 2])
    raise MeshError(f"unknown surface kind {doc.get('kind')!r}")


# ---------------------------------------------------------------------------
# Hypothesis residual and boundary data (both representations)
# ---------------------------------------------------------------------------

def hypothesis_residual(surface, s_grid=None):
    """Pointwise residual -2 Lap psi - (n-1)/(n-2) |grad psi|^2 + n(n-1) + 2K.

    For warped metrics the residual is returned on ``s_grid`` (default:
    interior grid); for meshes at interior vertices (nan on the boundary).
    """
    n = surface.n
    cw = (n - 1.0) / (n - 2.0)
    if isinstance(surface, WarpedDiskMetric):
        s = surface.interior_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
        return (-2.0 * surface.laplacian_psi(s) - cw * surface.grad_psi_sq(s)
                + n * (n - 1.0) + 2.0 * surface.gauss_curvature(s))
    lap = surface.integrated_laplacian(surface.psi) / surface.vertex_area
    g2 = surface.grad_sq_vertex(surface.psi)
    K = surface.gauss_curvature_vertex()
    res = -2.0 * lap - cw * g2 + n * (n - 1.0) + 2.0 * K
    res[surface.boundary] = np.nan
    return res


@dataclass(frozen=True)
class BoundaryComponent:
    length: float
    kappa: np.ndarray          # pointwise field along the component
    dpsi_eta: np.ndarray       # pointwise <grad psi, eta>
    vertex_ids: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True)
class BoundaryData:
    total_length: float
    components: tuple
    integral_kappa: float      # = sum of exterior turning angles on meshes
    integral_dpsi_eta: float   # discretely exact divergence pairing on meshes

    def inf_quantity(self, n: int) -> float:
        """inf over the boundary of <grad psi, eta> + kappa - (n-1)."""
        vals = [np.min(c.kappa + c.dpsi_eta) for c in self.components]
        return float(min(vals) - (n - 1.0))

    def integral_quantity(self, n: int) -> float:
        """integral over the boundary of <grad psi, eta> + kappa - (n-1)."""
        return self.integral_kappa + self.integral_dpsi_eta - (n - 1.0) * self.total_length


def boundary_data(surface) -> BoundaryData:
    """Boundary length, geodesic curvature and outward weight derivative.

    Conventions: unit circle bounding the Euclidean disk has kappa = +1 and
    eta points outward.  For warped metrics kappa(l) = phi'(l)/phi(l) and
    <grad psi, eta> = psi'(l) (signs flipped on the inner rim of an annulus).
    """
    if isinstance(surface, WarpedDiskMetric):
        comps = []
        length_out = surface.T * float(surface.phi(surface.l))
        kap_out = float(surface.dphi(surface.l) / surface.phi(surface.l))
        dps_out = float(surface.dpsi(surface.l))
        comps.append(BoundaryComponent(length_out, np.array([kap_out]), np.array([dps_out])))
        total = length_out
        int_k = length_out * kap_out
        int_d = length_out * dps_out
        if surface.kind == "annulus":
            length_in = surface.T * float(surface.phi(surface.s_lo))
            kap_in = float(-surface.dphi(surface.s_lo) / surface.phi(surface.s_lo))
            dps_in = float(-surface.dpsi(surface.s_lo))
            comps.append(BoundaryComponent(length_in, np.array([kap_in]), np.array([dps_in])))
            total += length_in
            int_k += length_in * kap_in
            int_d += length_in * dps_in
        return BoundaryData(total, tuple(comps), int_k, int_d)

    # mesh: exterior turning angles and the exact discrete divergence pairing
    weights = surface.boundary_vertex_weights()
    dpsi_pt = surface.normal_derivative_boundary(surface.psi)
    Lpsi = surface.integrated_laplacian(surface.psi)
    comps = []
    total = 0.0
    int_kappa = 0.0
    for loop in surface.boundary_loops():
        w = weights[loop]
        kappa = surface.angle_defect[loop] / w
        comps.append(BoundaryComponent(float(w.sum()), kappa, dpsi_pt[loop], loop))
        total += float(w.sum())
        int_kappa += float(surface.angle_defect[loop].sum())
    # sum over interior vertices of the integrated Laplacian = boundary flux
    int_dpsi = float(Lpsi[~surface.boundary].sum())
    return BoundaryData(total, tuple(comps), int_kappa, int_dpsi)


def gauss_bonnet_defect(surface: ConformalSurface) -> float:
    """Relative Gauss-Bonnet closure error (exactly zero up to rounding)."""
    total = surface.angle_defect.sum()
    chi = surface.euler_characteristic()
    return float(abs(total - 2 * np.pi * chi) / (2 * np.pi))


# ---------------------------------------------------------------------------
# Mesh builders
# ---------------------------------------------------------------------------

def build_disk_points(n_verts: int, rng=None):
    """Sunflower-distributed interior points plus an evenly sampled circle."""
    n_bdry = max(16, int(np.sqrt(n_verts) * np.pi * 0.57))
    n_int = max(8, n_verts - n_bdry)
    i = np.arange(1, n_int + 1)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    r = np.sqrt((i - 0.5) / n_int)
    th = golden * i
    pts = np.column_stack([r * np.cos(th), r * np.sin(th)])
    # keep a collar so boundary triangles stay well shaped
    margin = 0.66 / np.sqrt(n_int)
    pts = pts[r < 1.0 - margin]
    if rng is not None:
        jitter = 0.15 / np.sqrt(n_int)
        pts = pts + rng.uniform(-jitter, jitter, size=pts.shape)
    tb = np.linspace(0, 2 * np.pi, n_bdry, endpoint=False)
    bpts = np.column_stack([np.cos(tb), np.sin(tb)])
    verts = np.vstack([pts, bpts])
    is_bdry = np.zeros(len(verts), dtype=bool)
    is_bdry[len(pts):] = True
    return verts, is_bdry


def build_disk_mesh(n_verts: int, radius: float = 1.0, rng=None):
    verts, is_bdry = build_disk_points(n_verts, rng=rng)
    tri = Delaunay(verts)
    return verts * radius, tri.simplices.copy(), is_bdry


def build_annulus_mesh(r_in: float, r_out: float, n_verts: int, rng=None):
    """Annulus r_in <= |z| <= r_out triangulated by Delaunay minus the hole."""
    area = np.pi * (r_out**2 - r_in**2)
    spacing = np.sqrt(area / max(n_verts, 16))
    n_bi = max(16, int(2 * np.pi * r_in / spacing))
    n_bo = max(16, int(2 * np.pi * r_out / spacing))
    rings = []
    flags = []
    tb = np.linspace(0, 2 * np.pi, n_bi, endpoint=False)
    rings.append(np.column_stack([r_in * np.cos(tb), r_in * np.sin(tb)]))
    flags.append(np.ones(n_bi, dtype=bool))
    n_rad = max(3, int((r_out - r_in) / spacing))
    for k in range(1, n_rad):
        r = r_in + (r_out - r_in) * k / n_rad
        n_r = max(12, int(2 * np.pi * r / spacing))
        off = 0.5 * (k % 2)
        t = (np.arange(n_r) + off) / n_r * 2 * np.pi
        if rng is not None:
            t = t + rng.uniform(-0.1, 0.1, size=n_r) / n_r * 2 * np.pi
        rings.append(np.column_stack([r * np.cos(t), r * np.sin(t)]))
        flags.append(np.zeros(n_r, dtype=bool))
    tb = np.linspace(0, 2 * np.pi, n_bo, endpoint=False)
    rings.append(np.column_stack([r_out * np.cos(tb), r_out * np.sin(tb)]))
    flags.append(np.ones(n_bo, dtype=bool))
    verts = np.vstack(rings)
    is_bdry = np.concatenate(flags)
    tri = Delaunay(verts)
    cent = verts[tri.simplices].mean(axis=1)
    keep = np.linalg.norm(cent, axis=1) > r_in
    return verts, tri.simplices[keep].copy(), is_bdry


# -- concrete surfaces ---------------------------------------------------------

def euclidean_disk(n: int, radius: float = 1.0, n_verts: int = 2000, rng=None) -> ConformalSurface:
    verts, tris, bdry = build_disk_mesh(n_verts, radius=radius, rng=rng)
    V = len(verts)
    return ConformalSurface(verts, tris, bdry, np.zeros(V), np.zeros(V), n)


def hyperbolic_disk(n: int, inradius: float = 1.0, n_verts: int = 2000, rng=None,
                    lam_extra=None, psi_fn=None) -> ConformalSurface:
    """Geodesic disk of the curvature -1 plane, Poincare model parameter
    domain radius tanh(inradius/2); optional smooth perturbation fields."""
    R0 = np.tanh(inradius / 2.0)
    verts, tris, bdry = build_disk_mesh(n_verts, radius=R0, rng=rng)
    r2 = np.einsum("ij,ij->i", verts, verts)
    lam = np.log(2.0 / (1.0 - r2))
    if lam_extra is not None:
        lam = lam + lam_extra(verts)
    psi = np.zeros(len(verts)) if psi_fn is None else psi_fn(verts)
    return ConformalSurface(verts, tris, bdry, lam, psi, n)


def subdivide(surface: ConformalSurface, lam_fn=None, psi_fn=None) -> ConformalSurface:
    """One 1-to-4 midpoint refinement; fields re-evaluated by the supplied
    closures where given, otherwise by edge-midpoint averaging."""
    verts = surface.verts
    tris = surface.tris
    edge_ix = {}
    new_pts = []
    new_bdry = []

    bc = set()
    for loop in surface.boundary_loops():
        m = len(loop)
        for i in range(m):
            u, v = loop[i], loop[(i + 1) % m]
            bc.add((min(u, v), max(u, v)))

    def midpoint(u, v):
        key = (min(u, v), max(u, v))
        if key not in edge_ix:
            edge_ix[key] = len(verts) + len(new_pts)
            p = 0.5 * (verts[u] + verts[v])
            if key in bc:
                p = p / np.linalg.norm(p) * np.linalg.norm(verts[u])
            new_pts.append(p)
            new_bdry.append(key in bc)
        return edge_ix[key]

    new_tris = []
    for t in tris:
        m01 = midpoint(t[0], t[1])
        m12 = midpoint(t[1], t[2])
        m20 = midpoint(t[2], t[0])
        new_tris.extend([(t[0], m01, m20), (t[1], m12, m01), (t[2], m20, m12), (m01, m12, m20)])
    all_verts = np.vstack([verts, np.array(new_pts)])
    all_bdry = np.concatenate([surface.boundary, np.array(new_bdry, dtype=bool)])
    if lam_fn is not None:
        lam = lam_fn(all_verts)
    else:
        lam_new = [0.5 * (surface.lam[u] + surface.lam[v]) for (u, v) in edge_ix]
        lam = np.concatenate([surface.lam, np.array(lam_new)])
    if psi_fn is not None:
        psi = psi_fn(all_verts)
    else:
        psi_new = [0.5 * (surface.psi[u] + surface.psi[v]) for (u, v) in edge_ix]
        psi = np.concatenate([surface.psi, np.array(psi_new)])
    return ConformalSurface(all_verts, np.array(new_tris), all_bdry, lam, psi,
                            surface.n, surface.kind)
