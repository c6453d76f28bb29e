"""Distance function, level-set statistics and the monotone quantity J.

For a weighted disk (Sigma, g, psi) with inradius l and u = dist(., bdry):

    A(s) = area{u <= s}
    L(s) = length of the level {u = s}
    M(s) = integral over {u > s} of (Lap psi - K)
    I(s) = 2 pi - (n-1) (1 - G(l-s)^-n)^(1/2) L(s) + M(s)
    J(s) = G(l-s)^(n-1) I(s)

J is nondecreasing in s whenever the weight hypothesis holds; on the model
cross-section it is constant 2 pi.  Rotationally symmetric surfaces are
traced through closed forms (the density (Lap psi - K) phi is an exact
derivative, so M reduces to endpoint values); meshes are traced by fast
marching plus marching-segment extraction on the intrinsic triangle
layouts.  Levels where the extracted level set changes component count
between neighboring grid values are flagged exceptional and excluded from
monotonicity assertions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._accel import maybe_njit
from .comparison import ComparisonProfile, RangeError, eval_G
from .surfaces import (
    BoundaryData,
    ConformalSurface,
    MeshError,
    WarpedDiskMetric,
    boundary_data,
    hypothesis_residual,
)


class HypothesisViolation(ValueError):
    """The weight hypothesis fails somewhere on the surface."""

    def __init__(self, where, value):
        self.where = where
        self.value = value
        super().__init__(
            f"hypothesis residual is {value:.6g} at {where}; "
            "monotonicity preconditions are not met"
        )


# ---------------------------------------------------------------------------
# Fast marching on the intrinsic triangulation
# ---------------------------------------------------------------------------

def _heap_push(hv, hi, size, val, idx):
    pos = size
    hv[pos] = val
    hi[pos] = idx
    while pos > 0:
        parent = (pos - 1) // 2
        if hv[parent] <= hv[pos]:
            break
        hv[parent], hv[pos] = hv[pos], hv[parent]
        hi[parent], hi[pos] = hi[pos], hi[parent]
        pos = parent
    return size + 1


def _heap_pop(hv, hi, size):
    val = hv[0]
    idx = hi[0]
    size -= 1
    hv[0] = hv[size]
    hi[0] = hi[size]
    pos = 0
    while True:
        left = 2 * pos + 1
        if left >= size:
            break
        child = left
        if left + 1 < size and hv[left + 1] < hv[left]:
            child = left + 1
        if hv[pos] <= hv[child]:
            break
        hv[pos], hv[child] = hv[child], hv[pos]
        hi[pos], hi[child] = hi[child], hi[pos]
        pos = child
    return val, idx, size


def _triangle_update(ua, ub, la, lb, costh, sinth):
    """Arrival time at the corner C of a triangle whose other corners carry
    accepted values ua, ub; la = |CA|, lb = |CB|, angle at C = (costh, sinth).

    Solves for the linear unit-gradient wave through (ua, ub); falls back to
    edge propagation when the characteristic leaves the triangle.
    """
    # quadratic t^2 qee - 2 t qey + qyy - 1 = 0 with Q = Gram(CA, CB)^-1
    det2 = (la * lb * sinth) ** 2
    qaa = lb * lb / det2
    qbb = la * la / det2
    qab = -la * lb * costh / det2
    qee = qaa + qbb + 2.0 * qab
    qey = (qaa + qab) * ua + (qbb + qab) * ub
    qyy = qaa * ua * ua + 2.0 * qab * ua * ub + qbb * ub * ub
    disc = qey * qey - qee * (qyy - 1.0)
    fallback = min(ua + la, ub + lb)
    if disc <= 0.0:
        return fallback
    t = (qey + np.sqrt(disc)) / qee
    if t < ua or t < ub:
        return fallback
    # characteristic direction check: g = M^-1 (y - t e) must satisfy
    # alpha <= 0, beta <= 0 in the (CA, CB) cone decomposition
    ya = ua - t
    yb = ub - t
    gx = ya / la
    gy = (-costh * ya / la + yb / lb) / sinth
    beta = gy / sinth
    alpha = gx - gy * costh / sinth
    if alpha > 1e-12 or beta > 1e-12:
        return fallback
    return t


def _fmm_kernel(nv, upd_ptr, upd_a, upd_b, upd_la, upd_lb, upd_cos, upd_sin,
                rev_ptr, rev_dst, seeds):
    INF = 1e300
    u = np.full(nv, INF)
    state = np.zeros(nv, dtype=np.int8)  # 0 far, 1 narrow, 2 accepted
    cap = 4 * (len(upd_a) + nv) + 64
    hv = np.empty(cap)
    hi = np.empty(cap, dtype=np.int64)
    size = 0
    for k in range(len(seeds)):
        v = seeds[k]
        u[v] = 0.0
        state[v] = 1
        size = _heap_push(hv, hi, size, 0.0, v)
    while size > 0:
        val, v, size = _heap_pop(hv, hi, size)
        if state[v] == 2 or val > u[v] + 1e-15:
            continue
        state[v] = 2
        for r in range(rev_ptr[v], rev_ptr[v + 1]):
            c = rev_dst[r]
            if state[c] == 2:
                continue
            best = u[c]
            for e in range(upd_ptr[c], upd_ptr[c + 1]):
                a = upd_a[e]
                b = upd_b[e]
                sa = state[a] == 2
                sb = state[b] == 2
                if sa and sb:
                    t = _triangle_update(u[a], u[b], upd_la[e], upd_lb[e],
                                         upd_cos[e], upd_sin[e])
                elif sa:
                    t = u[a] + upd_la[e]
                elif sb:
                    t = u[b] + upd_lb[e]
                else:
                    continue
                if t < best:
                    best = t
            if best < u[c] - 1e-15:
                u[c] = best
                state[c] = 1
                size = _heap_push(hv, hi, size, best, c)
    return u


# Jit-compile the helpers first so the kernel resolves them as compiled
# callees; the _py aliases keep the uncompiled kernel logic addressable for
# tests (the env flag SYSTOLAB_DISABLE_NUMBA selects the fully pure path).
_fmm_kernel_py = _fmm_kernel
_triangle_update_py = _triangle_update

_heap_push = maybe_njit(_heap_push)
_heap_pop = maybe_njit(_heap_pop)
_triangle_update = maybe_njit(_triangle_update)
_fmm_kernel = maybe_njit(_fmm_kernel)


def _build_update_tables(surface: ConformalSurface):
    """Per-vertex triangle update entries with obtuse corners split by
    one-level unfolding across the far edge."""
    tris = surface.tris
    nv = len(surface.verts)
    P = surface.layout

    # neighbor triangle across each edge
    edge_owner = {}
    for ti, t in enumerate(tris):
        for i in range(3):
            key = (min(t[i], t[(i + 1) % 3]), max(t[i], t[(i + 1) % 3]))
            edge_owner.setdefault(key, []).append(ti)

    entries = [[] for _ in range(nv)]

    def add_entry(c, a, b, pa, pb):
        la = np.hypot(pa[0], pa[1])
        lb = np.hypot(pb[0], pb[1])
        costh = (pa @ pb) / (la * lb)
        sinth = abs(pa[0] * pb[1] - pa[1] * pb[0]) / (la * lb)
        if sinth < 1e-12:
            return
        entries[c].append((a, b, la, lb, costh, sinth))

    for ti, t in enumerate(tris):
        for k in range(3):
            c, a, b = t[k], t[(k + 1) % 3], t[(k + 2) % 3]
            pc, pa, pb = P[ti, k], P[ti, (k + 1) % 3], P[ti, (k + 2) % 3]
            va = pa - pc
            vb = pb - pc
            if surface.angles[ti, k] <= np.pi / 2 + 1e-9:
                add_entry(c, a, b, va, vb)
                continue
            # unfold the neighbor across (a, b) and split the obtuse corner
            key = (min(a, b), max(a, b))
            owners = edge_owner[key]
            other = [o for o in owners if o != ti]
            if not other:
                add_entry(c, a, b, va, vb)
                continue
            tj = other[0]
            d = [v for v in tris[tj] if v != a and v != b][0]
            # lay d out on the far side of the segment va-vb
            dad = surface.intrinsic_edge_length(a, d)
            dbd = surface.intrinsic_edge_length(b, d)
            e = vb - va
            elen = np.hypot(e[0], e[1])
            ex, ey = e / elen
            x = (dad * dad - dbd * dbd + elen * elen) / (2 * elen)
            y2 = dad * dad - x * x
            if y2 <= 0:
                add_entry(c, a, b, va, vb)
                continue
            y = np.sqrt(y2)
            # two candidates; pick the one on the opposite side from c (origin side is -va)
            n_hat = np.array([-ey, ex])
            side_c = -va @ n_hat
            vd = va + x * np.array([ex, ey]) + (y if side_c < 0 else -y) * n_hat
            # accept the split only if both sub-angles are acute
            def ang(u1, u2):
                cu = (u1 @ u2) / (np.hypot(u1[0], u1[1]) * np.hypot(u2[0], u2[1]))
                return np.arccos(np.clip(cu, -1, 1))
            if ang(va, vd) < np.pi / 2 + 1e-9 and ang(vd, vb) < np.pi / 2 + 1e-9:
                add_entry(c, a, d, va, vd)
                add_entry(c, d, b, vd, vb)
            else:
                add_entry(c, a, b, va, vb)

    upd_ptr = np.zeros(nv + 1, dtype=np.int64)
    for v in range(nv):
        upd_ptr[v + 1] = upd_ptr[v] + len(entries[v])
    total = upd_ptr[-1]
    upd_a = np.zeros(total, dtype=np.int64)
    upd_b = np.zeros(total, dtype=np.int64)
    upd_la = np.zeros(total)
    upd_lb = np.zeros(total)
    upd_cos = np.zeros(total)
    upd_sin = np.zeros(total)
    pos = 0
    rev = [[] for _ in range(nv)]
    for v in range(nv):
        for (a, b, la, lb, ct, st) in entries[v]:
            upd_a[pos] = a
            upd_b[pos] = b
            upd_la[pos] = la
            upd_lb[pos] = lb
            upd_cos[pos] = ct
            upd_sin[pos] = st
            rev[a].append(v)
            rev[b].append(v)
            pos += 1
    rev_ptr = np.zeros(nv + 1, dtype=np.int64)
    for v in range(nv):
        rev[v] = sorted(set(rev[v]))
        rev_ptr[v + 1] = rev_ptr[v] + len(rev[v])
    rev_dst = np.zeros(rev_ptr[-1], dtype=np.int64)
    pos = 0
    for v in range(nv):
        for c in rev[v]:
            rev_dst[pos] = c
            pos += 1
    return upd_ptr, upd_a, upd_b, upd_la, upd_lb, upd_cos, upd_sin, rev_ptr, rev_dst


def distance_field(surface: ConformalSurface, _impl=None) -> np.ndarray:
    """Distance to the boundary by fast marching on the triangulation.

    u = 0 exactly on boundary vertices; interior values solve the
    unit-gradient update triangle by triangle (obtuse corners split by
    unfolding).
    """
    if np.any(surface.tri_area <= 0):
        raise MeshError("degenerate triangles")
    tables = _build_update_tables(surface)
    seeds = np.flatnonzero(surface.boundary).astype(np.int64)
    if len(seeds) == 0:
        raise MeshError("surface has no boundary vertices")
    kernel = _impl if _impl is not None else _fmm_kernel
    u = kernel(len(surface.verts), *tables, seeds)
    if np.any(u >= 1e299):
        raise MeshError("mesh is not connected to the boundary")
    return u


def unit_gradient_residual(surface: ConformalSurface, u) -> np.ndarray:
    """Per-triangle | |grad u| - 1 | diagnostic for a distance field."""
    g = surface.tri_grad(u)
    return np.abs(np.sqrt(np.einsum("ij,ij->i", g, g)) - 1.0)


# ---------------------------------------------------------------------------
# Level-set trace
# ---------------------------------------------------------------------------

@dataclass
class LevelSetTrace:
    surface: object
    n: int
    l: float
    s: np.ndarray
    A: np.ndarray
    L: np.ndarray
    M: np.ndarray       # integral over {u > s} of (Lap psi - K)
    I: np.ndarray
    J: np.ndarray
    ncomp: np.ndarray
    flagged: np.ndarray
    total_area: float

    def to_csv(self) -> str:
        lines = ["s,A,L,I,J,flagged"]
        for i in range(len(self.s)):
            lines.append(
                f"{self.s[i]:.17g},{self.A[i]:.17g},{self.L[i]:.17g},"
                f"{self.I[i]:.17g},{self.J[i]:.17g},{int(self.flagged[i])}"
            )
        return "\n".join(lines) + "\n"


def default_grid(l: float, m: int = 512) -> np.ndarray:
    """Uniform grid on (0, l) excluding 1 percent bands at both ends."""
    return np.linspace(0.01 * l, 0.99 * l, m)


def _assemble(profile, n, l, s_grid, A, L, M, ncomp, total_area, surface):
    t = l - s_grid
    G, _ = eval_G(profile, t)
    w = np.sqrt(1.0 - G ** (-float(n)))
    I = 2.0 * np.pi - (n - 1.0) * w * L + M
    J = G ** (n - 1.0) * I
    flagged = np.zeros(len(s_grid), dtype=bool)
    if ncomp is not None:
        change = ncomp[1:] != ncomp[:-1]
        flagged[1:] |= change
        flagged[:-1] |= change
    else:
        ncomp = np.ones(len(s_grid), dtype=np.int64)
    return LevelSetTrace(surface=surface, n=n, l=float(l), s=s_grid, A=A, L=L, M=M,
                         I=I, J=J, ncomp=ncomp, flagged=flagged, total_area=total_area)


def trace(surface, profile: ComparisonProfile, s_grid=None) -> LevelSetTrace:
    """Level-set statistics (A, L, I, J) of a disk surface on an s-grid."""
    if isinstance(surface, WarpedDiskMetric):
        return _trace_warped(surface, profile, s_grid)
    return _trace_mesh(surface, profile, s_grid)


def _trace_warped(surface: WarpedDiskMetric, profile, s_grid):
    if surface.kind != "disk":
        raise MeshError("level-set traces are defined for disk surfaces")
    if surface.n != profile.n:
        raise RangeError("profile dimension does not match the surface")
    l = surface.l
    if l > profile.s_max * (1 + 1e-12):
        raise RangeError(f"inradius {l} exceeds profile horizon {profile.s_max}")
    s_grid = default_grid(l) if s_grid is None else np.asarray(s_grid, dtype=float)
    if np.any(s_grid <= 0) or np.any(s_grid >= l):
        raise RangeError("grid must lie strictly inside (0, l)")
    t = l - s_grid
    T = surface.T
    L = T * surface.phi(t)
    # (Lap psi - K) phi = d/ds (psi' phi + phi'); the tip limit is phi'(0)
    flux = lambda x: surface.dpsi(x) * surface.phi(x) + surface.dphi(x)
    M = T * (flux(t) - surface.dphi(surface.s_lo))
    # cumulative area by fine trapezoid on phi
    fine = np.linspace(surface.s_lo, l, 8193)
    phi_f = surface.phi(fine)
    cum = np.concatenate([[0.0], np.cumsum((phi_f[1:] + phi_f[:-1]) / 2 * np.diff(fine))])
    total_area = T * cum[-1]
    A = total_area - T * np.interp(t, fine, cum)
    return _assemble(profile, surface.n, l, s_grid, A, L, M, None, total_area, surface)


def _trace_mesh(surface: ConformalSurface, profile, s_grid):
    if surface.kind != "disk":
        raise MeshError("level-set traces are defined for disk surfaces")
    if surface.n != profile.n:
        raise RangeError("profile dimension does not match the surface")
    u = distance_field(surface)
    l = float(u.max())
    if l > profile.s_max * (1 + 1e-12):
        raise RangeError(f"inradius {l} exceeds profile horizon {profile.s_max}")
    s_grid = default_grid(l) if s_grid is None else np.asarray(s_grid, dtype=float)
    if np.any(s_grid <= 0) or np.any(s_grid >= l):
        raise RangeError("grid must lie strictly inside (0, l)")
    # nudge grid values that collide with vertex values (degenerate crossings)
    su = np.sort(np.unique(u))
    eps = 1e-9 * l
    idx = np.searchsorted(su, s_grid)
    for i in range(len(s_grid)):
        for j in (idx[i] - 1, idx[i]):
            if 0 <= j < len(su) and abs(su[j] - s_grid[i]) < 1e-12 * l:
                s_grid[i] += eps

    tris = surface.tris
    ut = u[tris]
    ut_sorted = np.sort(ut, axis=1)
    u0, u1, u2 = ut_sorted[:, 0], ut_sorted[:, 1], ut_sorted[:, 2]
    At = surface.tri_area
    total_area = float(At.sum())

    # vertex measure of (Lap psi - K): integrated Laplacian minus angle defect
    mv = surface.integrated_laplacian(surface.psi) - surface.angle_defect
    order = np.argsort(u)
    u_sorted_v = u[order]
    mv_suffix = np.concatenate([np.cumsum(mv[order][::-1])[::-1], [0.0]])

    P = surface.layout
    m = len(s_grid)
    A = np.zeros(m)
    L = np.zeros(m)
    M = np.zeros(m)
    ncomp = np.zeros(m, dtype=np.int64)

    d10 = u1 - u0
    d20 = u2 - u0
    d21 = u2 - u1
    # A(s) = sum over triangles of the piecewise-quadratic sublevel fraction;
    # expand the quadratics and accumulate windowed coefficient sums via
    # prefix sums over the sorted region breakpoints (O(T log T) total).
    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = np.where(d10 * d20 > 0, At / (d10 * d20), 0.0)
        c2 = np.where(d21 * d20 > 0, At / (d21 * d20), 0.0)

    def windowed_quadratic(enter, leave, coef, center):
        # sum over {enter < s <= leave} of coef*(s - center)^2, as three
        # prefix-sum evaluators in s
        e_ord = np.argsort(enter)
        l_ord = np.argsort(leave)
        e_sorted = enter[e_ord]
        l_sorted = leave[l_ord]

        def prefix(vals, order):
            return np.concatenate([[0.0], np.cumsum(vals[order])])

        tabs = {
            "e0": prefix(coef, e_ord), "e1": prefix(coef * center, e_ord),
            "e2": prefix(coef * center * center, e_ord),
            "l0": prefix(coef, l_ord), "l1": prefix(coef * center, l_ord),
            "l2": prefix(coef * center * center, l_ord),
        }

        def at(svals, side="left"):
            ke = np.searchsorted(e_sorted, svals, side=side)
            kl = np.searchsorted(l_sorted, svals, side=side)
            q0 = tabs["e0"][ke] - tabs["l0"][kl]
            q1 = tabs["e1"][ke] - tabs["l1"][kl]
            q2 = tabs["e2"][ke] - tabs["l2"][kl]
            return q0 * svals * svals - 2.0 * svals * q1 + q2

        return at

    quad_lo = windowed_quadratic(u0, u1, c1, u0)        # (s-u0)^2 regime
    quad_hi = windowed_quadratic(u1, u2, c2, u2)        # At - (u2-s)^2 regime
    u2_ord = np.argsort(u2)
    u2_sorted = u2[u2_ord]
    At_done = np.concatenate([[0.0], np.cumsum(At[u2_ord])])
    u1_ord = np.argsort(u1)
    u1_sorted = u1[u1_ord]
    At_mid = np.concatenate([[0.0], np.cumsum(At[u1_ord])])

    def area_at(svals):
        # grid values are nudged off the breakpoints, so strict windows are safe
        svals = np.asarray(svals, dtype=float)
        full = At_done[np.searchsorted(u2_sorted, svals, side="left")]
        mid = At_mid[np.searchsorted(u1_sorted, svals, side="left")] - full
        return quad_lo(svals) + mid - quad_hi(svals) + full

    A[:] = area_at(s_grid)
    M[:] = mv_suffix[np.searchsorted(u_sorted_v, s_grid, side="right")]

    # window the per-level crossing work to triangles straddling the level
    order_lo = np.argsort(u0)
    u0_sorted = u0[order_lo]
    pair_idx = np.array([[0, 1], [1, 2], [2, 0]])
    ut_raw = u[tris]
    vkeys = np.stack(
        [np.minimum(tris[:, pair_idx[:, 0]], tris[:, pair_idx[:, 1]]),
         np.maximum(tris[:, pair_idx[:, 0]], tris[:, pair_idx[:, 1]])], axis=-1
    )  # (T, 3, 2) canonical vertex pair per edge slot
    for i, s in enumerate(s_grid):
        # marching segments on {u = s}, vectorized over crossing triangles
        hi = np.searchsorted(u0_sorted, s)
        cand = order_lo[:hi]
        crossing = cand[u2[cand] > s]
        if len(crossing) == 0:
            ncomp[i] = 0
            continue
        uc = ut_raw[crossing]                      # (c, 3)
        up = uc[:, pair_idx[:, 0]]
        uq = uc[:, pair_idx[:, 1]]
        valid = (up - s) * (uq - s) < 0            # (c, 3)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = (s - up) / (uq - up)
        Pc = P[crossing]
        pts = Pc[:, pair_idx[:, 0], :] + lam[..., None] * (
            Pc[:, pair_idx[:, 1], :] - Pc[:, pair_idx[:, 0], :])
        two = valid.sum(axis=1) == 2
        idx1 = np.argmax(valid, axis=1)
        v2 = valid.copy()
        v2[np.arange(len(crossing)), idx1] = False
        idx2 = np.argmax(v2, axis=1)
        rows = np.flatnonzero(two)
        p1 = pts[rows, idx1[rows]]
        p2 = pts[rows, idx2[rows]]
        L[i] = float(np.linalg.norm(p1 - p2, axis=1).sum())
        # components: union crossing triangles sharing a crossed edge
        k1 = vkeys[crossing[rows], idx1[rows]]
        k2 = vkeys[crossing[rows], idx2[rows]]
        keys = np.vstack([k1, k2])
        owners = np.concatenate([rows, rows])
        _, inv = np.unique(keys, axis=0, return_inverse=True)
        grp = np.argsort(inv, kind="stable")
        inv_sorted = inv[grp]
        owners_sorted = owners[grp]
        parent = np.arange(len(rows))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        comp = len(rows)
        row_of = {int(r): j for j, r in enumerate(rows)}
        for j in range(1, len(inv_sorted)):
            if inv_sorted[j] == inv_sorted[j - 1]:
                ra = find(row_of[int(owners_sorted[j - 1])])
                rb = find(row_of[int(owners_sorted[j])])
                if ra != rb:
                    parent[ra] = rb
                    comp -= 1
        ncomp[i] = comp
    return _assemble(profile, surface.n, l, s_grid, A, L, M, ncomp, total_area, surface)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class MonotonicityReport:
    min_increment: float
    argmin_s: float
    flagged: np.ndarray
    n_flagged: int
    tol: float
    passed: bool
    limsup_J_top: float
    det_bound_C: float
    A_drift_max: float

    def to_json(self) -> str:
        return json.dumps({
            "min_increment": self.min_increment,
            "argmin_s": self.argmin_s,
            "n_flagged": int(self.n_flagged),
            "tol": self.tol,
            "passed": bool(self.passed),
            "limsup_J_top": self.limsup_J_top,
            "det_bound_C": self.det_bound_C,
            "A_drift_max": self.A_drift_max,
        })


def check_hypothesis(surface, tol: float = 1e-6):
    """Refuse surfaces violating the weight hypothesis; returns min residual."""
    res = hypothesis_residual(surface)
    if isinstance(surface, WarpedDiskMetric):
        k = int(np.argmin(res))
        worst = res[k]
        where = f"s = {surface.interior_grid()[k]:.6g}"
    else:
        worst = np.nanmin(res)
        k = int(np.nanargmin(res))
        where = f"vertex {k}"
    if worst < -tol:
        raise HypothesisViolation(where, float(worst))
    return float(worst)


def monotonicity_report(tr: LevelSetTrace, tol: float = None, hyp_tol: float = 1e-6) -> MonotonicityReport:
    """Minimum J increment over non-flagged grid pairs, with the empirical
    A(s) - C s drift check (C from the level-length scan)."""
    check_hypothesis(tr.surface, tol=hyp_tol)
    if tol is None:
        tol = 1e-5 if isinstance(tr.surface, WarpedDiskMetric) else 1e-3
    ok = ~(tr.flagged[1:] | tr.flagged[:-1])
    dJ = np.diff(tr.J)
    if np.any(ok):
        min_inc = float(dJ[ok].min())
        argmin = float(tr.s[1:][ok][np.argmin(dJ[ok])])
    else:
        min_inc = np.nan
        argmin = np.nan
    # A(s) - C s nonincreasing for the det bound C = sup L (A' = L a.e.)
    C = float(tr.L.max())
    drift = np.diff(tr.A) - C * np.diff(tr.s)
    top = tr.J[~tr.flagged][-1] if np.any(~tr.flagged) else np.nan
    return MonotonicityReport(
        min_increment=min_inc,
        argmin_s=argmin,
        flagged=tr.flagged,
        n_flagged=int(tr.flagged.sum()),
        tol=tol,
        passed=bool(min_inc >= -tol),
        limsup_J_top=float(top),
        det_bound_C=C,
        A_drift_max=float(drift.max()),
    )


@dataclass
class DiskInequalityReport:
    n: int
    boundary_length: float
    inf_quantity: float
    integral_quantity: float
    lhs_inf: float
    lhs_integral: float
    rhs: float
    ratio_inf: float
    ratio_integral: float
    tol: float
    passed: bool

    def to_json(self) -> str:
        return json.dumps({k: (int(v) if isinstance(v, (bool, np.bool_)) else v)
                           for k, v in self.__dict__.items()})


def theorem1_disk_report(surface, tol: float = 1e-4) -> DiskInequalityReport:
    """Both forms of the disk inequality:

        2 |bdry|^n   inf (<grad psi, eta> + kappa - (n-1)) <= (4 pi / n)^n
        2 |bdry|^(n-1) int (<grad psi, eta> + kappa - (n-1)) <= (4 pi / n)^n
    """
    kind = surface.kind
    if kind not in ("disk",):
        raise MeshError("disk inequality report needs a disk surface")
    n = surface.n
    bd = boundary_data(surface)
    inf_q = bd.inf_quantity(n)
    int_q = bd.integral_quantity(n)
    lb = bd.total_length
    rhs = (4.0 * np.pi / n) ** n
    lhs_inf = 2.0 * lb**n * inf_q
    lhs_int = 2.0 * lb ** (n - 1) * int_q
    return DiskInequalityReport(
        n=n, boundary_length=lb, inf_quantity=inf_q, integral_quantity=int_q,
        lhs_inf=lhs_inf, lhs_integral=lhs_int, rhs=rhs,
        ratio_inf=lhs_inf / rhs, ratio_integral=lhs_int / rhs,
        tol=tol, passed=bool(lhs_inf <= rhs * (1 + tol) and lhs_int <= rhs * (1 + tol)),
    )
