"""Constrained systoles of flat tori.

The boundary torus carries a distinguished winding direction (index 0,
the xi circle); the constrained systole is

    sigma = min { |k B| : k in Z^m, k_0 != 0 },

i.e. the shortest closed geodesic with nonzero winding against the
distinguished one-form.  Enumeration is Fincke-Pohst style over the
ellipsoid |k B| <= |e_0 B| (the seed candidate k = e_0), with the
k_0 != 0 constraint applied at the leaf level.  Exact at desk scale
(m <= 6); no SVP heuristics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky

from ._accel import maybe_njit

TORUS_SCHEMA_VERSION = 1


class TorusError(ValueError):
    pass


@dataclass(frozen=True)
class FlatTorus:
    """Flat torus R^m / Z^m B with winding functional counting the first
    lattice coefficient.  Rows of ``basis`` are the generators."""

    basis: np.ndarray
    xi_index: int = 0

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if B.shape[0] != B.shape[1]:
            raise TorusError(f"basis must be square, got shape {B.shape}")
        if abs(np.linalg.det(B)) < 1e-12:
            raise TorusError("basis is singular")
        if self.xi_index != 0:
            raise TorusError("winding direction must be lattice index 0")
        object.__setattr__(self, "basis", B)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def gram(self) -> np.ndarray:
        return self.basis @ self.basis.T

    @property
    def volume(self) -> float:
        return float(abs(np.linalg.det(self.basis)))

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": TORUS_SCHEMA_VERSION,
                "basis": self.basis.tolist(),
                "xi_index": self.xi_index,
            }
        )

    @staticmethod
    def from_json(text: str) -> "FlatTorus":
        doc = json.loads(text)
        if doc.get("schema_version") != TORUS_SCHEMA_VERSION:
            raise TorusError(f"unsupported torus schema version {doc.get('schema_version')!r}")
        return FlatTorus(np.asarray(doc["basis"], dtype=float), int(doc.get("xi_index", 0)))


_MAX_TIES = 64


def _fp_enumerate(R, bound2):
    """Enumerate k in Z^m with |R k|^2 <= bound2, k_0 != 0, up to global sign.

    R is the upper-triangular Cholesky factor of the Gram matrix, so the
    quadratic form splits level by level from index m-1 down to the leaf
    index 0 where the winding constraint applies.  Sign symmetry is broken
    by requiring the highest-index nonzero coordinate to be positive.
    Returns (best squared norm, tie candidates, tie count).
    """
    m = R.shape[0]
    k = np.zeros(m, dtype=np.int64)
    lo = np.zeros(m, dtype=np.int64)
    hi = np.zeros(m, dtype=np.int64)
    part = np.zeros(m + 1, dtype=np.float64)  # partial sums of levels > i
    cvec = np.zeros(m, dtype=np.float64)
    ties = np.zeros((_MAX_TIES, m), dtype=np.int64)
    nties = 0
    best2 = bound2

    def level_range(i):
        # admissible k_i interval at level i given budget and offset
        budget = best2 * (1.0 + 1e-9) - part[i + 1]
        if budget < 0.0:
            return 1, 0, 0.0
        c = 0.0
        for j in range(i + 1, m):
            c += R[i, j] * k[j]
        rad = np.sqrt(budget)
        lo_i = int(np.ceil((-rad - c) / R[i, i] - 1e-12))
        hi_i = int(np.floor((rad - c) / R[i, i] + 1e-12))
        return lo_i, hi_i, c

    i = m - 1
    lo[i], hi[i], cvec[i] = level_range(i)
    # positive half-space: topmost nonzero coordinate > 0
    if lo[i] < 0:
        lo[i] = 0
    k[i] = lo[i] - 1
    while True:
        k[i] += 1
        if k[i] > hi[i]:
            i += 1
            if i >= m:
                break
            continue
        # half-space restriction: if all coordinates above are zero, k_i >= 0
        allzero_above = True
        for j in range(i + 1, m):
            if k[j] != 0:
                allzero_above = False
                break
        if allzero_above and k[i] < 0:
            k[i] = 0 if hi[i] >= 0 else hi[i] + 1
            if k[i] > hi[i]:
                i += 1
                if i >= m:
                    break
                continue
        t = R[i, i] * k[i] + cvec[i]
        newpart = part[i + 1] + t * t
        if newpart > best2 * (1.0 + 1e-9):
            continue
        if i == 0:
            if k[0] == 0:
                continue
            if newpart < best2 * (1.0 - 1e-9):
                best2 = newpart
                nties = 0
            if nties < _MAX_TIES:
                for j in range(m):
                    ties[nties, j] = k[j]
                nties += 1
        else:
            part[i] = newpart
            i -= 1
            lo[i], hi[i], cvec[i] = level_range(i)
            k[i] = lo[i] - 1
    return best2, ties, nties


_fp_enumerate_py = _fp_enumerate
_fp_enumerate_jit = maybe_njit(_fp_enumerate)


def constrained_systole(torus: FlatTorus, _impl=None):
    """Shortest lattice vector with nonzero winding coefficient.

    Returns (sigma, witness).  Ties are broken by flipping signs so that
    k_0 > 0 and taking the lexicographically smallest k.
    """
    B = torus.basis
    m = torus.dim
    G = B @ B.T
    R = cholesky(G, lower=False)
    bound2 = float(G[0, 0])
    enum = _impl if _impl is not None else _fp_enumerate_jit
    best2, ties, nties = enum(np.ascontiguousarray(R), bound2)
    if nties == 0:  # cannot happen: e_0 is always admissible
        raise RuntimeError("enumeration returned no candidate")
    cand = ties[:nties].copy()
    # keep only candidates matching the final best within the tie tolerance
    norms2 = np.einsum("ij,jk,ik->i", cand.astype(float), G, cand.astype(float))
    keep = norms2 <= best2 * (1.0 + 1e-9)
    cand = cand[keep]
    # canonical sign: k_0 > 0
    flip = cand[:, 0] < 0
    cand[flip] *= -1
    order = np.lexsort(cand.T[::-1])  # lexicographic by (k_0, k_1, ...)
    witness = cand[order[0]]
    sigma = float(np.linalg.norm(witness.astype(float) @ B))
    return sigma, witness


_BOX_CACHE: dict = {}


def _candidate_box(m: int, radius: int) -> np.ndarray:
    key = (m, radius)
    if key not in _BOX_CACHE:
        axes = [np.arange(-radius, radius + 1, dtype=np.int16)] * m
        K = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
        _BOX_CACHE[key] = K[K[:, 0] != 0]
    return _BOX_CACHE[key]


def brute_force_systole(torus: FlatTorus, radius: int = 5):
    """Reference enumeration over the box |k_i| <= radius (oracle-grade)."""
    m = torus.dim
    B = torus.basis
    K = _candidate_box(m, radius)
    V = K.astype(float) @ B
    norms = np.einsum("ij,ij->i", V, V)
    best = norms.min()
    cand = K[norms <= best * (1.0 + 1e-9)].copy()
    flip = cand[:, 0] < 0
    cand[flip] *= -1
    cand = np.unique(cand, axis=0)
    order = np.lexsort(cand.T[::-1])
    witness = cand[order[0]]
    sigma = float(np.linalg.norm(witness.astype(float) @ B))
    return sigma, witness


@dataclass(frozen=True)
class HmSigmaResult:
    sigma: float
    flagged: bool
    witness: np.ndarray = field(repr=False, default=None)

    def __float__(self):
        return self.sigma


def hm_xi_period(n: int, r0: float) -> float:
    """xi-period forced by smoothness of the model tip: 4 pi / (n r0)."""
    return 4.0 * np.pi / (n * r0)


def hm_sigma(n: int, r0: float, fiber_lengths, shear=None) -> HmSigmaResult:
    """Constrained systole of the model boundary torus.

    Builds the torus with xi-period 4 pi/(n r0) and the given fiber circle
    lengths (optionally sheared against the xi direction: ``shear[i]`` is
    the xi-offset of fiber generator i).  When every fiber is at least the
    xi-period and the xi circle realizes the constrained systole, returns
    sigma = 4 pi/(n r0) unflagged; otherwise returns the true enumerated
    systole with the flag raised.
    """
    if r0 <= 0:
        raise TorusError(f"r0 must be positive, got {r0}")
    fibers = np.atleast_1d(np.asarray(fiber_lengths, dtype=float))
    if len(fibers) != n - 2:
        raise TorusError(f"expected {n - 2} fiber lengths for n = {n}, got {len(fibers)}")
    L0 = hm_xi_period(n, r0)
    m = n - 1
    B = np.zeros((m, m))
    B[0, 0] = L0
    for i, L in enumerate(fibers):
        B[i + 1, i + 1] = L
    if shear is not None:
        sh = np.atleast_1d(np.asarray(shear, dtype=float))
        B[1:, 0] = sh
    torus = FlatTorus(B)
    sigma, witness = constrained_systole(torus)
    ok = np.all(fibers >= L0 * (1.0 - 1e-12)) and sigma >= L0 * (1.0 - 1e-12)
    if ok:
        return HmSigmaResult(sigma=L0, flagged=False, witness=np.eye(m, dtype=np.int64)[0])
    return HmSigmaResult(sigma=sigma, flagged=True, witness=witness)
