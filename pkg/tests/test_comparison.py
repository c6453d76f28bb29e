import json

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from systolab.comparison import (
    ComparisonProfile,
    DomainError,
    RangeError,
    build_profile,
    eval_F,
    eval_G,
)

ALL_N = [3, 4, 5, 6, 7]


def gauss_legendre_F(z, n, panels=80, deg=24):
    """Independent oracle: composite Gauss-Legendre on the substituted integrand."""
    x, w = np.polynomial.legendre.leggauss(deg)
    T = np.sqrt(z - 1.0)
    edges = np.linspace(0.0, T, panels + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        t = 0.5 * (b - a) * x + 0.5 * (a + b)
        zeta = 1.0 + t * t
        total += 0.5 * (b - a) * np.sum(w * 2.0 * t / (zeta * np.sqrt(1.0 - zeta ** (-n))))
    return total


@pytest.fixture(scope="module")
def profiles():
    return {n: build_profile(n, 5.0, 0.005) for n in ALL_N}


# ---------------------------------------------------------------------------
# eval_F
# ---------------------------------------------------------------------------

def test_F_empty_integral_limit():
    # z -> 1+ gives an empty integral
    assert eval_F(1.0 + 1e-14, 3) < 1e-6


def test_F_against_independent_quadrature():
    # frozen from two independent rules agreeing to ~1e-12
    assert eval_F(2.0, 3) == pytest.approx(1.133361471371148, abs=1e-10)
    for n in ALL_N:
        assert eval_F(2.0, n) == pytest.approx(gauss_legendre_F(2.0, n), abs=1e-10)


def test_F_logarithmic_tail():
    # integrand -> 1/zeta for large zeta, so F(2z) - F(z) -> log 2
    for z in (1e3, 1e4):
        gap = eval_F(2 * z, 3) - eval_F(z, 3)
        assert abs(gap - np.log(2.0)) < 5e-7 / z


def test_F_domain_error():
    with pytest.raises(DomainError):
        eval_F(1.0, 3)
    with pytest.raises(DomainError):
        eval_F(0.5, 3)
    with pytest.raises(DomainError):
        eval_F(2.0, 2)


# ---------------------------------------------------------------------------
# build_profile / eval_G
# ---------------------------------------------------------------------------

def test_series_seed_coefficient_residual():
    # substituting G = 1 + (n/4) s^2 into the ODE: residual of the ansatz
    # divided by s^3 must vanish as s -> 0
    for n in ALL_N:
        for s in (1e-2, 1e-3):
            G = 1.0 + n / 4.0 * s * s
            lhs = n / 2.0 * s  # d/ds of the ansatz
            rhs = G * np.sqrt(1.0 - G ** (-n))
            assert abs(lhs - rhs) / s**3 < 2.0 * n


def test_profile_invariants(profiles):
    for n, p in profiles.items():
        s, G, dG = p.samples.T
        assert np.all(np.diff(s) > 0)
        assert np.all(np.diff(G) > 0)
        assert abs(G[0] - 1.0) < 1e-7
        resid = np.abs(dG - G * np.sqrt(1.0 - G ** (-float(n))))
        assert resid.max() <= 1e-9


def test_roundtrip_F_of_G(profiles):
    for n, p in profiles.items():
        grid = np.linspace(0.05, p.s_max, 100)
        for s in grid:
            G, _ = eval_G(p, s)
            assert abs(eval_F(G, n) - s) <= 1e-8


def test_inverse_roundtrip_at_F2(profiles):
    for n, p in profiles.items():
        s = eval_F(2.0, n)
        G, _ = eval_G(p, s)
        assert abs(G - 2.0) <= 1e-8


def test_derivative_identity_1(profiles):
    # d/ds G^(n-1) = (n-1) G^(n-1) (1-G^-n)^(1/2), checked with the stored
    # derivative data at every sample
    for n, p in profiles.items():
        s, G, dG = p.samples.T
        lhs = (n - 1) * G ** (n - 2) * dG
        rhs = (n - 1) * G ** (n - 1) * np.sqrt(1.0 - G ** (-float(n)))
        assert np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))) <= 1e-8


def test_derivative_identity_2_finite_differences(profiles):
    # d/ds (1-G^-n)^(1/2) = (n/2) G^-n via finite differences of the interpolant
    for n, p in profiles.items():
        s = np.linspace(0.2, p.s_max - 0.2, 57)
        h = 1e-5
        Gp, _ = eval_G(p, s + h)
        Gm, _ = eval_G(p, s - h)
        fd = (np.sqrt(1.0 - Gp ** (-float(n))) - np.sqrt(1.0 - Gm ** (-float(n)))) / (2 * h)
        G0, _ = eval_G(p, s)
        assert np.max(np.abs(fd - n / 2.0 * G0 ** (-float(n)))) <= 1e-7


def test_G_boundary_value(profiles):
    for n, p in profiles.items():
        G, _ = eval_G(p, 1e-9)
        assert abs(G - 1.0) < 1e-12


def test_G_matches_local_reintegration(profiles):
    # re-integrate the ODE from the nearest sample below a non-sample point
    rng = np.random.default_rng(7)
    for n, p in profiles.items():
        s_tab = p.samples[:, 0]
        for _ in range(5):
            s_star = rng.uniform(0.5, p.s_max - 0.5)
            k = np.searchsorted(s_tab, s_star) - 1
            s0, G0 = p.samples[k, 0], p.samples[k, 1]
            sol = solve_ivp(
                lambda s, g: g * np.sqrt(1.0 - g[0] ** (-float(n))),
                (s0, s_star),
                [G0],
                method="DOP853",
                rtol=1e-13,
                atol=1e-15,
            )
            G_star, _ = eval_G(p, s_star)
            assert abs(G_star - sol.y[0, -1]) <= 1e-9


def test_series_ratio_bounded(profiles):
    for n, p in profiles.items():
        c4 = abs(n * n * (3.0 - n) / 96.0)
        for s in (1e-2, 1e-3):
            G, _ = eval_G(p, s)
            ratio = abs(G - 1.0 - n / 4.0 * s * s) / s**4
            assert ratio <= c4 + 0.1


def test_interpolant_monotone(profiles):
    for n, p in profiles.items():
        s = np.linspace(1e-3, p.s_max, 4003)
        G, dG = eval_G(p, s)
        assert np.all(np.diff(G) > 0)
        assert np.all(dG >= 0)


def test_profile_domain_and_range_errors(profiles):
    with pytest.raises(DomainError):
        build_profile(3, -1.0, 0.01)
    with pytest.raises(DomainError):
        build_profile(3, 5.0, 0.0)
    with pytest.raises(DomainError):
        build_profile(3, 1.0, 0.5)  # too few samples
    p = profiles[3]
    with pytest.raises(RangeError):
        eval_G(p, p.s_max + 1.0)
    with pytest.raises(RangeError):
        eval_G(p, -0.1)


def test_profile_json_roundtrip(profiles):
    p = profiles[4]
    doc = p.to_json()
    q = ComparisonProfile.from_json(doc)
    assert q.n == p.n and q.s_max == p.s_max
    assert np.array_equal(q.samples, p.samples)
    parsed = json.loads(doc)
    assert parsed["schema_version"] == 1
