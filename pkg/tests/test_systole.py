import json

import numpy as np
import pytest

from systolab.systole import (
    FlatTorus,
    TorusError,
    brute_force_systole,
    constrained_systole,
    hm_sigma,
    hm_xi_period,
    _fp_enumerate_py,
)


def random_torus(rng, m, cond_max=100.0):
    while True:
        B = rng.normal(size=(m, m))
        u, _, vt = np.linalg.svd(B)
        s = rng.uniform(0.3, 3.0, size=m)
        B = (u * s) @ vt
        if np.linalg.cond(B @ B.T) <= cond_max:
            return FlatTorus(B)


def test_rectangular_periods():
    sigma, witness = constrained_systole(FlatTorus(np.diag([2.0, 3.0, 4.0])))
    assert sigma == 2.0
    assert np.array_equal(witness, [1, 0, 0])
    # short fibers do not matter: winding forces the xi term
    sigma, witness = constrained_systole(FlatTorus(np.diag([2.0, 0.5])))
    assert sigma == 2.0 and np.array_equal(witness, [1, 0])


def test_sheared_2d_example():
    sigma, witness = constrained_systole(FlatTorus(np.array([[1.0, 0.0], [0.9, 0.1]])))
    assert sigma == pytest.approx(np.sqrt(0.02), abs=1e-14)
    assert np.array_equal(witness, [1, -1])


def test_hexagonal():
    sigma, witness = constrained_systole(FlatTorus(np.array([[1.0, 0.0], [0.5, np.sqrt(3) / 2]])))
    assert sigma == pytest.approx(1.0, abs=1e-12)
    assert witness[0] == 1


def test_against_brute_force_random():
    rng = np.random.default_rng(42)
    for trial in range(40):
        m = int(rng.integers(2, 7))
        torus = random_torus(rng, m)
        s1, w1 = constrained_systole(torus)
        s2, w2 = brute_force_systole(torus)
        assert s1 == s2, f"trial {trial}: {s1} != {s2}"
        assert np.array_equal(w1, w2)


def test_python_fallback_matches_jit():
    rng = np.random.default_rng(3)
    for _ in range(5):
        torus = random_torus(rng, 4)
        s_jit, w_jit = constrained_systole(torus)
        s_py, w_py = constrained_systole(torus, _impl=_fp_enumerate_py)
        assert s_jit == s_py and np.array_equal(w_jit, w_py)


def test_scaling_covariance():
    rng = np.random.default_rng(5)
    torus = random_torus(rng, 3)
    sigma, witness = constrained_systole(torus)
    for c in (2.0, 0.5):  # powers of two keep float scaling exact
        sigma_c, witness_c = constrained_systole(FlatTorus(c * torus.basis))
        assert sigma_c == c * sigma
        assert np.array_equal(witness_c, witness)


def test_candidate_bound():
    rng = np.random.default_rng(11)
    for _ in range(20):
        torus = random_torus(rng, int(rng.integers(2, 6)))
        sigma, _ = constrained_systole(torus)
        assert sigma <= np.linalg.norm(torus.basis[0]) * (1 + 1e-12)


def test_hm_sigma_values():
    r = hm_sigma(3, 1.0, [10.0])
    assert not r.flagged
    assert r.sigma == pytest.approx(4 * np.pi / 3, abs=1e-14)
    r = hm_sigma(7, 2.0, [5.0] * 5)
    assert not r.flagged
    assert r.sigma == pytest.approx(2 * np.pi / 7, abs=1e-14)


def test_hm_sigma_precondition_flag():
    L0 = hm_xi_period(3, 1.0)
    r = hm_sigma(3, 1.0, [1.0])
    assert r.flagged
    assert r.sigma == pytest.approx(L0, abs=1e-12)  # rectangular: winding still forces L0
    # shear plus a short fiber undercuts the xi circle
    r = hm_sigma(3, 1.0, [3.0], shear=[2.1])
    assert r.flagged
    expected = min(L0, np.hypot(L0 - 2.1, 3.0))
    assert r.sigma == pytest.approx(expected, abs=1e-12)
    assert r.sigma < L0


def test_torus_validation_and_json():
    with pytest.raises(TorusError):
        FlatTorus(np.zeros((2, 2)))
    with pytest.raises(TorusError):
        FlatTorus(np.eye(3), xi_index=1)
    t = FlatTorus(np.array([[1.0, 0.2], [0.0, 3.0]]))
    doc = t.to_json()
    t2 = FlatTorus.from_json(doc)
    assert np.array_equal(t.basis, t2.basis)
    assert json.loads(doc)["xi_index"] == 0
