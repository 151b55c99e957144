from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from heisenberg_pam import group
from heisenberg_pam.errors import DomainError, SingularInputError
from heisenberg_pam.green import (
    eval_G,
    green_array,
    green_table,
    increment_variance,
    increment_variance_array,
    mollified_green,
    ultracontractivity_ratios,
)
from heisenberg_pam.group import GroupPoint
from heisenberg_pam.heat_kernel import heat_kernel

# frozen: G_1(e, (1, 0, 0)) = 1 / (8 pi), checked below against a brute-force Mellin quadrature
G1_GOLDEN = 0.039788735772973836


def _mellin_brute_force(a: float, q: np.ndarray, eps: float = 0.0) -> float:
    """(1/Gamma(a)) int_0^inf s^(a-1) k_{eps+s}(q) ds with k_s = p_{2s}, by nested adaptive quad."""
    f = lambda s: s ** (a - 1) * float(heat_kernel(2.0 * (eps + s), q[None, :])[0])
    parts = [(0, 0.05), (0.05, 1), (1, 20), (20, np.inf)]
    tot = sum(integrate.quad(f, lo, hi, epsrel=1e-11, epsabs=1e-14, limit=400)[0] for lo, hi in parts)
    return tot / special.gamma(a)


def test_golden_value_frozen_against_brute_force():
    assert G1_GOLDEN == pytest.approx(1 / (8 * math.pi), rel=1e-14)
    assert _mellin_brute_force(1.0, np.array([1.0, 0.0, 0.0])) == pytest.approx(G1_GOLDEN, rel=1e-7)
    assert eval_G(1.0, GroupPoint((1.0,), (0.0,), 0.0)) == pytest.approx(G1_GOLDEN, rel=1e-8)


def test_fundamental_solution_closed_form(rng):
    # G_1 = 1 / (8 pi sqrt(rho^4 + z^2)) on H^1
    pts = rng.normal(size=(40, 3))
    rho2 = np.sum(pts[:, :2] ** 2, axis=1)
    exact = 1 / (8 * math.pi * np.sqrt(rho2**2 + pts[:, 2] ** 2))
    np.testing.assert_allclose(green_array(1.0, pts), exact, rtol=1e-8)


@pytest.mark.parametrize("alpha", [0.75, 1.5])
def test_eval_G_matches_brute_force(alpha):
    q = np.array([0.4, -0.2, 0.5])
    assert eval_G(alpha, GroupPoint.from_array(q)) == pytest.approx(_mellin_brute_force(alpha, q), rel=1e-6)


@given(st.floats(0.1, 10), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.sampled_from([0.5, 0.75, 1.5]))
@settings(max_examples=25, deadline=None)
def test_scaling_and_rotation(lam, x, y, z, alpha):
    if abs(x) + abs(y) + abs(z) < 1e-3:
        return
    q = np.array([[x, y, z]])
    base = green_array(alpha, q)[0]
    assert lam ** (2 * (2 - alpha)) * green_array(alpha, group.dil_arr(lam, q))[0] == pytest.approx(base, rel=1e-9)
    assert green_array(alpha, group.rot_arr(0.9, q))[0] == pytest.approx(base, rel=1e-9)


def test_table_matches_direct(rng):
    pts = rng.normal(size=(15, 3))
    direct = np.array([eval_G(0.75, GroupPoint.from_array(p)) for p in pts])
    np.testing.assert_allclose(green_table(0.75)(pts), direct, rtol=1e-7)


def test_two_sided_homogeneous_bound(rng):
    u = rng.normal(size=(100, 3))
    u /= group.gauge_arr(u)[:, None]
    r = np.exp(rng.uniform(math.log(0.1), math.log(10), 100))
    pts = group.dil_arr(r, u)
    ratio = green_array(0.75, pts) * group.gauge_arr(pts) ** (2 * (2 - 0.75))
    assert np.all(ratio > 0)
    assert ratio.max() / ratio.min() < 20


def test_singular_and_domain_errors():
    with pytest.raises(SingularInputError):
        eval_G(0.75, GroupPoint.identity(1))
    with pytest.raises(DomainError):
        eval_G(2.5, GroupPoint((1.0,), (0.0,), 0.0))


def test_mollified_kernel():
    S = mollified_green(1.5)
    q = np.array([0.3, 0.2, -0.4])
    for eps in (0.1, 0.02):
        val = float(S(eps, q[None, :])[0])
        assert val == pytest.approx(_mellin_brute_force(1.5, q, eps), rel=1e-3)
    # bounded, maximal at e, below the bare kernel for this order
    e = float(S(0.1, np.zeros((1, 3)))[0])
    assert 0 < float(S(0.1, q[None, :])[0]) < e < math.inf
    assert float(S(0.01, q[None, :])[0]) < float(green_array(1.5, q[None, :])[0])
    # converges to G as eps -> 0 away from e
    assert float(S(1e-4, q[None, :])[0]) == pytest.approx(float(green_array(1.5, q[None, :])[0]), rel=2e-3)


def test_increment_variance(rng):
    alpha = 1.25
    x = GroupPoint((0.2,), (0.1,), -0.3)
    y = GroupPoint((-0.4,), (0.3,), 0.2)
    v = increment_variance(alpha, x, y)
    assert v > 0
    # left invariance and homogeneity of order 4 alpha - 2(n+1) = 1
    g = GroupPoint((1.0,), (-2.0,), 0.5)
    assert increment_variance(alpha, g * x, g * y) == pytest.approx(v, rel=1e-10)
    h = rng.normal(size=(20, 3))
    np.testing.assert_allclose(
        increment_variance_array(alpha, group.dil_arr(3.0, h)), 3.0 * increment_variance_array(alpha, h), rtol=1e-8
    )


def test_ultracontractivity_scaling():
    # sup |e^{t Delta} f| <= C t^-(n+1)/2 ||f||_2: the rescaled ratio stays bounded
    ratios = ultracontractivity_ratios((0.25, 1.0, 4.0), probe=3)
    assert np.all(ratios > 0)
    # Cauchy-Schwarz with ||k_t||_2^2 = p_{4t}(e) gives the constant 1/16
    assert ratios.max() <= 1 / 16
