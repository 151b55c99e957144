from __future__ import annotations

import json
import math

import numpy as np
import pytest

from heisenberg_pam import group, noise
from heisenberg_pam.green import increment_variance_array
from heisenberg_pam.errors import DimensionError, DomainError
from heisenberg_pam.group import GroupPoint
from heisenberg_pam.noise import CovarianceNodes, PolarLattice, TestFunction

BUMP = TestFunction(GroupPoint.identity(1), 0.8, frequency=4.0)


def _cheap_truncation(f, g):
    return noise.default_truncation(f, g, m_max=600, lam_min=0.2)


def test_test_function_transforms(rng):
    f = TestFunction(GroupPoint((0.2,), (-0.1,), 0.3), 0.7, frequency=2.0)
    q = rng.normal(size=(30, 3))
    g = GroupPoint((0.5,), (0.4,), -0.2)
    np.testing.assert_allclose(f.dilate(1.7)(q), f(group.dil_arr(1.7, q)), rtol=1e-12)
    np.testing.assert_allclose(f.translate(g)(q), f(group.mul_arr(g.as_array(), q)), rtol=1e-12)
    np.testing.assert_allclose(f.rotate(0.6)(q), f(group.rot_arr(0.6, q)), rtol=1e-12, atol=1e-300)
    assert f.scaled(3.0)(q[:1])[0] == pytest.approx(3 * f(q[:1])[0])
    assert f.time_overlap(TestFunction(f.center, 1.0, time_support=(0.5, 2.0))) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        TestFunction(GroupPoint.identity(1), -1.0)


def _grid_inner(f, g):
    # brute-force Riemann sum of int f g dmu on a box (white-noise covariance)
    h = np.linspace(-4, 4, 121)
    z = np.linspace(-4, 4, 161)
    X, Y, Z = np.meshgrid(h, h, z, indexing="ij")
    pts = np.stack([X, Y, Z], axis=-1).reshape(-1, 3)
    return float(np.sum(f(pts) * g(pts)) * (h[1] - h[0]) ** 2 * (z[1] - z[0]))


def test_white_noise_limit(frozen_pair):
    phi, psi = frozen_pair
    assert noise.covariance_quadrature(0.0, phi, psi) == pytest.approx(_grid_inner(phi, psi), rel=1e-6)


def test_quadrature_symmetric_and_converged(frozen_pair):
    phi, psi = frozen_pair
    a = noise.covariance_quadrature(0.75, phi, psi)
    b = noise.covariance_quadrature(0.75, psi, phi)
    fine = noise.covariance_quadrature(0.75, phi, psi, CovarianceNodes(36, 18, 96, 8))
    assert a == pytest.approx(b, rel=1e-10)
    assert a == pytest.approx(fine, rel=1e-8)


def test_quadrature_invariances(frozen_pair):
    phi, psi = frozen_pair
    base = noise.covariance_quadrature(0.75, phi, psi)
    g = GroupPoint((0.7,), (-0.4,), 1.1)
    trans = noise.covariance_quadrature(0.75, phi.translate(g), psi.translate(g))
    rot = noise.covariance_quadrature(0.75, phi.rotate(1.2), psi.rotate(1.2))
    assert trans == pytest.approx(base, rel=1e-8)
    assert rot == pytest.approx(base, rel=1e-8)


def test_quadrature_dilation_scaling():
    lam, alpha = 1.5, 0.75
    phi = TestFunction(GroupPoint.identity(1), 1.0, frequency=1.0)
    psi = TestFunction(GroupPoint((0.3,), (0.0,), 0.1), 1.0)
    base = noise.covariance_quadrature(alpha, phi, psi)
    scaled = noise.covariance_quadrature(alpha, phi.dilate(lam), psi.dilate(lam))
    assert scaled == pytest.approx(lam ** (-2 * (1 + 1 + 2 * alpha)) * base, rel=1e-6)


@pytest.mark.parametrize("alpha", [0.0, 0.75])
def test_spectral_matches_quadrature_small_lambda_mass(alpha):
    # this bump has spectral mass near lambda = 0, exercising the extrapolated remainder
    spec = noise.covariance_spectral(alpha, BUMP, BUMP, _cheap_truncation(BUMP, BUMP))
    quad = noise.covariance_quadrature(alpha, BUMP, BUMP)
    assert spec.value == pytest.approx(quad, rel=5e-3)
    assert "low_lambda_extrapolated" in spec.flags


def test_spectral_input_checks():
    f2 = TestFunction(GroupPoint.identity(2), 1.0)
    with pytest.raises(DimensionError):
        noise.covariance_spectral(0.5, f2, f2)
    with pytest.raises(DomainError):
        noise.covariance_spectral(1.2, BUMP, BUMP)


def test_sample_distributional_variance_and_linearity():
    tr = _cheap_truncation(BUMP, BUMP)
    var = noise.covariance_spectral(0.75, BUMP, BUMP, tr).value
    draws = noise.sample_distributional(0.75, [BUMP, BUMP.scaled(2.0)], 10_000, seed=8, trunc=tr)
    x = draws[:, 0]
    se_var = var * math.sqrt(2 / x.size)
    assert abs(x.var() - var) < 3 * se_var
    assert abs(x.mean()) < 3 * math.sqrt(var / x.size)
    np.testing.assert_allclose(draws[:, 1], 2 * draws[:, 0], rtol=1e-6, atol=1e-12)
    again = noise.sample_distributional(0.75, [BUMP, BUMP.scaled(2.0)], 10_000, seed=8, trunc=tr)
    np.testing.assert_array_equal(draws, again)


def test_pointwise_sampler_deterministic_and_anchored():
    lat = PolarLattice(per_octave=4, sphere=8, angle=12)
    pts = [GroupPoint((0.3,), (0.1,), 0.2), GroupPoint.identity(1)]
    a = noise.sample_pointwise(1.25, 1.0, pts, seed=5, lattice=lat)
    b = noise.sample_pointwise(1.25, 1.0, pts, seed=5, lattice=lat)
    np.testing.assert_array_equal(a.values, b.values)
    # W(t, e) = 0 by construction
    assert a.values[1] == 0.0
    rows = a.to_csv().strip().splitlines()
    assert rows[0] == "t,x,y,z,value" and len(rows) == 3
    data = json.loads(a.to_json())
    assert data["seed"] == 5 and len(data["points"]) == 2


def test_lattice_variance_approximates_increment_variance():
    x = np.array([[0.5, 0.0, 0.2], [0.0, 1.0, -0.5]])
    target = increment_variance_array(1.25, x)
    approx = noise.lattice_variance(1.25, 1.0, x, PolarLattice(per_octave=6, sphere=16, angle=24))
    np.testing.assert_allclose(approx, target, rtol=0.1)


def test_holder_slope_small():
    rep = noise.holder_slope(1.25, 1.0, 300, seed=4)
    assert rep.expected == pytest.approx(1.0)
    assert rep.hurst == pytest.approx(0.5)
    assert abs(rep.slope - 1.0) < 0.15


def test_invariance_suite():
    dev = noise.pointwise_invariance_suite(1.25, seed=3)
    assert dev["dilation"] < 1e-10
    assert dev["rotation"] < 1e-10
    assert dev["translation"] < 1e-10
    assert noise.hurst_parameter(1.25) == pytest.approx(0.5)
