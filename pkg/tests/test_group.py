from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenberg_pam import group
from heisenberg_pam.errors import DimensionError, DomainError
from heisenberg_pam.group import Dilation, GroupPoint, Rotation

coord = st.floats(-50, 50, allow_nan=False)


def points(n: int = 1):
    return st.lists(coord, min_size=2 * n + 1, max_size=2 * n + 1).map(GroupPoint.from_array)


def close(p: GroupPoint, q: GroupPoint, tol: float = 1e-9) -> bool:
    scale = 1.0 + np.max(np.abs(p.as_array())) ** 2
    return bool(np.max(np.abs(p.as_array() - q.as_array())) <= tol * scale)


@given(points(), points(), points())
def test_associative(p, q, r):
    assert close((p * q) * r, p * (q * r))


@given(points(2))
def test_inverse_and_identity(p):
    e = group.identity(2)
    assert close(p * ~p, e)
    assert close(~p * p, e)
    assert close(p * e, p)


@given(points(), points(), st.floats(0.1, 10))
def test_dilation_is_automorphism(p, q, lam):
    d = Dilation(lam)
    assert close(d(p * q), d(p) * d(q), 1e-8)


@given(points(), points(), st.floats(-7, 7))
def test_rotation_is_automorphism(p, q, theta):
    r = Rotation(theta)
    assert close(r(p * q), r(p) * r(q), 1e-8)


@given(points(), st.floats(0.1, 10), st.floats(-7, 7))
def test_gauge_homogeneous_and_rotation_invariant(p, lam, theta):
    assert group.gauge(group.dilate(lam, p)) == pytest.approx(lam * group.gauge(p), rel=1e-9, abs=1e-12)
    assert group.gauge(group.rotate(theta, p)) == pytest.approx(group.gauge(p), rel=1e-9, abs=1e-12)


@given(points(), points())
@settings(max_examples=200)
def test_quasi_triangle(p, q):
    # the gauge is a quasi-norm: N(pq) <= C (N(p) + N(q)); C = 2 suffices for this gauge
    assert group.gauge(p * q) <= 2.0 * (group.gauge(p) + group.gauge(q)) + 1e-9


def test_group_law_values():
    p = GroupPoint((1.0,), (2.0,), 3.0)
    q = GroupPoint((-0.5,), (4.0,), 1.0)
    # z = 3 + 1 + 2 (x' y - x y') = 4 + 2 (-1 - 4)
    assert (p * q).z == pytest.approx(-6.0)
    assert group.omega(p, q) == pytest.approx(-5.0)
    assert group.hom_distance(p, p) == 0.0


def test_dilation_jacobian():
    assert group.dilation_jacobian(2.0, 1) == pytest.approx(16.0)
    assert group.dilation_jacobian(3.0, 2) == pytest.approx(3.0**6)


def test_polar_roundtrip(rng):
    pts = rng.normal(size=(100, 3))
    r, s = group.polar_arr(pts)
    rho, zabs = group.from_polar_arr(r, s)
    np.testing.assert_allclose(rho, np.linalg.norm(pts[:, :2], axis=1), rtol=1e-12)
    np.testing.assert_allclose(zabs, np.abs(pts[:, 2]), rtol=1e-12)


def test_parse_and_errors():
    assert GroupPoint.parse("1,2,3") == GroupPoint((1.0,), (2.0,), 3.0)
    with pytest.raises(DomainError):
        GroupPoint.parse("1,a,3")
    with pytest.raises(DimensionError):
        GroupPoint.from_array([1.0, 2.0])
    with pytest.raises(DimensionError):
        GroupPoint.identity(1) * GroupPoint.identity(2)
    with pytest.raises(DomainError):
        Dilation(0.0)
    with pytest.raises(DomainError):
        GroupPoint((math.inf,), (0.0,), 0.0)
