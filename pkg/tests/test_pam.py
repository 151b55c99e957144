from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from heisenberg_pam import pam
from heisenberg_pam.errors import DomainError
from heisenberg_pam.pam import BoxLattice, ChaosParams

SMALL_BOX = BoxLattice(1.0, 1.5, 7, 7)


@pytest.mark.parametrize("alpha, expo", [(0.45, -0.2), (0.5, 0.0), (0.55, 0.2)])
def test_dalang_threshold(alpha, expo):
    res = pam.dalang_criterion(alpha)
    assert res.fitted_exponent == pytest.approx(expo, abs=1e-6)
    assert res.finite == (alpha > 0.5)
    assert res.quadrature_finite == (alpha > 0.5)


def test_dalang_value():
    res = pam.dalang_criterion(0.75)
    assert res.integral_value == pytest.approx(1.0)
    assert np.all(np.diff(res.quadrature_values) > 0)


def test_chaos_constants():
    c = pam.chaos_constants(ChaosParams())
    assert c.C0 == pytest.approx(1 / math.pi**2)
    assert c.D_plus == pytest.approx(4.0) and c.D_minus == pytest.approx(4.0)
    # sum over odd u of u^-1.5 is (1 - 2^-1.5) zeta(1.5)
    assert c.C1 == pytest.approx((1 - 2**-1.5) * special.zeta(1.5), rel=1e-9)
    assert c.C2 == pytest.approx((1 - 2**-2.5) * special.zeta(2.5) / 8, rel=1e-9)


def test_chaos_bound_properties():
    b1, _ = pam.chaos_series_bound(ChaosParams(t=1.0))
    b2, _ = pam.chaos_series_bound(ChaosParams(t=2.0))
    b_tail, _ = pam.chaos_series_bound(ChaosParams(t=1.0, m_tail=8000))
    assert math.isfinite(b1) and b1 > 1
    assert b2 > b1
    assert b_tail == pytest.approx(b1, rel=1e-6)
    partial = sum(pam.chaos_constants(ChaosParams()).C0 ** k * pam.m_nk(1, 0.75, 1.0, k) for k in range(4))
    assert partial <= b1


def test_chaos_bound_rejects_function_regime():
    with pytest.raises(DomainError):
        pam.chaos_series_bound(ChaosParams(alpha=1.2))
    with pytest.raises(DomainError):
        ChaosParams(N=0.0)


@pytest.mark.parametrize("k", [1, 2])
def test_m_nk_closed_form_matches_quadrature(k):
    assert pam.m_nk(1, 0.75, 1.0, k) == pytest.approx(pam.m_nk_quadrature(1, 0.75, 1.0, k), rel=1e-4)


def test_m_nk_time_scaling():
    gam = 1 + 1 - 1.5
    assert pam.m_nk(1, 0.75, 2.0, 2) / pam.m_nk(1, 0.75, 1.0, 2) == pytest.approx(2 ** (2 * (1 - gam)))
    assert pam.m_nk(1, 0.75, 1.0, 0) == 1.0


def test_necessity_converged_value():
    rep = pam.necessity_probe(1, 0.75)
    assert rep.converged and rep.divergent_side is None
    assert rep.value == pytest.approx(pam.m_n1_closed_form(1, 0.75), rel=1e-10)
    assert rep.value == pytest.approx(pam.m_nk(1, 0.75, 1.0, 1), rel=1e-10)


@pytest.mark.parametrize("alpha, side, sign", [(0.4, "large_lambda", 1), (1.1, "small_lambda", -1)])
def test_necessity_divergence(alpha, side, sign):
    rep = pam.necessity_probe(1, alpha)
    assert not rep.converged
    assert rep.divergent_side == side
    assert np.sign(rep.fitted_exponent) == sign
    assert np.all(np.diff(rep.cumulative) > 0)


def test_first_chaos_routes_small():
    a = pam.first_chaos_variance_direct(0.75, 0.5, radial=24, sphere=16, times=12)
    b = pam.first_chaos_variance_spectral(1, 0.75, 0.5)
    assert a == pytest.approx(b, rel=1e-2)


def test_laplace_rho():
    assert pam.laplace_rho(1.25) == pytest.approx(3.0)


def test_fk_zero_time_limit_and_determinism():
    a = pam.fk_second_moment(0.75, 0.01, 500, 8, 0.1, seed=3)
    b = pam.fk_second_moment(0.75, 0.01, 500, 8, 0.1, seed=3)
    assert a.value == b.value
    assert a.value == pytest.approx(1.0, abs=0.005)
    assert a.clip_report["eps_half_value"] >= a.value


def test_fk_monotone_in_time():
    vals = [pam.fk_second_moment(0.75, t, 1000, 16, 0.1, seed=5).value for t in (0.25, 0.5, 1.0)]
    assert vals[0] < vals[1] < vals[2]


def test_fk_translation_invariance():
    a = pam.fk_second_moment(0.75, 0.5, 500, 16, 0.1, seed=2)
    b = pam.fk_second_moment(0.75, 0.5, 500, 16, 0.1, seed=2, start=np.array([0.6, -1.1, 2.0]))
    assert b.value == pytest.approx(a.value, rel=1e-9)


def test_fk_zero_coupling():
    est = pam.fk_second_moment(0.75, 1.0, 200, 8, 0.1, seed=1, c=0.0)
    assert est.value == pytest.approx(1.0) and est.std_err == pytest.approx(0.0, abs=1e-12)


def test_fk_input_checks():
    with pytest.raises(DomainError):
        pam.fk_second_moment(1.2, 1.0, 200, 8, 0.1, seed=1)
    with pytest.raises(DomainError):
        pam.fk_second_moment(0.75, 1.0, 10, 8, 0.1, seed=1)
    with pytest.raises(DomainError):
        pam.fk_second_moment(0.75, 1.0, 200, 8, -0.1, seed=1)


def test_smooth_regime_basics():
    est, rho = pam.smooth_regime_moment(1.25, 0.0, 1.0, 500, 32, seed=1)
    assert est.value == 1.0 and rho == 3.0
    e1, _ = pam.smooth_regime_moment(1.25, 0.1, 0.5, 2000, 64, seed=1)
    e2, _ = pam.smooth_regime_moment(1.25, 0.1, 1.0, 2000, 64, seed=1)
    assert 1.0 < e1.value < e2.value
    with pytest.raises(DomainError):
        pam.smooth_regime_moment(0.75, 0.1, 1.0, 500, 32, seed=1)


def test_mild_solver_without_noise_is_constant():
    res = pam.mild_solver_mollified(0.75, 0.2, SMALL_BOX, 4, seed=0, realizations=10, c=0.0)
    np.testing.assert_allclose(res.u_center, 1.0, rtol=1e-12)
    assert res.exact_second_moment == pytest.approx(1.0, rel=1e-12)


def test_mild_solver_moments_consistent():
    res = pam.mild_solver_mollified(0.75, 0.2, SMALL_BOX, 4, seed=1, realizations=2000)
    assert abs(res.mean.value - 1.0) < 3 * res.mean.std_err + 1e-12
    assert abs(res.second_moment.value - res.exact_second_moment) < 3 * res.second_moment.std_err
    assert res.exact_second_moment > 1.0
    assert res.lattice["nh"] == 7 and res.lattice["time_steps"] == 4


def test_mild_solver_input_checks():
    with pytest.raises(DomainError):
        pam.mild_solver_mollified(1.2, 0.2, SMALL_BOX, 4, seed=0)
    with pytest.raises(DomainError):
        pam.mild_solver_mollified(0.75, 0.2, SMALL_BOX, 0, seed=0)
