"""End-to-end acceptance criteria, each reported as one PASS/FAIL line.

Brownian paths use at least 256 steps per unit run (dt <= t / 256).
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy import stats

from heisenberg_pam import brownian, group, noise, pam
from heisenberg_pam.green import green_array
from heisenberg_pam.group import GroupPoint
from heisenberg_pam.heat_kernel import eval_pt, heat_kernel
from heisenberg_pam.pam import BoxLattice, ChaosParams
from heisenberg_pam.spectral import SemigroupConvention, heat_plancherel_sum

pytestmark = pytest.mark.slow

STEPS = 256


def test_criterion_01_identity_closed_form(criterion):
    t0 = time.perf_counter()
    errs = [abs(eval_pt(t, GroupPoint.identity(1)).value * 16 * t * t - 1) for t in (0.5, 1.0, 2.0)]
    elapsed = time.perf_counter() - t0
    criterion(1, "p_t(e) = 1/(16 t^2)", max(errs) < 1e-6 and elapsed < 1.0, f"max rel err {max(errs):.1e}, {elapsed:.3f} s")


def test_criterion_02_plancherel_sum(criterion):
    errs = [abs(heat_plancherel_sum(t, SemigroupConvention.HALF_DELTA) * 64 * t * t - 1) for t in (0.5, 1.0, 2.0)]
    criterion(2, "Plancherel sum = p_2t(e)", max(errs) < 1e-3, f"max rel err {max(errs):.1e}")


def test_criterion_03_kernel_invariances(criterion):
    qs = np.array([[0.3, -0.2, 0.4], [1.0, 0.5, -1.5], [-0.7, 1.2, 2.5]])
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        base = heat_kernel(t, qs)
        for lam in (0.5, 1.5, 3.0):
            dil = lam**4 * heat_kernel(lam * lam * t, group.dil_arr(lam, qs))
            worst = max(worst, float(np.max(np.abs(dil / base - 1))))
        for theta in (0.3, 1.2, 2.5):
            rot = heat_kernel(t, group.rot_arr(theta, qs))
            worst = max(worst, float(np.max(np.abs(rot / base - 1))))
    criterion(3, "heat kernel dilation/rotation", worst < 1e-6, f"max rel dev {worst:.1e}")


def test_criterion_04_levy_area_variance(criterion):
    t0 = time.perf_counter()
    details, ok = [], True
    for n in (1, 2):
        for t in (1.0, 4.0):
            area = brownian.sample_endpoints(n, t, 1024, 100_000, seed=40 + n)[:, -1]
            sq = area**2
            expected = 4 * n * t * t
            se = sq.std(ddof=1) / math.sqrt(sq.size)
            z = (sq.mean() - expected) / se
            ok &= abs(z) < 3
            details.append(f"n={n},t={t:g}: z={z:+.2f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    criterion(4, "Var(A_t) = 4 n t^2", ok, "; ".join(details) + f"; {elapsed:.1f} s")


def test_criterion_05_bm_scaling(criterion):
    reps = {t: brownian.scaling_diagnostic(t, 10_000, STEPS * max(1, int(t)), seed=5) for t in (0.25, 4.0)}
    ok = all(r.p_value > 0.01 for r in reps.values())
    criterion(5, "N(B_t) ~ sqrt(t) N(B_1)", ok, ", ".join(f"t={t:g}: p={r.p_value:.3f}" for t, r in reps.items()))


def test_criterion_06_green_scaling_and_bounds(criterion):
    rng = np.random.default_rng(6)
    u = rng.normal(size=(100, 3))
    u /= group.gauge_arr(u)[:, None]
    pts = group.dil_arr(np.exp(rng.uniform(math.log(0.1), math.log(10.0), 100)), u)
    ok, details = True, []
    for alpha in (0.75, 1.5):
        base = green_array(alpha, pts)
        dev = 0.0
        for lam in (0.3, 2.0, 7.0):
            scaled = lam ** (2 * (2 - alpha)) * green_array(alpha, group.dil_arr(lam, pts))
            dev = max(dev, float(np.max(np.abs(scaled / base - 1))))
        ratio = base * group.gauge_arr(pts) ** (2 * (2 - alpha))
        spread = ratio.max() / ratio.min()
        ok &= dev < 1e-4 and ratio.min() > 0 and spread < 20
        details.append(f"alpha={alpha}: scaling dev {dev:.1e}, spread {spread:.2f}")
    criterion(6, "Green scaling and two-sided bound", ok, "; ".join(details))


def test_criterion_07_covariance_dual_oracle(criterion, frozen_pair):
    phi, psi = frozen_pair
    quad = noise.covariance_quadrature(0.75, phi, psi)
    spec = noise.covariance_spectral(0.75, phi, psi)
    agree = abs(spec.value / quad - 1)
    lam = 2.0
    scaled = noise.covariance_quadrature(0.75, phi.dilate(lam), psi.dilate(lam))
    dil = abs(scaled / (lam ** (-2 * (1 + 1 + 1.5)) * quad) - 1)
    criterion(
        7, "covariance quadrature vs spectral", agree < 1e-2 and dil < 1e-3,
        f"quad {quad:.6e}, spectral {spec.value:.6e} (rel {agree:.1e}), dilation dev {dil:.1e}",
    )


def test_criterion_08_holder_slope(criterion):
    rep = noise.holder_slope(1.25, 1.0, 1000, seed=8)
    criterion(8, "Hoelder slope at alpha=1.25", abs(rep.slope - 1.0) <= 0.15, f"slope {rep.slope:.4f} +- {rep.slope_stderr:.4f}")


def test_criterion_09_chaos_regime(criterion):
    bound, split = pam.chaos_series_bound(ChaosParams(n=1, alpha=0.75))
    low = pam.necessity_probe(1, 0.4)
    high = pam.necessity_probe(1, 1.1)
    ok = (
        math.isfinite(bound)
        and not low.converged and low.fitted_exponent > 0
        and not high.converged and high.fitted_exponent < 0
    )
    criterion(
        9, "chaos bound and necessity", ok,
        f"bound {bound:.4f} (N={split:g}); alpha=0.4 {low.divergent_side} {low.fitted_exponent:+.3f}; "
        f"alpha=1.1 {high.divergent_side} {high.fitted_exponent:+.3f}",
    )


def test_criterion_10_first_chaos(criterion):
    direct = pam.first_chaos_variance_direct(0.75, 1.0)
    spectral = pam.first_chaos_variance_spectral(1, 0.75, 1.0)
    rel = abs(direct / spectral - 1)
    criterion(10, "order-1 chaos direct vs spectral", rel < 1e-2, f"{direct:.8f} vs {spectral:.8f} (rel {rel:.1e})")


T_GRID = (0.25, 0.5, 1.0, 2.0)


def _fk_sweep(steps_per_unit: int) -> tuple[np.ndarray, float]:
    t0 = time.perf_counter()
    logs = []
    for t in T_GRID:
        est = pam.fk_second_moment(0.75, t, 10_000, max(steps_per_unit, int(steps_per_unit * t)), 0.1, seed=11)
        logs.append(math.log(est.value))
    return np.array(logs), time.perf_counter() - t0


def test_criterion_11_exponential_growth(criterion):
    pam.fk_second_moment(0.75, 0.1, 100, 4, 0.1, seed=0)  # build the kernel table outside the timed sweep
    logs, elapsed = _fk_sweep(STEPS)
    fine, _ = _fk_sweep(2 * STEPS)
    fit = stats.linregress(T_GRID, logs)
    fit_fine = stats.linregress(T_GRID, fine)
    slope_change = abs(fit_fine.slope / fit.slope - 1)
    ok = (
        bool(np.all(np.diff(logs) > 0))
        and fit.slope > 0
        and fit.rvalue**2 > 0.9
        and slope_change < 0.2
        and elapsed < 300
    )
    criterion(
        11, "log E[u^2] affine in t", ok,
        f"logs {np.round(logs, 4).tolist()}, slope {fit.slope:.4f}, R^2 {fit.rvalue**2:.3f}, "
        f"slope change on doubling {slope_change:.1%}, sweep {elapsed:.0f} s",
    )


def test_criterion_12_mild_vs_feynman_kac(criterion):
    mild = pam.mild_solver_mollified(0.75, 0.5, BoxLattice(), 10, seed=12, realizations=2000, mollify_eps=0.1)
    fk = pam.fk_second_moment(0.75, 0.5, 10_000, STEPS, 0.1, seed=12)
    rel = abs(mild.second_moment.value / fk.value - 1)
    criterion(
        12, "mild solver vs Feynman-Kac at t=0.5", rel < 0.15,
        f"mild {mild.second_moment.value:.4f} +- {mild.second_moment.std_err:.4f} "
        f"(exact scheme {mild.exact_second_moment:.4f}), FK {fk.value:.4f} +- {fk.std_err:.4f}, rel {rel:.1%}",
    )


def test_criterion_13_smooth_regime(criterion):
    ok, details = True, []
    for t in (0.25, 0.5, 1.0):
        est, rho = pam.smooth_regime_moment(1.25, 0.1, t, 10_000, STEPS, seed=13)
        ratio = est.std_err / est.value
        ok &= math.isfinite(est.value) and ratio < 0.5 and rho == 3.0
        details.append(f"t={t:g}: {est.value:.4f} (SE/value {ratio:.1e})")
    criterion(13, "smooth regime finite, rho = 3", ok, "; ".join(details) + f"; rho {rho}")


def test_criterion_14_small_ball_rate(criterion):
    # P depends on t / eps^2 only; this grid keeps P above ~1e-3 so 1e5 pairs resolve it
    ts = np.array([0.25, 0.5, 0.75, 1.0])
    probs = [brownian.small_ball_probability(2.0, t, 100_000, STEPS, seed=14) for t in ts]
    ok = all(p.value > 0 for p in probs)
    neg_log = np.array([-math.log(p.value) if p.value > 0 else math.inf for p in probs])
    r2 = stats.linregress(ts, neg_log).rvalue ** 2 if ok else 0.0
    criterion(
        14, "small-ball -log P linear in t", ok and r2 > 0.9,
        f"eps=2, t={ts.tolist()}: -log P {np.round(neg_log, 3).tolist()}, R^2 {r2:.3f}",
    )
