"""Fractional Green kernels G_a of (-Delta)^-a and related integrals.

With k_t the kernel of e^{t Delta} (k_t = p_{2t} in terms of the Brownian
heat kernel),

    G_a(q) = 1/Gamma(a) int_0^inf t^(a-1) k_t(q) dt,   0 < a < n+1.

Substituting t = N(q)^2 / (2v) gives the homogeneous form

    G_a(q) = 2^-a / Gamma(a) N^-2(n+1-a) int_0^inf v^(n-a) p_1(v rho^2, v |z|) dv

with (rho, |z|) the horizontal norm and height of delta_{1/N} q. G_a is thus
N^-2(n+1-a) times a profile g(s) of the sphere coordinate s = |z|^(1/2)/N.

The quadrature splits v at v_s = 1/(2 t_split): Gauss-Jacobi with weight
v^(n-a) below it and composite Gauss-Legendre on log panels above, up to the
point where p_1 is below double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy import special

from . import group
from ._numerics import composite, gauss_jacobi, log_panels
from .errors import DomainError, QuadratureError, SingularInputError
from .group import GroupPoint
from .heat_kernel import heat_kernel, kernel_at_identity, unit_kernel

__all__ = [
    "GreenSpec",
    "green_profile",
    "eval_G",
    "GreenTable",
    "green_table",
    "green_array",
    "MollifiedGreen",
    "mollified_green",
    "increment_profile",
    "increment_variance",
    "increment_variance_array",
    "ultracontractivity_ratios",
]

V_MAX = 120.0


@dataclass(frozen=True)
class GreenSpec:
    """Quadrature controls; ``t_split`` is in units of N(q)^2."""

    t_split: float = 0.5
    small_t_nodes: int = 40
    large_t_nodes: int = 16
    rel_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.t_split <= 0 or self.rel_tol <= 0:
            raise DomainError("t_split and rel_tol must be positive")
        if self.small_t_nodes < 4 or self.large_t_nodes < 4:
            raise DomainError("node counts must be at least 4")


def _check_alpha(a: float, n: int, lo: float = 0.0, hi: float | None = None) -> None:
    hi = n + 1 if hi is None else hi
    if not (lo < a < hi):
        raise DomainError(f"order {a} outside ({lo}, {hi})")


def _v_rule(beta: float, spec: GreenSpec, v_max: float = V_MAX) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(jacobi nodes, jacobi weights incl. v^beta, panel nodes, panel weights)."""
    v_s = 1.0 / (2.0 * spec.t_split)
    vj, wj = gauss_jacobi(spec.small_t_nodes, beta, v_s)
    vp, wp = composite(log_panels(v_s, v_max, per_octave=3), spec.large_t_nodes)
    return vj, wj, vp, wp


def green_profile(a: float, s: np.ndarray, n: int = 1, spec: GreenSpec = GreenSpec()) -> np.ndarray:
    """g(s) = N^2(n+1-a) G_a on the unit gauge sphere (vectorised over s)."""
    _check_alpha(a, n)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    vj, wj, vp, wp = _v_rule(n - a, spec)
    rho2 = ((1.0 - s) ** 2)[:, None]
    zz = (s**2)[:, None]
    low = unit_kernel(vj[None, :] * rho2, vj[None, :] * zz, n) @ wj
    high = (unit_kernel(vp[None, :] * rho2, vp[None, :] * zz, n) * vp ** (n - a)) @ wp
    return 2.0**-a / special.gamma(a) * (low + high)


def eval_G(alpha: float, q: GroupPoint, spec: GreenSpec = GreenSpec()) -> float:
    """G_alpha(e, q) by direct quadrature, checked against a refined rule."""
    n = q.n
    _check_alpha(alpha, n)
    r, s = group.polar_arr(q.as_array())
    r = float(r)
    if r == 0.0:
        raise SingularInputError("G_alpha is singular at the identity")
    fine_spec = GreenSpec(spec.t_split, 2 * spec.small_t_nodes, 2 * spec.large_t_nodes, spec.rel_tol)
    g = float(green_profile(alpha, s, n, spec)[0])
    g2 = float(green_profile(alpha, s, n, fine_spec)[0])
    scale = r ** (-2.0 * (n + 1 - alpha))
    if abs(g - g2) > spec.rel_tol * abs(g2):
        raise QuadratureError("Green kernel quadrature not converged", g2 * scale, abs(g - g2) * scale)
    return g2 * scale


class GreenTable:
    """Chebyshev interpolant of the profile g(s) on [0, 1]."""

    def __init__(self, alpha: float, n: int = 1, degree: int = 48, spec: GreenSpec = GreenSpec()):
        _check_alpha(alpha, n)
        self.alpha = alpha
        self.n = n
        self.coef = cheb.chebinterpolate(
            lambda x: green_profile(alpha, 0.5 * (x + 1.0), n, spec), degree
        )

    def profile(self, s: np.ndarray) -> np.ndarray:
        return cheb.chebval(2.0 * np.asarray(s) - 1.0, self.coef)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        """G_alpha(e, q) at an array of points; +inf at the identity."""
        r, s = group.polar_arr(pts)
        with np.errstate(divide="ignore"):
            return r ** (-2.0 * (self.n + 1 - self.alpha)) * self.profile(s)


@lru_cache(maxsize=16)
def green_table(alpha: float, n: int = 1) -> GreenTable:
    return GreenTable(float(alpha), n)


def green_array(alpha: float, pts: np.ndarray) -> np.ndarray:
    """Vectorised G_alpha(e, q) through the cached profile table."""
    return green_table(float(alpha), group.dim_of(pts))(pts)


# --- heat-mollified kernel ---------------------------------------------------


def _mollified_unit(a: float, rho2: np.ndarray, zz: np.ndarray, n: int, s_max: float = 1e6) -> np.ndarray:
    """S^1_a(q) = 1/Gamma(a) int_0^inf s^(a-1) k_{1+s}(q) ds for rho^2, |z| arrays."""
    sj, wj = gauss_jacobi(24, a - 1.0, 1.0)
    sp, wp = composite(log_panels(1.0, s_max, per_octave=2), 16)
    nodes = np.concatenate([sj, sp])
    weights = np.concatenate([wj, wp * sp ** (a - 1.0)])
    u = 2.0 * (1.0 + nodes)  # Brownian time of k_{1+s}
    vals = unit_kernel(rho2[:, None] / u, zz[:, None] / u, n) / u ** (n + 1)
    body = vals @ weights
    # beyond s_max the kernel is p_1(e) u^-(n+1) to relative order N^2 / s_max
    tail = kernel_at_identity(n) * 2.0 ** -(n + 1) * s_max ** (a - n - 1) / (n + 1 - a)
    return (body + tail) / special.gamma(a)


class MollifiedGreen:
    """Heat-smoothed Green kernel S^eps_a = G_a * k_eps, bounded near e.

    S^eps_a(q) = 1/Gamma(a) int_0^inf s^(a-1) k_{eps+s}(q) ds. It equals
    eps^-(n+1-a) S^1_a(delta_{eps^-1/2} q); S^1_a is tabulated on
    (w, s) in [0,1]^2 with r^2 = w/(1-w), after multiplying by
    (1+r^2)^((n+1-a)) so the table tends to the profile g(s) as w -> 1.
    """

    def __init__(self, alpha: float, n: int = 1, degree: tuple[int, int] = (40, 28)):
        _check_alpha(alpha, n)
        self.alpha = alpha
        self.n = n
        self.beta = n + 1 - alpha
        dw, ds = degree
        xw = np.cos(np.pi * (np.arange(dw + 1) + 0.5) / (dw + 1))
        xs = np.cos(np.pi * (np.arange(ds + 1) + 0.5) / (ds + 1))
        w = 0.5 * (xw + 1.0)
        s = 0.5 * (xs + 1.0)
        W, S = np.meshgrid(w, s, indexing="ij")
        r2 = W / (1.0 - W)
        rho2 = r2 * (1.0 - S) ** 2
        zz = r2 * S**2
        vals = _mollified_unit(alpha, rho2.ravel(), zz.ravel(), n).reshape(W.shape)
        vals *= (1.0 + r2) ** self.beta
        vw = cheb.chebvander(xw, dw)
        vs = cheb.chebvander(xs, ds)
        self.coef = np.linalg.solve(vw, np.linalg.solve(vs, vals.T).T)

    def unit(self, r: np.ndarray, s: np.ndarray) -> np.ndarray:
        r2 = np.asarray(r, dtype=float) ** 2
        xw = 2.0 * r2 / (1.0 + r2) - 1.0
        xs = 2.0 * np.asarray(s, dtype=float) - 1.0
        shape = np.shape(xw)
        xw, xs = np.ravel(xw), np.ravel(xs)
        dw, ds = self.coef.shape[0] - 1, self.coef.shape[1] - 1
        out = np.empty(xw.size)
        # Vandermonde products go through BLAS; chebval2d is memory bound here
        for lo in range(0, xw.size, 65_536):
            sl = slice(lo, lo + 65_536)
            out[sl] = np.einsum("pj,pj->p", cheb.chebvander(xw[sl], dw) @ self.coef, cheb.chebvander(xs[sl], ds))
        return out.reshape(shape) * (1.0 + r2) ** -self.beta

    def __call__(self, eps: float, pts: np.ndarray) -> np.ndarray:
        """S^eps_alpha(e, q) at an array of points."""
        if eps <= 0:
            raise DomainError("mollification scale must be positive")
        r, s = group.polar_arr(pts)
        return eps ** -self.beta * self.unit(r / math.sqrt(eps), s)


@lru_cache(maxsize=8)
def mollified_green(alpha: float, n: int = 1) -> MollifiedGreen:
    return MollifiedGreen(float(alpha), n)


# --- increment variance --------------------------------------------------------


def increment_profile(alpha: float, s: np.ndarray, n: int = 1, spec: GreenSpec = GreenSpec()) -> np.ndarray:
    """V on the unit gauge sphere, V(q) = N^(4 alpha - 2(n+1)) * profile(s)."""
    _check_alpha(alpha, n, lo=(n + 1) / 2, hi=(n + 2) / 2)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    c0 = kernel_at_identity(n)
    beta = n - 2 * alpha  # exponent of v in the Mellin integrand
    v_max = 400.0
    vj, wj, vp, wp = _v_rule(beta + 1.0, spec, v_max)
    rho2 = ((1.0 - s) ** 2)[:, None]
    zz = (s**2)[:, None]
    low = ((c0 - unit_kernel(vj * rho2, vj * zz, n)) / vj) @ wj
    high = ((c0 - unit_kernel(vp * rho2, vp * zz, n)) * vp**beta) @ wp
    tail = c0 * v_max ** (beta + 1.0) / (2 * alpha - n - 1)
    return 2.0 / special.gamma(2 * alpha) * 2.0 ** (-2 * alpha) * (low + high + tail)


@lru_cache(maxsize=16)
def _increment_table(alpha: float, n: int, degree: int = 40) -> np.ndarray:
    return cheb.chebinterpolate(lambda x: increment_profile(alpha, 0.5 * (x + 1.0), n), degree)


def increment_variance_array(alpha: float, h: np.ndarray) -> np.ndarray:
    """int (G_alpha(e, q) - G_alpha(h, q))^2 dmu(q) for an array of points h."""
    n = group.dim_of(h)
    coef = _increment_table(float(alpha), n)
    r, s = group.polar_arr(h)
    return r ** (4 * alpha - 2 * (n + 1)) * cheb.chebval(2.0 * s - 1.0, coef)


def increment_variance(alpha: float, x: GroupPoint, y: GroupPoint) -> float:
    """Squared L^2 distance of G_alpha(x, .) and G_alpha(y, .).

    By the semigroup property this equals
    2/Gamma(2 alpha) int_0^inf t^(2 alpha - 1) (k_t(e) - k_t(x^-1 y)) dt,
    a function of x^-1 y evaluated by the same homogeneous Mellin quadrature
    as the Green kernel.
    """
    if x.n != y.n:
        raise DomainError("points live in different dimensions")
    _check_alpha(alpha, x.n, lo=(x.n + 1) / 2, hi=(x.n + 2) / 2)
    h = group.mul_arr(group.inv_arr(x.as_array()), y.as_array())
    r, s = group.polar_arr(h)
    if float(r) == 0.0:
        return 0.0
    return float(r ** (4 * alpha - 2 * (x.n + 1)) * increment_profile(alpha, s, x.n)[0])


# --- ultracontractivity ----------------------------------------------------------


def ultracontractivity_ratios(
    t_values: tuple[float, ...] = (0.25, 1.0, 4.0), width: float = 0.5, probe: int = 5
) -> np.ndarray:
    """sup_x |e^{t Delta} f(x)| t^((n+1)/2) / ||f||_2 for a Gaussian bump f on H^1.

    f(q) = exp(-N(q)^2 / width^2); the semigroup is applied by quadrature
    of int f(q) k_t(q^-1 x) dq and the supremum is taken over a probe grid
    of points x near the bump. Returns one ratio per t.
    """
    from ._numerics import gauss_legendre

    k = 24
    u, w = gauss_legendre(k)
    ext_h, ext_z = 4.0 * width, (4.0 * width) ** 2
    hs = (2 * u - 1) * ext_h
    zs = (2 * u - 1) * ext_z
    X, Y, Z = np.meshgrid(hs, hs, zs, indexing="ij")
    q = np.stack([X, Y, Z], axis=-1).reshape(-1, 3)
    wq = np.einsum("i,j,k->ijk", w * 2 * ext_h, w * 2 * ext_h, w * 2 * ext_z).ravel()
    f = np.exp(-group.gauge_arr(q) ** 2 / width**2)
    norm = math.sqrt(float(np.sum(wq * f**2)))
    grid = np.linspace(-width, width, probe)
    probes = np.array([[a, b, c * width] for a in grid for b in grid for c in grid])
    out = []
    for t in t_values:
        vals = []
        for x in probes:
            rel = group.mul_arr(group.inv_arr(q), x[None, :])
            vals.append(abs(float(np.sum(wq * f * heat_kernel(2.0 * t, rel)))))
        out.append(max(vals) * t**1.0 / norm)
    return np.array(out)
