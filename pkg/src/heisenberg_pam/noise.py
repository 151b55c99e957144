"""The fractional noise W_alpha: covariances, sampling and regularity.

Distributional regime (0 < alpha < (n+1)/2)
    W_alpha is indexed by test functions phi(t, q) = chi(t) psi(q) with chi
    the indicator of a time window and psi a (possibly z-modulated) Gaussian
    bump. Cov(W(phi), W(psi)) = int chi_phi chi_psi dt *
    int int G_{2 alpha}(q1^-1 q2) psi_phi(q1) psi_psi(q2). Two independent
    evaluations are provided: a direct quadrature and a Plancherel sum.

Function regime ((n+1)/2 < alpha < (n+2)/2)
    W_alpha(t, x) = W(1_[0,t] (G_alpha(x, .) - G_alpha(e, .))) is a Gaussian
    field with Var(W(t, x) - W(t, y)) = t V(x^-1 y), V from
    :func:`heisenberg_pam.green.increment_variance`.

The quadrature and spectral routines are implemented on H^1.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats

from . import group
from ._numerics import composite, gauss_jacobi, substream
from .errors import DimensionError, DomainError, NonPSDError
from .green import green_array, green_table, increment_variance_array
from .group import GroupPoint
from .spectral import SpectralTruncation, hermite_functions, plancherel_constant

__all__ = [
    "TestFunction",
    "CovarianceNodes",
    "covariance_quadrature",
    "covariance_spectral",
    "SpectralCovariance",
    "default_truncation",
    "sample_distributional",
    "PolarLattice",
    "FieldRealization",
    "sample_pointwise",
    "lattice_variance",
    "HolderReport",
    "holder_slope",
    "hurst_parameter",
    "pointwise_invariance_suite",
]


@dataclass(frozen=True)
class TestFunction:
    """phi(t, q) = 1_[t0, t1](t) * A exp(-|h(v)|^2/w^2 - z(v)^2/w^4) cos(kappa z(v)).

    Here v = center^-1 q, so the bump is the left translate of a bump at e.
    ``frequency`` (kappa) modulates the bump in the vertical direction; a
    nonzero kappa moves the spectral mass away from lambda = 0.
    """

    __test__ = False  # keep pytest from collecting the class

    center: GroupPoint
    width: float
    amplitude: float = 1.0
    frequency: float = 0.0
    time_support: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise DomainError("width must be positive")
        t0, t1 = self.time_support
        if not (math.isfinite(t0) and math.isfinite(t1) and t1 > t0 >= 0):
            raise DomainError("time support must be a bounded interval in [0, inf)")

    @property
    def n(self) -> int:
        return self.center.n

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        v = group.mul_arr(group.inv_arr(self.center.as_array()), pts)
        h2 = np.sum(v[..., :-1] ** 2, axis=-1)
        z = v[..., -1]
        w = self.width
        return self.amplitude * np.exp(-h2 / w**2 - (z / w**2) ** 2) * np.cos(self.frequency * z)

    def time_overlap(self, other: "TestFunction") -> float:
        lo = max(self.time_support[0], other.time_support[0])
        hi = min(self.time_support[1], other.time_support[1])
        return max(0.0, hi - lo)

    def scaled(self, a: float) -> "TestFunction":
        return replace(self, amplitude=a * self.amplitude)

    def dilate(self, lam: float) -> "TestFunction":
        """The bump q -> psi(delta_lam q)."""
        c = group.dilate(1.0 / lam, self.center)
        return replace(self, center=c, width=self.width / lam, frequency=self.frequency * lam**2)

    def translate(self, g: GroupPoint) -> "TestFunction":
        """The bump q -> psi(g q)."""
        return replace(self, center=group.inverse(g) * self.center)

    def rotate(self, theta: float) -> "TestFunction":
        """The bump q -> psi(R_theta q)."""
        return replace(self, center=group.rotate(-theta, self.center))


def _require_h1(*fs: TestFunction) -> None:
    for f in fs:
        if f.n != 1:
            raise DimensionError("covariance routines are implemented on H^1")


# --- quadrature route ---------------------------------------------------------


@dataclass(frozen=True)
class CovarianceNodes:
    """Outer quadrature: radial panels, sphere panels, angles, nodes per panel."""

    radial_panels: int = 24
    sphere_panels: int = 12
    angle: int = 64
    per_panel: int = 8
    r_max: float | None = None


def _vertical_overlap(a1, a2, f: TestFunction, g: TestFunction):
    """int Z_f(z + a1) Z_g(z + a2) dz for the modulated Gaussian profiles."""
    p1 = f.width**-4
    p2 = g.width**-4
    P = p1 + p2
    z0 = -(p1 * a1 + p2 * a2) / P
    base = math.sqrt(math.pi / P) * np.exp(-(p1 * p2 / P) * (a1 - a2) ** 2)
    k1, k2 = f.frequency, g.frequency
    out = 0.0
    for k, ph in ((k1 + k2, k1 * a1 + k2 * a2), (k1 - k2, k1 * a1 - k2 * a2)):
        out = out + math.exp(-(k**2) / (4 * P)) * np.cos(k * z0 + ph)
    return 0.5 * base * out


def _cross_correlation(f: TestFunction, g: TestFunction, w: np.ndarray, k: int) -> np.ndarray:
    """C(w) = int f(q) g(q w) dq for an array of points w (H^1)."""
    eta, gw = np.polynomial.hermite.hermgauss(k)
    c1 = f.center.as_array()
    c2 = g.center.as_array()
    W1 = f.width
    X, Y = np.meshgrid(c1[0] + W1 * eta, c1[1] + W1 * eta, indexing="ij")
    X = X.ravel()[None, :]
    Y = Y.ravel()[None, :]
    wts = (np.outer(gw, gw).ravel() * W1**2)[None, :]
    a1 = -c1[2] + 2.0 * (c1[0] * Y - X * c1[1])
    out = np.empty(w.shape[0])
    step = max(1, 400_000 // X.size)
    for i in range(0, w.shape[0], step):
        wx = w[i : i + step, 0:1]
        wy = w[i : i + step, 1:2]
        wz = w[i : i + step, 2:3]
        hx = X + wx - c2[0]
        hy = Y + wy - c2[1]
        a2 = wz + 2.0 * (wx * Y - X * wy) - c2[2] + 2.0 * (c2[0] * (Y + wy) - (X + wx) * c2[1])
        horiz = np.exp(-(hx**2 + hy**2) / g.width**2)
        vals = horiz * _vertical_overlap(a1, a2, f, g)
        out[i : i + step] = np.sum(vals * wts, axis=1)
    return f.amplitude * g.amplitude * out


def _cross_correlation_exact(f: TestFunction, g: TestFunction, w: np.ndarray) -> np.ndarray:
    """Closed form of C(w) = int f(q) g(q w) dq on H^1.

    After the z-integral every exponent is a quadratic polynomial in the
    horizontal variable h = (x, y) of q; with a1 = e1 + d1.h and
    a2 = e2 + d2.h the heights entering the two bumps, the integrand is
    exp(-h^T M h + b.h + c) with M = (1/w1^2 + 1/w2^2) I + beta d d^T,
    d = d1 - d2, which integrates to pi / sqrt(det M) exp(b^T M^-1 b / 4 + c).
    """
    c1 = f.center.as_array()
    c2 = g.center.as_array()
    p1, p2 = f.width**-4, g.width**-4
    P = p1 + p2
    beta = p1 * p2 / P
    wx, wy, wz = w[:, 0], w[:, 1], w[:, 2]
    d1 = np.array([-2.0 * c1[1], 2.0 * c1[0]])[None, :]
    e1 = -c1[2]
    d2 = np.stack([-2.0 * (wy + c2[1]), 2.0 * (wx + c2[0])], axis=1)
    e2 = wz - c2[2] + 2.0 * (c2[0] * wy - wx * c2[1])
    d = d1 - d2
    e = e1 - e2
    a = f.width**-2 + g.width**-2
    dd = np.sum(d * d, axis=1)
    det = a * (a + beta * dd)
    hw = w[:, :2]
    c1h = c1[None, :2]
    c2h = c2[None, :2]
    real_b = 2.0 * c1h / f.width**2 + 2.0 * (c2h - hw) / g.width**2 - 2.0 * beta * e[:, None] * d
    real_c = -np.sum(c1h**2) / f.width**2 - np.sum((c2h - hw) ** 2, axis=1) / g.width**2 - beta * e**2
    k1, k2 = f.frequency, g.frequency
    out = np.zeros(w.shape[0])
    for sign in (1.0, -1.0):
        k = k1 + sign * k2
        g1 = k1 - k * p1 / P
        g2 = sign * k2 - k * p2 / P
        b = real_b + 1j * (g1 * d1 + g2 * d2)
        c = real_c + 1j * (g1 * e1 + g2 * e2)
        bb = np.sum(b * b, axis=1)
        db = np.sum(d * b, axis=1)
        quad = (bb - beta * db**2 / (a + beta * dd)) / a
        J = math.pi / np.sqrt(det) * np.exp(0.25 * quad + c)
        out += math.sqrt(math.pi / P) * math.exp(-(k**2) / (4 * P)) * np.real(J)
    return 0.5 * f.amplitude * g.amplitude * out


def _default_rmax(f: TestFunction, g: TestFunction) -> float:
    return 2.0 * (group.gauge(f.center) + group.gauge(g.center)) + 7.0 * max(f.width, g.width)


def _polar_rule(alpha: float, nodes: CovarianceNodes, r_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Points w and weights for int F(w) G_{2 alpha}(w) dmu(w) on H^1."""
    k = nodes.per_panel
    edges = np.linspace(0.0, r_max, nodes.radial_panels + 1)
    # first panel carries the weight r^(4 alpha - 1) exactly
    rj, wj = gauss_jacobi(k, 4 * alpha - 1, edges[1])
    rp, wp = composite(edges[1:], k)
    r = np.concatenate([rj, rp])
    wr = np.concatenate([wj, wp * rp ** (4 * alpha - 1)])
    u, wu = composite(np.linspace(0.0, 1.0, nodes.sphere_panels + 1), k)
    theta = 2 * math.pi * np.arange(nodes.angle) / nodes.angle
    wt = np.full(nodes.angle, 2 * math.pi / nodes.angle)
    g = green_table(2 * alpha).profile(u)
    R, S, TH = np.meshgrid(r, u, theta, indexing="ij")
    base = np.stack([R * (1 - S) * np.cos(TH), R * (1 - S) * np.sin(TH), (R * S) ** 2], axis=-1).reshape(-1, 3)
    lower = base * np.array([1.0, 1.0, -1.0])
    weight = np.einsum("i,j,k->ijk", wr, wu * 2 * u * (1 - u) * g, wt).ravel()
    return np.concatenate([base, lower]), np.concatenate([weight, weight])


def covariance_quadrature(
    alpha: float, phi: TestFunction, psi: TestFunction, nodes: CovarianceNodes = CovarianceNodes()
) -> float:
    """Cov(W_alpha(phi), W_alpha(psi)) by direct quadrature.

    Writing q2 = q1 w turns the double integral into
    int G_{2 alpha}(w) C(w) dmu(w) with C the cross-correlation of the two
    bumps, available in closed form. The w-integral uses homogeneous polar
    coordinates around the singularity of G, where
    dmu = 2 r^3 s (1 - s) dr ds dtheta per sign of z and
    G_{2 alpha} = r^(4 alpha - 4) g(s); the radial weight r^(4 alpha - 1) is
    absorbed by Gauss-Jacobi on the first panel.
    """
    _require_h1(phi, psi)
    if not 0 <= alpha < 1:
        raise DomainError("distributional regime on H^1 is 0 <= alpha < 1")
    T = phi.time_overlap(psi)
    if alpha == 0:
        return T * float(_cross_correlation_exact(phi, psi, np.zeros((1, 3)))[0])
    pts, weight = _polar_rule(alpha, nodes, nodes.r_max or _default_rmax(phi, psi))
    total = 0.0
    step = 500_000
    for i in range(0, pts.shape[0], step):
        total += float(np.sum(weight[i : i + step] * _cross_correlation_exact(phi, psi, pts[i : i + step])))
    return T * total


# --- spectral route -------------------------------------------------------------


def _partial_fourier(f: TestFunction, a: np.ndarray, y: np.ndarray, b: float) -> np.ndarray:
    """int int f(x, y, z) e^{-i a x - i b z} dx dz for the bump f on H^1."""
    cx, cy, cz = f.center.as_array()
    w = f.width
    k = f.frequency
    zf = 0.5 * (np.exp(-((b - k) ** 2) * w**4 / 4) + np.exp(-((b + k) ** 2) * w**4 / 4))
    shift = a + 2.0 * b * cy
    return (
        f.amplitude
        * math.pi
        * w**3
        * zf
        * np.exp(-((y - cy) ** 2) / w**2)
        * np.exp(-1j * b * (cz - 2.0 * cx * y))
        * np.exp(-(shift**2) * w**2 / 4)
        * np.exp(-1j * shift * cx)
    )


def _operator_kernel(f: TestFunction, xi: np.ndarray, lam: float) -> np.ndarray:
    """Integral kernel K(xi, xi') of F(f) = int f(q) U_q^lam dq on a grid."""
    A = xi[:, None]
    B = xi[None, :]
    return 0.5 * _partial_fourier(f, lam * (A + B), 0.5 * (A - B), lam)


@dataclass(frozen=True)
class SpectralCovariance:
    value: float
    tail_bound: float
    flags: tuple[str, ...] = ()
    low_lambda_remainder: float = 0.0


def default_truncation(
    phi: TestFunction, psi: TestFunction, m_max: int = 1500, lam_min: float = 0.05
) -> SpectralTruncation:
    """Lambda grid covering the vertical spectral mass of both bumps."""
    top = max(f.frequency + 10.0 / f.width**2 for f in (phi, psi))
    return SpectralTruncation.log_grid(m_max, lam_min, top, n=1, per_decade=24)


def _grid_for(lam: float, fs: Sequence[TestFunction]) -> np.ndarray:
    a = abs(lam)
    ext = max(
        6.0 / (a * f.width) + 2.0 * abs(f.center.y[0]) + 2.0 * abs(f.center.x[0]) + 6.0 * f.width for f in fs
    )
    wmin = min(f.width for f in fs)
    freq = max(a * abs(f.center.x[0]) + 1.0 for f in fs)
    h = min(wmin / 6.0, 1.0 / (6.0 * a * wmin), 0.5 / freq, 0.5 / math.sqrt(a))
    count = int(math.ceil(2 * ext / h)) | 1
    return np.linspace(-ext, ext, count)


def covariance_spectral(
    alpha: float,
    phi: TestFunction,
    psi: TestFunction,
    trunc: SpectralTruncation | None = None,
    rel_tol: float = 1e-3,
) -> SpectralCovariance:
    """Cov(W_alpha(phi), W_alpha(psi)) via Plancherel.

    Cov = C0 T int sum_{m,l} (4|lam|(2l+1))^(-2 alpha) phi^(m,l,lam)
    conj(psi^(m,l,lam)) |lam| dlam. With A = F(phi), B = F(psi) the sum over
    m is <B* Phi_l, A* Phi_l> by Parseval; the operators are discretised
    through their integral kernels on a uniform grid, which is spectrally
    accurate for these Gaussian kernels. The neglected modes l > m_max are
    bounded via Cauchy-Schwarz by w(m_max) times the remaining Hilbert-Schmidt
    mass, reported as ``tail_bound``. The piece of the lambda integral below
    the smallest node is extrapolated from the small-lambda behaviour of the
    density and reported as ``low_lambda_remainder``.
    """
    _require_h1(phi, psi)
    if not 0 <= alpha < 1:
        raise DomainError("distributional regime on H^1 is 0 <= alpha < 1")
    trunc = trunc or default_truncation(phi, psi)
    T = phi.time_overlap(psi)
    total = 0.0
    tail = 0.0
    flags: list[str] = []
    density = []
    for lam, wl in zip(trunc.lambdas, trunc.weights):
        xi = _grid_for(lam, (phi, psi))
        h = xi[1] - xi[0]
        KA = _operator_kernel(phi, xi, lam)
        KB = _operator_kernel(psi, xi, lam)
        a = math.sqrt(abs(lam))
        # Phi_l^lam reaches |xi| = ext once (2l+1) >= |lam| ext^2
        L = min(trunc.m_max, int(0.5 * abs(lam) * xi[-1] ** 2) + 40)
        basis = abs(lam) ** 0.25 * hermite_functions(L, a * xi)  # (L+1, grid)
        # (A* Phi_l)(xi) = int conj(K_A(xi', xi)) Phi_l(xi') dxi'
        As = h * basis @ np.conj(KA)
        Bs = h * basis @ np.conj(KB)
        inner = h * np.real(np.sum(Bs * np.conj(As), axis=1))
        ell = np.arange(L + 1)
        weight = (4.0 * abs(lam) * (2 * ell + 1)) ** (-2.0 * alpha)
        contrib = wl * float(np.sum(weight * inner))
        total += contrib
        density.append(contrib / wl * abs(lam))
        hsA = h * h * float(np.sum(np.abs(KA) ** 2))
        hsB = h * h * float(np.sum(np.abs(KB) ** 2))
        restA = max(hsA - h * float(np.sum(np.abs(As) ** 2)), 0.0)
        restB = max(hsB - h * float(np.sum(np.abs(Bs) ** 2)), 0.0)
        tail += wl * weight[-1] * math.sqrt(restA * restB)
    low = _low_lambda_remainder(trunc.lambdas, np.array(density), alpha)
    c = plancherel_constant(1) * T
    value = c * (total + low)
    if c * tail > rel_tol * abs(value):
        flags.append("truncation_insufficient")
    if abs(c * low) > rel_tol * abs(value):
        flags.append("low_lambda_extrapolated")
    return SpectralCovariance(value, c * tail, tuple(flags), c * low)


def _low_lambda_remainder(lams: np.ndarray, density: np.ndarray, alpha: float, k: int = 10) -> float:
    """int_0^{lam_min} of the lambda density, extrapolated from the smallest nodes.

    The density (per dlam) behaves like |lam|^(1 - 2 alpha) near lambda = 0
    (the multiplier (4|lam|(2l+1))^(-2 alpha) against a |lam|-sized
    measure). The fit per sign uses the basis |lam|^(1 - 2 alpha),
    |lam|^(2 - 2 alpha) and 1, integrated exactly over [0, lam_min].
    """
    p = 1.0 - 2.0 * alpha
    out = 0.0
    for sign in (1.0, -1.0):
        sel = np.nonzero(np.sign(lams) == sign)[0]
        if sel.size < k:
            continue
        order = sel[np.argsort(np.abs(lams[sel]))][:k]
        x = np.abs(lams[order])
        basis = np.stack([x**p, x ** (p + 1), np.ones_like(x)], axis=1)
        c, *_ = np.linalg.lstsq(basis, density[order], rcond=None)
        a = float(x[0])
        out += c[0] * a ** (p + 1) / (p + 1) + c[1] * a ** (p + 2) / (p + 2) + c[2] * a
    return out


def sample_distributional(
    alpha: float,
    phis: Sequence[TestFunction],
    draws: int,
    seed: int,
    trunc: SpectralTruncation | None = None,
) -> np.ndarray:
    """Jointly Gaussian draws of (W(phi_1), ..., W(phi_k)), shape (draws, k).

    The covariance matrix comes from :func:`covariance_spectral` and is
    factorised through its eigendecomposition. Eigenvalues below
    -1e-8 * trace raise :class:`NonPSDError`; smaller negative ones are set to
    zero. Unlike a jittered Cholesky factor this keeps exact linear relations,
    so W(a phi) = a W(phi) holds draw by draw.
    """
    k = len(phis)
    cov = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            tr = trunc or default_truncation(phis[i], phis[j])
            cov[i, j] = cov[j, i] = covariance_spectral(alpha, phis[i], phis[j], tr).value
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() < -1e-8 * abs(float(np.trace(cov))):
        raise NonPSDError("covariance matrix is not positive semidefinite")
    L = vecs * np.sqrt(np.clip(vals, 0.0, None))
    xi = substream(seed, 0).standard_normal((draws, k))
    return xi @ L.T


# --- function regime ------------------------------------------------------------


@dataclass(frozen=True)
class PolarLattice:
    """Quadrature lattice of H^1 in homogeneous polar coordinates around e.

    Radii are geometric from ``r_min`` to ``r_max`` with ``per_octave`` shells
    per doubling; each shell is split into ``sphere`` cells in s, ``angle``
    cells in theta and the two signs of z. Each cell carries a tensor Gauss
    rule with ``sub`` points per direction, and every node q_i with weight
    w_i stands for a piece of H^1 of volume w_i, from
    dmu = 2 r^3 s(1-s) dr ds dtheta.
    """

    r_min: float = 1e-3
    r_max: float = 50.0
    per_octave: int = 10
    sphere: int = 24
    angle: int = 40
    sub: int = 2

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes of shape (count, 3) and their weights."""
        shells = int(math.ceil(self.per_octave * math.log2(self.r_max / self.r_min)))
        r, wr = composite(np.geomspace(self.r_min, self.r_max, shells + 1), self.sub)
        s, ws = composite(np.linspace(0.0, 1.0, self.sphere + 1), self.sub)
        th, wt = composite(np.linspace(0.0, 2 * math.pi, self.angle + 1), self.sub)
        R, S, TH = np.meshgrid(r, s, th, indexing="ij")
        W = np.einsum("i,j,k->ijk", wr * 2 * r**3, ws * s * (1 - s), wt).ravel()
        upper = np.stack([R * (1 - S) * np.cos(TH), R * (1 - S) * np.sin(TH), (R * S) ** 2], axis=-1).reshape(-1, 3)
        lower = upper * np.array([1.0, 1.0, -1.0])
        return np.concatenate([upper, lower]), np.concatenate([W, W])

    def metadata(self) -> dict:
        return {
            "kind": "polar",
            "r_min": self.r_min,
            "r_max": self.r_max,
            "per_octave": self.per_octave,
            "sphere": self.sphere,
            "angle": self.angle,
            "sub": self.sub,
        }

    def refined(self) -> "PolarLattice":
        """Lattice with every cell halved in each direction."""
        return replace(self, per_octave=2 * self.per_octave, sphere=2 * self.sphere, angle=2 * self.angle)


def _node_coefficients(alpha: float, x: np.ndarray, pts: np.ndarray, wts: np.ndarray) -> np.ndarray:
    """(G(x, q_i) - G(e, q_i)) sqrt(w_i) for each requested x and node."""
    Ge = green_array(alpha, pts)
    root = np.sqrt(wts)
    out = np.empty((x.shape[0], pts.shape[0]))
    for i, xi in enumerate(x):
        diff = green_array(alpha, group.mul_arr(group.inv_arr(xi)[None, :], pts)) - Ge
        out[i] = np.where(np.isfinite(diff), diff, 0.0) * root
    return out


def lattice_variance(alpha: float, t: float, x: np.ndarray, lattice: PolarLattice = PolarLattice()) -> np.ndarray:
    """Exact variance of the lattice approximation of W_alpha(t, x)."""
    pts, wts = lattice.nodes()
    x = np.atleast_2d(x)
    return t * np.array([np.sum(_node_coefficients(alpha, xi[None, :], pts, wts) ** 2) for xi in x])


@dataclass(frozen=True)
class FieldRealization:
    alpha: float
    grid: tuple[tuple[float, GroupPoint], ...]
    values: np.ndarray
    seed: int
    lattice: dict = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "x", "y", "z", "value"])
        for (t, p), v in zip(self.grid, self.values):
            writer.writerow([repr(t), *(repr(c) for c in p.as_array()), repr(float(v))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "alpha": self.alpha,
                "seed": self.seed,
                "lattice": self.lattice,
                "flags": list(self.flags),
                "points": [
                    {"t": t, "point": p.as_array().tolist(), "value": float(v)}
                    for (t, p), v in zip(self.grid, self.values)
                ],
            },
            indent=2,
            sort_keys=True,
        )


def sample_pointwise(
    alpha: float,
    t: float,
    points: Sequence[GroupPoint],
    seed: int,
    lattice: PolarLattice = PolarLattice(),
) -> FieldRealization:
    """One realization of W_alpha(t, x) at the requested points.

    The white noise is discretised on the nodes of ``lattice``:
    W(t, x) = sqrt(t) sum_i (G(x, q_i) - G(e, q_i)) sqrt(w_i) xi_i with one
    vector xi of standard normals shared by all points.
    """
    if not 1.0 < alpha < 1.5:
        raise DomainError("function regime on H^1 is 1 < alpha < 3/2")
    if t <= 0:
        raise DomainError("t must be positive")
    x = np.array([p.as_array() for p in points])
    if x.shape[1] != 3:
        raise DimensionError("pointwise sampler is implemented on H^1")
    flags = []
    if np.any(group.gauge_arr(x) > lattice.r_max / 20):
        flags.append("truncation_bias")
    pts, wts = lattice.nodes()
    xi = substream(seed, 0).standard_normal(pts.shape[0])
    values = np.array([math.sqrt(t) * float(_node_coefficients(alpha, p[None, :], pts, wts)[0] @ xi) for p in x])
    return FieldRealization(
        alpha, tuple((t, p) for p in points), values, seed, lattice.metadata(), tuple(flags)
    )


def hurst_parameter(alpha: float, n: int = 1) -> float:
    return 2 * alpha - (n + 1)


@dataclass(frozen=True)
class HolderReport:
    slope: float
    slope_stderr: float
    expected: float
    decades: float
    hurst: float


def holder_slope(
    alpha: float,
    t: float,
    pair_samples: int,
    seed: int,
    draws_per_pair: int = 64,
    d_range: tuple[float, float] = (1e-2, 1.0),
) -> HolderReport:
    """Slope of log E|W(t,x) - W(t,y)|^2 against log N(x^-1 y) on H^1.

    Pairs are drawn with x uniform in a box and y = x delta_d(u), u on the
    unit gauge sphere and d log-uniform in ``d_range``. For each pair the
    increment is a centered Gaussian with variance t V(x^-1 y); it is
    sampled ``draws_per_pair`` times and the empirical second moment enters
    the regression.
    """
    n = 1
    if not (n + 1) / 2 < alpha < (n + 2) / 2:
        raise DomainError("holder_slope needs the function regime")
    lo, hi = d_range
    decades = math.log10(hi / lo)
    if decades < 1.5:
        raise DomainError("distance range must span at least 1.5 decades")
    rng = substream(seed, 0)
    x = rng.uniform(-1.0, 1.0, (pair_samples, 3))
    d = np.exp(rng.uniform(math.log(lo), math.log(hi), pair_samples))
    s = rng.uniform(0.0, 1.0, pair_samples)
    th = rng.uniform(0.0, 2 * math.pi, pair_samples)
    sg = rng.choice([-1.0, 1.0], pair_samples)
    unit = np.stack([(1 - s) * np.cos(th), (1 - s) * np.sin(th), sg * s**2], axis=1)
    h = group.dil_arr(d, unit)
    y = group.mul_arr(x, h)
    rel = group.mul_arr(group.inv_arr(x), y)
    var = t * increment_variance_array(alpha, rel)
    inc = rng.standard_normal((pair_samples, draws_per_pair)) * np.sqrt(var)[:, None]
    second = np.mean(inc**2, axis=1)
    fit = stats.linregress(np.log(group.gauge_arr(rel)), np.log(second))
    return HolderReport(
        float(fit.slope), float(fit.stderr), 2 * hurst_parameter(alpha, n), decades, hurst_parameter(alpha, n)
    )


def pointwise_invariance_suite(
    alpha: float, seed: int, lam: float = 2.0, theta: float = 0.7, t: float = 1.0
) -> dict[str, float]:
    """Relative deviations of the covariance-level invariances on H^1.

    Random points are drawn from ``seed``; the report lists, for dilation,
    rotation and left translation, the largest relative deviation between
    the two sides of the identity.
    """
    rng = substream(seed, 0)
    x = rng.normal(size=(16, 3))
    y = rng.normal(size=(16, 3))
    g = rng.normal(size=(1, 3))

    def var_pair(a, b):
        return t * increment_variance_array(alpha, group.mul_arr(group.inv_arr(a), b))

    base_x = t * increment_variance_array(alpha, x)
    dil = t * increment_variance_array(alpha, group.dil_arr(lam, x))
    expected = lam ** (2 * hurst_parameter(alpha))
    base_pair = var_pair(x, y)
    rot = var_pair(group.rot_arr(theta, x), group.rot_arr(theta, y))
    trans = var_pair(group.mul_arr(g, x), group.mul_arr(g, y))
    return {
        "dilation": float(np.max(np.abs(dil / (expected * base_x) - 1))),
        "rotation": float(np.max(np.abs(rot / base_pair - 1))),
        "translation": float(np.max(np.abs(trans / base_pair - 1))),
        "dilation_exponent": 2 * hurst_parameter(alpha),
    }
