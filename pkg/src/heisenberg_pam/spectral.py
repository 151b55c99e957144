"""Projective Fourier calculus on H^n in the scaled Hermite basis.

Conventions
-----------
For lam != 0 the Schrodinger representation acts on L^2(R^n) by

    U_q u(xi) = exp(-i lam (z + 2 x.(xi - y))) u(xi - 2y),

and f^(m, l, lam) = < F(f) Phi_m, Phi_l > with F(f) = int f(q) U_q dq and
Phi_k = Phi_k^lam the scaled Hermite functions. With this normalisation
q -> U_q reverses products (U_p U_q = U_{qp}), so a right convolution
f * k with a radial kernel k multiplies f^(m, l, lam) by the eigenvalue of k
at the index ``l``. Every multiplier below is therefore applied on ``ell``.

The sub-Laplacian acts by -4|lam|(2|l| + n). The L^2 norm is

    ||f||^2 = C0 int sum_{m,l} |f^(m, l, lam)|^2 |lam|^n dlam,  C0 = 2^(n-1) / pi^(n+1).

``SemigroupConvention`` records which generator a time parameter refers to:
``FULL_DELTA`` for e^{t Delta} and ``HALF_DELTA`` for e^{t Delta/2}, the law
of the Brownian motion. The conversion tau = t/2 happens only in
:func:`heat_multiplier`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import special

from ._numerics import gauss_legendre
from .errors import DomainError
from .group import GroupPoint

__all__ = [
    "SpectralIndex",
    "SpectralTruncation",
    "SemigroupConvention",
    "plancherel_constant",
    "multiplicity",
    "mode_sum",
    "hermite_functions",
    "hermite_value",
    "heat_multiplier",
    "frac_multiplier",
    "heat_plancherel_sum",
    "sobolev_norm",
    "matrix_coefficient",
    "matrix_coefficients_1d",
    "HERMITE_LIMIT",
]

HERMITE_LIMIT = 4000


class SemigroupConvention(enum.Enum):
    FULL_DELTA = "full_delta"
    HALF_DELTA = "half_delta"


def _multi(k: int | Sequence[int]) -> tuple[int, ...]:
    out = tuple(int(v) for v in np.atleast_1d(k))
    if any(v < 0 for v in out):
        raise DomainError("multi-index entries must be nonnegative")
    return out


@dataclass(frozen=True)
class SpectralIndex:
    m: tuple[int, ...]
    ell: tuple[int, ...]
    lam: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", _multi(self.m))
        object.__setattr__(self, "ell", _multi(self.ell))
        if len(self.m) != len(self.ell):
            raise DomainError("m and ell must have the same length")
        if self.lam == 0 or not math.isfinite(self.lam):
            raise DomainError("lambda must be a nonzero real")

    @property
    def n(self) -> int:
        return len(self.m)


@dataclass(frozen=True)
class SpectralTruncation:
    """Mode cutoff and a symmetric lambda grid.

    ``weights`` already contain the Plancherel density |lam|^n, so that
    int g(lam) |lam|^n dlam ~ sum weights * g(lambdas).
    """

    m_max: int
    lambdas: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        lam = np.asarray(self.lambdas, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if lam.shape != w.shape:
            raise DomainError("lambdas and weights differ in shape")
        if np.any(lam == 0):
            raise DomainError("lambda grid must exclude 0")
        if np.any(w <= 0):
            raise DomainError("weights must be positive")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "weights", w)

    @classmethod
    def log_grid(
        cls, m_max: int, lam_min: float, lam_max: float, n: int = 1, per_decade: int = 12, k: int = 8
    ) -> "SpectralTruncation":
        """Gauss-Legendre in log|lam| on [lam_min, lam_max], mirrored to lam < 0."""
        decades = math.log10(lam_max / lam_min)
        panels = max(1, int(math.ceil(decades * per_decade / k)))
        edges = np.linspace(math.log(lam_min), math.log(lam_max), panels + 1)
        u, w = gauss_legendre(k)
        h = np.diff(edges)[:, None]
        s = (edges[:-1, None] + h * u).ravel()
        ws = (h * w).ravel()
        lam = np.exp(s)
        wt = ws * lam ** (n + 1)
        return cls(m_max, np.concatenate([-lam[::-1], lam]), np.concatenate([wt[::-1], wt]))

    def positive(self) -> tuple[np.ndarray, np.ndarray]:
        keep = self.lambdas > 0
        return self.lambdas[keep], self.weights[keep]


def plancherel_constant(n: int) -> float:
    return 2.0 ** (n - 1) / math.pi ** (n + 1)


def multiplicity(k: int | np.ndarray, n: int) -> np.ndarray:
    """Number of multi-indices m in N^n with |m| = k."""
    return special.comb(np.asarray(k) + n - 1, n - 1)


def mode_sum(beta: float, n: int, m_max: int = 4000) -> tuple[float, float]:
    """sum_k mult(k) (2k+n)^-beta for beta > n, and the part beyond ``m_max``.

    Terms up to ``m_max`` are summed directly. Writing mult(k) as a
    polynomial sum_j c_j u^j in u = 2k + n turns the remainder into Hurwitz
    zeta values sum_j c_j 2^-(beta-j) zeta(beta-j, m_max + 1 + n/2), which
    is exact. Returns (total, tail).
    """
    if beta <= n:
        raise DomainError("mode sum diverges for beta <= n")
    k = np.arange(m_max + 1, dtype=float)
    partial = float(np.sum(multiplicity(k, n) * (2 * k + n) ** -beta))
    # mult(k) = prod_{i=1}^{n-1} (k + i) / (n-1)!, with k = (u - n) / 2
    poly = np.polynomial.Polynomial([1.0])
    for i in range(1, n):
        poly = poly * np.polynomial.Polynomial([i - n / 2, 0.5])
    coef = poly.coef / math.factorial(n - 1)
    tail = sum(
        c * 2.0 ** -(beta - j) * special.zeta(beta - j, m_max + 1 + n / 2) for j, c in enumerate(coef)
    )
    return partial + float(tail), float(tail)


def hermite_functions(kmax: int, x: np.ndarray) -> np.ndarray:
    """Normalised Hermite functions Phi_0..Phi_kmax at x, shape (kmax+1, *x.shape).

    Three-term recursion with a running log scale so that large orders at
    large |x| neither overflow nor underflow prematurely.
    """
    if kmax > HERMITE_LIMIT:
        raise OverflowError(f"Hermite order {kmax} beyond recursion limit {HERMITE_LIMIT}")
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    log_scale = -0.5 * x**2
    prev = np.zeros_like(x)
    cur = np.full_like(x, math.pi**-0.25)
    out[0] = cur * np.exp(log_scale)
    for k in range(kmax):
        nxt = math.sqrt(2.0 / (k + 1)) * x * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e150
        if np.any(big):
            cur = np.where(big, cur * 1e-150, cur)
            prev = np.where(big, prev * 1e-150, prev)
            log_scale = np.where(big, log_scale + 150 * math.log(10.0), log_scale)
        with np.errstate(over="ignore", under="ignore"):
            out[k + 1] = cur * np.exp(log_scale)
    return out


def hermite_value(k: int | Sequence[int], lam: float, xi: float | Sequence[float]) -> float:
    """Phi_k^lam(xi) = |lam|^(n/4) prod_i Phi_{k_i}(sqrt|lam| xi_i)."""
    kk = _multi(k)
    xs = np.atleast_1d(np.asarray(xi, dtype=float))
    if xs.size != len(kk):
        raise DomainError("xi and k differ in dimension")
    if lam == 0:
        raise DomainError("lambda must be nonzero")
    a = math.sqrt(abs(lam))
    val = abs(lam) ** (len(kk) / 4.0)
    for ki, xv in zip(kk, xs):
        val *= float(hermite_functions(ki, np.array([a * xv]))[ki, 0])
    return val


def heat_multiplier(t: float, idx: SpectralIndex, conv: SemigroupConvention = SemigroupConvention.FULL_DELTA) -> float:
    """Fourier multiplier of the heat semigroup at ``idx``."""
    if t <= 0:
        raise DomainError("t must be positive")
    if idx.m != idx.ell:
        return 0.0
    tau = t if conv is SemigroupConvention.FULL_DELTA else 0.5 * t
    return math.exp(-4.0 * tau * abs(idx.lam) * (2 * sum(idx.ell) + idx.n))


def frac_multiplier(alpha: float, idx: SpectralIndex) -> float:
    """Multiplier 4^-alpha |lam|^-alpha (2|l| + n)^-alpha of (-Delta)^-alpha."""
    return (4.0 * abs(idx.lam) * (2 * sum(idx.ell) + idx.n)) ** -alpha


def heat_plancherel_sum(
    t: float,
    conv: SemigroupConvention = SemigroupConvention.HALF_DELTA,
    n: int = 1,
    trunc: SpectralTruncation | None = None,
) -> float:
    """||p||^2_{L^2} of the heat kernel at time t from its multipliers.

    Evaluates C0 sum_k mult(k) int exp(-8 tau |lam| (2k+n)) |lam|^n dlam on
    the lambda grid, with the modes beyond ``m_max`` added through the
    closed-form lambda integral and :func:`mode_sum`.
    """
    if trunc is None:
        trunc = SpectralTruncation.log_grid(400, 1e-7 / t, 1e2 / t, n, per_decade=16)
    tau = t if conv is SemigroupConvention.FULL_DELTA else 0.5 * t
    k = np.arange(trunc.m_max + 1)
    lam = np.abs(trunc.lambdas)
    vals = np.exp(-8.0 * tau * np.outer(2 * k + n, lam))
    head = float(np.sum(multiplicity(k, n) * (vals @ trunc.weights)))
    # int_R e^{-c|lam|} |lam|^n dlam = 2 n! / c^(n+1)
    total, _ = mode_sum(n + 1, n, trunc.m_max)
    partial = float(np.sum(multiplicity(k, n) * (2.0 * k + n) ** -(n + 1.0)))
    tail = 2.0 * math.factorial(n) / (8.0 * tau) ** (n + 1) * (total - partial)
    return plancherel_constant(n) * (head + tail)


def sobolev_norm(coeffs: Mapping[SpectralIndex, complex], alpha: float, trunc: SpectralTruncation) -> float:
    """Truncated sum over coefficients of w(lam) (|lam| (2|l| + n))^(-2 alpha) |c|^2.

    ``w(lam)`` is the truncation weight of the grid node equal to the
    coefficient's lambda (weights carry |lam|^n dlam). No Plancherel constant
    is applied; at alpha = 0 the result times ``plancherel_constant(n)`` is
    the L^2 norm squared of the represented function.
    """
    lookup = {float(l): float(w) for l, w in zip(trunc.lambdas, trunc.weights)}
    total = 0.0
    for idx, c in coeffs.items():
        if sum(idx.m) > trunc.m_max or sum(idx.ell) > trunc.m_max:
            raise DomainError(f"index {idx} outside the mode truncation")
        w = lookup.get(float(idx.lam))
        if w is None:
            raise DomainError(f"lambda {idx.lam} is not a node of the truncation grid")
        total += w * (abs(idx.lam) * (2 * sum(idx.ell) + idx.n)) ** (-2.0 * alpha) * abs(c) ** 2
    return total


def matrix_coefficients_1d(x: float, y: float, lam: float, kmax: int, nodes: int | None = None) -> np.ndarray:
    """Matrix <e^{-2i lam x (xi - y)} Phi_m(xi - 2y), Phi_l(xi)> for m, l <= kmax.

    Gauss-Hermite quadrature in eta = sqrt|lam| (xi - y), the natural centre
    of the product Phi_m(xi - 2y) Phi_l(xi). Returns an array indexed [m, l].
    """
    nodes = nodes or max(80, 2 * kmax + 60)
    eta, w = np.polynomial.hermite.hermgauss(nodes)
    a = math.sqrt(abs(lam))
    xi = eta / a + y
    phi_shift = hermite_functions(kmax, a * (xi - 2 * y))
    phi = hermite_functions(kmax, a * xi)
    phase = np.exp(-2j * lam * x * (xi - y))
    # scaled functions carry |lam|^(1/4) each, dxi = deta / a; divide out the GH weight
    wt = w * np.exp(eta**2) * phase
    return (phi_shift * wt) @ phi.T


def matrix_coefficient(q: GroupPoint, idx: SpectralIndex, nodes: int | None = None) -> complex:
    """e_q(m, l, lam) = < U_q Phi_m, Phi_l >, factorised over coordinates."""
    if q.n != idx.n:
        raise DomainError("point and index dimensions differ")
    val = complex(np.exp(-1j * idx.lam * q.z))
    for xi, yi, mi, li in zip(q.x, q.y, idx.m, idx.ell):
        mat = matrix_coefficients_1d(xi, yi, idx.lam, max(mi, li), nodes)
        val *= complex(mat[mi, li])
    return val
