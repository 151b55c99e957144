"""The heat kernel p_t of the Brownian motion on H^n (generator Delta/2).

p_t is evaluated through its one-dimensional oscillatory representation

    p_t(x, y, z) = (2 pi t)^-(n+1) * 2 int_0^inf cos(lam z / t)
                   (2 lam / sinh 2 lam)^n exp(-lam coth(2 lam) |(x,y)|^2 / t) dlam.

Scaling reduces everything to t = 1: p_t(q) = t^-(n+1) p_1(delta_{t^-1/2} q),
so the workhorse :func:`unit_kernel` takes r2 = |(x,y)|^2 / t and
zeta = |z| / t.

Three evaluation routes are provided:

``direct``
    Composite Gauss-Legendre on [0, Lambda] with a series treatment of the
    removable singularity at lam = 0. Used for zeta <= 5.
``contour``
    The integrand is analytic in |Im lam| < pi/2, so the line of integration
    is shifted to Im lam = theta*, the saddle point on the imaginary axis.
    This removes the cancellation that makes the real-line integral lose all
    relative accuracy when zeta is large. Default for zeta > 5.
``panels``
    Zero-spaced panels of cos(lam zeta) with per-panel Gauss rules and
    iterated Aitken acceleration of the partial sums. Kept as an independent
    cross-check; it only delivers absolute accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import group
from ._numerics import composite, gauss_legendre, substream
from .errors import DomainError, QuadratureError
from .estimates import MomentEstimate
from .group import GroupPoint

__all__ = [
    "QuadSpec",
    "HeatKernelValue",
    "kernel_at_identity",
    "unit_kernel",
    "log_unit_kernel",
    "heat_kernel",
    "eval_pt",
    "GaussianBoundReport",
    "gaussian_bound_ratio",
    "normalization_check",
    "radial_integral",
    "expectation_quadrature",
    "semigroup_check",
    "l2_norm_identity",
    "OSCILLATION_THRESHOLD",
]

OSCILLATION_THRESHOLD = 5.0
SERIES_CUT = 1e-4
_LOG2 = math.log(2.0)
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadSpec:
    """Controls for the oscillatory lambda integral.

    ``lambda_cutoff=None`` lets the analytic tail bound pick the cutoff so
    that the neglected tail is below ``abs_tol / 10``. ``nodes`` is the node
    budget for the adaptive loop in :func:`eval_pt`. Tolerances refer to the
    unit-time kernel p_1.
    """

    lambda_cutoff: float | None = None
    nodes: int = 8192
    rel_tol: float = 1e-10
    abs_tol: float = 1e-15

    def __post_init__(self) -> None:
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.nodes < 16:
            raise DomainError("nodes must be at least 16")
        if self.lambda_cutoff is not None and self.lambda_cutoff <= SERIES_CUT:
            raise DomainError("lambda_cutoff too small")


@dataclass(frozen=True)
class HeatKernelValue:
    value: float
    est_error: float
    method: str = "direct"
    flags: tuple[str, ...] = field(default_factory=tuple)


def kernel_at_identity(n: int) -> float:
    """p_1(e) = 2 (2 pi)^-(n+1) int_0^inf (2 lam / sinh 2 lam)^n dlam."""
    if n == 1:
        return 1.0 / 16.0
    # int_0^inf (u/sinh u)^n du / 2 with u = 2 lam, done once by quadrature
    from scipy.integrate import quad

    def f(u: float) -> float:
        # u / sinh u = 2 u e^{-u} / (1 - e^{-2u}), stable for large u
        return (2.0 * u * math.exp(-u) / -math.expm1(-2.0 * u)) ** n if u > 0 else 1.0

    val, _ = quad(f, 0, 80.0, epsabs=1e-16, epsrel=1e-13, limit=200)
    return 2.0 * (val / 2.0) / _TWO_PI ** (n + 1)


# --- integrand pieces -----------------------------------------------------


def _log_ratio(lam: np.ndarray, n: int) -> np.ndarray:
    """n * log(2 lam / sinh 2 lam) for real lam > 0."""
    u = 2.0 * lam
    return n * (np.log(u) - (u - _LOG2 + np.log(-np.expm1(-2.0 * u))))


def _lam_coth(lam: np.ndarray) -> np.ndarray:
    return lam / np.tanh(2.0 * lam)


def tail_cutoff(n: int, abs_tol: float) -> float:
    """Smallest Lambda on a 0.5 grid whose analytic tail bound is below abs_tol/10.

    Uses (2 lam / sinh 2 lam)^n <= (4 lam)^n e^{-2 n lam} and
    int_L^inf lam^n e^{-2n lam} = Gamma(n+1, 2nL) / (2n)^(n+1).
    """
    pref = 2.0 / _TWO_PI ** (n + 1) * 4.0**n * math.gamma(n + 1) / (2.0 * n) ** (n + 1)
    lam = 1.0
    while pref * special.gammaincc(n + 1, 2 * n * lam) > abs_tol / 10.0:
        lam += 0.5
        if lam > 400:
            break
    return lam


def _series_piece(r2: np.ndarray, zeta: np.ndarray, n: int, a: float = SERIES_CUT) -> np.ndarray:
    # integrand ~ e^{-r2/2} (1 - lam^2 (2n/3 + 2 r2/3 + zeta^2/2)) on [0, a]
    c2 = 2.0 * n / 3.0 + 2.0 * r2 / 3.0 + 0.5 * zeta**2
    return np.exp(-0.5 * r2) * (a - c2 * a**3 / 3.0)


def _direct(r2: np.ndarray, zeta: np.ndarray, n: int, cutoff: float, width: float = 0.5) -> np.ndarray:
    """Real-line quadrature of the unit-time kernel (vectorized over points)."""
    count = max(1, int(math.ceil((cutoff - SERIES_CUT) / width)))
    lam, w = composite(np.linspace(SERIES_CUT, cutoff, count + 1), 16)
    A = _log_ratio(lam, n)
    B = _lam_coth(lam)
    r2 = np.asarray(r2, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    flat_r2 = r2.reshape(-1, 1)
    flat_z = zeta.reshape(-1, 1)
    out = np.empty(flat_r2.shape[0])
    step = max(1, 2_000_000 // lam.size)
    for i in range(0, out.size, step):
        sl = slice(i, i + step)
        integrand = np.exp(A - flat_r2[sl] * B) * np.cos(flat_z[sl] * lam)
        out[sl] = integrand @ w
    out += _series_piece(flat_r2[:, 0], flat_z[:, 0], n)
    return (2.0 / _TWO_PI ** (n + 1) * out).reshape(r2.shape)


# --- shifted contour --------------------------------------------------------


def _h_imag(theta: np.ndarray, r2: np.ndarray, zeta: np.ndarray, n: int) -> np.ndarray:
    """log |integrand| on the imaginary axis lam = i theta, 0 < theta < pi/2."""
    s2 = np.sin(2.0 * theta)
    return -theta * zeta - r2 * theta * np.cos(2.0 * theta) / s2 + n * np.log(2.0 * theta / s2)


def _saddle(r2: np.ndarray, zeta: np.ndarray, n: int, iters: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized golden-section search for the saddle theta* and h(theta*)."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    lo = np.full_like(r2, 1e-9)
    hi = np.full_like(r2, 0.5 * math.pi - 1e-12)
    c = hi - g * (hi - lo)
    d = lo + g * (hi - lo)
    hc = _h_imag(c, r2, zeta, n)
    hd = _h_imag(d, r2, zeta, n)
    for _ in range(iters):
        left = hc < hd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        x_new = np.where(left, hi - g * (hi - lo), lo + g * (hi - lo))
        f_new = _h_imag(x_new, r2, zeta, n)
        c, hc, d, hd = (
            np.where(left, x_new, d),
            np.where(left, f_new, hd),
            np.where(left, c, x_new),
            np.where(left, hc, f_new),
        )
    theta = 0.5 * (lo + hi)
    return theta, _h_imag(theta, r2, zeta, n)


def _log_bound(x: np.ndarray, theta: np.ndarray, r2: np.ndarray, zeta: np.ndarray, n: int, top: np.ndarray) -> np.ndarray:
    # upper bound of log|F(x + i theta)| - log|F(i theta)| valid for x >= 0.5
    mod = np.sqrt(x**2 + theta**2)
    log_sinh = 2.0 * x - _LOG2 + np.log(-np.expm1(-4.0 * x))
    re_lc = x * np.tanh(2.0 * x) - theta / (2.0 * np.sinh(2.0 * x) ** 2)
    return -theta * zeta + n * (np.log(2.0 * mod) - log_sinh) - r2 * re_lc - top


def _line_integrand(lam: np.ndarray, r2: np.ndarray, zeta: np.ndarray, n: int, top: np.ndarray) -> np.ndarray:
    w = 2.0 * lam
    log_f = 1j * lam * zeta + n * (np.log(w) - np.log(np.sinh(w))) - r2 * lam / np.tanh(w)
    return np.exp(log_f - top)


def _contour_parts(r2: np.ndarray, zeta: np.ndarray, n: int, refine: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Return (log scale, positive factor) with p_1 = exp(scale) * factor."""
    r2 = np.asarray(r2, dtype=float).ravel()
    zeta = np.asarray(zeta, dtype=float).ravel()
    theta, top = _saddle(r2, zeta, n)
    dist = 0.5 * math.pi - theta
    w_u = np.minimum(math.pi / np.maximum(zeta, 1.0), 0.5) / refine
    # far end of the line from the analytic bound (bisection on [0.5, 80])
    a = np.full_like(r2, 0.5)
    b = np.full_like(r2, 80.0)
    target = math.log(1e-18)
    for _ in range(40):
        mid = 0.5 * (a + b)
        above = _log_bound(mid, theta, r2, zeta, n, top) > target
        a = np.where(above, mid, a)
        b = np.where(above, b, mid)
    uniform = np.ceil(b / w_u).astype(int)
    geometric = np.ceil(np.log2(16.0 * w_u / np.minimum(dist, w_u))).astype(int) + refine
    factor = np.empty_like(r2)
    k = 16
    # bucket points by panel count so each bucket is one rectangular array
    bucket = np.ceil(np.log2(uniform)).astype(int)
    for key in np.unique(bucket):
        idx = np.nonzero(bucket == key)[0]
        U = int(uniform[idx].max())
        G = int(geometric[idx].max())
        per_point = (U + G) * k
        step = max(1, 1_500_000 // per_point)
        for j in range(0, idx.size, step):
            sel = idx[j : j + step]
            wu = w_u[sel, None]
            geo = wu * 2.0 ** -np.arange(G, 0, -1)[None, :]
            uni = wu * np.arange(1, U + 1)[None, :]
            edges = np.concatenate([np.zeros((sel.size, 1)), geo, uni], axis=1)
            x, wts = composite(edges, k)
            lam = x + 1j * theta[sel, None]
            vals = _line_integrand(lam, r2[sel, None], zeta[sel, None], n, top[sel, None])
            factor[sel] = 2.0 * np.real(np.sum(vals * wts, axis=1))
    return top, factor / _TWO_PI ** (n + 1)


def _contour(r2: np.ndarray, zeta: np.ndarray, n: int, refine: int = 1) -> np.ndarray:
    shape = np.shape(r2)
    top, factor = _contour_parts(r2, zeta, n, refine)
    with np.errstate(under="ignore"):
        return (np.exp(top) * factor).reshape(shape)


# --- zero-spaced panels with acceleration ------------------------------------


def _aitken(s: np.ndarray, rounds: int = 3) -> np.ndarray:
    """Iterated Aitken delta-squared on the last axis of partial sums."""
    for _ in range(rounds):
        if s.shape[-1] < 3:
            break
        d1 = s[..., 1:-1] - s[..., :-2]
        d2 = s[..., 2:] - s[..., 1:-1]
        den = d2 - d1
        safe = np.abs(den) > 1e-300
        acc = s[..., 2:] - np.where(safe, d2**2 / np.where(safe, den, 1.0), 0.0)
        s = acc
    return s[..., -1]


def _panels(r2: np.ndarray, zeta: np.ndarray, n: int, cutoff: float) -> np.ndarray:
    r2 = np.asarray(r2, dtype=float).ravel()
    zeta = np.maximum(np.asarray(zeta, dtype=float).ravel(), 1e-12)
    half = math.pi / zeta
    count = np.ceil(cutoff / half).astype(int) + 1
    K = int(count.max())
    j = np.arange(K)[None, :]
    # zeros of cos(lam zeta) sit at (j + 1/2) pi / zeta
    edges = np.concatenate(
        [np.full((r2.size, 1), SERIES_CUT), (j + 0.5) * half[:, None]], axis=1
    )
    edges = np.maximum(edges, SERIES_CUT)
    x, w = composite(edges, 16)
    integrand = np.exp(_log_ratio(x, n) - r2[:, None] * _lam_coth(x)) * np.cos(zeta[:, None] * x)
    terms = (integrand * w).reshape(r2.size, K, 16).sum(axis=2)
    partial = np.cumsum(terms, axis=1)
    total = _aitken(partial[:, -12:]) if K >= 12 else partial[:, -1]
    total = total + _series_piece(r2, zeta, n)
    return 2.0 / _TWO_PI ** (n + 1) * total


# --- public evaluators --------------------------------------------------------


def unit_kernel(r2: np.ndarray, zeta: np.ndarray, n: int = 1, method: str = "auto", cutoff: float | None = None) -> np.ndarray:
    """p_1 at points with |(x,y)|^2 = r2 and |z| = zeta (arrays broadcast)."""
    r2, zeta = np.broadcast_arrays(np.asarray(r2, dtype=float), np.abs(np.asarray(zeta, dtype=float)))
    cutoff = cutoff if cutoff is not None else tail_cutoff(n, 1e-16)
    if method == "direct":
        return _direct(r2, zeta, n, cutoff)
    if method == "contour":
        return _contour(r2, zeta, n)
    if method == "panels":
        return _panels(r2, zeta, n, cutoff).reshape(r2.shape)
    if method != "auto":
        raise DomainError(f"unknown method {method!r}")
    out = np.empty(r2.shape)
    osc = zeta > OSCILLATION_THRESHOLD
    if np.any(~osc):
        out[~osc] = _direct(r2[~osc], zeta[~osc], n, cutoff)
    if np.any(osc):
        out[osc] = _contour(r2[osc], zeta[osc], n)
    return out


def log_unit_kernel(r2: np.ndarray, zeta: np.ndarray, n: int = 1) -> np.ndarray:
    """log p_1, accurate where p_1 itself underflows (contour route)."""
    r2, zeta = np.broadcast_arrays(np.asarray(r2, dtype=float), np.abs(np.asarray(zeta, dtype=float)))
    top, factor = _contour_parts(r2, np.maximum(zeta, 1e-300), n)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (top + np.log(factor)).reshape(r2.shape)


def heat_kernel(t: float | np.ndarray, pts: np.ndarray, method: str = "auto") -> np.ndarray:
    """p_t at an array of points (last axis 2n+1); t broadcasts with the points."""
    pts = np.asarray(pts, dtype=float)
    n = group.dim_of(pts)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("t must be positive")
    r2 = np.sum(pts[..., :-1] ** 2, axis=-1) / t
    zeta = np.abs(pts[..., -1]) / t
    return unit_kernel(r2, zeta, n, method) / t ** (n + 1)


def eval_pt(t: float, q: GroupPoint, spec: QuadSpec = QuadSpec(), method: str = "auto") -> HeatKernelValue:
    """p_t(q) with an error estimate from a resolution-doubling comparison."""
    if t <= 0:
        raise DomainError("t must be positive")
    n = q.n
    arr = q.as_array()
    r2 = float(np.sum(arr[:-1] ** 2) / t)
    zeta = abs(arr[-1]) / t
    scale = t ** -(n + 1)
    if method == "auto":
        method = "contour" if zeta > OSCILLATION_THRESHOLD else "direct"
    flags: list[str] = []
    if method == "contour":
        coarse = float(_contour(np.array([r2]), np.array([zeta]), n, refine=1)[0])
        fine = float(_contour(np.array([r2]), np.array([zeta]), n, refine=2)[0])
        err = abs(fine - coarse)
    else:
        cutoff = spec.lambda_cutoff if spec.lambda_cutoff is not None else tail_cutoff(n, spec.abs_tol)
        tail = 2.0 / _TWO_PI ** (n + 1) * 4.0**n * math.gamma(n + 1) / (2.0 * n) ** (n + 1) * special.gammaincc(
            n + 1, 2 * n * cutoff
        )
        width = 1.0
        rule = _panels if method == "panels" else None

        def run(wd: float) -> float:
            if rule is not None:
                return float(_panels(np.array([r2]), np.array([zeta]), n, cutoff)[0])
            return float(_direct(np.array([r2]), np.array([zeta]), n, cutoff, width=wd)[0])

        coarse = run(width)
        used = 16 * math.ceil(cutoff / width)
        while True:
            width /= 2.0
            fine = run(width)
            used += 16 * math.ceil(cutoff / width)
            err = abs(fine - coarse) + tail
            if err <= max(spec.abs_tol, spec.rel_tol * abs(fine)) or rule is not None:
                break
            if used > spec.nodes:
                raise QuadratureError("heat kernel quadrature did not converge", fine * scale, err * scale)
            coarse = fine
    value = fine
    if value < 0:
        if value < -spec.abs_tol:
            flags.append("negative_clamped")
        value = 0.0
    return HeatKernelValue(value * scale, err * scale, method, tuple(flags))


# --- diagnostics ----------------------------------------------------------------


@dataclass(frozen=True)
class GaussianBoundReport:
    """Envelope constants for p_t(q) t^(n+1) against exp(-c N^2 / t).

    ``c_lower``/``c_upper`` are the smallest constants with
    p_1(e) e^{-c_lower x} <= p_t t^{n+1} <= p_1(e) e^{-c_upper x}, x = N^2/t,
    over the sample. ``min_ratio``/``max_ratio`` are the extremes of
    p_t t^{n+1} e^{c_fit x} with c_fit the least squares decay rate.
    """

    c_lower: float
    c_upper: float
    c_fit: float
    min_ratio: float
    max_ratio: float
    skipped: int
    flags: tuple[str, ...] = ()


def gaussian_bound_ratio(t: float, sample_points: np.ndarray, max_exponent: float = 40.0) -> GaussianBoundReport:
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    n = group.dim_of(pts)
    x = group.gauge_arr(pts) ** 2 / t
    keep = x <= max_exponent
    logp = np.full(x.shape, -np.inf)
    r2 = np.sum(pts[keep, :-1] ** 2, axis=-1) / t
    zeta = np.abs(pts[keep, -1]) / t
    logp[keep] = log_unit_kernel(r2, zeta, n)
    keep &= np.isfinite(logp)
    flags = ("points_skipped",) if not np.all(keep) else ()
    y = logp[keep]
    xs = x[keep]
    y0 = math.log(kernel_at_identity(n))
    pos = xs > 1e-12
    rates = (y0 - y[pos]) / xs[pos]
    from scipy.stats import linregress

    c_fit = -linregress(xs, y).slope if xs.size > 2 else float(np.mean(rates))
    ratio = np.exp(y + c_fit * xs)
    return GaussianBoundReport(
        c_lower=float(rates.max()),
        c_upper=float(rates.min()),
        c_fit=float(c_fit),
        min_ratio=float(ratio.min()),
        max_ratio=float(ratio.max()),
        skipped=int(np.count_nonzero(~keep)),
        flags=flags,
    )


def radial_integral(fn, n: int = 1, rho_max: float = 12.0, s_max: float = 6.0, k: int = 96) -> float:
    """Integrate fn(rho, z) over H^n for functions of |(x,y)| and z, even in z.

    The z axis is parametrised by z = s^2 so that functions of |z|^(1/2)
    stay smooth. Haar measure is |S^{2n-1}| rho^{2n-1} drho dz.
    """
    rho, wr = composite(np.linspace(0.0, rho_max, 9), k // 8 * 2)
    s, ws = composite(np.linspace(0.0, s_max, 9), k // 8 * 2)
    sphere = 2.0 * math.pi**n / math.gamma(n)
    R, S = np.meshgrid(rho, s, indexing="ij")
    vals = fn(R, S**2)
    jac = sphere * R ** (2 * n - 1) * 2.0 * (2.0 * S)
    return float(np.einsum("i,j,ij->", wr, ws, vals * jac))


def expectation_quadrature(f, t: float, n: int = 1) -> float:
    """int f p_t dmu for a function f(rho, z) of the horizontal norm and z."""
    scale = math.sqrt(t)

    def integrand(rho, z):
        pt = unit_kernel(rho**2 / t, z / t, n) / t ** (n + 1)
        return f(rho, z) * pt

    return radial_integral(integrand, n, rho_max=12.0 * scale, s_max=5.0 * scale)


def l2_norm_identity(t: float, n: int = 1) -> tuple[float, float]:
    """Return (int p_t^2 dmu by quadrature, p_{2t}(e))."""
    scale = math.sqrt(t)

    def integrand(rho, z):
        return (unit_kernel(rho**2 / t, z / t, n) / t ** (n + 1)) ** 2

    lhs = radial_integral(integrand, n, rho_max=9.0 * scale, s_max=4.5 * scale)
    return lhs, kernel_at_identity(n) / (2.0 * t) ** (n + 1)


def normalization_check(t: float, mc_samples: int, seed: int, n: int = 1) -> MomentEstimate:
    """Importance-sampling estimate of int p_t dmu (should equal 1).

    Proposal: N(0, t I) in the horizontal variables, Cauchy(0, 2t) in z.
    """
    rng = substream(seed, 0)
    h = rng.standard_normal((mc_samples, 2 * n)) * math.sqrt(t)
    z = rng.standard_cauchy(mc_samples) * 2.0 * t
    pts = np.concatenate([h, z[:, None]], axis=1)
    log_gauss = -0.5 * np.sum(h**2, axis=1) / t - n * math.log(_TWO_PI * t)
    cauchy = 1.0 / (math.pi * 2.0 * t * (1.0 + (z / (2.0 * t)) ** 2))
    weights = heat_kernel(t, pts) / (np.exp(log_gauss) * cauchy)
    return MomentEstimate(
        value=float(weights.mean()),
        std_err=float(weights.std(ddof=1) / math.sqrt(mc_samples)),
        samples=mc_samples,
        seed=seed,
    )


def semigroup_check(s: float, t: float, q_target: GroupPoint, paths: int, seed: int, steps: int = 256) -> tuple[MomentEstimate, float]:
    """MC estimate of E[p_{t-s}(B_s^-1 q)] next to the exact p_t(q)."""
    from .brownian import sample_endpoints

    if not 0 < s < t:
        raise DomainError("need 0 < s < t")
    ends = sample_endpoints(q_target.n, s, steps, paths, seed)
    rel = group.mul_arr(group.inv_arr(ends), q_target.as_array()[None, :])
    vals = heat_kernel(t - s, rel)
    est = MomentEstimate(
        value=float(vals.mean()),
        std_err=float(vals.std(ddof=1) / math.sqrt(paths)),
        samples=paths,
        seed=seed,
    )
    return est, eval_pt(t, q_target).value
