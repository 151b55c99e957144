"""Arithmetic on the Heisenberg group H^n = R^n x R^n x R.

Points are handled in two forms. :class:`GroupPoint` is an immutable value
type for single points; the ``*_arr`` functions operate on numpy arrays whose
last axis has length ``2n + 1`` laid out as ``(x_1..x_n, y_1..y_n, z)`` and
are what the numerical modules use in bulk.

The group law is

    (x, y, z) * (x', y', z') = (x + x', y + y', z + z' + 2 omega),
    omega = sum_i (x'_i y_i - x_i y'_i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "GroupPoint",
    "Dilation",
    "Rotation",
    "identity",
    "product",
    "inverse",
    "dilate",
    "rotate",
    "hom_distance",
    "gauge",
    "omega",
    "dilation_jacobian",
    "dim_of",
    "mul_arr",
    "inv_arr",
    "dil_arr",
    "rot_arr",
    "gauge_arr",
    "omega_arr",
    "polar_arr",
    "from_polar_arr",
]


@dataclass(frozen=True)
class GroupPoint:
    """A point (x, y, z) of H^n."""

    x: tuple[float, ...]
    y: tuple[float, ...]
    z: float

    def __post_init__(self) -> None:
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        y = tuple(float(v) for v in np.atleast_1d(self.y))
        z = float(self.z)
        if len(x) != len(y) or not x:
            raise DimensionError(f"x and y must have equal positive length, got {len(x)} and {len(y)}")
        if not all(math.isfinite(v) for v in (*x, *y, z)):
            raise DomainError("group point components must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def identity(cls, n: int = 1) -> "GroupPoint":
        return cls((0.0,) * n, (0.0,) * n, 0.0)

    @classmethod
    def from_array(cls, arr: Sequence[float] | np.ndarray) -> "GroupPoint":
        a = np.asarray(arr, dtype=float).ravel()
        if a.size % 2 != 1 or a.size < 3:
            raise DimensionError(f"array of length {a.size} is not 2n+1")
        n = (a.size - 1) // 2
        return cls(tuple(a[:n]), tuple(a[n : 2 * n]), a[-1])

    @classmethod
    def parse(cls, text: str) -> "GroupPoint":
        """Parse a comma separated ``x1,..,xn,y1,..,yn,z`` string."""
        try:
            values = [float(v) for v in text.split(",")]
        except ValueError as exc:
            raise DomainError(f"cannot parse point {text!r}") from exc
        return cls.from_array(values)

    def as_array(self) -> np.ndarray:
        return np.array([*self.x, *self.y, self.z])

    def __mul__(self, other: "GroupPoint") -> "GroupPoint":
        return product(self, other)

    def __invert__(self) -> "GroupPoint":
        return inverse(self)


@dataclass(frozen=True)
class Dilation:
    """The dilation delta_lambda(x, y, z) = (lambda x, lambda y, lambda^2 z)."""

    lam: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"dilation factor must be positive, got {self.lam}")

    def __call__(self, p: GroupPoint) -> GroupPoint:
        return dilate(self, p)


@dataclass(frozen=True)
class Rotation:
    """Horizontal rotation by ``theta`` in every (x_i, y_i) plane."""

    theta: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.theta):
            raise DomainError("rotation angle must be finite")

    def __call__(self, p: GroupPoint) -> GroupPoint:
        return rotate(self, p)


def dim_of(arr: np.ndarray) -> int:
    """Return n for an array whose last axis has length 2n+1."""
    m = np.shape(arr)[-1]
    if m % 2 != 1 or m < 3:
        raise DimensionError(f"last axis of length {m} is not 2n+1")
    return (m - 1) // 2


def omega_arr(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """omega((x,y),(x',y')) = sum x'_i y_i - x_i y'_i on the horizontal parts."""
    n = dim_of(u)
    if dim_of(v) != n:
        raise DimensionError("omega operands differ in dimension")
    x, y = u[..., :n], u[..., n : 2 * n]
    xp, yp = v[..., :n], v[..., n : 2 * n]
    return np.sum(xp * y - x * yp, axis=-1)


def mul_arr(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise DimensionError(f"cannot multiply points of length {p.shape[-1]} and {q.shape[-1]}")
    out = p + q
    out[..., -1] += 2.0 * omega_arr(p, q)
    return out


def inv_arr(p: np.ndarray) -> np.ndarray:
    return -np.asarray(p, dtype=float)


def dil_arr(lam: float | np.ndarray, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = p * lam[..., None]
    out[..., -1] *= lam
    return out


def rot_arr(theta: float, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    n = dim_of(p)
    c, s = math.cos(theta), math.sin(theta)
    x, y = p[..., :n], p[..., n : 2 * n]
    out = p.copy()
    out[..., :n] = c * x + s * y
    out[..., n : 2 * n] = -s * x + c * y
    return out


def gauge_arr(p: np.ndarray) -> np.ndarray:
    """Homogeneous gauge N(x, y, z) = |(x, y)| + |z|^(1/2)."""
    p = np.asarray(p, dtype=float)
    return np.linalg.norm(p[..., :-1], axis=-1) + np.sqrt(np.abs(p[..., -1]))


def polar_arr(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split points into gauge radius r and sphere coordinate s in [0, 1].

    A point with gauge r is delta_r of a unit-gauge point whose horizontal
    norm is 1 - s and whose |z| is s^2. Kernels that are rotation invariant,
    even in z and homogeneous under dilations are functions of s alone up to
    a power of r.
    """
    p = np.asarray(p, dtype=float)
    rho = np.linalg.norm(p[..., :-1], axis=-1)
    sz = np.sqrt(np.abs(p[..., -1]))
    r = rho + sz
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(r > 0, sz / np.where(r > 0, r, 1.0), 0.0)
    return r, s


def from_polar_arr(r: np.ndarray, s: np.ndarray, n: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`polar_arr` for rotation/reflection invariant use.

    Returns the horizontal norm rho and |z| of the point delta_r(sphere(s)).
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    return r * (1.0 - s), (r * s) ** 2


def identity(n: int = 1) -> GroupPoint:
    return GroupPoint.identity(n)


def _check_same(p: GroupPoint, q: GroupPoint) -> None:
    if p.n != q.n:
        raise DimensionError(f"points live in H^{p.n} and H^{q.n}")


def product(p: GroupPoint, q: GroupPoint) -> GroupPoint:
    _check_same(p, q)
    return GroupPoint.from_array(mul_arr(p.as_array(), q.as_array()))


def inverse(p: GroupPoint) -> GroupPoint:
    return GroupPoint(tuple(-v for v in p.x), tuple(-v for v in p.y), -p.z)


def dilate(d: Dilation | float, p: GroupPoint) -> GroupPoint:
    lam = d.lam if isinstance(d, Dilation) else Dilation(float(d)).lam
    return GroupPoint(tuple(lam * v for v in p.x), tuple(lam * v for v in p.y), lam * lam * p.z)


def rotate(r: Rotation | float, p: GroupPoint) -> GroupPoint:
    theta = r.theta if isinstance(r, Rotation) else float(r)
    return GroupPoint.from_array(rot_arr(theta, p.as_array()))


def omega(p: GroupPoint, q: GroupPoint) -> float:
    _check_same(p, q)
    return float(omega_arr(p.as_array(), q.as_array()))


def gauge(p: GroupPoint) -> float:
    return float(gauge_arr(p.as_array()))


def hom_distance(p: GroupPoint, q: GroupPoint) -> float:
    """N(p^-1 * q), the homogeneous stand-in for the Carnot-Caratheodory distance."""
    _check_same(p, q)
    return float(gauge_arr(mul_arr(inv_arr(p.as_array()), q.as_array())))


def dilation_jacobian(lam: float, n: int = 1) -> float:
    """Determinant of delta_lambda as a linear map of R^(2n+1)."""
    matrix = np.diag([lam] * (2 * n) + [lam * lam])
    return float(np.linalg.det(matrix))
