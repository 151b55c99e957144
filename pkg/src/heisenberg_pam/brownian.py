"""Brownian motion on H^n with its Levy area, and path-level diagnostics.

The horizontal components (B, beta) are standard 2n-dimensional Brownian
motion and the vertical component is the Levy area

    A_t = 2 sum_i int_0^t B^i d beta^i - beta^i d B^i,

discretised with the left-point rule. The cross variation of B and beta is
zero, so the Ito and Stratonovich areas coincide and the scheme has weak
order one.

Randomness is organised in fixed-size chunks: chunk ``i`` of a run with
seed ``s`` draws from the substream ``(s, i)``. Results therefore depend only
on ``(seed, chunk)`` and not on how the chunks are executed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import stats

from . import group
from ._numerics import chunk_sizes, substream
from .errors import DomainError
from .estimates import MomentEstimate, mean_estimate
from .group import GroupPoint

__all__ = [
    "PathConfig",
    "HeisPath",
    "sample_path",
    "path_batches",
    "sample_endpoints",
    "ScalingReport",
    "scaling_diagnostic",
    "small_ball_probability",
    "DEFAULT_CHUNK",
]

DEFAULT_CHUNK = 2048


@dataclass(frozen=True)
class PathConfig:
    n: int
    t_end: float
    steps: int
    rng_seed: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError("n must be a positive integer")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise DomainError("t_end must be positive")
        if self.steps < 1:
            raise DomainError("steps must be at least 1")


@dataclass(frozen=True)
class HeisPath:
    """One discretised trajectory; ``euclid`` has shape (steps+1, 2n)."""

    times: np.ndarray
    euclid: np.ndarray
    area: np.ndarray

    @property
    def n(self) -> int:
        return self.euclid.shape[1] // 2

    @property
    def points(self) -> list[GroupPoint]:
        return [GroupPoint.from_array(row) for row in self.as_array()]

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.euclid, self.area[:, None]], axis=1)


def _simulate(rng: np.random.Generator, m: int, n: int, t_end: float, steps: int) -> np.ndarray:
    """m paths as an array of shape (m, steps+1, 2n+1)."""
    dt = t_end / steps
    inc = rng.standard_normal((m, steps, 2 * n)) * math.sqrt(dt)
    pos = np.zeros((m, steps + 1, 2 * n + 1))
    np.cumsum(inc, axis=1, out=pos[:, 1:, : 2 * n])
    left = pos[:, :-1, : 2 * n]
    b, beta = left[..., :n], left[..., n:]
    db, dbeta = inc[..., :n], inc[..., n:]
    darea = 2.0 * np.sum(b * dbeta - beta * db, axis=-1)
    np.cumsum(darea, axis=1, out=pos[:, 1:, -1])
    return pos


def sample_path(cfg: PathConfig) -> HeisPath:
    """Single trajectory, deterministic in ``cfg.rng_seed``."""
    pos = _simulate(substream(cfg.rng_seed, 0), 1, cfg.n, cfg.t_end, cfg.steps)[0]
    times = np.linspace(0.0, cfg.t_end, cfg.steps + 1)
    return HeisPath(times, pos[:, :-1].copy(), pos[:, -1].copy())


def path_batches(
    n: int, t_end: float, steps: int, paths: int, seed: int, chunk: int = DEFAULT_CHUNK, stream: int = 0
) -> Iterator[np.ndarray]:
    """Yield path arrays of shape (chunk, steps+1, 2n+1), totalling ``paths``.

    ``stream`` offsets the substream indices so that independent families
    (for example the two paths of a pair) can share one seed.
    """
    PathConfig(n, t_end, steps, seed)
    for i, m in enumerate(chunk_sizes(paths, chunk)):
        yield _simulate(substream(seed, stream * 1_000_003 + i), m, n, t_end, steps)


def sample_endpoints(n: int, t_end: float, steps: int, paths: int, seed: int, stream: int = 0) -> np.ndarray:
    """Endpoints B_t of ``paths`` independent trajectories, shape (paths, 2n+1)."""
    return np.concatenate([b[:, -1] for b in path_batches(n, t_end, steps, paths, seed, stream=stream)])


@dataclass(frozen=True)
class ScalingReport:
    ks_statistic: float
    p_value: float
    mean_ratio: float
    mean_ratio_se: float


def scaling_diagnostic(t: float, paths: int, steps: int, seed: int, n: int = 1) -> ScalingReport:
    """Compare the law of N(B_t) with that of sqrt(t) N(B_1).

    The two samples come from independent substreams. ``mean_ratio`` is
    E N(B_t) / E N(B_1), which should equal sqrt(t); its standard error is
    from the delta method.
    """
    if paths < 100:
        raise DomainError("scaling_diagnostic needs at least 100 paths")
    d_t = group.gauge_arr(sample_endpoints(n, t, steps, paths, seed, stream=0))
    d_1 = group.gauge_arr(sample_endpoints(n, 1.0, steps, paths, seed, stream=1))
    ks = stats.ks_2samp(d_t, math.sqrt(t) * d_1)
    m_t, m_1 = d_t.mean(), d_1.mean()
    se_t = d_t.std(ddof=1) / math.sqrt(paths)
    se_1 = d_1.std(ddof=1) / math.sqrt(paths)
    ratio = m_t / m_1
    se = ratio * math.hypot(se_t / m_t, se_1 / m_1)
    return ScalingReport(float(ks.statistic), float(ks.pvalue), float(ratio), float(se))


def small_ball_probability(
    epsilon: float, t: float, paths: int, steps: int, seed: int, n: int = 1, chunk: int = DEFAULT_CHUNK
) -> MomentEstimate:
    """P(sup_{s<=t} N(B_s^-1 * B~_s) <= epsilon) for independent B, B~.

    The supremum is taken over the grid times. A zero hit count returns the
    estimate 0 flagged ``zero_hits``.
    """
    if epsilon < 0 or t <= 0:
        raise DomainError("need epsilon >= 0 and t > 0")
    hits = []
    pairs = zip(
        path_batches(n, t, steps, paths, seed, chunk, stream=0),
        path_batches(n, t, steps, paths, seed, chunk, stream=1),
    )
    for a, b in pairs:
        rel = group.mul_arr(group.inv_arr(a), b)
        hits.append(group.gauge_arr(rel).max(axis=1) <= epsilon)
    ind = np.concatenate(hits).astype(float)
    if not ind.any():
        return MomentEstimate(0.0, 0.0, paths, seed, flags=("zero_hits",))
    return mean_estimate(ind, seed)
