"""Small numerical helpers: Gauss rules, composite panels, rng substreams."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import special


@lru_cache(maxsize=64)
def gauss_legendre(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=64)
def _jacobi_unit(k: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    # weight v^beta on [0, 1]
    x, w = special.roots_jacobi(k, 0.0, beta)
    return 0.5 * (x + 1.0), w * 0.5 ** (beta + 1.0)


def gauss_jacobi(k: int, beta: float, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for int_0^b v^beta f(v) dv ~ sum w_i f(v_i)."""
    v, w = _jacobi_unit(k, round(float(beta), 14))
    return b * v, w * b ** (beta + 1.0)


def composite(edges: np.ndarray, k: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule over consecutive panels.

    ``edges`` may carry leading batch axes; the panel axis is the last one.
    Returns arrays of shape ``(..., (len(edges)-1) * k)``.
    """
    edges = np.asarray(edges, dtype=float)
    u, w = gauss_legendre(k)
    a = edges[..., :-1, None]
    h = np.diff(edges, axis=-1)[..., None]
    nodes = a + h * u
    weights = h * w
    shape = nodes.shape[:-2] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def log_panels(a: float, b: float, per_octave: int = 2) -> np.ndarray:
    """Geometric panel edges from a to b (a > 0)."""
    count = max(1, int(np.ceil(per_octave * np.log2(b / a))))
    return np.geomspace(a, b, count + 1)


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator number ``index`` derived from ``seed``.

    Work is split into fixed-size chunks, chunk i drawing from substream i,
    so results never depend on how chunks are scheduled.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def chunk_sizes(total: int, chunk: int) -> list[int]:
    full, rest = divmod(int(total), int(chunk))
    return [chunk] * full + ([rest] if rest else [])
