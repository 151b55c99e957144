"""Result containers shared by the Monte Carlo routines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DomainError

__all__ = ["MomentEstimate", "mean_estimate"]


@dataclass(frozen=True)
class MomentEstimate:
    """A Monte Carlo estimate with its standard error and provenance seed.

    ``clip_report`` carries optional diagnostics (clipping counts, secondary
    estimates) and ``flags`` short machine-readable notes such as
    ``"zero_hits"``.
    """

    value: float
    std_err: float
    samples: int
    seed: int
    clip_report: dict[str, Any] | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not (self.std_err >= 0 or math.isnan(self.std_err)):
            raise DomainError("std_err must be nonnegative")
        if self.samples < 1:
            raise DomainError("samples must be at least 1")

    def as_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "value": self.value,
            "std_err": self.std_err,
            "samples": self.samples,
            "seed": self.seed,
        }
        if self.clip_report is not None:
            out["clip_report"] = self.clip_report
        if self.flags:
            out["flags"] = list(self.flags)
        return out


def mean_estimate(values: np.ndarray, seed: int, **extra: Any) -> MomentEstimate:
    """Sample mean and standard error of i.i.d. values."""
    values = np.asarray(values, dtype=float).ravel()
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else float("nan")
    return MomentEstimate(float(values.mean()), se, int(values.size), int(seed), **extra)
