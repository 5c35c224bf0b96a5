"""Censoring tail function G(t) = P(D > t): reverse Kaplan-Meier, clamping, exact discrete G."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .survival_core import Cohort

__all__ = ["StepSurvival", "reverse_km", "clamp", "true_g_discrete", "mass_to_hazard",
           "DEFAULT_EPSILON"]

DEFAULT_EPSILON = 0.02


@dataclass(frozen=True)
class StepSurvival:
    """Right-continuous, non-increasing step function equal to 1 before the first jump.

    ``floor`` is the clamp level ``eps`` once :func:`clamp` has been applied
    (``None`` for a raw estimate).
    """

    jump_times: np.ndarray
    values: np.ndarray
    floor: Optional[float] = None

    def __post_init__(self):
        t = np.asarray(self.jump_times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("jump_times and values must be 1-d of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("jump times must be strictly increasing")
        if np.any(t < 0):
            raise ValueError("jump times must be nonnegative")
        if np.any(v < 0) or np.any(v > 1) or np.any(np.diff(v) > 0):
            raise ValueError("values must be non-increasing probabilities")
        for name, arr in (("jump_times", t), ("values", v)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __call__(self, t, left_limit: bool = False):
        """Evaluate ``G(t)``, or ``G(t-)`` with ``left_limit=True``."""
        t = np.asarray(t, dtype=float)
        side = "left" if left_limit else "right"
        idx = np.searchsorted(self.jump_times, t, side=side) - 1
        padded = np.concatenate([[1.0], self.values])
        return padded[idx + 1]

    def to_table(self) -> list:
        """``(time, value)`` rows, starting with ``(0, 1)`` unless there is a jump at 0."""
        rows = [] if (self.jump_times.size and self.jump_times[0] == 0) else [(0.0, 1.0)]
        rows.extend(zip(self.jump_times.tolist(), self.values.tolist()))
        return rows

    @classmethod
    def from_table(cls, rows, floor=None) -> "StepSurvival":
        rows = [(float(t), float(v)) for t, v in rows]
        if rows and rows[0] == (0.0, 1.0):
            rows = rows[1:]
        t = np.array([r[0] for r in rows])
        v = np.array([r[1] for r in rows])
        return cls(t, v, floor)


def reverse_km(cohort: Cohort) -> StepSurvival:
    """Kaplan-Meier estimate of the censoring tail function.

    Censorings are the subjects with ``event == False`` and ``X < horizon``;
    the risk set at ``s`` is ``#{X >= s}``, so events tied with a censoring at
    ``s`` stay in the risk set (events happen first).
    """
    if cohort.n == 0:
        raise ValueError("cannot estimate G from an empty cohort")
    X = cohort.observed_time
    cens = ~cohort.event & (X < cohort.horizon)
    times = np.unique(X[cens])
    if times.size == 0:
        return StepSurvival(np.empty(0), np.empty(0))
    sorted_x = np.sort(X)
    at_risk = X.size - np.searchsorted(sorted_x, times, side="left")
    counts = np.searchsorted(np.sort(X[cens]), times, side="right") - np.searchsorted(
        np.sort(X[cens]), times, side="left")
    values = np.cumprod(1.0 - counts / at_risk)
    return StepSurvival(times, values)


def clamp(g: StepSurvival, eps: float = DEFAULT_EPSILON) -> StepSurvival:
    """Pointwise ``max(g, eps)``, making ``g`` a member of the family bounded below by ``eps``."""
    if not (0 < eps <= 1):
        raise ValueError(f"epsilon must lie in (0, 1], got {eps}")
    values = np.maximum(g.values, eps)
    floor = eps if g.floor is None else max(eps, g.floor)
    return StepSurvival(g.jump_times, values, floor)


def true_g_discrete(period_hazards) -> StepSurvival:
    """Exact ``G(t) = prod_{s<=t} (1 - p_s)`` for per-period censoring hazards ``p_1..p_K``."""
    p = np.asarray(period_hazards, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("need at least one period hazard")
    if np.any(p < 0) or np.any(p > 1) or np.any(np.isnan(p)):
        raise ValueError("period hazards must lie in [0, 1]")
    return StepSurvival(np.arange(1, p.size + 1, dtype=float), np.cumprod(1.0 - p))


def mass_to_hazard(period_mass) -> np.ndarray:
    """Convert a per-period probability mass ``P(D = t)`` into hazards ``P(D = t | D >= t)``."""
    m = np.asarray(period_mass, dtype=float)
    if np.any(m < 0) or np.any(m > 1):
        raise ValueError("period probabilities must lie in [0, 1]")
    total = m.sum()
    if total > 1 + 1e-9:
        raise ValueError(f"period probabilities sum to {total} > 1")
    remaining = 1.0 - np.concatenate([[0.0], np.cumsum(m)[:-1]])
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(remaining > 1e-12, m / remaining, 1.0)
    return np.clip(h, 0.0, 1.0)
