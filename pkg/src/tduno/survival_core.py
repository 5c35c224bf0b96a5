"""Right-censored cohorts, administrative censoring and period discretisation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "Subject",
    "Cohort",
    "TimeGrid",
    "SurvivalMatrix",
    "discretize",
    "apply_administrative_censoring",
    "validate",
]


def _frozen(a, dtype=None):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Subject:
    id: str
    event_time: float
    censor_time: float
    observed_time: float
    event: bool
    covariates: tuple


@dataclass(frozen=True)
class TimeGrid:
    """Finite period boundaries ``0 = a_0 < a_1 < ... < a_{K-1}``.

    Period ``k`` is ``[a_{k-1}, a_k)`` and the last period ``K`` is
    ``[a_{K-1}, inf)``, so ``period_count == len(boundaries)``.
    """

    boundaries: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("time grid needs at least one boundary")
        if b[0] != 0.0:
            raise ValueError("first grid boundary must be 0")
        if not np.all(np.isfinite(b)):
            raise ValueError("grid boundaries must be finite; the last period is open")
        if np.any(np.diff(b) <= 0):
            raise ValueError("grid boundaries must be strictly increasing")
        object.__setattr__(self, "boundaries", _frozen(b))

    @classmethod
    def from_points(cls, points: Iterable[float]) -> "TimeGrid":
        """Build from a point list that may end with ``inf`` (as grids are usually written)."""
        pts = [float(p) for p in points]
        if pts and np.isinf(pts[-1]):
            pts = pts[:-1]
        return cls(np.array(pts))

    @property
    def period_count(self) -> int:
        return int(self.boundaries.size)

    @property
    def horizon_time(self) -> float:
        """Continuous time at which the last (administrative) period starts."""
        return float(self.boundaries[-1])

    def period(self, t):
        """Map times to 1-based periods; ``inf`` maps to the last period."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(np.isnan(t)):
            raise ValueError("times must be nonnegative")
        return np.searchsorted(self.boundaries, t, side="right").astype(float)

    def period_end(self, k):
        """Right boundary of period ``k`` (``inf`` for the last period)."""
        k = np.asarray(k, dtype=int)
        ends = np.append(self.boundaries[1:], np.inf)
        if np.any(k < 1) or np.any(k > self.period_count):
            raise ValueError("period index out of range")
        return ends[k - 1]


@dataclass(frozen=True)
class Cohort:
    """Immutable column-oriented cohort.

    ``event_time`` or ``censor_time`` is ``inf`` where unknown (real data only
    observes ``min(T, D)``); ``full_knowledge`` marks simulated cohorts where
    both are known. When ``grid`` is set, all times are period indices and
    ``horizon`` equals the period count.
    """

    ids: np.ndarray
    event_time: np.ndarray
    censor_time: np.ndarray
    observed_time: np.ndarray
    event: np.ndarray
    covariates: np.ndarray
    horizon: float
    grid: Optional[TimeGrid] = None
    full_knowledge: bool = True

    def __post_init__(self):
        n = len(self.observed_time)
        cov = np.asarray(self.covariates, dtype=float)
        if cov.ndim == 1:
            cov = cov.reshape(n, -1) if n else cov.reshape(0, 0)
        object.__setattr__(self, "ids", _frozen([str(i) for i in self.ids], dtype=object))
        object.__setattr__(self, "event_time", _frozen(self.event_time, float))
        object.__setattr__(self, "censor_time", _frozen(self.censor_time, float))
        object.__setattr__(self, "observed_time", _frozen(self.observed_time, float))
        object.__setattr__(self, "event", _frozen(self.event, bool))
        object.__setattr__(self, "covariates", _frozen(cov, float))
        object.__setattr__(self, "horizon", float(self.horizon))
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        lengths = {len(self.ids), len(self.event_time), len(self.censor_time),
                   len(self.event), self.covariates.shape[0], n}
        if len(lengths) != 1:
            raise ValueError("cohort columns have different lengths")

    @classmethod
    def from_times(cls, event_time, censor_time, covariates, horizon,
                   ids: Optional[Sequence] = None, grid: Optional[TimeGrid] = None) -> "Cohort":
        """Cohort with full knowledge of ``T`` and ``D``; ``X`` and flags are derived."""
        T = np.asarray(event_time, dtype=float)
        D = np.asarray(censor_time, dtype=float)
        if T.shape != D.shape:
            raise ValueError("event and censoring times differ in length")
        if np.any(T < 0) or np.any(D < 0) or np.any(np.isnan(T)) or np.any(np.isnan(D)):
            raise ValueError("times must be nonnegative")
        X = np.minimum(np.minimum(T, D), horizon)
        # ties T == D go to censoring
        event = (T < D) & (T < horizon)
        if ids is None:
            ids = [str(i + 1) for i in range(T.size)]
        return cls(ids, T, D, X, event, np.asarray(covariates, dtype=float).reshape(T.size, -1),
                   horizon, grid=grid, full_knowledge=True)

    @classmethod
    def from_observed(cls, observed_time, event, covariates, horizon,
                      ids: Optional[Sequence] = None, grid: Optional[TimeGrid] = None) -> "Cohort":
        """Cohort from ``(X, event)`` only, as read from real data."""
        X = np.asarray(observed_time, dtype=float)
        ev = np.asarray(event, dtype=bool)
        if np.any(X < 0) or np.any(np.isnan(X)):
            raise ValueError("times must be nonnegative")
        T = np.where(ev, X, np.inf)
        D = np.where(ev, np.inf, X)
        X = np.minimum(X, horizon)
        ev = ev & (T < horizon)
        if ids is None:
            ids = [str(i + 1) for i in range(X.size)]
        return cls(ids, T, D, X, ev, np.asarray(covariates, dtype=float).reshape(X.size, -1),
                   horizon, grid=grid, full_knowledge=False)

    @classmethod
    def from_subjects(cls, subjects: Sequence[Subject], horizon, grid=None,
                      full_knowledge=True) -> "Cohort":
        p = {len(s.covariates) for s in subjects}
        width = max(p) if p else 0
        cov = np.full((len(subjects), width), np.nan)
        for k, s in enumerate(subjects):
            cov[k, : len(s.covariates)] = s.covariates
        return cls([s.id for s in subjects],
                   [s.event_time for s in subjects],
                   [s.censor_time for s in subjects],
                   [s.observed_time for s in subjects],
                   [s.event for s in subjects],
                   cov, horizon, grid=grid, full_knowledge=full_knowledge)

    def __len__(self):
        return int(self.observed_time.size)

    @property
    def n(self) -> int:
        return len(self)

    @property
    def p(self) -> int:
        return int(self.covariates.shape[1]) if self.covariates.ndim == 2 else 0

    @property
    def is_discrete(self) -> bool:
        return self.grid is not None

    @property
    def subjects(self) -> list:
        return [
            Subject(self.ids[k], float(self.event_time[k]), float(self.censor_time[k]),
                    float(self.observed_time[k]), bool(self.event[k]),
                    tuple(float(z) for z in self.covariates[k]))
            for k in range(self.n)
        ]

    def censoring_rate(self) -> float:
        """Fraction censored strictly before the horizon (administrative censoring excluded)."""
        if self.n == 0:
            return float("nan")
        return float(np.mean(~self.event & (self.observed_time < self.horizon)))

    def take(self, index) -> "Cohort":
        index = np.asarray(index)
        return Cohort(self.ids[index], self.event_time[index], self.censor_time[index],
                      self.observed_time[index], self.event[index], self.covariates[index],
                      self.horizon, grid=self.grid, full_knowledge=self.full_knowledge)

    def with_times(self, event_time, censor_time) -> "Cohort":
        """Same subjects and covariates with new ``T``/``D``; flags recomputed."""
        return Cohort.from_times(event_time, censor_time, self.covariates, self.horizon,
                                 ids=self.ids, grid=self.grid)


def apply_administrative_censoring(cohort: Cohort, horizon: float) -> Cohort:
    """Clip follow-up at ``horizon``; events at or after it become censored."""
    horizon = float(horizon)
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    X = np.minimum(cohort.observed_time, horizon)
    event = cohort.event & (cohort.event_time < horizon)
    return Cohort(cohort.ids, cohort.event_time, cohort.censor_time, X, event,
                  cohort.covariates, horizon, grid=cohort.grid,
                  full_knowledge=cohort.full_knowledge)


def discretize(cohort: Cohort, grid: TimeGrid) -> Cohort:
    """Map all times to periods of ``grid``; the last period is administrative censoring.

    Event flags are recomputed on the period scale, so an event and a
    censoring falling in the same period count as censored.
    """
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid.from_points(grid)
    K = grid.period_count
    if cohort.is_discrete:
        # already on a period scale: re-map periods through their right ends
        if cohort.grid == grid:
            return cohort
        raise ValueError("cohort is already discretised on a different grid")
    if np.any(cohort.observed_time < 0):
        raise ValueError("negative times")
    T = grid.period(cohort.event_time)
    D = grid.period(cohort.censor_time)
    X = np.minimum(np.minimum(T, D), K)
    event = (T < D) & (T < K)
    return Cohort(cohort.ids, T, D, X, event, cohort.covariates, float(K), grid=grid,
                  full_knowledge=cohort.full_knowledge)


def validate(cohort: Cohort) -> list:
    """Return one human-readable string per broken invariant (empty if well-formed)."""
    problems = []
    H = cohort.horizon
    if cohort.covariates.size:
        # from_subjects pads short covariate rows with NaN
        for k in np.flatnonzero(np.isnan(cohort.covariates).any(axis=1)):
            problems.append(f"subject {cohort.ids[k]}: covariate vector length differs from p={cohort.p}")
    for k in range(cohort.n):
        sid = cohort.ids[k]
        T, D, X, ev = (cohort.event_time[k], cohort.censor_time[k],
                       cohort.observed_time[k], bool(cohort.event[k]))
        if T < 0 or D < 0 or X < 0:
            problems.append(f"subject {sid}: negative time")
            continue
        if X != min(T, D, H):
            problems.append(f"subject {sid}: observed time {X} != min(T, D, horizon) = {min(T, D, H)}")
        if ev != (T < D and T < H):
            problems.append(f"subject {sid}: event flag {ev} inconsistent with times")
        if X == H and ev:
            problems.append(f"subject {sid}: event at the horizon must be administratively censored")
        if cohort.is_discrete and X != int(X):
            problems.append(f"subject {sid}: non-integer period {X}")
    return problems


@dataclass(frozen=True)
class SurvivalMatrix:
    """Predicted survival probabilities ``values[i, k] = S(times[k]; Z_i)``.

    Evaluation at an arbitrary time uses the last grid time ``<= t`` (left
    step); before the first grid time the curve is 1. With period labels
    ``1..K`` this picks the column of the period containing ``t``.
    """

    times: np.ndarray
    values: np.ndarray
    ids: Optional[np.ndarray] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != times.size:
            raise ValueError("values must be n x len(times)")
        if np.any(np.diff(times) <= 0):
            raise ValueError("matrix times must be strictly increasing")
        if np.any(np.isnan(values)) or np.any(values < 0) or np.any(values > 1):
            raise ValueError("survival probabilities must lie in [0, 1]")
        if np.any(np.diff(values, axis=1) > 0):
            raise ValueError("survival curves must be non-increasing")
        object.__setattr__(self, "times", _frozen(times))
        object.__setattr__(self, "values", _frozen(values))
        if self.ids is not None:
            object.__setattr__(self, "ids", _frozen([str(i) for i in self.ids], dtype=object))

    @property
    def shape(self):
        return self.values.shape

    def column_index(self, t):
        return np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1

    def at(self, t) -> np.ndarray:
        """Columns for the requested times, shape ``(n, len(t))``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self.column_index(t)
        padded = np.hstack([np.ones((self.values.shape[0], 1)), self.values])
        return padded[:, idx + 1]
