"""Concordance estimators for right-censored data.

Four estimators share one pair definition: subject ``i`` with an observed
event (``T_i < D_i``, ``T_i < Tmax``) and any ``j`` still under follow-up
after it (``T_i < X_j``). They differ in where the survival curves are
compared and in the per-pair weight:

========================  ===================  ==================
estimator                 compared at          weight of ``i``
========================  ===================  ==================
``harrell_fixed_t``       fixed ``t``          1
``uno_fixed_t``           fixed ``t``          ``G(T_i)**-2``
``antolini_ctd``          ``T_i``              1
``td_uno``                ``T_i``              ``G(T_i)**-2``
========================  ===================  ==================

A pair is concordant when ``S(t; Z_i) < S(t; Z_j)``. Equal predictions
count as discordant unless ``tie_mode="half"``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np

from ._pairs import pair_counts
from .censoring import StepSurvival
from .survival_core import Cohort, SurvivalMatrix

__all__ = [
    "MetricReport",
    "Decomposition",
    "harrell_fixed_t",
    "uno_fixed_t",
    "antolini_ctd",
    "td_uno",
    "decompose",
    "population_c",
    "score_columns",
]

TIE_MODES = ("strict", "half")


@dataclass(frozen=True)
class MetricReport:
    metric: str
    value: Optional[float]
    numerator: float
    denominator: float
    usable_pairs: int
    tie_pairs: int
    max_weight: float
    t: Optional[float] = None

    @property
    def undefined(self) -> bool:
        return self.value is None

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["undefined"] = self.undefined
        return rec


@dataclass(frozen=True)
class Decomposition:
    """Split of the uncensored-pair concordance by whether ``T_i < min(D_i, D_j)``.

    Pair counts are kept as exact rationals (half-credit ties make them
    half-integers), so :meth:`residual` is computed without rounding.
    """

    pairs_td: Fraction
    concordant_td: Fraction
    pairs_other: Fraction
    concordant_other: Fraction

    @staticmethod
    def _ratio(a, b):
        return None if b == 0 else a / b

    @property
    def pairs(self):
        return self.pairs_td + self.pairs_other

    @property
    def theta(self) -> Optional[float]:
        r = self._ratio(self.pairs_td, self.pairs)
        return None if r is None else float(r)

    @property
    def c_td(self) -> Optional[float]:
        r = self._ratio(self.concordant_td, self.pairs_td)
        return None if r is None else float(r)

    @property
    def c_tilde(self) -> Optional[float]:
        r = self._ratio(self.concordant_other, self.pairs_other)
        return None if r is None else float(r)

    @property
    def c_full(self) -> Optional[float]:
        r = self._ratio(self.concordant_td + self.concordant_other, self.pairs)
        return None if r is None else float(r)

    def residual(self) -> Optional[Fraction]:
        """Exact ``c_full - theta*c_td - (1-theta)*c_tilde``; ``None`` unless all parts are defined."""
        if self.pairs_td == 0 or self.pairs_other == 0:
            return None
        total = self.pairs
        theta = self.pairs_td / total
        return ((self.concordant_td + self.concordant_other) / total
                - theta * (self.concordant_td / self.pairs_td)
                - (1 - theta) * (self.concordant_other / self.pairs_other))

    def to_record(self) -> dict:
        return {"theta": self.theta, "c_td": self.c_td, "c_tilde": self.c_tilde,
                "c_full": self.c_full}


Predictions = Union[SurvivalMatrix, object]


def score_columns(predictions: Predictions, cohort: Cohort, times: np.ndarray
                  ) -> Callable[[np.ndarray], np.ndarray]:
    """Return ``cols -> (n, len(cols))`` scores at ``times[cols]``, increasing in survival.

    Matrices give probabilities directly. Models are evaluated on their
    log-survival scale when they provide one (avoids underflow ties); on a
    discretised cohort a period ``k`` is evaluated at the end of the period.
    """
    times = np.asarray(times, dtype=float)
    if isinstance(predictions, SurvivalMatrix):
        if predictions.values.shape[0] != cohort.n:
            raise ValueError(
                f"prediction matrix has {predictions.values.shape[0]} rows, cohort has {cohort.n}")
        if predictions.ids is not None and not np.array_equal(predictions.ids, cohort.ids):
            raise ValueError("prediction rows are not aligned with cohort ids")
        return lambda cols: predictions.at(times[cols])

    if hasattr(predictions, "log_survival"):
        fn = predictions.log_survival
    elif hasattr(predictions, "survival"):
        fn = predictions.survival
    elif callable(predictions):
        fn = predictions
    else:
        raise TypeError("predictions must be a SurvivalMatrix or a survival model")
    Z = cohort.covariates
    grid = cohort.grid

    def columns(cols):
        t = times[cols]
        if grid is not None:
            t = grid.period_end(t.astype(int))
        return np.asarray(fn(t, Z), dtype=float).reshape(Z.shape[0], t.size)

    return columns


def _check_tie_mode(tie_mode):
    if tie_mode not in TIE_MODES:
        raise ValueError(f"tie_mode must be one of {TIE_MODES}, got {tie_mode!r}")


def _usable(cohort: Cohort):
    # event flags already imply T_i < D_i and T_i < horizon
    return cohort.event & (cohort.observed_time < cohort.horizon)


def _weights(cohort: Cohort, usable, g_hat, left_limit):
    w = np.zeros(cohort.n)
    if not usable.any():
        return w
    t = cohort.observed_time[usable]
    if isinstance(g_hat, StepSurvival):
        g = g_hat(t, left_limit=left_limit)
    else:
        g = np.asarray(g_hat(t), dtype=float)
    bad = np.flatnonzero(~(g > 0))
    if bad.size:
        sid = cohort.ids[np.flatnonzero(usable)[bad[0]]]
        raise ValueError(
            f"censoring survival is {g[bad[0]]} at T={t[bad[0]]} of subject {sid}; "
            "clamp the estimate to a positive floor before weighting")
    w[usable] = g ** -2.0
    return w


def _report(metric, usable, comparable, concordant, tied, weights, tie_mode, t=None):
    u = np.flatnonzero(usable)
    credit = concordant[u] + (0.5 * tied[u] if tie_mode == "half" else 0)
    if weights is None:
        num = math.fsum(credit.tolist())
        den = math.fsum(comparable[u].tolist())
        max_w = 1.0 if u.size else 0.0
    else:
        w = weights[u]
        num = math.fsum((w * credit).tolist())
        den = math.fsum((w * comparable[u]).tolist())
        used = comparable[u] > 0
        max_w = float(w[used].max()) if used.any() else 0.0
    pairs = int(comparable[u].sum())
    value = num / den if den > 0 and pairs > 0 else None
    return MetricReport(metric, value, num, den, pairs, int(tied[u].sum()), max_w, t)


def _fixed_t(metric, cohort, predictions, t, weights, tie_mode, threads):
    _check_tie_mode(tie_mode)
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"evaluation time must be finite and nonnegative, got {t}")
    usable = _usable(cohort)
    cols = score_columns(predictions, cohort, np.array([t]))
    comp, conc, tied = pair_counts(cohort.observed_time, usable, np.zeros(cohort.n, dtype=int),
                                   cols, threads=threads)
    return _report(metric, usable, comp, conc, tied, weights, tie_mode, t=float(t))


def harrell_fixed_t(cohort: Cohort, predictions, t: float, tie_mode: str = "strict",
                    threads: int = 1) -> MetricReport:
    """Harrell's C-index with the survival probability at ``t`` as the risk score."""
    return _fixed_t("harrell_t", cohort, predictions, t, None, tie_mode, threads)


def uno_fixed_t(cohort: Cohort, predictions, t: float, g_hat, tie_mode: str = "strict",
                left_limit: bool = False, threads: int = 1) -> MetricReport:
    """Uno's IPCW C-index at fixed ``t``; each pair weighted by ``G(T_i)**-2``."""
    if t >= cohort.horizon:
        raise ValueError(f"t={t} must be below the horizon {cohort.horizon}")
    w = _weights(cohort, _usable(cohort), g_hat, left_limit)
    return _fixed_t("uno_t", cohort, predictions, t, w, tie_mode, threads)


def _time_dependent(metric, cohort, predictions, weights, tie_mode, threads, strategy="auto"):
    _check_tie_mode(tie_mode)
    usable = _usable(cohort)
    X = cohort.observed_time
    times = np.unique(X[usable])
    col_of = np.zeros(cohort.n, dtype=int)
    col_of[usable] = np.searchsorted(times, X[usable])
    cols = score_columns(predictions, cohort, times)
    comp, conc, tied = pair_counts(X, usable, col_of, cols, threads=threads, strategy=strategy)
    return _report(metric, usable, comp, conc, tied, weights, tie_mode)


def antolini_ctd(cohort: Cohort, predictions, tie_mode: str = "strict",
                 threads: int = 1) -> MetricReport:
    """Time-dependent concordance: curves compared at the earlier event time ``T_i``."""
    return _time_dependent("antolini", cohort, predictions, None, tie_mode, threads)


def td_uno(cohort: Cohort, predictions, g_hat, tie_mode: str = "strict",
           left_limit: bool = False, threads: int = 1, metric: str = "td_uno") -> MetricReport:
    """Time-dependent Uno's C-index: time-dependent concordance with ``G(T_i)**-2`` weights.

    ``g_hat`` is a (clamped) :class:`StepSurvival` or any callable giving the
    censoring tail probability; a zero weight base raises ``ValueError``.
    """
    w = _weights(cohort, _usable(cohort), g_hat, left_limit)
    return _time_dependent(metric, cohort, predictions, w, tie_mode, threads)


def decompose(cohort: Cohort, predictions, tie_mode: str = "strict",
              threads: int = 1) -> Decomposition:
    """Split concordance over pairs ``T_i < T_j, T_i < Tmax`` by ``T_i < min(D_i, D_j)``.

    Needs a cohort with known event and censoring times for every subject.
    """
    _check_tie_mode(tie_mode)
    if not cohort.full_knowledge:
        raise ValueError("decomposition needs both event and censoring times (simulated cohort)")
    T, D = cohort.event_time, cohort.censor_time
    first = np.isfinite(T) & (T < cohort.horizon)
    times = np.unique(T[first])
    col_of = np.zeros(cohort.n, dtype=int)
    col_of[first] = np.searchsorted(times, T[first])
    cols = score_columns(predictions, cohort, times)

    comp_all, conc_all, tied_all = pair_counts(T, first, col_of, cols, threads=threads)
    td_i = first & (T < D)
    comp_td, conc_td, tied_td = pair_counts(np.minimum(T, D), td_i, col_of, cols,
                                            threads=threads, key=T)

    half = Fraction(1, 2) if tie_mode == "half" else 0

    def total(comp, conc, tied, mask):
        return (Fraction(int(comp[mask].sum())),
                Fraction(int(conc[mask].sum())) + half * int(tied[mask].sum()))

    p_all, c_all = total(comp_all, conc_all, tied_all, first)
    p_td, c_td = total(comp_td, conc_td, tied_td, td_i)
    return Decomposition(p_td, c_td, p_all - p_td, c_all - c_td)


def population_c(model, generator, N: int, seed, tie_mode: str = "strict",
                 threads: int = 1) -> float:
    """Monte-Carlo concordance target from an uncensored sample of size ``N``.

    ``generator(n, rng)`` must return a full-knowledge :class:`Cohort`; its
    censoring times are discarded so every pair with ``T_i < T_j``,
    ``T_i < Tmax`` enters.
    """
    if N < 2:
        raise ValueError("need N >= 2")
    rng = np.random.default_rng(seed)
    cohort = generator(N, rng)
    uncensored = cohort.with_times(cohort.event_time, np.full(cohort.n, np.inf))
    if not uncensored.event.any():
        raise ValueError("generator produced no event before the horizon")
    rep = antolini_ctd(uncensored, model, tie_mode=tie_mode, threads=threads)
    if rep.undefined:
        raise ValueError("no comparable pairs in the reference sample")
    return rep.value
