"""Synthetic cohorts: Gompertz proportional-hazards event times, Weibull or per-period censoring."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .censoring import StepSurvival, mass_to_hazard, true_g_discrete
from .survival_core import Cohort, TimeGrid, discretize

__all__ = [
    "Bernoulli",
    "Normal",
    "GompertzCphSpec",
    "WeibullCensoring",
    "DiscreteCensoring",
    "NoCensoring",
    "gen_covariates",
    "gen_event_time",
    "gen_event_time_sim2",
    "nonph_alpha",
    "gen_censoring",
    "tune_weibull_to_rate",
    "permute_early_events",
    "generate_cohort",
    "GRIDS",
    "CENSORING_TABLE",
    "SIM1",
    "SIM2",
    "SIM3",
    "SIM1_LEVELS",
    "SIM2_LEVELS",
    "PRESETS",
]


@dataclass(frozen=True)
class Bernoulli:
    q: float

    def __post_init__(self):
        if not 0 <= self.q <= 1:
            raise ValueError(f"Bernoulli probability {self.q} outside [0, 1]")

    def draw(self, rng, n):
        return (rng.random(n) < self.q).astype(float)


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("standard deviation must be nonnegative")

    def draw(self, rng, n):
        return rng.normal(self.mu, self.sigma, n)


Marginal = Union[Bernoulli, Normal]


def nonph_alpha(Z) -> np.ndarray:
    """Covariate-dependent Gompertz rate: 0.1 when ``Z4*Z5 <= 0``, else 0.4."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] < 5:
        raise ValueError("the switch rule needs at least five covariates")
    return np.where(Z[:, 3] * Z[:, 4] <= 0, 0.1, 0.4)


ALPHA_RULES = {"z4z5_switch": nonph_alpha}


@dataclass(frozen=True)
class GompertzCphSpec:
    """Gompertz baseline with hazard ``lam * exp(alpha*t) * exp(offset + beta'Z)``.

    ``alpha_rule`` (a key of ``ALPHA_RULES``) overrides the constant
    ``alpha`` per subject, which breaks proportional hazards.
    """

    alpha: Optional[float]
    lam: float
    beta: Tuple[float, ...]
    covariates: Tuple[Marginal, ...]
    horizon: float
    offset: float = 0.0
    alpha_rule: Optional[str] = None
    grid: Optional[TimeGrid] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if len(self.beta) != len(self.covariates):
            raise ValueError("beta length must equal the covariate count")
        if self.alpha_rule is None:
            if self.alpha is None or self.alpha == 0:
                raise ValueError("alpha must be nonzero")
        elif self.alpha_rule not in ALPHA_RULES:
            raise ValueError(f"unknown alpha rule {self.alpha_rule!r}")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @property
    def p(self) -> int:
        return len(self.beta)

    def linear_predictor(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return self.offset + Z @ np.asarray(self.beta)

    def alpha_of(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if self.alpha_rule is not None:
            return ALPHA_RULES[self.alpha_rule](Z)
        return np.full(Z.shape[0], float(self.alpha))


def gen_covariates(spec: GompertzCphSpec, rng, n: int) -> np.ndarray:
    """Independent draws from each declared marginal, shape ``(n, p)``."""
    if not spec.covariates:
        return np.zeros((n, 0))
    return np.column_stack([m.draw(rng, n) for m in spec.covariates])


def _invert(alpha, lam_eta, v):
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0) or np.any(v > 1):
        raise ValueError("v must lie in (0, 1]")
    arg = -alpha * np.log(v) / lam_eta
    if np.any(1 + arg <= 0):
        raise ValueError("nonpositive log argument in event-time inversion")
    return np.log1p(arg) / alpha


def gen_event_time(spec: GompertzCphSpec, Z, v) -> np.ndarray:
    """Invert the cumulative hazard: ``(lam/alpha) e^{eta} (e^{alpha T} - 1) = -log v``."""
    eta = spec.linear_predictor(Z)
    return _invert(spec.alpha_of(Z), spec.lam * np.exp(eta), v)


def gen_event_time_sim2(alpha: float, lam: float, Z, v) -> np.ndarray:
    """Event times with the fixed single-covariate predictor ``5 - 4Z``."""
    Z = np.asarray(Z, dtype=float).reshape(-1)
    return _invert(alpha, lam * np.exp(5.0 - 4.0 * Z), v)


@dataclass(frozen=True)
class NoCensoring:
    def draw(self, rng, n, periods=None):
        return np.full(n, np.inf)

    def true_g(self, grid=None):
        return StepSurvival(np.empty(0), np.empty(0))


@dataclass(frozen=True)
class WeibullCensoring:
    """``D = location + scale * W`` with ``W ~ Weibull(shape)``."""

    shape: float
    scale: float
    location: float = 0.0

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0 and self.location >= 0):
            raise ValueError("Weibull needs shape > 0, scale > 0, location >= 0")

    def draw(self, rng, n, periods=None):
        return self.location + self.scale * rng.weibull(self.shape, n)

    def tail(self, t):
        """``P(D > t)``."""
        t = np.asarray(t, dtype=float)
        z = np.clip(t - self.location, 0, None) / self.scale
        return np.exp(-(z ** self.shape))

    def true_g(self, grid: Optional[TimeGrid] = None):
        """Exact censoring tail; on a grid, ``P(period(D) > k) = P(D >= a_k)``."""
        if grid is None:
            return self.tail
        k = np.arange(1, grid.period_count, dtype=float)
        return StepSurvival(k, self.tail(grid.period_end(k.astype(int))))


@dataclass(frozen=True)
class DiscreteCensoring:
    """Censoring period drawn per period: ``kind="hazard"`` gives ``P(D=t | D>=t)``,
    ``kind="mass"`` gives ``P(D=t)``. Without a success by the last listed period
    the subject is censored in the last period."""

    probs: Tuple[float, ...]
    kind: str = "hazard"

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0) or np.any(p > 1) or np.any(np.isnan(p)):
            raise ValueError("period probabilities must lie in [0, 1]")
        if self.kind not in ("hazard", "mass"):
            raise ValueError("kind must be 'hazard' or 'mass'")
        if self.kind == "mass" and p.sum() > 1 + 1e-9:
            raise ValueError("period masses sum above 1")
        object.__setattr__(self, "probs", tuple(float(x) for x in p))

    @property
    def hazards(self) -> np.ndarray:
        p = np.asarray(self.probs)
        return p if self.kind == "hazard" else mass_to_hazard(p)

    def true_g(self, grid=None) -> StepSurvival:
        return true_g_discrete(self.hazards)

    def draw(self, rng, n, periods=None):
        h = self.hazards
        K = h.size if periods is None else periods
        # first success of independent per-period Bernoulli(h_t) draws
        success = rng.random((n, h.size)) < h
        first = np.where(success.any(axis=1), success.argmax(axis=1) + 1, K)
        return np.minimum(first, K).astype(float)


CensoringSpec = Union[WeibullCensoring, DiscreteCensoring, NoCensoring]


def gen_censoring(spec: CensoringSpec, rng, n: int, periods: Optional[int] = None) -> np.ndarray:
    return spec.draw(rng, n, periods)


def _draw_events(spec: GompertzCphSpec, rng, n):
    Z = gen_covariates(spec, rng, n)
    v = 1.0 - rng.random(n)  # (0, 1]
    return Z, gen_event_time(spec, Z, v)


def generate_cohort(spec: GompertzCphSpec, n: int, rng,
                    censoring: Optional[CensoringSpec] = None, rng_censor=None,
                    permute_z: Optional[int] = None, rng_permute=None) -> Cohort:
    """Draw a cohort; discretised on ``spec.grid`` when the spec has one.

    Continuous censoring times are drawn only for subjects with ``T < horizon``
    (the rest are administratively censored). Discrete censoring is drawn
    directly on the period scale.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    censoring = censoring or NoCensoring()
    rng_censor = rng if rng_censor is None else rng_censor
    rng_permute = rng if rng_permute is None else rng_permute
    Z, T = _draw_events(spec, rng, n)
    grid = spec.grid
    if isinstance(censoring, DiscreteCensoring):
        if grid is None:
            raise ValueError("discrete censoring needs a discretisation grid")
        D = censoring.draw(rng_censor, n, grid.period_count)
        cohort = Cohort.from_times(grid.period(T), D, Z, float(grid.period_count), grid=grid)
    else:
        D = np.full(n, np.inf)
        early = T < spec.horizon
        D[early] = censoring.draw(rng_censor, int(early.sum()))
        cohort = Cohort.from_times(T, D, Z, spec.horizon)
        if grid is not None:
            cohort = discretize(cohort, grid)
    if permute_z is not None:
        cohort = permute_early_events(cohort, permute_z, rng_permute)
    return cohort


def tune_weibull_to_rate(spec: GompertzCphSpec, template: WeibullCensoring, target_rate: float,
                         rng, n_probe: int = 100_000, tol: float = 0.005,
                         max_iter: int = 200) -> Tuple[WeibullCensoring, float]:
    """Bisect the Weibull scale until the pre-horizon censoring rate is within ``tol`` of target.

    The probe cohort and the Weibull uniforms are drawn once, so the rate is
    monotone in the scale.
    """
    if not 0 <= target_rate < 1:
        raise ValueError("target censoring rate must lie in [0, 1)")
    Z, T = _draw_events(spec, rng, n_probe)
    W = rng.weibull(template.shape, n_probe)
    grid = spec.grid
    early = T < spec.horizon

    def rate(scale):
        D = np.where(early, template.location + scale * W, np.inf)
        if grid is not None:
            Tp, Dp, K = grid.period(T), grid.period(D), grid.period_count
            event = (Tp < Dp) & (Tp < K)
            X = np.minimum(np.minimum(Tp, Dp), K)
            return float(np.mean(~event & (X < K)))
        X = np.minimum(np.minimum(T, D), spec.horizon)
        return float(np.mean(~((T < D) & early) & (X < spec.horizon)))

    lo, hi = np.log(1e-6), np.log(1e15)   # rate(lo) high, rate(hi) low
    r_lo, r_hi = rate(np.exp(lo)), rate(np.exp(hi))
    if not (r_hi - tol <= target_rate <= r_lo + tol):
        raise ValueError(f"censoring rate {target_rate} unreachable (range {r_hi:.3f}..{r_lo:.3f})")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r = rate(np.exp(mid))
        if abs(r - target_rate) <= tol:
            return WeibullCensoring(template.shape, float(np.exp(mid)), template.location), r
        if r > target_rate:
            lo = mid
        else:
            hi = mid
    raise ValueError(f"could not reach censoring rate {target_rate} within {max_iter} steps")


def permute_early_events(cohort: Cohort, z: int, rng) -> Cohort:
    """Shuffle event periods among subjects whose event period is ``<= z``.

    Covariates stay in place, so the link between covariates and early
    event times is broken; flags and observed times are recomputed.
    """
    if not cohort.is_discrete:
        raise ValueError("permutation works on discretised cohorts")
    if not cohort.full_knowledge:
        raise ValueError("permutation needs the event periods of every subject")
    T = np.array(cohort.event_time)
    idx = np.flatnonzero(T <= z)
    if idx.size < 2:
        return cohort
    T[idx] = T[rng.permutation(idx)]
    return cohort.with_times(T, cohort.censor_time)


# --- presets -----------------------------------------------------------------

GRIDS = {
    "D1": TimeGrid.from_points([0, 5, 10, 15, 20, 25, 30, 40, 50, 60, 70, np.inf]),
    "D2": TimeGrid.from_points([0, 4, 7, 9.5, 11.5, 13, 14, 16, 17, 19, 21, 23, 25, 28, 35,
                                np.inf]),
    "D3": TimeGrid.from_points([0, 2, 3, 3.5, 3.75, 4, 5, 7.5, 10, 15, 20, 30, 50, 80, 90, 150,
                                np.inf]),
    "D4": TimeGrid.from_points([0, 14.25, 28.5, 42.75, 57, 71.25, 85.5, 99.75, 114, 128.25,
                                142.5, 156.75, 171, 185.25, 199.5, np.inf]),
    "D5": TimeGrid.from_points([0, 74, 152.003, 234.465, 321.928, 415.039, 514.573, 621.488,
                                736.966, 862.497, 1000, np.inf]),
}

# probability of being censored in each of the 15 periods, keyed by nominal rate
CENSORING_TABLE = {
    "0%": (0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1),
    "9%": (0.001, 0.009, 0.01, 0.01, 0.05, 0.03, 0.03, 0.01, 0.1, 0.1, 0.1, 0.15, 0.2, 0.2, 0),
    "40%": (0.001, 0.2, 0.15, 0.1, 0.1, 0.009, 0.01, 0.01, 0.05, 0.03, 0.03, 0.01, 0.1, 0.2, 0),
    "56%": (0.25, 0.15, 0.15, 0.1, 0.05, 0.03, 0.03, 0.01, 0.01, 0.01, 0.001, 0.009, 0.1, 0.1, 0),
    "64%": (0.3, 0.2, 0.15, 0.1, 0.05, 0.03, 0.03, 0.01, 0.01, 0.01, 0.001, 0.009, 0.05, 0.05, 0),
    "73%": (0.4, 0.2, 0.15, 0.1, 0.05, 0.03, 0.01, 0.01, 0.01, 0.01, 0.001, 0.009, 0.01, 0.01, 0),
}

SIM1_BETA = (3.0, 0.5, 0.8, 0.25, 0.95)
SIM1_COVARIATES = (Bernoulli(0.1), Bernoulli(0.5), Bernoulli(0.3), Normal(0.0, 1.0),
                   Normal(0.0, 0.5))

SIM1 = GompertzCphSpec(alpha=0.001, lam=0.1, beta=SIM1_BETA, covariates=SIM1_COVARIATES,
                       horizon=70.0, grid=GRIDS["D1"])
# exponent rate 0.3, baseline 0.0005: events spread over the D2 periods, ~70% in periods <= 7
SIM2 = GompertzCphSpec(alpha=0.3, lam=0.0005, beta=(-4.0,), covariates=(Bernoulli(0.5),),
                       horizon=35.0, offset=5.0, grid=GRIDS["D2"])
SIM3 = GompertzCphSpec(alpha=None, lam=0.1, beta=SIM1_BETA, covariates=SIM1_COVARIATES,
                       horizon=150.0, alpha_rule="z4z5_switch", grid=GRIDS["D3"])

SIM1_LEVELS = (0.0, 0.04, 0.25, 0.45, 0.62, 0.75)
SIM2_LEVELS = tuple(CENSORING_TABLE)

PRESETS = {"sim1": SIM1, "sim2": SIM2, "sim3": SIM3}
