"""Replicated simulation studies: one fixed model, test cohorts at several censoring levels.

A scenario draws ``replications`` independent test cohorts per censoring
level, evaluates the requested concordance estimators on each, and reduces
them to boxplot statistics. Seeds are derived from ``(seed, replication)``
for the event stream and ``(seed, replication, level)`` for the censoring
stream, so all levels of one replication share the same event times and the
results do not depend on the worker count.
"""
from __future__ import annotations

import math
import statistics
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import concordance as cc
from ._pairs import _map
from .censoring import StepSurvival, clamp, reverse_km
from .datagen import (CENSORING_TABLE, GRIDS, PRESETS, Bernoulli, DiscreteCensoring,
                      GompertzCphSpec, NoCensoring, Normal, WeibullCensoring,
                      generate_cohort, tune_weibull_to_rate)
from .oracle import OracleModel, degrade
from .survival_core import Cohort, TimeGrid

__all__ = [
    "ScenarioConfig",
    "ScenarioResult",
    "run_scenario",
    "per_period_profile",
    "split_real_data",
    "summarize",
    "preset_config",
    "build_spec",
    "METRICS",
]

METRICS = ("harrell_t", "uno_t", "antolini", "td_uno", "td_uno_trueG")
FIXED_T_METRICS = ("harrell_t", "uno_t")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CovariateConfig(_Strict):
    dist: Literal["bernoulli", "normal"]
    p: Optional[float] = None
    mean: float = 0.0
    sd: Optional[float] = None

    @model_validator(mode="after")
    def _params(self):
        if self.dist == "bernoulli" and (self.p is None or not 0 <= self.p <= 1):
            raise ValueError("bernoulli needs p in [0, 1]")
        if self.dist == "normal" and (self.sd is None or self.sd <= 0):
            raise ValueError("normal needs sd > 0")
        return self


class GeneratorConfig(_Strict):
    """Gompertz generator; ``preset`` supplies defaults that the other fields override."""

    preset: Optional[Literal["sim1", "sim2", "sim3"]] = None
    alpha: Optional[float] = None
    lam: Optional[float] = Field(default=None, gt=0)
    beta: Optional[List[float]] = None
    covariates: Optional[List[CovariateConfig]] = None
    horizon: Optional[float] = Field(default=None, gt=0)
    offset: Optional[float] = None
    alpha_rule: Optional[str] = None
    grid: Optional[Union[str, List[float]]] = None


class ModelConfig(_Strict):
    kind: Literal["oracle"] = "oracle"
    degradation: float = Field(default=0.0, ge=0, le=1)
    noise_seed: int = Field(default=0, ge=0)


class CensoringConfig(_Strict):
    """``weibull``: levels are target rates tuned on the Weibull scale.
    ``table``: levels are keys of a per-period probability table."""

    kind: Literal["weibull", "table", "none"]
    levels: List[str] = Field(min_length=1)
    shape: float = Field(default=0.8, gt=0)
    location: float = Field(default=0.0, ge=0)
    table: Optional[Dict[str, List[float]]] = None
    table_kind: Literal["mass", "hazard"] = "mass"

    @model_validator(mode="after")
    def _levels(self):
        if self.kind == "weibull":
            for lv in self.levels:
                r = _parse_rate(lv)
                if not 0 <= r < 1:
                    raise ValueError(f"censoring level {lv!r} must be a rate in [0, 1)")
        elif self.kind == "table":
            table = self.table or CENSORING_TABLE
            missing = [lv for lv in self.levels if lv not in table]
            if missing:
                raise ValueError(f"levels {missing} not found in the censoring table")
        return self


class ScenarioConfig(_Strict):
    name: str = "custom"
    generator: Union[Literal["sim1", "sim2", "sim3"], GeneratorConfig]
    model: ModelConfig = ModelConfig()
    permute_z: Optional[int] = Field(default=None, ge=0)
    censoring: CensoringConfig
    n_test: int = Field(ge=2)
    replications: int = Field(ge=1)
    seed: int = Field(default=0, ge=0)
    metrics: List[Literal["harrell_t", "uno_t", "antolini", "td_uno", "td_uno_trueG"]] = Field(
        default_factory=lambda: ["antolini", "td_uno"], min_length=1)
    fixed_t: Union[Literal["all"], List[float]] = Field(default_factory=list)
    epsilon: float = Field(default=0.02, gt=0, le=1)
    tie_mode: Literal["strict", "half"] = "strict"
    reference_n: int = Field(default=100_000, ge=0)
    audit_decomposition: bool = True

    @field_validator("metrics")
    @classmethod
    def _unique(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("metrics must not repeat")
        return v

    @model_validator(mode="after")
    def _fixed_t_needed(self):
        if any(m in FIXED_T_METRICS for m in self.metrics) and not self.fixed_t:
            raise ValueError("harrell_t and uno_t need fixed_t values")
        return self


def _parse_rate(label: str) -> float:
    s = str(label).strip()
    return float(s[:-1]) / 100.0 if s.endswith("%") else float(s)


def build_spec(gen: Union[str, GeneratorConfig]) -> GompertzCphSpec:
    """Turn a preset name or generator section into a :class:`GompertzCphSpec`."""
    if isinstance(gen, str):
        return PRESETS[gen]
    base = PRESETS[gen.preset] if gen.preset else None
    pick = lambda name: getattr(gen, name) if getattr(gen, name) is not None else (
        getattr(base, name) if base is not None else None)
    if gen.covariates is not None:
        covs = tuple(Bernoulli(c.p) if c.dist == "bernoulli" else Normal(c.mean, c.sd)
                     for c in gen.covariates)
    else:
        covs = base.covariates if base is not None else None
    if gen.grid is None:
        grid = base.grid if base is not None else None
    elif isinstance(gen.grid, str):
        if gen.grid not in GRIDS:
            raise ValueError(f"unknown grid {gen.grid!r}")
        grid = GRIDS[gen.grid]
    else:
        grid = TimeGrid.from_points(gen.grid)
    missing = [k for k, v in (("lam", pick("lam")), ("beta", pick("beta")),
                              ("covariates", covs), ("horizon", pick("horizon"))) if v is None]
    if missing:
        raise ValueError(f"generator is missing {missing}")
    return GompertzCphSpec(alpha=pick("alpha"), lam=pick("lam"), beta=tuple(pick("beta")),
                           covariates=covs, horizon=pick("horizon"),
                           offset=pick("offset") or 0.0, alpha_rule=pick("alpha_rule"),
                           grid=grid)


_SIM1_RATES = ["0%", "4%", "25%", "45%", "62%", "75%"]


def preset_config(name: str, **overrides) -> ScenarioConfig:
    """Scenario presets mirroring the three simulation studies."""
    if name == "sim1":
        base = dict(name="sim1", generator="sim1", model=ModelConfig(degradation=0.3, noise_seed=7),
                    censoring=CensoringConfig(kind="weibull", levels=_SIM1_RATES, shape=0.8),
                    n_test=1000, replications=100,
                    metrics=["antolini", "td_uno", "td_uno_trueG"])
    elif name == "sim2":
        base = dict(name="sim2", generator="sim2", permute_z=7,
                    censoring=CensoringConfig(kind="table", levels=list(CENSORING_TABLE)),
                    n_test=2000, replications=100, tie_mode="half",
                    metrics=["antolini", "td_uno", "td_uno_trueG"])
    elif name == "sim3":
        base = dict(name="sim3", generator="sim3",
                    censoring=CensoringConfig(kind="none", levels=["0%"]),
                    n_test=1000, replications=100, fixed_t="all",
                    metrics=["uno_t", "antolini", "td_uno"])
    else:
        raise ValueError(f"unknown preset {name!r}; choose sim1, sim2 or sim3")
    base.update(overrides)
    return ScenarioConfig(**base)


@dataclass
class ScenarioResult:
    records: List[dict]
    summaries: List[dict]
    reference: Optional[float]
    warnings: List[dict] = field(default_factory=list)
    decomposition_checked: int = 0
    decomposition_failures: int = 0
    censoring_rates: Dict[str, float] = field(default_factory=dict)


def summarize(values: Sequence[Optional[float]]) -> dict:
    """Median, quartiles (linear interpolation) and sample sd of the defined values."""
    if len(values) == 0:
        raise ValueError("cannot summarise an empty list")
    defined = np.array([v for v in values if v is not None and not (
        isinstance(v, float) and math.isnan(v))], dtype=float)
    out = {"count": int(defined.size), "undefined": len(values) - int(defined.size)}
    if defined.size == 0:
        out.update(median=None, q1=None, q3=None, sd=None)
        return out
    q1, med, q3 = np.quantile(defined, [0.25, 0.5, 0.75])
    sd = statistics.stdev(defined.tolist()) if defined.size > 1 else 0.0
    out.update(median=float(med), q1=float(q1), q3=float(q3), sd=sd)
    return out


def _censoring_models(cfg: ScenarioConfig, spec: GompertzCphSpec) -> Dict[str, object]:
    c = cfg.censoring
    out = {}
    if c.kind == "none":
        return {lv: NoCensoring() for lv in c.levels}
    if c.kind == "table":
        table = c.table or CENSORING_TABLE
        return {lv: DiscreteCensoring(tuple(table[lv]), kind=c.table_kind) for lv in c.levels}
    template = WeibullCensoring(c.shape, 1.0, c.location)
    for i, lv in enumerate(c.levels):
        rate = _parse_rate(lv)
        if rate == 0:
            out[lv] = NoCensoring()
        else:
            tuned, _ = tune_weibull_to_rate(spec, template, rate,
                                            np.random.default_rng([cfg.seed, 99]))
            out[lv] = tuned
    return out


def _fixed_times(cfg, spec) -> List[float]:
    if cfg.fixed_t == "all":
        if spec.grid is None:
            raise ValueError("fixed_t='all' needs a discretised generator")
        return [float(k) for k in range(1, spec.grid.period_count)]
    return [float(t) for t in cfg.fixed_t]


def _record(cfg, level, rep, rep_obj: cc.MetricReport, metric=None):
    return {"scenario": cfg.name, "level": level, "replication": rep,
            "metric": metric or rep_obj.metric, "t": rep_obj.t, "value": rep_obj.value,
            "usable_pairs": rep_obj.usable_pairs, "undefined": rep_obj.undefined}


def _model(cfg: ScenarioConfig, spec: GompertzCphSpec) -> OracleModel:
    return degrade(OracleModel(spec), cfg.model.degradation, seed=cfg.model.noise_seed)


def _cohort(cfg, spec, cens, rep, level_index):
    return generate_cohort(
        spec, cfg.n_test, np.random.default_rng([cfg.seed, rep, 0]), cens,
        np.random.default_rng([cfg.seed, rep, 1, level_index]),
        permute_z=cfg.permute_z, rng_permute=np.random.default_rng([cfg.seed, rep, 2]))


def _evaluate(cfg, spec, model, cens, level, cohort, rep, times):
    recs = []
    g_true = None
    for metric in cfg.metrics:
        if metric == "antolini":
            recs.append(_record(cfg, level, rep, cc.antolini_ctd(cohort, model, cfg.tie_mode)))
        elif metric == "td_uno":
            g = clamp(reverse_km(cohort), cfg.epsilon)
            recs.append(_record(cfg, level, rep, cc.td_uno(cohort, model, g, cfg.tie_mode)))
        elif metric == "td_uno_trueG":
            g_true = g_true or _clamped_true_g(cens, spec, cfg.epsilon)
            recs.append(_record(cfg, level, rep, cc.td_uno(cohort, model, g_true, cfg.tie_mode,
                                                           metric="td_uno_trueG")))
        elif metric == "harrell_t":
            for t in times:
                recs.append(_record(cfg, level, rep,
                                    cc.harrell_fixed_t(cohort, model, t, cfg.tie_mode)))
        elif metric == "uno_t":
            g = clamp(reverse_km(cohort), cfg.epsilon)
            for t in times:
                recs.append(_record(cfg, level, rep,
                                    cc.uno_fixed_t(cohort, model, t, g, cfg.tie_mode)))
    return recs


def _clamped_true_g(cens, spec, eps):
    g = cens.true_g(spec.grid)
    if isinstance(g, StepSurvival):
        return clamp(g, eps)
    return lambda t: np.maximum(g(t), eps)


def run_scenario(cfg: ScenarioConfig, threads: int = 1) -> ScenarioResult:
    """Evaluate every (level, replication) cell; output order is (level, replication, metric, t)."""
    spec = build_spec(cfg.generator)
    model = _model(cfg, spec)
    cens_models = _censoring_models(cfg, spec)
    levels = list(cfg.censoring.levels)
    times = _fixed_times(cfg, spec) if any(m in FIXED_T_METRICS for m in cfg.metrics) else []
    if spec.grid is None and times:
        bad = [t for t in times if t >= spec.horizon]
    else:
        bad = [t for t in times if spec.grid is not None and t >= spec.grid.period_count]
    if bad:
        raise ValueError(f"fixed_t values {bad} are not below the horizon")

    def task(rep):
        recs, audits, fails, rates = [], 0, 0, []
        for li, lv in enumerate(levels):
            cohort = _cohort(cfg, spec, cens_models[lv], rep, li)
            rates.append(cohort.censoring_rate())
            recs.extend(_evaluate(cfg, spec, model, cens_models[lv], lv, cohort, rep, times))
            if cfg.audit_decomposition:
                d = cc.decompose(cohort, model, cfg.tie_mode)
                r = d.residual()
                if r is not None:
                    audits += 1
                    fails += int(r != 0)
        return recs, audits, fails, rates

    outs = _map(task, list(range(cfg.replications)), threads)
    by_level: Dict[str, List[dict]] = {lv: [] for lv in levels}
    checked = failed = 0
    rate_acc = {lv: [] for lv in levels}
    for recs, a, f, rates in outs:
        checked += a
        failed += f
        for r in recs:
            by_level[r["level"]].append(r)
        for lv, rt in zip(levels, rates):
            rate_acc[lv].append(rt)
    records = [r for lv in levels for r in by_level[lv]]

    reference = None
    if cfg.reference_n >= 2:
        reference = cc.population_c(
            model, lambda n, rng: generate_cohort(spec, n, rng, permute_z=cfg.permute_z),
            cfg.reference_n, [cfg.seed, 98], tie_mode=cfg.tie_mode, threads=threads)

    summaries, warns = _summaries(cfg, records, reference)
    for w in warns:
        warnings.warn(w["message"], RuntimeWarning, stacklevel=2)
    return ScenarioResult(records, summaries, reference, warns, checked, failed,
                          {lv: float(np.mean(v)) for lv, v in rate_acc.items()})


def _summaries(cfg, records, reference) -> Tuple[List[dict], List[dict]]:
    keys: Dict[tuple, List[Optional[float]]] = {}
    for r in records:
        keys.setdefault((r["level"], r["metric"], r["t"]), []).append(r["value"])
    summaries, warns = [], []
    for (lv, metric, t), vals in keys.items():
        s = summarize(vals)
        summaries.append({"scenario": cfg.name, "level": lv, "metric": metric, "t": t, **s,
                          "reference": reference})
        if s["undefined"] * 2 > len(vals):
            warns.append({"scenario": cfg.name, "level": lv, "metric": metric, "t": t,
                          "message": f"{metric} undefined in {s['undefined']} of {len(vals)} "
                                     f"replications at level {lv}"})
    return summaries, warns


def per_period_profile(cfg: ScenarioConfig, threads: int = 1) -> List[dict]:
    """``uno_fixed_t`` at every period ``1..K-1`` for each level and replication."""
    spec = build_spec(cfg.generator)
    if spec.grid is None:
        raise ValueError("per-period profile needs a discretised generator")
    sub = cfg.model_copy(update={"metrics": ["uno_t"], "fixed_t": "all", "reference_n": 0,
                                 "audit_decomposition": False})
    return run_scenario(sub, threads).records


def split_real_data(cohort: Cohort, train_frac: float, stratify_by_censoring: bool = True,
                    seed=0) -> Tuple[Cohort, Cohort]:
    """Random train/test split; with stratification each part keeps the censoring rate."""
    if not 0 < train_frac < 1:
        raise ValueError("train_frac must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    if stratify_by_censoring:
        strata = [np.flatnonzero(cohort.event), np.flatnonzero(~cohort.event)]
        if any(0 < s.size < 2 for s in strata):
            raise ValueError("cohort too small to stratify by censoring status")
    else:
        strata = [np.arange(cohort.n)]
    train, test = [], []
    for s in strata:
        if s.size == 0:
            continue
        perm = rng.permutation(s)
        k = int(round(train_frac * s.size))
        k = min(max(k, 1), s.size - 1)
        train.append(perm[:k])
        test.append(perm[k:])
    tr, te = np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
    if tr.size == 0 or te.size == 0:
        raise ValueError("split leaves an empty part")
    return cohort.take(tr), cohort.take(te)
