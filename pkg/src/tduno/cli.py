"""Command line entry point: ``tduno {evaluate,simulate,datagen,summarize}``.

Exit codes: 0 success (undefined metrics are reported, not errors), 1 usage
or configuration error, 2 data error.
"""
from __future__ import annotations

import argparse
import sys
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from . import concordance as cc
from . import data_io
from .censoring import DEFAULT_EPSILON, clamp, reverse_km
from .datagen import (CENSORING_TABLE, DiscreteCensoring, NoCensoring, WeibullCensoring,
                      generate_cohort, tune_weibull_to_rate)
from .oracle import OracleModel, degrade
from .simharness import (GeneratorConfig, ScenarioConfig, build_spec, preset_config,
                         run_scenario, summarize)
from .survival_core import SurvivalMatrix

EXIT_USAGE = 1
EXIT_DATA = 2

METRIC_NAMES = {"harrell-t": "harrell_t", "uno-t": "uno_t", "antolini": "antolini",
                "td-uno": "td_uno"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _metric(name: str) -> str:
    key = name.replace("_", "-").lower()
    if key not in METRIC_NAMES:
        raise argparse.ArgumentTypeError(
            f"unknown metric {name!r}; choose from {', '.join(METRIC_NAMES)}")
    return METRIC_NAMES[key]


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tduno", description="Concordance estimators for censored survival data.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("evaluate", help="evaluate a prediction matrix on a cohort")
    ev.add_argument("--cohort", required=True, help="cohort file (id,time,event,z_1..)")
    ev.add_argument("--predictions", required=True, help="survival matrix file (id,t_1..)")
    ev.add_argument("--metric", action="append", type=_metric, dest="metrics",
                    help="harrell-t, uno-t, antolini or td-uno (repeatable; "
                         "default antolini and td-uno)")
    ev.add_argument("--t", action="append", type=float, dest="times", default=[],
                    help="evaluation time for harrell-t/uno-t (repeatable)")
    ev.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                    help="lower bound applied to the censoring survival estimate")
    ev.add_argument("--tmax", type=float, default=None,
                    help="administrative horizon; times at or beyond it are censored")
    ev.add_argument("--grid", default=None, help="file of discretisation points")
    ev.add_argument("--censoring-g", default=None,
                    help="time,value file with a known censoring survival function "
                         "(replaces the Kaplan-Meier estimate)")
    ev.add_argument("--tie-mode", choices=("strict", "half"), default="strict",
                    help="equal predictions count as discordant (strict) or half (half)")
    ev.add_argument("--allow-nonmonotone", action="store_true",
                    help="clip increasing prediction rows to their running minimum")
    ev.add_argument("--threads", type=_positive_int, default=1, help="worker threads")
    ev.add_argument("--out", default=None, help="output file (default standard output)")

    sm = sub.add_parser("simulate", help="run a replicated simulation scenario")
    sm.add_argument("--scenario", required=True, choices=("sim1", "sim2", "sim3", "custom"),
                    help="preset name, or custom together with --config")
    sm.add_argument("--config", default=None, help="scenario file (YAML or JSON)")
    sm.add_argument("--replications", type=_positive_int, default=None,
                    help="replications per censoring level")
    sm.add_argument("--n", type=int, default=None, help="test cohort size")
    sm.add_argument("--seed", type=int, default=None, help="master seed")
    sm.add_argument("--reference-n", type=int, default=None,
                    help="sample size of the population reference (0 disables)")
    sm.add_argument("--threads", type=_positive_int, default=1, help="worker threads")
    sm.add_argument("--out", default=None, help="long-format results (default standard output)")
    sm.add_argument("--summary", default=None, help="summary output file")

    dg = sub.add_parser("datagen", help="draw a simulated cohort")
    dg.add_argument("--spec", required=True,
                    help="generator file (YAML or JSON) or a preset name sim1/sim2/sim3")
    dg.add_argument("--n", type=int, required=True, help="number of subjects")
    dg.add_argument("--seed", type=int, required=True, help="random seed")
    dg.add_argument("--out", required=True, help="cohort output file")
    dg.add_argument("--censoring-rate", type=float, default=None,
                    help="target censoring rate reached by tuning a Weibull scale")
    dg.add_argument("--weibull-shape", type=float, default=0.8, help="Weibull shape")
    dg.add_argument("--censoring-table", default=None, choices=sorted(CENSORING_TABLE),
                    help="per-period censoring table row (discretised generators)")
    dg.add_argument("--permute-z", type=int, default=None,
                    help="shuffle event periods among subjects with period <= Z")
    dg.add_argument("--degradation", type=float, default=0.0,
                    help="noise level of the emitted oracle predictions")
    dg.add_argument("--emit-oracle", default=None,
                    help="also write the oracle survival matrix to this file")

    su = sub.add_parser("summarize", help="boxplot statistics of a long-format results file")
    su.add_argument("--in", dest="inp", required=True, help="long-format results file")
    su.add_argument("--out", default=None, help="summary file (default standard output)")
    return p


def _evaluate(a) -> int:
    grid = data_io.read_grid(a.grid) if a.grid else None
    cohort = data_io.read_cohort(a.cohort, horizon=a.tmax, grid=grid)
    matrix, clipped = data_io.read_predictions(a.predictions, cohort, a.allow_nonmonotone)
    if clipped:
        print(f"clipped {clipped} prediction entries to the running minimum", file=sys.stderr)
    metrics = a.metrics or ["antolini", "td_uno"]
    if any(m in ("harrell_t", "uno_t") for m in metrics) and not a.times:
        raise UsageError("harrell-t and uno-t need at least one --t")
    if not 0 < a.epsilon <= 1:
        raise UsageError("--epsilon must lie in (0, 1]")
    if a.censoring_g:
        g = clamp(data_io.read_step_function(a.censoring_g), a.epsilon)
    else:
        g = clamp(reverse_km(cohort), a.epsilon)
    reports = []
    for m in metrics:
        if m == "antolini":
            reports.append(cc.antolini_ctd(cohort, matrix, a.tie_mode, threads=a.threads))
        elif m == "td_uno":
            reports.append(cc.td_uno(cohort, matrix, g, a.tie_mode, threads=a.threads))
        elif m == "harrell_t":
            reports += [cc.harrell_fixed_t(cohort, matrix, t, a.tie_mode, threads=a.threads)
                        for t in a.times]
        else:
            reports += [cc.uno_fixed_t(cohort, matrix, t, g, a.tie_mode, threads=a.threads)
                        for t in a.times]
    data_io.write_reports(reports, a.out or sys.stdout)
    return 0


def _config_error(e: ValidationError) -> str:
    lines = []
    for err in e.errors():
        path = ".".join(str(x) for x in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "invalid scenario config\n  " + "\n  ".join(lines)


def _simulate(a) -> int:
    over = {}
    if a.replications is not None:
        over["replications"] = a.replications
    if a.n is not None:
        over["n_test"] = a.n
    if a.seed is not None:
        over["seed"] = a.seed
    if a.reference_n is not None:
        over["reference_n"] = a.reference_n
    if a.scenario == "custom":
        if not a.config:
            raise UsageError("--scenario custom needs --config")
        raw = data_io.read_config(a.config)
        raw.update(over)
        cfg = ScenarioConfig.model_validate(raw)
    else:
        if a.config:
            raise UsageError("--config is only used with --scenario custom")
        cfg = preset_config(a.scenario, **over)
    res = run_scenario(cfg, threads=a.threads)
    data_io.write_results(res.records, a.out or sys.stdout)
    if a.summary:
        data_io.write_summary(res.summaries, a.summary)
    if res.decomposition_failures:
        print(f"decomposition identity failed on {res.decomposition_failures} cohorts",
              file=sys.stderr)
    return 0


def _load_generator(spec_arg: str):
    if spec_arg in ("sim1", "sim2", "sim3"):
        return build_spec(spec_arg)
    raw = data_io.read_config(spec_arg)
    return build_spec(GeneratorConfig.model_validate(raw))


def _datagen(a) -> int:
    if a.n < 1:
        raise UsageError("--n must be at least 1")
    spec = _load_generator(a.spec)
    if a.censoring_rate is not None and a.censoring_table is not None:
        raise UsageError("choose one of --censoring-rate and --censoring-table")
    cens = NoCensoring()
    if a.censoring_table is not None:
        if spec.grid is None:
            raise UsageError("--censoring-table needs a discretised generator")
        cens = DiscreteCensoring(CENSORING_TABLE[a.censoring_table], kind="mass")
    elif a.censoring_rate:
        if not 0 < a.censoring_rate < 1:
            raise UsageError("--censoring-rate must lie in [0, 1)")
        cens, _ = tune_weibull_to_rate(spec, WeibullCensoring(a.weibull_shape, 1.0),
                                       a.censoring_rate, np.random.default_rng([a.seed, 99]))
    cohort = generate_cohort(spec, a.n, np.random.default_rng([a.seed, 0]), cens,
                             np.random.default_rng([a.seed, 1]), permute_z=a.permute_z,
                             rng_permute=np.random.default_rng([a.seed, 2]))
    data_io.write_cohort(cohort, a.out)
    if a.emit_oracle:
        if not 0 <= a.degradation <= 1:
            raise UsageError("--degradation must lie in [0, 1]")
        model = degrade(OracleModel(spec), a.degradation, seed=a.seed)
        data_io.write_predictions(oracle_matrix(model, cohort), a.emit_oracle)
    return 0


def oracle_matrix(model: OracleModel, cohort) -> SurvivalMatrix:
    """Oracle curves as a matrix: periods ``1..K-1`` (value at the period end) on
    discretised cohorts, otherwise the distinct observed event times."""
    if cohort.is_discrete:
        labels = np.arange(1, cohort.grid.period_count, dtype=float)
        at = cohort.grid.period_end(labels.astype(int))
    else:
        labels = np.unique(cohort.observed_time[cohort.event])
        if labels.size == 0:
            labels = np.array([0.0])
        at = labels
    return SurvivalMatrix(labels, model.survival(at, cohort.covariates), cohort.ids)


def _summarize(a) -> int:
    records = data_io.read_results(a.inp)
    groups = {}
    for r in records:
        groups.setdefault((r["scenario"], r["level"], r["metric"], r["t"]), []).append(
            None if r["undefined"] else r["value"])
    rows = [{"scenario": k[0], "level": k[1], "metric": k[2], "t": k[3], **summarize(v),
             "reference": None} for k, v in groups.items()]
    data_io.write_summary(rows, a.out or sys.stdout)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    handler = {"evaluate": _evaluate, "simulate": _simulate, "datagen": _datagen,
               "summarize": _summarize}[a.command]
    try:
        return handler(a)
    except UsageError as e:
        print(f"tduno {a.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as e:
        print(f"tduno {a.command}: {_config_error(e)}", file=sys.stderr)
        return EXIT_USAGE
    except (data_io.DataError, ValueError, OSError) as e:
        print(f"tduno {a.command}: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
