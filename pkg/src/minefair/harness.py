"""Model vs. simulation vs. baseline comparison, and seed/parameter sweeps."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .fairness import (
    DEFAULT_EPSILON,
    DEFAULT_MAX_ITER,
    FairnessReport,
    baseline_fairness,
    model_fairness,
)
from .model import ModelConfig, NetworkModel, TieBreakRule
from .simulator import DEFAULT_TRIM_HEIGHTS, DEFAULT_WINDOW, SimConfig, empirical_fairness, run

logger = logging.getLogger(__name__)

ERROR_KINDS = ("err_pi", "err_lf1", "err_lf2", "baseline_err_pi", "baseline_err_lf1", "baseline_err_lf2")


def relative_error(observed: Sequence[float], predicted: Sequence[float]) -> float:
    """Euclidean distance to *predicted*, relative to the norm of *observed*."""
    obs = np.asarray(observed, dtype=float)
    pred = np.asarray(predicted, dtype=float)
    if obs.shape != pred.shape:
        raise ValueError(f"length mismatch: {obs.shape} vs {pred.shape}")
    scale = float(np.linalg.norm(obs))
    if scale == 0:
        raise ValueError("relative error is undefined for a zero observed vector")
    return float(np.linalg.norm(obs - pred)) / scale


def _safe_relative_error(observed: np.ndarray, predicted: np.ndarray) -> float:
    # A forkless run can measure LF exactly zero; report the absolute gap then.
    if not np.any(observed):
        return float(np.linalg.norm(predicted))
    return relative_error(observed, predicted)


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return float(arr.mean()), sd


@dataclass(frozen=True)
class SeedComparison:
    """One seed's simulation compared against the model and the baseline."""

    seed: int
    model_report: FairnessReport
    baseline_report: FairnessReport
    sim_report: FairnessReport
    err_pi: float
    err_lf1: float
    err_lf2: float
    baseline_err_pi: float
    baseline_err_lf1: float
    baseline_err_lf2: float

    def errors(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in ERROR_KINDS}


@dataclass(frozen=True)
class ComparisonReport:
    """Per-seed errors plus their mean and sample SD (n - 1 denominator)."""

    runs: tuple[SeedComparison, ...]
    rounds: int
    epsilon: float

    @property
    def seeds(self) -> list[int]:
        return [r.seed for r in self.runs]

    @property
    def model_report(self) -> FairnessReport:
        return self.runs[0].model_report

    @property
    def baseline_report(self) -> FairnessReport:
        return self.runs[0].baseline_report

    @property
    def sim_reports(self) -> list[FairnessReport]:
        return [r.sim_report for r in self.runs]

    def column(self, kind: str) -> list[float]:
        if kind not in ERROR_KINDS:
            raise KeyError(f"Unknown error kind: {kind}")
        return [getattr(r, kind) for r in self.runs]

    def mean(self, kind: str) -> float:
        return _mean_sd(self.column(kind))[0]

    def sd(self, kind: str) -> float:
        return _mean_sd(self.column(kind))[1]

    def summary(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for kind in ERROR_KINDS:
            m, s = _mean_sd(self.column(kind))
            out[f"{kind}_mean"] = m
            out[f"{kind}_sd"] = s
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "rounds": self.rounds,
            "epsilon": self.epsilon,
            "seeds": self.seeds,
            "sd": "sample (n-1)",
            "summary": self.summary(),
            "runs": [
                {
                    "seed": r.seed,
                    **r.errors(),
                    "model": r.model_report.to_dict(),
                    "baseline": r.baseline_report.to_dict(),
                    "simulation": r.sim_report.to_dict(),
                }
                for r in self.runs
            ],
        }


@dataclass(frozen=True)
class _SeedJob:
    model: NetworkModel
    rounds: int
    seed: int
    epsilon: float
    max_iter: int
    trim_heights: int
    window: int


def _compare_seed(job: _SeedJob) -> SeedComparison:
    model = job.model
    mbc = model_fairness(model, job.epsilon, job.max_iter)
    base = baseline_fairness(model)
    result = run(SimConfig(
        model=model, rounds=job.rounds, seed=job.seed,
        trim_heights=job.trim_heights, window=job.window,
    ))
    sim = empirical_fairness(result, model.alpha)
    comparison = SeedComparison(
        seed=job.seed,
        model_report=mbc,
        baseline_report=base,
        sim_report=sim,
        err_pi=relative_error(sim.pi.pi, mbc.pi.pi),
        err_lf1=_safe_relative_error(sim.lf1, mbc.lf1),
        err_lf2=_safe_relative_error(sim.lf2, mbc.lf2),
        baseline_err_pi=relative_error(sim.pi.pi, base.pi.pi),
        baseline_err_lf1=_safe_relative_error(sim.lf1, base.lf1),
        baseline_err_lf2=_safe_relative_error(sim.lf2, base.lf2),
    )
    logger.info(
        "seed %d: err_lf1=%.4g baseline_err_lf1=%.4g",
        job.seed, comparison.err_lf1, comparison.baseline_err_lf1,
    )
    return comparison


def compare(
    model: NetworkModel | ModelConfig,
    rounds: int,
    seeds: Iterable[int],
    epsilon: float = DEFAULT_EPSILON,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    resample_delays: bool = True,
    trim_heights: int = DEFAULT_TRIM_HEIGHTS,
    window: int = DEFAULT_WINDOW,
    workers: int = 1,
) -> ComparisonReport:
    """Compare the model and the baseline against one simulation per seed.

    A :class:`ModelConfig` with exponential delays is rebuilt per seed
    (delay seed = simulation seed) when *resample_delays* is set; a built
    :class:`NetworkModel` is always used as is.  Output is ordered by seed
    value, so *workers* never changes the result.
    """
    ordered = sorted(set(seeds))
    if not ordered:
        raise ValueError("compare needs at least one seed")

    jobs = []
    for seed in ordered:
        if isinstance(model, ModelConfig):
            built = model.build(delay_seed=seed if resample_delays and model.resamples else None)
        else:
            built = model
        jobs.append(_SeedJob(built, rounds, seed, epsilon, max_iter, trim_heights, window))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_compare_seed, jobs))
    else:
        runs = [_compare_seed(job) for job in jobs]
    return ComparisonReport(runs=tuple(runs), rounds=rounds, epsilon=epsilon)


@dataclass(frozen=True)
class SweepRow:
    d_over_t: float
    rule: TieBreakRule
    report: ComparisonReport

    def row(self) -> dict[str, Any]:
        out: dict[str, Any] = {"d_over_t": self.d_over_t, "rule": self.rule.value}
        out.update(self.report.summary())
        out["model_gf1_mean"] = float(np.mean([r.model_report.gf1 for r in self.report.runs]))
        out["model_gf2_mean"] = float(np.mean([r.model_report.gf2 for r in self.report.runs]))
        return out


def sweep(
    config_template: ModelConfig,
    d_over_t_grid: Iterable[float],
    rules: Iterable[TieBreakRule | str],
    rounds: int,
    seeds: Iterable[int],
    epsilon: float = DEFAULT_EPSILON,
    **compare_kwargs: Any,
) -> list[SweepRow]:
    """Run :func:`compare` for every ``(d/T, rule)`` cell of the grid."""
    grid = list(d_over_t_grid)
    rule_list = [TieBreakRule.parse(r) for r in rules]
    if not grid or not rule_list:
        raise ValueError("sweep needs a nonempty d/T grid and at least one rule")
    seed_list = list(seeds)
    rows: list[SweepRow] = []
    for x in grid:
        for rule in rule_list:
            logger.info("Sweep cell d/T=%g rule=%s", x, rule.value)
            cell = config_template.with_d_over_t(x).with_rule(rule)
            report = compare(cell, rounds, seed_list, epsilon, **compare_kwargs)
            rows.append(SweepRow(d_over_t=float(x), rule=rule, report=report))
    return rows


__all__ = [
    "ComparisonReport",
    "ERROR_KINDS",
    "SeedComparison",
    "SweepRow",
    "compare",
    "relative_error",
    "sweep",
]
