"""Fork-scale analysis: how often rounds hold one, two, or three-plus blocks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from .model import NetworkModel

SWEEP_COLUMNS = ("d_over_t", "i1", "i2", "i3", "i3_over_i1_i2", "i3_over_i2")

_EXP_LIMIT = 700.0


@dataclass(frozen=True)
class ForkScaleImpacts:
    """Weights of one-block, two-block and three-plus-block rounds at a given d/T."""

    d_over_t: float
    i1: float
    i2: float
    i3: float

    @property
    def i3_over_i1_i2(self) -> float:
        # (e^x - 1 - x) / (1 + x)
        return _excess_ratio(self.d_over_t, 1.0 + self.d_over_t)

    @property
    def i3_over_i2(self) -> float:
        # (e^x - 1 - x) / x, which tends to 0 as x -> 0
        x = self.d_over_t
        if x == 0:
            return 0.0
        return _excess_ratio(x, x)

    def row(self) -> dict[str, float]:
        return {
            "d_over_t": self.d_over_t,
            "i1": self.i1,
            "i2": self.i2,
            "i3": self.i3,
            "i3_over_i1_i2": self.i3_over_i1_i2,
            "i3_over_i2": self.i3_over_i2,
        }


@dataclass(frozen=True)
class RoundScaleProbs:
    """Block-count probabilities for rounds opened by one miner.

    ``p_three_plus_upper`` bounds P(C >= 3) from above; ``p_two_lower``
    bounds P(C = 2) from below and may be negative.
    """

    miner: int
    p_one: float
    p_fork: float
    p_three_plus_upper: float
    p_two_lower: float
    t_weighted: float

    def row(self) -> dict[str, float]:
        return asdict(self)


def _three_plus_bound(x: float) -> float:
    # 1 - (1 + x) e^{-x}, computed without cancellation for small x
    return max(0.0, -math.expm1(-x) - x * math.exp(-x))


def _excess_ratio(x: float, denom: float) -> float:
    """``(e^x - 1 - x) / denom``; saturates to ``inf`` past float range."""
    if x < _EXP_LIMIT:
        return (math.expm1(x) - x) / denom
    # e^x swamps 1 + x here
    log_ratio = x - math.log(denom)
    return math.exp(log_ratio) if log_ratio < _EXP_LIMIT else math.inf


def weighted_prop_time(model: NetworkModel, i: int) -> float:
    """Hashrate-weighted mean time for miner *i*'s block to reach the others."""
    return float(model.alpha @ model.delays[i])


def round_scale_probs(model: NetworkModel, i: int) -> RoundScaleProbs:
    ratio = model.delays[i] / model.mean_interval
    p_one = float(model.alpha @ np.exp(-ratio))
    p_fork = float(model.alpha @ -np.expm1(-ratio))
    t_w = weighted_prop_time(model, i)
    upper = _three_plus_bound(t_w / model.mean_interval)
    return RoundScaleProbs(
        miner=i,
        p_one=p_one,
        p_fork=p_fork,
        p_three_plus_upper=upper,
        p_two_lower=p_fork - upper,
        t_weighted=t_w,
    )


def impacts(d_over_t: float) -> ForkScaleImpacts:
    """Impacts of fork scale for a uniform delay ``d`` with ``x = d/T``."""
    if d_over_t < 0:
        raise ValueError(f"d/T must be >= 0, got {d_over_t}")
    x = float(d_over_t)
    e = math.exp(-x)
    return ForkScaleImpacts(d_over_t=x, i1=e, i2=x * e, i3=_three_plus_bound(x))


def impact_sweep(d_over_t_grid: Iterable[float]) -> list[dict[str, float]]:
    """One row per grid point with the columns of ``SWEEP_COLUMNS``."""
    return [impacts(x).row() for x in d_over_t_grid]


__all__ = [
    "ForkScaleImpacts",
    "RoundScaleProbs",
    "SWEEP_COLUMNS",
    "impact_sweep",
    "impacts",
    "round_scale_probs",
    "weighted_prop_time",
]
