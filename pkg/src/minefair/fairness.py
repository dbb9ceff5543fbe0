"""Model-based calculation of mining fairness.

The network is approximated by a model in which at most two blocks are
generated per round.  The miner that opens each round forms a Markov
chain whose stationary law is the *round start rate* ``pi``; block
reward rates follow from ``pi``, the fork matrix ``F`` and the win
matrix ``W``, and fairness is the gap between reward rate and hashrate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .model import NetworkModel, TieBreakRule

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-12
DEFAULT_MAX_ITER = 1_000_000


class ConvergenceError(RuntimeError):
    """The round-start-rate iteration did not settle within ``max_iter``."""

    def __init__(self, residual: float, iterations: int) -> None:
        super().__init__(
            f"round start rates did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )
        self.residual = residual
        self.iterations = iterations


def _vec(x: Any) -> np.ndarray:
    a = np.array(x, dtype=float)
    a.setflags(write=False)
    return a


# ----------------------------------------------------------------------
# Result types
# ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProbMatrices:
    """``f[i][j]``: miner j forks the round opened by i.  ``w[i][j]``: i wins that fork."""

    f: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "f", _vec(self.f))
        object.__setattr__(self, "w", _vec(self.w))


@dataclass(frozen=True, eq=False)
class RoundStartRates:
    pi: np.ndarray
    residual: float
    iterations: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "pi", _vec(self.pi))


@dataclass(frozen=True, eq=False)
class FairnessReport:
    """Round start rates, reward rates and local/global fairness for one network."""

    pi: RoundStartRates
    r: np.ndarray
    lf1: np.ndarray
    lf2: np.ndarray
    gf1: float
    gf2: float
    alpha: np.ndarray | None = None

    def __post_init__(self) -> None:
        for name in ("r", "lf1", "lf2"):
            object.__setattr__(self, name, _vec(getattr(self, name)))
        if self.alpha is not None:
            object.__setattr__(self, "alpha", _vec(self.alpha))

    @property
    def n(self) -> int:
        return len(self.r)

    def to_dict(self) -> dict[str, Any]:
        return {
            "pi": self.pi.pi.tolist(),
            "reward_rates": self.r.tolist(),
            "lf1": self.lf1.tolist(),
            "lf2": self.lf2.tolist(),
            "gf1": self.gf1,
            "gf2": self.gf2,
            "iterations": self.pi.iterations,
            "residual": self.pi.residual,
        }

    def rows(self) -> list[dict[str, Any]]:
        """One record per miner, for CSV output."""
        alpha = self.alpha if self.alpha is not None else [float("nan")] * self.n
        return [
            {
                "miner": i,
                "alpha": float(alpha[i]),
                "pi": float(self.pi.pi[i]),
                "reward_rate": float(self.r[i]),
                "lf1": float(self.lf1[i]),
                "lf2": float(self.lf2[i]),
            }
            for i in range(self.n)
        ]


@dataclass(frozen=True)
class TwoMinerSolution:
    f: float
    pi_a: float
    pi_b: float
    w_ab: float
    w_ba: float
    lf1_a: float
    lf1_b: float

    def to_dict(self) -> dict[str, float]:
        return {
            "f": self.f, "pi_a": self.pi_a, "pi_b": self.pi_b,
            "w_ab": self.w_ab, "w_ba": self.w_ba,
            "lf1_a": self.lf1_a, "lf1_b": self.lf1_b,
        }


# ----------------------------------------------------------------------
# F and W
# ----------------------------------------------------------------------


def fork_prob_matrix(model: NetworkModel) -> np.ndarray:
    """``F_ij = 1 - exp(-T_ij / T)``, zero on the diagonal."""
    f = -np.expm1(-model.delays / model.mean_interval)
    np.fill_diagonal(f, 0.0)
    return f


def _pick_prob(t: np.ndarray, mean_interval: float, i: int, j: int, k: int) -> float:
    t_ik, t_jk, t_ij = t[i, k], t[j, k], t[i, j]
    if t_ik <= t_jk:
        return 1.0
    if t_ik >= t_ij + t_jk:
        return 0.0
    num = math.exp(-(t_ik - t_jk) / mean_interval) - math.exp(-t_ij / mean_interval)
    p = num / -math.expm1(-t_ij / mean_interval)
    return min(1.0, max(0.0, p))


def first_seen_pick_prob(model: NetworkModel, i: int, j: int, k: int) -> float:
    """Probability that miner *k* mines on *i*'s block when *j* forks *i*'s round.

    Under first-seen, *k* keeps whichever block reaches it first.  The
    fork time of *j* is exponential truncated to ``[0, T_ij]``.
    """
    for name, idx in (("i", i), ("j", j), ("k", k)):
        if not 0 <= idx < model.n:
            raise ValueError(f"miner index {name} = {idx} outside [0, {model.n})")
    if i == j:
        raise ValueError(f"pick probability needs two distinct miners, got i = j = {i}")
    if model.delays[i, j] == 0:
        raise ValueError(
            f"miner {j} cannot fork a round opened by miner {i}: delays[{i}][{j}] = 0"
        )
    return _pick_prob(model.delays, model.mean_interval, i, j, k)


def win_prob_matrix(model: NetworkModel) -> np.ndarray:
    """Single-tie win probabilities for the model's tie-break rule.

    * first-seen: ``W_ij = sum_k alpha_k p_ijk``
    * random: ``W_ij = alpha_i + (1 - alpha_i - alpha_j) / 2``
    * last-generated: ``W_ij = alpha_i``

    The diagonal is zero and never read.
    """
    n, alpha = model.n, model.alpha
    if model.rule is TieBreakRule.LAST_GENERATED:
        w = np.repeat(alpha[:, None], n, axis=1)
    elif model.rule is TieBreakRule.RANDOM:
        w = alpha[:, None] + (1.0 - alpha[:, None] - alpha[None, :]) / 2.0
    else:
        w = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    w[i, j] = sum(
                        alpha[k] * _pick_prob(model.delays, model.mean_interval, i, j, k)
                        for k in range(n)
                    )
    w = np.clip(w, 0.0, 1.0)
    np.fill_diagonal(w, 0.0)
    return w


def resolved_win_matrix(model: NetworkModel, f: np.ndarray | None = None) -> np.ndarray:
    """The win matrix consumed by the reward equation.

    With three or more miners this is :func:`win_prob_matrix`.  With two
    miners nobody else picks a side, so every rule's single-tie value is
    ``alpha_i``; a tie can then repeat at the next height, and summing
    over repeats gives ``alpha_A (1 - alpha_B F_AB) / (1 - alpha_A alpha_B (F_AB + F_BA))``.
    """
    if model.n != 2:
        return win_prob_matrix(model)
    if f is None:
        f = fork_prob_matrix(model)
    a, b = model.alpha
    f_ab, f_ba = f[0, 1], f[1, 0]
    denom = 1.0 - a * b * (f_ab + f_ba)
    w = np.zeros((2, 2))
    w[0, 1] = a * (1.0 - b * f_ab) / denom
    w[1, 0] = b * (1.0 - a * f_ba) / denom
    return w


def prob_matrices(model: NetworkModel) -> ProbMatrices:
    f = fork_prob_matrix(model)
    return ProbMatrices(f=f, w=resolved_win_matrix(model, f))


# ----------------------------------------------------------------------
# Round start rates
# ----------------------------------------------------------------------


def _fork_mass(alpha: np.ndarray, f: np.ndarray) -> np.ndarray:
    # dp[j] = sum_k alpha_k F_jk: probability that the round opened by j forks
    return f @ alpha


def transition_step(pi: np.ndarray, alpha: np.ndarray, f: np.ndarray) -> np.ndarray:
    """One step of the round-starter chain.

    ``P(X_{r+1} = i) = sum_j (alpha_i (1 - F_ji) + sum_k alpha_k F_jk alpha_i) P(X_r = j)``
    """
    pi = np.asarray(pi, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    f = np.asarray(f, dtype=float)
    return alpha * ((1.0 - f).T @ pi + pi @ _fork_mass(alpha, f))


def stationary_distribution(
    alpha: np.ndarray,
    f: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RoundStartRates:
    """Iterate the round-starter chain from ``pi = alpha`` to a fixed point.

    Two buffers alternate; iteration stops once no component moves by
    more than *epsilon*.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")

    alpha = np.asarray(alpha, dtype=float)
    f = np.asarray(f, dtype=float)
    keep_t = (1.0 - f).T
    dp = _fork_mass(alpha, f)

    buf = np.empty((2, len(alpha)))
    buf[0] = alpha
    cur = 0
    residual = math.inf
    for it in range(1, max_iter + 1):
        nxt = 1 - cur
        np.multiply(alpha, keep_t @ buf[cur] + buf[cur] @ dp, out=buf[nxt])
        residual = float(np.max(np.abs(buf[nxt] - buf[cur])))
        cur = nxt
        logger.debug("iteration %d: residual %.3e", it, residual)
        if residual <= epsilon:
            logger.info("Round start rates converged in %d iterations", it)
            return RoundStartRates(pi=buf[cur].copy(), residual=residual, iterations=it)
    raise ConvergenceError(residual, max_iter)


# ----------------------------------------------------------------------
# Rewards and fairness
# ----------------------------------------------------------------------


def reward_rates(
    pi: np.ndarray, alpha: np.ndarray, f: np.ndarray, w: np.ndarray,
) -> np.ndarray:
    """Share of main-chain blocks per miner.

    ``r_i = pi_i (1 - sum_j alpha_j F_ij (1 - W_ij)) + alpha_i sum_j pi_j F_ji (1 - W_ji)``
    """
    pi = np.asarray(pi, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    lost = np.asarray(f, dtype=float) * (1.0 - np.asarray(w, dtype=float))
    np.fill_diagonal(lost, 0.0)
    return pi * (1.0 - lost @ alpha) + alpha * (lost.T @ pi)


def local_fairness(r: np.ndarray, alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Profit ``LF1 = r - alpha`` and profit rate ``LF2 = LF1 / alpha``."""
    r = np.asarray(r, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if r.shape != alpha.shape:
        raise ValueError(f"length mismatch: r has {r.shape}, alpha has {alpha.shape}")
    zero = np.flatnonzero(alpha == 0)
    if zero.size:
        raise ValueError(f"alpha[{zero[0]}] is zero; profit rate is undefined")
    lf1 = r - alpha
    return lf1, lf1 / alpha


def global_fairness(lf1: np.ndarray, lf2: np.ndarray) -> tuple[float, float]:
    """``GF1`` sums the positive profits; ``GF2`` is the spread of profit rates."""
    lf1 = np.asarray(lf1, dtype=float)
    lf2 = np.asarray(lf2, dtype=float)
    gf1 = float(np.sum(lf1[lf1 > 0]))
    gf2 = float(np.max(lf2) - np.min(lf2))
    return gf1, gf2


def _assemble(
    rates: RoundStartRates, alpha: np.ndarray, f: np.ndarray, w: np.ndarray,
) -> FairnessReport:
    r = reward_rates(rates.pi, alpha, f, w)
    lf1, lf2 = local_fairness(r, alpha)
    gf1, gf2 = global_fairness(lf1, lf2)
    return FairnessReport(pi=rates, r=r, lf1=lf1, lf2=lf2, gf1=gf1, gf2=gf2, alpha=alpha)


def model_fairness(
    model: NetworkModel,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
) -> FairnessReport:
    """Full model-based calculation for *model*."""
    mats = prob_matrices(model)
    rates = stationary_distribution(model.alpha, mats.f, epsilon, max_iter)
    return _assemble(rates, model.alpha, mats.f, mats.w)


def baseline_fairness(model: NetworkModel) -> FairnessReport:
    """Same calculation, but assuming the round start rate equals the hashrate."""
    mats = prob_matrices(model)
    rates = RoundStartRates(pi=model.alpha, residual=0.0, iterations=0)
    return _assemble(rates, model.alpha, mats.f, mats.w)


def empirical_report(pi: np.ndarray, r: np.ndarray, alpha: np.ndarray) -> FairnessReport:
    """Fairness of measured round start rates *pi* and reward rates *r*."""
    lf1, lf2 = local_fairness(r, alpha)
    gf1, gf2 = global_fairness(lf1, lf2)
    rates = RoundStartRates(pi=pi, residual=0.0, iterations=0)
    return FairnessReport(pi=rates, r=r, lf1=lf1, lf2=lf2, gf1=gf1, gf2=gf2, alpha=alpha)


def two_miner_closed_form(alpha_a: float, d_over_t: float) -> TwoMinerSolution:
    """Closed-form solution for two miners with one constant delay ``d``."""
    if not 0 < alpha_a < 1:
        raise ValueError(f"alpha_a must lie in (0, 1), got {alpha_a}")
    if d_over_t < 0:
        raise ValueError(f"d/T must be >= 0, got {d_over_t}")
    alpha_b = 1.0 - alpha_a
    f = -math.expm1(-d_over_t)
    denom = 1.0 - 2.0 * alpha_a * alpha_b * f
    w_ab = alpha_a * (1.0 - alpha_b * f) / denom
    w_ba = alpha_b * (1.0 - alpha_a * f) / denom
    pi_a, pi_b = w_ab, w_ba
    lf1_a = pi_a + (alpha_a - alpha_b) * f * pi_a * pi_b - alpha_a
    return TwoMinerSolution(
        f=f, pi_a=pi_a, pi_b=pi_b, w_ab=w_ab, w_ba=w_ba, lf1_a=lf1_a, lf1_b=-lf1_a,
    )


__all__ = [
    "ConvergenceError",
    "DEFAULT_EPSILON",
    "DEFAULT_MAX_ITER",
    "FairnessReport",
    "ProbMatrices",
    "RoundStartRates",
    "TwoMinerSolution",
    "baseline_fairness",
    "empirical_report",
    "first_seen_pick_prob",
    "fork_prob_matrix",
    "global_fairness",
    "local_fairness",
    "model_fairness",
    "prob_matrices",
    "resolved_win_matrix",
    "reward_rates",
    "stationary_distribution",
    "transition_step",
    "win_prob_matrix",
]
