"""Network model: miners, hashrate shares, propagation delays, tie-breaking."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Sequence

import numpy as np

ALPHA_TOLERANCE = 1e-12

# Approximates Bitcoin pool shares; config data, overridable by model file.
DEFAULT_TEN_MINER_ALPHA: tuple[float, ...] = (
    0.30, 0.22, 0.12, 0.10, 0.08, 0.06, 0.05, 0.04, 0.02, 0.01,
)


class ModelError(ValueError):
    """Raised when a network model (or its inputs) violates an invariant."""


class TieBreakRule(str, Enum):
    """Policy for choosing among equal-height chain tips."""

    FIRST_SEEN = "first-seen"
    RANDOM = "random"
    LAST_GENERATED = "last-generated"

    @classmethod
    def parse(cls, value: TieBreakRule | str) -> TieBreakRule:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for rule in cls:
            if rule.value == key:
                return rule
        raise ModelError(
            f"Unknown tie-break rule {value!r}. "
            f"Available: {', '.join(r.value for r in cls)}"
        )

    def __str__(self) -> str:
        return self.value


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """A validated network of ``n`` miners.

    ``delays[i][j]`` is the time for a block generated by miner ``i`` to
    reach miner ``j``; ``mean_interval`` (T) is in the same time unit.
    Construct through :func:`build_model` to get input normalization.
    """

    n: int
    alpha: np.ndarray
    delays: np.ndarray
    mean_interval: float
    rule: TieBreakRule = TieBreakRule.FIRST_SEEN

    def __post_init__(self) -> None:
        alpha = np.array(self.alpha, dtype=float)
        delays = np.array(self.delays, dtype=float)
        _validate(self.n, alpha, delays, self.mean_interval)
        object.__setattr__(self, "alpha", _frozen(alpha))
        object.__setattr__(self, "delays", _frozen(delays))
        object.__setattr__(self, "mean_interval", float(self.mean_interval))
        object.__setattr__(self, "rule", TieBreakRule.parse(self.rule))

    @property
    def miners(self) -> range:
        return range(self.n)

    @property
    def d_over_t(self) -> float:
        """Mean off-diagonal delay divided by the mean block interval."""
        off = self.delays[~np.eye(self.n, dtype=bool)]
        return float(off.mean()) / self.mean_interval

    def with_rule(self, rule: TieBreakRule | str) -> NetworkModel:
        return replace(self, rule=TieBreakRule.parse(rule))


def _validate(n: int, alpha: np.ndarray, delays: np.ndarray, mean_interval: float) -> None:
    if n < 2:
        raise ModelError(f"need at least 2 miners, got n={n}")
    if alpha.shape != (n,):
        raise ModelError(f"alpha has shape {alpha.shape}, expected ({n},)")
    if delays.shape != (n, n):
        raise ModelError(f"delays has shape {delays.shape}, expected ({n}, {n})")
    for i, a in enumerate(alpha):
        if not np.isfinite(a) or a <= 0:
            raise ModelError(f"hashrate alpha[{i}] = {a} must be > 0")
    total = float(alpha.sum())
    if abs(total - 1.0) > ALPHA_TOLERANCE:
        raise ModelError(f"hashrate sum {total:.12g} ≠ 1")
    for i in range(n):
        if delays[i, i] != 0:
            raise ModelError(f"self-delay must be zero: delays[{i}][{i}] = {delays[i, i]}")
    bad = np.argwhere(~np.isfinite(delays) | (delays < 0))
    if bad.size:
        i, j = (int(x) for x in bad[0])
        raise ModelError(f"negative or non-finite delay: delays[{i}][{j}] = {delays[i, j]}")
    if not mean_interval > 0:
        raise ModelError(f"mean_interval must be > 0, got {mean_interval}")


def build_model(
    n: int,
    alpha: Sequence[float],
    delays: Sequence[Sequence[float]] | np.ndarray,
    mean_interval: float,
    rule: TieBreakRule | str = TieBreakRule.FIRST_SEEN,
) -> NetworkModel:
    """Validate inputs and return a :class:`NetworkModel`.

    Hashrates that sum to 1 within ``ALPHA_TOLERANCE`` are renormalized;
    anything further off is rejected rather than silently fixed.
    """
    a = np.asarray(alpha, dtype=float)
    if a.shape == (n,):
        total = float(a.sum())
        if abs(total - 1.0) <= ALPHA_TOLERANCE and np.all(a > 0):
            a = a / total
    return NetworkModel(
        n=n, alpha=a, delays=np.asarray(delays, dtype=float),
        mean_interval=mean_interval, rule=TieBreakRule.parse(rule),
    )


def constant_delays(n: int, d: float) -> np.ndarray:
    """Delay matrix with every off-diagonal entry equal to ``d``."""
    if d < 0:
        raise ModelError(f"delay must be >= 0, got {d}")
    t = np.full((n, n), float(d))
    np.fill_diagonal(t, 0.0)
    return t


def exponential_delays(
    n: int, mean_d: float, seed: int, *, symmetric: bool = False,
) -> np.ndarray:
    """Sample delays from an exponential distribution with mean ``mean_d``.

    Each ordered pair is sampled independently unless *symmetric*, in
    which case the upper triangle is sampled and mirrored.  The result
    is a pure function of ``(n, mean_d, seed, symmetric)``.
    """
    if not mean_d > 0:
        raise ModelError(f"mean delay must be > 0, got {mean_d}")
    rng = np.random.default_rng(seed)
    t = rng.exponential(mean_d, size=(n, n))
    if symmetric:
        upper = np.triu(t, 1)
        t = upper + upper.T
    np.fill_diagonal(t, 0.0)
    return t


# ----------------------------------------------------------------------
# Model configuration (the document behind a model file)
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class DelaySpec:
    """How to obtain a delay matrix: ``constant``, ``exponential`` or ``explicit``."""

    kind: str
    mean: float = 0.0
    seed: int = 0
    symmetric: bool = False
    matrix: tuple[tuple[float, ...], ...] | None = None

    @classmethod
    def constant(cls, d: float) -> DelaySpec:
        return cls(kind="constant", mean=float(d))

    @classmethod
    def exponential(cls, mean: float, seed: int = 0, symmetric: bool = False) -> DelaySpec:
        return cls(kind="exponential", mean=float(mean), seed=int(seed), symmetric=bool(symmetric))

    @classmethod
    def explicit(cls, matrix: Sequence[Sequence[float]]) -> DelaySpec:
        rows = tuple(tuple(float(x) for x in row) for row in matrix)
        return cls(kind="explicit", matrix=rows)

    @classmethod
    def from_dict(cls, raw: Any) -> DelaySpec:
        """Parse the ``delays`` entry of a model document."""
        if isinstance(raw, list):
            return cls.explicit(raw)
        if not isinstance(raw, dict) or len(raw) != 1:
            raise ModelError(
                "delays must be a matrix, {\"constant\": d} or {\"exponential\": {...}}"
            )
        if "constant" in raw:
            return cls.constant(raw["constant"])
        if "exponential" in raw:
            body = raw["exponential"]
            if not isinstance(body, dict) or "mean" not in body:
                raise ModelError("delays.exponential needs a 'mean'")
            return cls.exponential(
                body["mean"], body.get("seed", 0), body.get("symmetric", False),
            )
        raise ModelError(f"Unknown delay kind: {next(iter(raw))!r}")

    def to_dict(self) -> Any:
        if self.kind == "constant":
            return {"constant": self.mean}
        if self.kind == "exponential":
            return {"exponential": {"mean": self.mean, "seed": self.seed, "symmetric": self.symmetric}}
        return [list(row) for row in self.matrix or ()]

    def matrix_for(self, n: int, *, seed: int | None = None) -> np.ndarray:
        if self.kind == "constant":
            return constant_delays(n, self.mean)
        if self.kind == "exponential":
            s = self.seed if seed is None else seed
            return exponential_delays(n, self.mean, s, symmetric=self.symmetric)
        return np.array(self.matrix, dtype=float)

    def scaled_to(self, mean: float) -> DelaySpec:
        """Same kind of spec, rescaled so the mean off-diagonal delay is *mean*."""
        if self.kind == "explicit":
            m = np.array(self.matrix, dtype=float)
            off = m[~np.eye(len(m), dtype=bool)]
            current = float(off.mean()) if off.size else 0.0
            if current == 0:
                raise ModelError("cannot rescale an all-zero delay matrix")
            return DelaySpec.explicit(m * (mean / current))
        return replace(self, mean=float(mean))


@dataclass(frozen=True)
class ModelConfig:
    """Unbuilt model description, as read from a model file."""

    n: int
    delays: DelaySpec
    mean_interval: float
    rule: TieBreakRule = TieBreakRule.FIRST_SEEN
    alpha: tuple[float, ...] | None = None

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ModelConfig:
        for key in ("n", "delays", "mean_interval"):
            if key not in d:
                raise ModelError(f"model config is missing required key {key!r}")
        alpha = d.get("alpha")
        return cls(
            n=int(d["n"]),
            delays=DelaySpec.from_dict(d["delays"]),
            mean_interval=float(d["mean_interval"]),
            rule=TieBreakRule.parse(d.get("rule", TieBreakRule.FIRST_SEEN)),
            alpha=tuple(float(a) for a in alpha) if alpha is not None else None,
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"n": self.n}
        if self.alpha is not None:
            out["alpha"] = list(self.alpha)
        out["delays"] = self.delays.to_dict()
        out["mean_interval"] = self.mean_interval
        out["rule"] = self.rule.value
        return out

    @property
    def resamples(self) -> bool:
        return self.delays.kind == "exponential"

    def build(self, *, delay_seed: int | None = None) -> NetworkModel:
        """Build the model; *delay_seed* overrides an exponential spec's seed."""
        alpha = self.alpha if self.alpha is not None else [1.0 / self.n] * self.n
        delays = self.delays.matrix_for(self.n, seed=delay_seed)
        return build_model(self.n, alpha, delays, self.mean_interval, self.rule)

    def with_rule(self, rule: TieBreakRule | str) -> ModelConfig:
        return replace(self, rule=TieBreakRule.parse(rule))

    def with_d_over_t(self, d_over_t: float) -> ModelConfig:
        return replace(self, delays=self.delays.scaled_to(d_over_t * self.mean_interval))


def default_ten_miner_config(
    d_over_t: float = 0.04,
    rule: TieBreakRule | str = TieBreakRule.FIRST_SEEN,
    *,
    mean_interval: float = 600.0,
    seed: int = 0,
) -> ModelConfig:
    """Ten miners, Bitcoin-like shares, exponential delays with mean ``d_over_t * T``."""
    return ModelConfig(
        n=10,
        alpha=DEFAULT_TEN_MINER_ALPHA,
        delays=DelaySpec.exponential(d_over_t * mean_interval, seed),
        mean_interval=mean_interval,
        rule=TieBreakRule.parse(rule),
    )


__all__ = [
    "ALPHA_TOLERANCE",
    "DEFAULT_TEN_MINER_ALPHA",
    "DelaySpec",
    "ModelConfig",
    "ModelError",
    "NetworkModel",
    "TieBreakRule",
    "build_model",
    "constant_delays",
    "default_ten_miner_config",
    "exponential_delays",
]
