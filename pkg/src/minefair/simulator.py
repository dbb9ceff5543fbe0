"""Event-driven blockchain network simulator.

Blocks are generated by one network-wide Poisson process with mean
interval T; the owner of each block is drawn proportionally to hashrate
and mines on its current head.  A block generated by miner i reaches
miner j after ``delays[i][j]``.  Miners follow the longest chain and
resolve equal-height tips with the model's tie-break rule, so forks of
any depth arise naturally.

Round r opens at the first generation (globally, by time) of a block at
height r; its starter is that block's miner and its size is the number
of blocks generated before round r + 1 opens.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .fairness import FairnessReport, empirical_report
from .model import NetworkModel, TieBreakRule

logger = logging.getLogger(__name__)

DEFAULT_TRIM_HEIGHTS = 100
DEFAULT_WINDOW = 1000
_BATCH = 1 << 16
_PROGRESS_EVERY = 1_000_000


class SimulationError(RuntimeError):
    """The simulation state left the bounds it can represent."""


@dataclass(frozen=True, slots=True)
class Block:
    id: int
    parent: int | None
    height: int
    miner: int | None
    born_at: float


GENESIS = Block(id=0, parent=None, height=0, miner=None, born_at=0.0)


@dataclass(slots=True)
class MinerView:
    """What one miner currently believes: its main-chain tip and the blocks it holds."""

    miner: int
    head: int = GENESIS.id
    known: set[int] = field(default_factory=lambda: {GENESIS.id})


@dataclass(frozen=True)
class SimConfig:
    model: NetworkModel
    rounds: int
    seed: int = 0
    trim_heights: int = DEFAULT_TRIM_HEIGHTS
    window: int = DEFAULT_WINDOW

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.trim_heights < 0:
            raise ValueError(f"trim_heights must be >= 0, got {self.trim_heights}")
        if self.window <= self.trim_heights:
            raise ValueError(
                f"window ({self.window}) must exceed trim_heights ({self.trim_heights})"
            )

    @property
    def stop_height(self) -> int:
        return self.rounds + max(self.trim_heights, 1)


@dataclass(frozen=True, eq=False)
class SimResult:
    """Counts measured over heights ``1..total_rounds`` of one run."""

    seed: int
    total_rounds: int
    round_starts: tuple[int, ...]
    mainchain_blocks: tuple[int, ...]
    scale_histogram: dict[int, int]
    starter_histograms: tuple[dict[int, int], ...]
    blocks_generated: int

    @property
    def n(self) -> int:
        return len(self.round_starts)

    @property
    def empirical_pi(self) -> np.ndarray:
        return np.array(self.round_starts, dtype=float) / self.total_rounds

    @property
    def empirical_r(self) -> np.ndarray:
        return np.array(self.mainchain_blocks, dtype=float) / self.total_rounds

    @property
    def fork_rate(self) -> float:
        """Fraction of counted rounds holding two or more blocks."""
        return 1.0 - self.scale_histogram.get(1, 0) / self.total_rounds

    @property
    def stale_rate(self) -> float:
        """Fraction of blocks generated in counted rounds that left the main chain."""
        generated = sum(size * count for size, count in self.scale_histogram.items())
        return 1.0 - self.total_rounds / generated

    def to_dict(self, *, histogram: bool = True) -> dict[str, Any]:
        out: dict[str, Any] = {
            "seed": self.seed,
            "total_rounds": self.total_rounds,
            "round_starts": list(self.round_starts),
            "mainchain_blocks": list(self.mainchain_blocks),
            "empirical_pi": self.empirical_pi.tolist(),
            "empirical_r": self.empirical_r.tolist(),
            "blocks_generated": self.blocks_generated,
            "fork_rate": self.fork_rate,
        }
        if histogram:
            out["scale_histogram"] = {str(k): v for k, v in sorted(self.scale_histogram.items())}
        return out


class _Draws:
    """Batched draws from one numpy generator stream."""

    def __init__(self, sample: Callable[[int], np.ndarray]) -> None:
        self._sample = sample
        self._buf: list[Any] = []
        self._pos = 0

    def next(self) -> Any:
        if self._pos == len(self._buf):
            self._buf = self._sample(_BATCH).tolist()
            self._pos = 0
        v = self._buf[self._pos]
        self._pos += 1
        return v


class Simulator:
    """One simulation run.  Use :func:`run` unless you need the internals."""

    def __init__(self, config: SimConfig) -> None:
        self.config = config
        model = config.model
        self._n = model.n
        self._rule = model.rule
        self._delays: list[list[float]] = model.delays.tolist()

        gap_ss, owner_ss, coin_ss = np.random.SeedSequence(config.seed).spawn(3)
        gap_rng = np.random.default_rng(gap_ss)
        owner_rng = np.random.default_rng(owner_ss)
        coin_rng = np.random.default_rng(coin_ss)
        mean, alpha = model.mean_interval, np.asarray(model.alpha)
        self._gaps = _Draws(lambda k: gap_rng.exponential(mean, k))
        self._owners = _Draws(lambda k: owner_rng.choice(len(alpha), size=k, p=alpha))
        self._coins = _Draws(lambda k: coin_rng.random(k))

        self.blocks: dict[int, Block] = {GENESIS.id: GENESIS}
        self._by_height: dict[int, list[int]] = {0: [GENESIS.id]}
        self.views = [MinerView(miner=i) for i in range(self._n)]
        self._queue: list[tuple[float, int, int, int]] = []
        self._seq = itertools.count()
        self._next_id = 1

        # settled main-chain prefix: heights <= _settled_height are final
        self._settled_height = 0
        self._settled_id = GENESIS.id
        self._mainchain = [0] * self._n

    # ------------------------------------------------------------------
    # Chain bookkeeping
    # ------------------------------------------------------------------

    def _adopt(self, view: MinerView, block: Block) -> None:
        view.known.add(block.id)
        head = self.blocks[view.head]
        if block.height > head.height:
            view.head = block.id
        elif block.height == head.height and block.id != head.id:
            if self._rule is TieBreakRule.RANDOM:
                if self._coins.next() < 0.5:
                    view.head = block.id
            elif self._rule is TieBreakRule.LAST_GENERATED:
                if block.born_at > head.born_at:
                    view.head = block.id

    def _count_chain(self, tip_id: int, down_to: int) -> None:
        """Walk from *tip_id* to the settled frontier, counting heights ``<= down_to``."""
        rounds = self.config.rounds
        block = self.blocks[tip_id]
        while block.height > self._settled_height:
            if block.height <= down_to and block.height <= rounds:
                self._mainchain[block.miner] += 1
            parent = self.blocks.get(block.parent)
            if parent is None:
                raise SimulationError(
                    f"fork deeper than the retention window ({self.config.window} heights) "
                    f"at height {block.height}"
                )
            block = parent
        if block.id != self._settled_id:
            raise SimulationError(
                f"main chain diverged below settled height {self._settled_height}; "
                f"increase the retention window"
            )

    def _settle(self, tip_id: int, upto: int) -> None:
        """Finalize heights ``(settled, upto]`` along *tip_id*'s chain and drop older blocks."""
        block = self.blocks[tip_id]
        while block.height > upto:
            block = self.blocks[block.parent]
        frontier = block
        self._count_chain(frontier.id, upto)
        pruned: set[int] = set()
        for h in range(self._settled_height, upto):
            for bid in self._by_height.pop(h, ()):
                pruned.add(bid)
                del self.blocks[bid]
        for view in self.views:
            if view.head in pruned:
                raise SimulationError(
                    f"miner {view.miner} is more than {self.config.window} heights behind"
                )
            view.known.difference_update(pruned)
        self._settled_height = frontier.height
        self._settled_id = frontier.id

    # ------------------------------------------------------------------
    # Main loop
    # ------------------------------------------------------------------

    def run(self) -> SimResult:
        cfg = self.config
        n, rounds, window = self._n, cfg.rounds, cfg.window
        stop = cfg.stop_height
        delays = self._delays
        queue = self._queue
        seq = self._seq
        blocks = self.blocks
        views = self.views
        heappush, heappop = heapq.heappush, heapq.heappop

        round_starts = [0] * n
        histogram: dict[int, int] = {}
        starter_hist: list[dict[int, int]] = [{} for _ in range(n)]
        generated = 0

        top_height = 0
        top_id = GENESIS.id
        starter = -1
        round_size = 0
        next_gen = self._gaps.next()

        logger.info(
            "Simulating %d rounds (n=%d, rule=%s, seed=%d)",
            rounds, n, self._rule.value, cfg.seed,
        )
        while top_height < stop:
            if queue and queue[0][0] <= next_gen:
                _, _, j, bid = heappop(queue)
                block = blocks.get(bid)
                if block is not None:
                    self._adopt(views[j], block)
                continue

            now = next_gen
            k = self._owners.next()
            view = views[k]
            parent = blocks[view.head]
            block = Block(self._next_id, parent.id, parent.height + 1, k, now)
            self._next_id += 1
            generated += 1
            blocks[block.id] = block
            self._by_height.setdefault(block.height, []).append(block.id)
            view.head = block.id
            view.known.add(block.id)
            row = delays[k]
            for j in range(n):
                if j != k:
                    heappush(queue, (now + row[j], next(seq), j, block.id))

            if block.height > top_height:
                if 1 <= top_height <= rounds:
                    histogram[round_size] = histogram.get(round_size, 0) + 1
                    sh = starter_hist[starter]
                    sh[round_size] = sh.get(round_size, 0) + 1
                top_height, top_id = block.height, block.id
                starter, round_size = k, 1
                if top_height <= rounds:
                    round_starts[k] += 1
                    if top_height % _PROGRESS_EVERY == 0:
                        logger.info("  %d / %d rounds", top_height, rounds)
                if top_height - self._settled_height >= 2 * window:
                    self._settle(top_id, top_height - window)
            else:
                round_size += 1
            next_gen = now + self._gaps.next()

        tip = min(
            (blocks[b] for b in self._by_height[top_height]),
            key=lambda b: (b.born_at, b.id),
        )
        self._count_chain(tip.id, rounds)
        logger.info("Simulation finished: %d blocks generated", generated)
        return SimResult(
            seed=cfg.seed,
            total_rounds=rounds,
            round_starts=tuple(round_starts),
            mainchain_blocks=tuple(self._mainchain),
            scale_histogram=dict(sorted(histogram.items())),
            starter_histograms=tuple(dict(sorted(h.items())) for h in starter_hist),
            blocks_generated=generated,
        )


def run(config: SimConfig) -> SimResult:
    """Run one simulation; deterministic for a fixed ``config.seed``."""
    return Simulator(config).run()


def empirical_fairness(result: SimResult, alpha: np.ndarray) -> FairnessReport:
    """Fairness measured by a simulation run against hashrates *alpha*."""
    alpha = np.asarray(alpha, dtype=float)
    if len(alpha) != result.n:
        raise ValueError(f"alpha has {len(alpha)} entries, result has {result.n} miners")
    return empirical_report(result.empirical_pi, result.empirical_r, alpha)


__all__ = [
    "Block",
    "DEFAULT_TRIM_HEIGHTS",
    "DEFAULT_WINDOW",
    "GENESIS",
    "MinerView",
    "SimConfig",
    "SimResult",
    "SimulationError",
    "Simulator",
    "empirical_fairness",
    "run",
]
