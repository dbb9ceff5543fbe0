"""JSON and CSV rendering of calculation, simulation and comparison results."""

from __future__ import annotations

import csv
import io
import json
from typing import Any, Iterable, Sequence

from .fairness import FairnessReport, TwoMinerSolution
from .forkscale import SWEEP_COLUMNS, RoundScaleProbs
from .harness import ERROR_KINDS, ComparisonReport, SweepRow
from .simulator import SimResult

FORMATS = ("json", "csv")

REPORT_COLUMNS = ("miner", "alpha", "pi", "reward_rate", "lf1", "lf2")


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def to_csv(rows: Iterable[dict[str, Any]], columns: Sequence[str]) -> str:
    """Render *rows* with a fixed header; missing keys become empty cells."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in columns})
    return buf.getvalue()


def _check(fmt: str) -> None:
    if fmt not in FORMATS:
        raise ValueError(f"Unknown output format {fmt!r}. Available: {', '.join(FORMATS)}")


def render_fairness(report: FairnessReport, fmt: str = "json") -> str:
    _check(fmt)
    if fmt == "csv":
        return to_csv(report.rows(), REPORT_COLUMNS)
    return to_json(report.to_dict())


def render_simulation(result: SimResult, report: FairnessReport, fmt: str = "json") -> str:
    """A run's counts plus the fairness it measured."""
    _check(fmt)
    if fmt == "csv":
        rows = [
            {**row, "round_starts": result.round_starts[i], "mainchain_blocks": result.mainchain_blocks[i]}
            for i, row in enumerate(report.rows())
        ]
        return to_csv(rows, (*REPORT_COLUMNS, "round_starts", "mainchain_blocks"))
    payload = result.to_dict()
    payload["fairness"] = report.to_dict()
    return to_json(payload)


def histogram_csv(result: SimResult) -> str:
    """Round-scale histogram: overall count plus one column per round starter."""
    sizes = sorted(result.scale_histogram)
    columns = ["scale", "count", *(f"starter_{i}" for i in range(result.n))]
    rows = []
    for size in sizes:
        row: dict[str, Any] = {"scale": size, "count": result.scale_histogram[size]}
        for i, hist in enumerate(result.starter_histograms):
            row[f"starter_{i}"] = hist.get(size, 0)
        rows.append(row)
    return to_csv(rows, columns)


def render_comparison(report: ComparisonReport, fmt: str = "json") -> str:
    _check(fmt)
    if fmt == "csv":
        rows = [{"seed": run.seed, **run.errors()} for run in report.runs]
        return to_csv(rows, ("seed", *ERROR_KINDS))
    return to_json(report.to_dict())


SWEEP_ROW_COLUMNS = (
    "d_over_t",
    "rule",
    *(f"{k}_{stat}" for k in ERROR_KINDS for stat in ("mean", "sd")),
    "model_gf1_mean",
    "model_gf2_mean",
)


def render_sweep(rows: Sequence[SweepRow], fmt: str = "json") -> str:
    _check(fmt)
    records = [r.row() for r in rows]
    if fmt == "csv":
        return to_csv(records, SWEEP_ROW_COLUMNS)
    return to_json({"sd": "sample (n-1)", "rows": records})


def render_impacts(rows: Sequence[dict[str, float]], fmt: str = "csv") -> str:
    _check(fmt)
    if fmt == "csv":
        return to_csv(rows, SWEEP_COLUMNS)
    return to_json(list(rows))


ROUND_SCALE_COLUMNS = ("miner", "p_one", "p_fork", "p_three_plus_upper", "p_two_lower", "t_weighted")


def render_round_scale(rows: Sequence[RoundScaleProbs], fmt: str = "csv") -> str:
    _check(fmt)
    records = [r.row() for r in rows]
    if fmt == "csv":
        return to_csv(records, ROUND_SCALE_COLUMNS)
    return to_json(records)


def render_two_miner(solution: TwoMinerSolution, fmt: str = "json") -> str:
    _check(fmt)
    record = solution.to_dict()
    if fmt == "csv":
        return to_csv([record], tuple(record))
    return to_json(record)


def error_payload(exc: BaseException) -> str:
    """Machine-readable error object for the CLI's stderr."""
    # KeyError's str() wraps the message in quotes
    message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
    return json.dumps({"error": {"type": type(exc).__name__, "message": str(message)}})
