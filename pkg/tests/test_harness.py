"""Tests for model/simulation comparison and sweeps."""

from __future__ import annotations

import math

import numpy as np
import pytest

from minefair.harness import ERROR_KINDS, compare, relative_error, sweep
from minefair.model import DelaySpec, ModelConfig, TieBreakRule, build_model, constant_delays

SMALL = {"trim_heights": 20, "window": 200}


def test_relative_error_values():
    assert relative_error([0.03, -0.03], [0.03, -0.03]) == 0.0
    assert relative_error([0.03, -0.03], [0.0, 0.0]) == pytest.approx(1.0)
    assert relative_error([0.03, -0.03], [0.02, -0.02]) == pytest.approx(1 / 3)


def test_relative_error_errors():
    with pytest.raises(ValueError, match="zero"):
        relative_error([0.0, 0.0], [0.1, -0.1])
    with pytest.raises(ValueError, match="length"):
        relative_error([0.1, -0.1], [0.1])


def test_compare_forkless_network():
    m = build_model(3, [0.2, 0.3, 0.5], constant_delays(3, 0.0), 600.0)
    report = compare(m, 5_000, [1, 2, 3], **SMALL)
    assert report.seeds == [1, 2, 3]
    # model and baseline coincide without forks
    assert report.column("err_lf1") == report.column("baseline_err_lf1")
    assert report.column("err_pi") == report.column("baseline_err_pi")
    assert report.mean("err_pi") < 0.05
    for kind in ERROR_KINDS:
        assert all(v >= 0 for v in report.column(kind))


def test_compare_orders_and_dedupes_seeds():
    m = build_model(2, [0.3, 0.7], constant_delays(2, 60.0), 600.0)
    report = compare(m, 1_000, [3, 1, 3], **SMALL)
    assert report.seeds == [1, 3]
    assert len(report.sim_reports) == 2
    with pytest.raises(ValueError):
        compare(m, 1_000, [], **SMALL)


def test_compare_single_seed_has_zero_sd():
    m = build_model(2, [0.3, 0.7], constant_delays(2, 60.0), 600.0)
    report = compare(m, 1_000, [7], **SMALL)
    for kind in ERROR_KINDS:
        assert report.sd(kind) == 0.0
    summary = report.summary()
    assert set(summary) == {f"{k}_{s}" for k in ERROR_KINDS for s in ("mean", "sd")}


def test_compare_is_reproducible():
    m = build_model(2, [0.3, 0.7], constant_delays(2, 60.0), 600.0)
    a = compare(m, 2_000, [1, 2], **SMALL)
    b = compare(m, 2_000, [1, 2], **SMALL)
    assert a.to_dict() == b.to_dict()


def test_compare_sample_sd():
    m = build_model(2, [0.3, 0.7], constant_delays(2, 60.0), 600.0)
    report = compare(m, 2_000, [1, 2, 3], **SMALL)
    values = report.column("err_lf1")
    mean = sum(values) / 3
    expected = math.sqrt(sum((v - mean) ** 2 for v in values) / 2)
    assert report.sd("err_lf1") == pytest.approx(expected)
    assert report.to_dict()["sd"] == "sample (n-1)"


def test_compare_resamples_delays_per_seed():
    cfg = ModelConfig(
        n=4, delays=DelaySpec.exponential(30.0, seed=0), mean_interval=600.0,
        alpha=(0.1, 0.2, 0.3, 0.4),
    )
    resampled = compare(cfg, 1_000, [1, 2], **SMALL)
    a, b = (r.model_report for r in resampled.runs)
    assert not np.array_equal(a.pi.pi, b.pi.pi)

    fixed = compare(cfg, 1_000, [1, 2], resample_delays=False, **SMALL)
    a, b = (r.model_report for r in fixed.runs)
    np.testing.assert_array_equal(a.pi.pi, b.pi.pi)


def test_sweep_shape():
    cfg = ModelConfig(
        n=3, delays=DelaySpec.constant(6.0), mean_interval=600.0, alpha=(0.2, 0.3, 0.5),
    )
    rows = sweep(cfg, [0.01, 0.1], ["first-seen", TieBreakRule.RANDOM], 1_000, [1, 2], **SMALL)
    assert [(r.d_over_t, r.rule) for r in rows] == [
        (0.01, TieBreakRule.FIRST_SEEN),
        (0.01, TieBreakRule.RANDOM),
        (0.1, TieBreakRule.FIRST_SEEN),
        (0.1, TieBreakRule.RANDOM),
    ]
    row = rows[0].row()
    assert row["rule"] == "first-seen"
    assert "err_lf1_mean" in row and "baseline_err_lf1_sd" in row
    assert row["model_gf1_mean"] >= 0


def test_sweep_single_cell_equals_compare():
    cfg = ModelConfig(
        n=2, delays=DelaySpec.constant(60.0), mean_interval=600.0, alpha=(0.3, 0.7),
    )
    (row,) = sweep(cfg, [0.1], ["first-seen"], 1_000, [1, 2], **SMALL)
    direct = compare(cfg, 1_000, [1, 2], **SMALL)
    assert row.report.to_dict() == direct.to_dict()


def test_sweep_rejects_empty_grid():
    cfg = ModelConfig(n=2, delays=DelaySpec.constant(60.0), mean_interval=600.0)
    with pytest.raises(ValueError):
        sweep(cfg, [], ["first-seen"], 1_000, [1])
