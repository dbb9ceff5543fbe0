"""Tests for fork-scale probabilities and impacts."""

from __future__ import annotations

import math

import numpy as np
import pytest

from minefair.forkscale import (
    SWEEP_COLUMNS,
    impact_sweep,
    impacts,
    round_scale_probs,
    weighted_prop_time,
)
from minefair.model import build_model, constant_delays, exponential_delays


def test_weighted_prop_time():
    m = build_model(2, [0.3, 0.7], [[0, 10], [10, 0]], 600.0)
    assert weighted_prop_time(m, 0) == pytest.approx(7.0)

    alpha = [0.1, 0.2, 0.3, 0.4]
    const = build_model(4, alpha, constant_delays(4, 12.0), 600.0)
    for i in range(4):
        assert weighted_prop_time(const, i) == pytest.approx((1 - alpha[i]) * 12.0)

    zero = build_model(3, [0.2, 0.3, 0.5], constant_delays(3, 0.0), 600.0)
    assert weighted_prop_time(zero, 1) == 0.0


def test_round_scale_probs_zero_delays():
    m = build_model(3, [0.2, 0.3, 0.5], constant_delays(3, 0.0), 600.0)
    probs = round_scale_probs(m, 2)
    assert probs.miner == 2
    assert probs.p_one == pytest.approx(1.0)
    assert probs.p_fork == 0.0
    assert probs.p_three_plus_upper == 0.0


def test_round_scale_probs_constant_delays():
    alpha = [0.1, 0.2, 0.3, 0.4]
    m = build_model(4, alpha, constant_delays(4, 60.0), 600.0)
    for i in range(4):
        probs = round_scale_probs(m, i)
        assert probs.p_one == pytest.approx(alpha[i] + (1 - alpha[i]) * np.exp(-0.1))


def test_round_scale_probs_invariants():
    alpha = np.full(10, 0.1)
    m = build_model(10, alpha, exponential_delays(10, 60.0, seed=3), 600.0)
    for i in m.miners:
        probs = round_scale_probs(m, i)
        assert probs.p_one + probs.p_fork == pytest.approx(1.0, abs=1e-12)
        assert probs.p_two_lower <= probs.p_fork
        assert probs.p_three_plus_upper >= 0
        assert set(probs.row()) == {
            "miner", "p_one", "p_fork", "p_three_plus_upper", "p_two_lower", "t_weighted",
        }


def test_round_scale_probs_vanish_with_delay():
    alpha = [0.2, 0.3, 0.5]
    previous = None
    for d in (60.0, 6.0, 0.6, 0.06, 0.0):
        probs = round_scale_probs(build_model(3, alpha, constant_delays(3, d), 600.0), 0)
        if previous is not None:
            assert probs.p_fork < previous.p_fork
            assert probs.p_three_plus_upper < previous.p_three_plus_upper
        previous = probs
    assert previous.p_fork == 0.0
    assert previous.p_three_plus_upper == 0.0


def test_impacts_zero():
    imp = impacts(0.0)
    assert (imp.i1, imp.i2, imp.i3) == (1.0, 0.0, 0.0)
    assert imp.i3_over_i2 == 0.0
    assert imp.i3_over_i1_i2 == 0.0


@pytest.mark.parametrize(
    ("d_over_t", "expected"),
    [(0.01, 0.0050167084), (0.1, 0.0517091), (0.5, 0.297442)],
)
def test_impacts_i3_over_i2_reference_values(d_over_t: float, expected: float):
    assert impacts(d_over_t).i3_over_i2 == pytest.approx(expected, rel=1e-4)


def test_impacts_i3_over_i1_i2_from_formulas():
    # recomputed from the closed forms; published figures for this ratio differ
    assert impacts(0.01).i3_over_i1_i2 == pytest.approx(4.967e-5, rel=1e-3)
    assert impacts(0.1).i3_over_i1_i2 == pytest.approx(4.701e-3, rel=1e-3)
    assert impacts(0.5).i3_over_i1_i2 == pytest.approx(9.914e-2, rel=1e-3)


def test_impacts_sum_to_one():
    for x in np.linspace(0.0, 5.0, 501):
        imp = impacts(float(x))
        assert imp.i1 + imp.i2 + imp.i3 == pytest.approx(1.0, abs=1e-12)
        assert 0 <= imp.i3 <= 1


def test_impacts_ratio_strictly_increasing():
    ratios = [impacts(x).i3_over_i2 for x in np.linspace(1e-3, 1.0, 1000)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))


def test_impacts_rejects_negative():
    with pytest.raises(ValueError):
        impacts(-0.1)


def test_impact_sweep_rows():
    rows = impact_sweep([0.0])
    assert len(rows) == 1
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert tuple(rows[0].values()) == (0.0, 1.0, 0.0, 0.0, 0.0, 0.0)

    rows = impact_sweep([0.01, 0.1, 0.5])
    assert [r["d_over_t"] for r in rows] == [0.01, 0.1, 0.5]


def test_impacts_large_delay_ratios_stay_finite_then_saturate():
    near = impacts(705.0)
    assert near.i3_over_i2 == pytest.approx(math.exp(705.0) / 705.0, rel=1e-9)
    assert near.i3_over_i1_i2 == pytest.approx(math.exp(705.0) / 706.0, rel=1e-9)

    far = impacts(800.0)
    assert far.i1 == 0.0
    assert far.i3 == 1.0
    assert far.i3_over_i2 == math.inf
    assert far.i3_over_i1_i2 == math.inf
    assert impact_sweep([800.0])[0]["i3_over_i2"] == math.inf
