import numpy as np
import pytest

from riskac import WindowStats, running_risk_cost


def test_risk_cost_constant_window():
    assert running_risk_cost(np.full(100, 3.0), 0.7) == pytest.approx(2.1, abs=1e-12)


def test_risk_cost_small_alpha_is_alpha_times_mean():
    rng = np.random.default_rng(0)
    costs = rng.uniform(0.0, 10.0, size=1000)
    alpha = 1e-8
    assert running_risk_cost(costs, alpha) == pytest.approx(alpha * costs.mean(),
                                                            abs=1e-6)


def test_risk_cost_two_point_window():
    # log((e^1 + e^9) / 2), evaluated independently at 40-digit precision
    assert running_risk_cost(np.array([1.0, 9.0]), 1.0) == pytest.approx(
        8.30718822581295, abs=1e-12)


def test_risk_cost_overflow_guard():
    # alpha * c up to 7000: naive exp would overflow, the shift must not
    val = running_risk_cost(np.array([600.0, 700.0]), 10.0)
    assert np.isfinite(val)
    assert val == pytest.approx(7000.0 + np.log((np.exp(-1000.0) + 1) / 2), abs=1e-9)


def test_risk_cost_empty_window_raises():
    with pytest.raises(ValueError):
        running_risk_cost(np.array([]), 1.0)


def test_window_stats_counts_and_partial_fill():
    ws = WindowStats(5)
    with pytest.raises(ValueError):
        ws.mean()
    for k, x in enumerate([1.0, 2.0, 3.0]):
        ws.push(x)
        assert ws.count == k + 1
    assert ws.mean() == pytest.approx(2.0)
    assert ws.std() == pytest.approx(np.std([1.0, 2.0, 3.0]))
    for x in [4.0, 5.0, 6.0, 7.0]:
        ws.push(x)
    assert ws.count == 5  # window holds exactly the last five
    assert ws.mean() == pytest.approx(np.mean([3, 4, 5, 6, 7]))


def test_window_stats_match_two_pass_recompute():
    rng = np.random.default_rng(1)
    ws = WindowStats(1000)
    costs = rng.uniform(0.0, 10.0, size=200_000)
    checkpoints = set(rng.integers(1, costs.size, size=50).tolist())
    window: list[float] = []
    for k, x in enumerate(costs, start=1):
        ws.push(x)
        window.append(x)
        if len(window) > 1000:
            window.pop(0)
        if k in checkpoints:
            arr = np.asarray(window)
            assert abs(ws.mean() - arr.mean()) < 1e-9
            assert abs(ws.std() - arr.std()) < 1e-9
            assert abs(ws.risk_cost(1.0) - running_risk_cost(arr, 1.0)) < 1e-9


def test_window_stats_std_nonnegative_for_constant_stream():
    ws = WindowStats(10)
    for _ in range(100):
        ws.push(4.2)
    assert ws.std() == 0.0
    assert ws.mean() == pytest.approx(4.2)
    assert ws.risk_cost(2.0) == pytest.approx(8.4, abs=1e-12)


def test_window_rejects_bad_size():
    with pytest.raises(ValueError):
        WindowStats(0)
