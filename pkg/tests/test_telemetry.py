import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asrnlab import EpisodeRangeError, RunLog, detect_trap_events, grouped_mean_upsilon, smooth, success_fraction
from asrnlab.telemetry import action_frequency_series, steps_csv, success_series, upsilon_csv, window_mean_upsilon


def make_log(q_final, actions=None, upsilons=None):
    """Single-episode log with the given post-update tables."""
    q = np.asarray(q_final, dtype=float)[:, None, :]
    n = q.shape[0]
    actions = np.zeros((n, 1), int) if actions is None else np.asarray(actions)[:, None]
    ups = np.zeros((n, 1)) if upsilons is None else np.asarray(upsilons, float)[:, None]
    z = np.zeros((n, 1))
    return RunLog(np.arange(n), actions, z, z, ups, z, q)


def test_smooth_examples():
    np.testing.assert_allclose(smooth([0, 1, 0, 1], 2), [0, 0.5, 0.5, 0.5])
    x = np.random.default_rng(0).normal(size=30)
    np.testing.assert_array_equal(smooth(x, 1), x)
    np.testing.assert_allclose(smooth([2.5] * 40, 7), 2.5)


def test_smooth_trailing_window_definition():
    x = np.random.default_rng(1).normal(size=120)
    k = 50
    expected = [x[max(0, t - k + 1) : t + 1].mean() for t in range(len(x))]
    np.testing.assert_allclose(smooth(x, k), expected, rtol=1e-12)


def test_smooth_short_series():
    np.testing.assert_allclose(smooth([1.0, 3.0], 50), [1.0, 2.0])
    assert len(smooth([], 3)) == 0


@pytest.mark.parametrize("k", [0, -1, 1.5])
def test_smooth_bad_kernel(k):
    with pytest.raises(ValueError):
        smooth([1.0], k)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200), st.integers(1, 60))
def test_smooth_bounds_and_length(xs, k):
    out = smooth(xs, k)
    assert len(out) == len(xs)
    assert np.all(out >= min(xs)) and np.all(out <= max(xs))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=5, max_size=80), st.integers(1, 5), st.floats(-50, 50))
def test_smooth_shift_equivariant(xs, k, c):
    x = np.array(xs)
    np.testing.assert_allclose(smooth(x + c, k), smooth(x, k) + c, atol=1e-9)


def test_success_fraction_examples():
    assert success_fraction(make_log([[0, 1], [2, 3]]), 0) == 1.0
    q = [[0.0, 1.0]] * 60 + [[1.0, 0.0]] * 40
    assert success_fraction(make_log(q), 0) == 0.6
    assert success_fraction(make_log([[1.0, 1.0], [0.0, 1.0]]), 0) == 0.75


def test_success_fraction_errors():
    log = make_log([[0, 1]])
    with pytest.raises(EpisodeRangeError):
        success_fraction(log, 1)
    empty = RunLog(np.zeros(0, int), *(np.zeros((0, 1)),) * 5, np.zeros((0, 1, 2)))
    with pytest.raises(EpisodeRangeError):
        success_fraction(empty, 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), min_size=1, max_size=50))
def test_success_complementary_counting(pairs):
    q = np.array(pairs, float)
    log = make_log(q)
    success = success_fraction(log, 0)
    right = np.mean(q[:, 1] > q[:, 0])
    left = np.mean(q[:, 0] > q[:, 1])
    ties = np.mean(q[:, 0] == q[:, 1])
    assert 0 <= success <= 1
    assert right + left + ties == pytest.approx(1.0)
    assert success == pytest.approx(right + 0.5 * ties)
    assert success + success_fraction(make_log(q[:, ::-1]), 0) == pytest.approx(1.0)


def test_grouped_mean_upsilon():
    r, l = grouped_mean_upsilon(make_log([[0, 1]] * 3, actions=[1, 1, 1], upsilons=[0.1, 0.2, 0.3]), 0)
    assert r == pytest.approx(0.2) and np.isnan(l)
    assert grouped_mean_upsilon(make_log([[0, 1]] * 2, actions=[1, 0], upsilons=[0.2, 0.4]), 0) == (0.2, 0.4)


def test_window_mean_upsilon_pools_steps():
    n, t = 2, 4
    actions = np.array([[1, 1, 0, 0], [1, 0, 0, 1]])
    ups = np.array([[1.0, 2.0, 0.5, 0.5], [3.0, 0.1, 0.2, 4.0]])
    log = RunLog(np.arange(n), actions, ups * 0, ups * 0, ups, ups * 0, np.zeros((n, t, 2)))
    right, left = window_mean_upsilon(log, 1)
    assert right == pytest.approx(3.0)
    assert left == pytest.approx((0.5 + 0.5 + 0.1 + 0.2) / 4)


def trajectory(flips, length, start_right=True):
    """Q trajectory whose ordering switches at the given episodes."""
    right_ahead = start_right
    q = np.empty((length, 2))
    for t in range(length):
        if t in flips:
            right_ahead = not right_ahead
        q[t] = (0.0, 1.0) if right_ahead else (1.0, 0.0)
    return q


def test_trap_events_synthetic():
    assert detect_trap_events(trajectory(set(), 500)) == []
    assert detect_trap_events(trajectory({40, 320}, 500)) == [(40, "enter"), (320, "exit")]
    events = detect_trap_events(trajectory({40, 320, 400}, 500))
    assert events[-1] == (400, "enter")


def test_trap_events_ties_keep_side():
    q = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [2.0, 2.0], [1.0, 2.0]])
    assert detect_trap_events(q) == [(2, "enter"), (4, "exit")]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=100))
def test_trap_events_alternate(pairs):
    events = detect_trap_events(np.array(pairs, float))
    kinds = [k for _, k in events]
    assert kinds == ["enter", "exit"] * (len(kinds) // 2) + ["enter"] * (len(kinds) % 2)
    episodes = [e for e, _ in events]
    assert episodes == sorted(set(episodes))


def test_csv_layouts():
    log = make_log([[0.0, 1.5], [2.0, 1.0]], actions=[1, 0], upsilons=[0.25, 0.5])
    lines = steps_csv(log).splitlines()
    assert lines[0] == "agent_id,episode,action,raw_reward,noised_reward,upsilon,epsilon,q_left,q_right"
    assert lines[1] == "0,0,1,0.0,0.0,0.25,0.0,0.0,1.5"
    only_right = make_log([[0.0, 1.0]], actions=[1], upsilons=[0.25])
    assert upsilon_csv(only_right).splitlines() == ["episode,mean_upsilon_right,mean_upsilon_left", "0,0.25,"]


def test_action_frequency():
    log = make_log([[0, 1]] * 4, actions=[1, 1, 0, 1])
    assert action_frequency_series(log)[0] == 0.75
    assert success_series(log)[0] == 1.0
