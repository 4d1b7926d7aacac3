from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vrcache.catalog import TileGrid, Viewpoint, popularity_from_traces
from vrcache.delay import ChannelModel
from vrcache.dynamics import (
    Playback, PredictorConfig, TrajectoryStore, channel_path, ingest_traces, predict_desired,
    predict_tiles, prediction_accuracy, step_channel, synth_store, synth_trajectory, write_traces,
)

GRID = TileGrid(rows=6, cols=12, fov_rows=3, fov_cols=3)


# --- channel -------------------------------------------------------------------------------


def test_channel_never_leaves_high_without_p_h():
    model = ChannelModel(400e6, 704e6, p_to_high=0.3, p_to_low=0.0)
    rng = np.random.default_rng(0)
    high = True
    for _ in range(1000):
        high, rate = step_channel(high, model, rng)
        assert high and rate == 704e6
    assert channel_path(model, 1000, rng).all()


def test_channel_stationary_occupancy():
    model = ChannelModel(p_to_high=0.3, p_to_low=0.6)
    path = channel_path(model, 1_000_000, np.random.default_rng(1))
    # pi_H = p_L / (p_L + p_H) = 0.3 / 0.9
    assert abs(path.mean() - 1 / 3) < 0.01 / 3
    assert model.pi_high == pytest.approx(1 / 3)


def test_channel_transition_frequencies_within_binomial_bounds():
    model = ChannelModel(p_to_high=0.3, p_to_low=0.6)
    path = channel_path(model, 100_000, np.random.default_rng(2))
    prev, nxt = path[:-1], path[1:]
    for from_high, p in ((True, 0.6), (False, 0.3)):
        n = int((prev == from_high).sum())
        left = int(((prev == from_high) & (nxt != from_high)).sum())
        assert abs(left / n - p) < 3 * np.sqrt(p * (1 - p) / n)


def test_channel_step_and_path_agree_under_a_seed():
    model = ChannelModel(p_to_high=0.3, p_to_low=0.6)
    rng = np.random.default_rng(3)
    high, stepped = True, []
    for _ in range(500):
        high, _ = step_channel(high, model, rng)
        stepped.append(high)
    assert np.array_equal(channel_path(model, 500, np.random.default_rng(3)), stepped)
    assert np.array_equal(channel_path(model, 500, np.random.default_rng(9)),
                          channel_path(model, 500, np.random.default_rng(9)))


# --- trajectories -----------------------------------------------------------------------


def test_static_walk_and_validation():
    a = synth_trajectory(GRID, 0.0, 300, np.random.default_rng(0), seg_slots=100)
    assert (a[:, :2] == a[0, :2]).all()
    assert a[:, 2].tolist() == [k // 100 for k in range(300)]
    with pytest.raises(ValueError):
        synth_trajectory(GRID, 0.3, 10, np.random.default_rng(0))


def test_walk_clamps_rows_and_wraps_columns():
    a = synth_trajectory(GRID, 0.25, 5000, np.random.default_rng(4), start=(0, 11))
    assert a[:, 0].min() == 0 and a[:, 0].max() <= GRID.rows - 1
    assert a[:, 1].min() >= 0 and a[:, 1].max() <= GRID.cols - 1
    steps = np.abs(np.diff(a[:, :2], axis=0))
    steps[:, 1] = np.minimum(steps[:, 1], GRID.cols - steps[:, 1])
    assert (steps.sum(axis=1) <= 1).all()
    # a move up from the top row is absorbed by the clamp
    top = a[:-1, 0] == 0
    assert ((np.diff(a[:, 0])[top]) >= 0).all()


def lazy_walk_abs_mean(p, n):
    """E|S_n| for a walk stepping -1/+1 with probability p each, by exact convolution."""
    step = np.array([p, 1 - 2 * p, p])
    dist = np.array([1.0])
    for _ in range(n):
        dist = np.convolve(dist, step)
    return float(dist @ np.abs(np.arange(len(dist)) - n))


def test_walk_displacement_matches_exact_distribution():
    big = TileGrid(rows=401, cols=400, fov_rows=1, fov_cols=1)
    p, n = 0.05, 30
    rng = np.random.default_rng(5)
    d = np.array([
        synth_trajectory(big, p, n + 1, rng, start=(200, 200))[-1, :2] - 200 for _ in range(4000)
    ])
    assert abs(d.mean(axis=0)).max() < 4 * d.std(axis=0).max() / np.sqrt(len(d))
    exact = lazy_walk_abs_mean(p, n)
    se = np.abs(d).std(axis=0) / np.sqrt(len(d))
    assert abs(np.abs(d[:, 0]).mean() - exact) < 4 * se[0]
    assert abs(np.abs(d[:, 1]).mean() - exact) < 4 * se[1]


def test_synth_store_is_reproducible():
    a = synth_store(GRID, 3, 200, 0.02, np.random.default_rng(6))
    b = synth_store(GRID, 3, 200, 0.02, np.random.default_rng(6))
    assert all(np.array_equal(a.users[u], b.users[u]) for u in range(3))
    assert not np.array_equal(a.users[0], a.users[1])


# --- trace files -------------------------------------------------------------------------


def test_empty_trace_file(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("")
    assert len(ingest_traces(path, GRID)) == 0


def test_trace_round_trip_and_popularity_count(tmp_path):
    store = synth_store(GRID, 4, 250, 0.03, np.random.default_rng(7), seg_slots=100)
    path = tmp_path / "t.csv"
    write_traces(store, path)
    back = ingest_traces(path, GRID)
    assert sorted(back.users) == [0, 1, 2, 3]
    assert all(np.array_equal(back.users[u], store.users[u]) for u in store.users)
    pop = popularity_from_traces(back, GRID, 3)
    counts = Counter((int(j), int(r), int(c)) for a in store.users.values() for r, c, j in a)
    for (j, r, c), n in counts.items():
        assert pop[j, r, c] == pytest.approx(n / 1000)
    assert pop.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("body,match", [
    ("0,0,0,1\n", "line 2: expected 5 fields"),
    ("0,0,0,1,x\n", "line 2: non-integer"),
    ("0,0,0,6,1\n", "line 2: tile"),
    ("0,0,0,1,1\n0,0,0,1,1\n", "line 3: duplicate slot"),
    ("0,1,0,1,1\n", "not contiguous"),
])
def test_trace_errors(tmp_path, body, match):
    path = tmp_path / "t.csv"
    path.write_text("user_id,slot,segment,tile_row,tile_col\n" + body)
    with pytest.raises(ValueError, match=match):
        ingest_traces(path, GRID)


def test_store_validate():
    store = TrajectoryStore({0: np.array([[0, 0, 0], [6, 0, 0]])})
    with pytest.raises(ValueError, match="user 0"):
        store.validate(GRID)


# --- prediction ------------------------------------------------------------------------------


def test_predictor_kinds():
    hist = np.array([[2, 3, 0], [2, 4, 0], [2, 5, 0]])
    assert predict_tiles(hist, 3, PredictorConfig("persistence"), GRID).tolist() == [[2, 5]] * 3
    assert predict_tiles(hist, 3, PredictorConfig("velocity"), GRID).tolist() == [[2, 6], [2, 7], [2, 8]]
    wrap = np.array([[5, 11, 0], [5, 0, 0]])
    assert predict_tiles(wrap, 2, PredictorConfig("velocity"), GRID).tolist() == [[5, 1], [5, 2]]
    down = np.array([[4, 0, 0], [5, 0, 0]])
    assert predict_tiles(down, 2, PredictorConfig("velocity"), GRID)[:, 0].tolist() == [5, 5]
    with pytest.raises(ValueError):
        predict_tiles(hist, 2, PredictorConfig("learned"), GRID)
    fixed = lambda h, n: np.tile([[1, 1]], (n, 1))  # noqa: E731
    assert predict_tiles(hist, 2, PredictorConfig("learned"), GRID, fixed).tolist() == [[1, 1]] * 2
    with pytest.raises(ValueError):
        PredictorConfig(history_len=0)


CLOCK = Playback(seg_slots=4, n_segments=2)


def test_empty_buffer_requests_next_slot():
    hist = np.array([[2, 3, 0]])
    req = predict_desired(hist, 10, 0, 0, {}, PredictorConfig("persistence", horizon=8), GRID, CLOCK)
    assert req == (Viewpoint(2, 3, 0), 11)


def test_covered_segment_moves_request_to_next_segment():
    hist = np.array([[2, 3, 0]])
    cov = {0: np.ones((GRID.rows, GRID.cols), bool)}
    # phase 0 of segment 0: slots +1..+3 play segment 0, slot +4 starts segment 1
    req = predict_desired(hist, 10, 0, 0, cov, PredictorConfig("persistence", horizon=8), GRID, CLOCK)
    assert req == (Viewpoint(2, 3, 1), 14)
    cov[1] = np.ones((GRID.rows, GRID.cols), bool)
    assert predict_desired(hist, 10, 0, 0, cov, PredictorConfig("persistence", horizon=8), GRID, CLOCK) is None


def test_no_request_past_the_last_segment():
    hist = np.array([[2, 3, 1]])
    assert predict_desired(hist, 10, 1, 3, {}, PredictorConfig(horizon=8), GRID, CLOCK) is None
    with pytest.raises(ValueError):
        predict_desired(hist[:0], 10, 0, 0, {}, PredictorConfig(), GRID, CLOCK)


@settings(deadline=None, max_examples=60)
@given(seed=st.integers(0, 10_000), phase=st.integers(0, 3), density=st.floats(0, 1))
def test_desired_viewpoint_is_never_covered(seed, phase, density):
    rng = np.random.default_rng(seed)
    hist = synth_trajectory(GRID, 0.1, 5, rng)
    cov = {j: rng.random((GRID.rows, GRID.cols)) < density for j in range(2)}
    req = predict_desired(hist, 0, 0, phase, cov, PredictorConfig(horizon=6), GRID, CLOCK)
    if req is not None:
        d, deadline = req
        assert not cov[d.segment][d.row, d.col]
        assert 1 <= deadline <= 6


def test_prediction_accuracy_examples():
    static = TrajectoryStore({0: synth_trajectory(GRID, 0.0, 200, np.random.default_rng(0))})
    assert prediction_accuracy(PredictorConfig("persistence"), static, 5, GRID) == 1.0
    moving = synth_store(GRID, 2, 300, 0.1, np.random.default_rng(1))
    assert prediction_accuracy(PredictorConfig(), moving, 5, GRID, oracle=True) == 1.0


def test_persistence_accuracy_matches_stay_probability():
    big = TileGrid(rows=401, cols=400, fov_rows=1, fov_cols=1)
    p = 0.1
    store = TrajectoryStore({u: synth_trajectory(big, p, 3000, np.random.default_rng(u), start=(200, 200))
                             for u in range(4)})
    n = sum(len(a) - 1 for a in store.users.values())
    acc = prediction_accuracy(PredictorConfig("persistence"), store, 1, big)
    stay = 1 - 4 * p
    assert abs(acc - stay) < 4 * np.sqrt(stay * (1 - stay) / n)
