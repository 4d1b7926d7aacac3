import numpy as np
import pytest

from vrcache.scheduler.policies import (
    AgentView, EpsilonSchedule, RoundRobin, baseline_schedule, reward, schedule_slot,
)


def test_reward_examples():
    assert reward([True] * 20, 0, 0.9, 8) == 0.0
    one = [False] * 8 + [True] + [False] * 5
    assert reward(one, 1, 0.9, 8) == pytest.approx(0.9**8)
    three = [False] * 8 + [True] * 3
    assert reward(three, 1, 0.9, 8) == pytest.approx(0.9**8 * (1 + 0.9 + 0.81))
    assert reward([True] * 5, 1, 0.9, 8) == 0.0  # horizon ends before the delivery
    with pytest.raises(ValueError):
        reward([True], 2, 0.9, 0)


def test_epsilon_schedule_decays_to_floor():
    sch = EpsilonSchedule(1.0, 0.05, 0.5)
    seen = [sch.step() for _ in range(8)]
    assert seen[:3] == [0.5, 0.25, 0.125]
    assert seen[-1] == 0.05
    assert EpsilonSchedule(0.01, 0.05, 0.5).step() == 0.01


def test_schedule_slot_examples():
    rng = np.random.default_rng(0)
    assert schedule_slot([AgentView(0, False, 1.0)], 2, 0.0, rng) == []
    assert schedule_slot([AgentView(3, True, -1.0)], 1, 0.0, rng) == [3]
    agents = [AgentView(0, True, 0.2), AgentView(1, True, 0.9), AgentView(2, True, 0.9)]
    assert schedule_slot(agents, 1, 0.0, rng) == [1]
    assert schedule_slot(agents, 2, 0.0, rng) == [1, 2]
    assert schedule_slot(agents, 5, 0.0, rng) == [1, 2, 0]


def test_schedule_slot_explores_uniformly():
    rng = np.random.default_rng(1)
    agents = [AgentView(u, True, float(u)) for u in range(4)]
    picks = [schedule_slot(agents, 1, 1.0, rng)[0] for _ in range(4000)]
    counts = np.bincount(picks, minlength=4)
    assert (abs(counts - 1000) < 4 * np.sqrt(4000 * 0.25 * 0.75)).all()


def test_urf_picks_earliest_deadline():
    agents = [AgentView(0, True, deadline=5), AgentView(1, True, deadline=3), AgentView(2, True, deadline=9)]
    assert baseline_schedule("URF", agents, 1, np.random.default_rng(0)) == [1]
    tie = [AgentView(4, True, deadline=3), AgentView(2, True, deadline=3)]
    assert baseline_schedule("URF", tie, 1, np.random.default_rng(0)) == [2]


def test_round_robin_serves_each_user_once():
    rr = RoundRobin()
    agents = [AgentView(u, True) for u in range(3)]
    served = [baseline_schedule(rr, agents, 1, np.random.default_rng(0))[0] for _ in range(3)]
    assert sorted(served) == [0, 1, 2]
    assert baseline_schedule(rr, agents, 1, np.random.default_rng(0)) == [0]  # wraps around
    # users without a pending request are skipped
    gap = [AgentView(0, True), AgentView(1, False), AgentView(2, True)]
    rr = RoundRobin()
    assert [baseline_schedule(rr, gap, 1, None)[0] for _ in range(3)] == [0, 2, 0]


def test_random_policy_is_seeded():
    agents = [AgentView(u, True) for u in range(6)]
    a = [baseline_schedule("Random", agents, 2, np.random.default_rng(5)) for _ in range(3)]
    b = [baseline_schedule("Random", agents, 2, np.random.default_rng(5)) for _ in range(3)]
    assert a == b
    assert len(set(a[0])) == 2
    with pytest.raises(ValueError):
        baseline_schedule("Fifo", agents, 1, np.random.default_rng(0))
