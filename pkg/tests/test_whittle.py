import numpy as np
import pytest

from vrcache.scheduler.whittle import (
    MdpSpec, buffer_mdp, exact_whittle, indexability_violations, passive_set, q_values,
)


def two_state_arm(r0, r1):
    """Active in state 0 moves to state 1; state 1 is absorbing; passive stays put."""
    P = np.zeros((2, 2, 2))
    P[0] = np.eye(2)
    P[1] = [[0.0, 1.0], [0.0, 1.0]]
    R = np.array([[0.0, 0.0], [r0, r1]])
    return MdpSpec(P, R, phi=1)


def test_validation():
    with pytest.raises(ValueError):
        MdpSpec(np.zeros((2, 2, 2)), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        MdpSpec(np.stack([np.eye(2)] * 2), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        MdpSpec(np.stack([np.eye(2)] * 2), np.zeros((2, 2)), phi=0)
    with pytest.raises(ValueError):
        q_values(MdpSpec(np.stack([np.eye(2)] * 2), np.zeros((2, 2))), 0.0, 1.0)


def test_zero_reward_identical_dynamics_gives_zero_index():
    rng = np.random.default_rng(0)
    T = rng.dirichlet(np.ones(4), size=4)
    mdp = MdpSpec(np.stack([T, T]), np.zeros((2, 4)), phi=3)
    np.testing.assert_allclose(exact_whittle(mdp, 0.9), 0.0, atol=1e-6)


def test_two_state_hand_solution():
    # state 1: r1 active forever against lam passive forever, so lam = r1.
    # state 0 (r0 < r1): lam / (1 - g) = r0 + g r1 / (1 - g), so lam = (1 - g) r0 + g r1.
    g = 0.9
    lam = exact_whittle(two_state_arm(0.2, 1.0), g)
    assert lam[1] == pytest.approx(1.0, abs=2e-6)
    assert lam[0] == pytest.approx((1 - g) * 0.2 + g * 1.0, abs=2e-6)


def test_epoch_discount_uses_phi():
    mdp = two_state_arm(0.2, 1.0)
    longer = MdpSpec(mdp.P, mdp.R, phi=4)
    g = 0.9**4
    assert exact_whittle(longer, 0.9)[0] == pytest.approx((1 - g) * 0.2 + g, abs=2e-6)


def test_index_is_the_switching_subsidy():
    rng = np.random.default_rng(1)
    mdp = buffer_mdp(rng, levels=4, regimes=2, phi=2)
    lam = exact_whittle(mdp, 0.9)
    g = 0.9**2
    for s, l in enumerate(lam):
        assert not passive_set(mdp, l - 1e-3, g)[s]
        assert passive_set(mdp, l + 1e-3, g)[s]


def test_relabelling_permutes_indices():
    rng = np.random.default_rng(2)
    mdp = buffer_mdp(rng, levels=3, regimes=3, phi=2)
    perm = rng.permutation(mdp.n_states)
    a = exact_whittle(mdp, 0.9)
    b = exact_whittle(mdp.relabel(perm), 0.9)
    np.testing.assert_allclose(b[perm], a, atol=2e-6)


def test_buffer_mdp_shape_and_size_cap():
    rng = np.random.default_rng(3)
    for _ in range(20):
        mdp = buffer_mdp(rng)
        assert mdp.n_states <= 60
        assert np.all(mdp.R[0] == 0.0) and np.all(mdp.R[1] >= 0.0)
    assert buffer_mdp(rng, levels=10, regimes=9).n_states <= 60


def test_random_buffer_arms_are_indexable():
    rng = np.random.default_rng(4)
    for _ in range(10):
        assert indexability_violations(buffer_mdp(rng), 0.9) == 0


def non_indexable_arm():
    """A 3-state arm found by random search whose passive set is not monotone in lam."""
    rng = np.random.default_rng(0)
    for _ in range(85):
        P = rng.dirichlet(np.ones(3) * 0.3, size=(2, 3))
        rng.normal(size=(2, 3))
        R = np.zeros((2, 3))
        R[1] = rng.normal(size=3) * 3
    return MdpSpec(P, R)


def test_sweep_detects_a_non_nested_passive_set():
    mdp = non_indexable_arm()
    assert passive_set(mdp, 5.535, 0.95)[1]
    assert not passive_set(mdp, 5.55, 0.95)[1]
    assert indexability_violations(mdp, 0.95) > 0
