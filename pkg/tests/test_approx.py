import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vrcache.scheduler.approx import Mlp, MlpSpec, clip_norm, finite_difference, load_checkpoint, save_checkpoint


def test_spec_validation():
    with pytest.raises(ValueError):
        MlpSpec((3,))
    with pytest.raises(ValueError):
        MlpSpec((3, 4, 2))
    with pytest.raises(ValueError):
        MlpSpec((3, 1), activation="swish")
    assert MlpSpec((3, 4, 1)).n_params == 4 * 4 + 5
    with pytest.raises(ValueError):
        Mlp(MlpSpec((3, 1)), np.zeros(3))


def test_zero_parameters_give_zero_output():
    net = Mlp(MlpSpec((5, 8, 8, 1)))
    assert net(np.ones(5)) == 0.0
    assert (net(np.ones((4, 5))) == 0.0).all()


def test_linear_network_by_hand():
    net = Mlp(MlpSpec((2, 1)), np.array([0.5, -2.0, 0.25]))
    assert net(np.array([2.0, 1.0])) == pytest.approx(0.5 * 2 - 2.0 + 0.25)
    y, g = net.grad(np.array([2.0, 1.0]))
    np.testing.assert_allclose(g, [2.0, 1.0, 1.0])


def test_forward_is_reproducible_and_batched():
    rng = np.random.default_rng(0)
    net = Mlp.init(MlpSpec((6, 16, 16, 1)), rng)
    X = rng.normal(size=(7, 6))
    batch = net(X)
    single = np.array([net(x) for x in X])
    np.testing.assert_allclose(batch, single, rtol=1e-13)
    net2 = Mlp.init(MlpSpec((6, 16, 16, 1)), np.random.default_rng(0))
    assert np.array_equal(net2(X), batch)


@pytest.mark.parametrize("act", ["elu", "tanh", "relu"])
def test_gradient_matches_finite_differences(act):
    rng = np.random.default_rng(1)
    for _ in range(5):
        net = Mlp.init(MlpSpec((5, 7, 6, 1), act), rng, out_scale=1.0)
        x = rng.normal(size=(3, 5))
        _, g = net.grad(x)
        fd = finite_difference(net, x)
        assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(g))


def test_weighted_batch_gradient():
    rng = np.random.default_rng(2)
    net = Mlp.init(MlpSpec((4, 5, 1)), rng, out_scale=1.0)
    X = rng.normal(size=(3, 4))
    w = np.array([0.5, -1.0, 2.0])
    _, g = net.grad(X, w)
    parts = sum(wi * net.grad(x)[1] for wi, x in zip(w, X))
    np.testing.assert_allclose(g, parts, rtol=1e-12, atol=1e-14)


def test_views_follow_replaced_parameters():
    rng = np.random.default_rng(3)
    net = Mlp.init(MlpSpec((3, 4, 1)), rng)
    x = rng.normal(size=3)
    before = net(x)
    net.theta = net.theta * 2.0
    assert net(x) != before
    net.theta[:] = 0.0
    assert net(x) == 0.0


@settings(deadline=None, max_examples=40)
@given(bound=st.floats(0.1, 10.0), scale=st.floats(0.0, 100.0))
def test_clip_norm(bound, scale):
    g = np.array([3.0, 4.0]) * scale
    out = clip_norm(g, bound)
    assert np.linalg.norm(out) <= max(bound, 0.0) * (1 + 1e-12) or np.linalg.norm(g) <= bound
    if np.linalg.norm(g) <= bound:
        assert np.array_equal(out, g)


def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    nets = {"q0": Mlp.init(MlpSpec((6, 8, 1)), rng), "w0": Mlp.init(MlpSpec((3, 1), "tanh"), rng)}
    path = tmp_path / "agents.ckpt"
    save_checkpoint(path, nets, {"seed": 7, "iteration": 12})
    back, meta = load_checkpoint(path)
    assert meta == {"seed": "7", "iteration": "12"}
    for k in nets:
        assert back[k].spec == nets[k].spec
        assert np.array_equal(back[k].theta, nets[k].theta)


def test_checkpoint_corruption_detected(tmp_path):
    path = tmp_path / "a.ckpt"
    save_checkpoint(path, {"q": Mlp(MlpSpec((2, 1)))}, {})
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError, match="does not match"):
        load_checkpoint(path)
    hdr = path.with_suffix(".ckpt.txt")
    hdr.write_text("net q sizes=2,1 activation=elu n_params=9\n")
    with pytest.raises(ValueError, match="line 1"):
        load_checkpoint(path)
