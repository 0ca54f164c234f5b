import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qproject import GenSpec, InputAwareNet, LowerBoundBox, QpInstance, TrainConfig, forward, generate, train_input_aware
from qproject.learn import objective_loss
from qproject.netproj import flat_size, flatten, loss_and_grads, repair_rank


def test_flatten_smallest():
    inst = QpInstance(Q=[[2.0]], c=[-2.0], A=[[1.0]], b=[1.0])
    assert flatten(inst).tolist() == [2, -2, 1, 1]


def test_flatten_order_and_length():
    Q = np.array([[1.0, 2.0], [2.0, 5.0]])
    inst = QpInstance(Q=Q, c=[3.0, 4.0], A=[[6.0, 7.0]], b=[8.0], R=1, H=1)
    assert flatten(inst).tolist() == [1, 2, 2, 5, 3, 4, 6, 7, 8]
    assert flat_size(2, 1) == 9


def test_flatten_zero_instance():
    inst = QpInstance(Q=np.zeros((3, 3)), c=np.zeros(3), A=np.zeros((2, 3)), b=np.zeros(2), R=1, H=0)
    assert not flatten(inst).any()


@given(st.integers(1, 8), st.integers(0, 12))
def test_flat_size_formula(n, m):
    inst = QpInstance(Q=np.eye(n), c=np.zeros(n), A=np.zeros((m, n)), b=np.ones(m), R=1, H=1)
    assert len(flatten(inst)) == n * n + n + n * m + m == flat_size(n, m)


def test_theta_count():
    net = InputAwareNet.create(3, 6, 2, hidden=(5, 4))
    assert net.widths == [flat_size(3, 6), 5, 4, 6]
    assert net.theta_count == sum(a * b + b for a, b in zip(net.widths, net.widths[1:]))
    assert net.hidden_units == 9


def test_constant_net():
    P0 = np.vstack([np.eye(2), np.zeros((2, 2))])
    widths = [flat_size(4, 8), 3, 8]
    net = InputAwareNet.constant(widths, P0)
    for inst in generate(GenSpec("random_pd", n=4, m=8, count=3)):
        np.testing.assert_array_equal(forward(net, inst), P0)


def test_random_net_output_full_rank():
    inst = generate(GenSpec("random_pd", n=4, m=8))[0]
    P = forward(InputAwareNet.create(4, 8, 3, seed=1), inst)
    assert P.shape == (4, 3)
    s = np.linalg.svd(P, compute_uv=False)
    assert s[-1] >= 1e-8 * s[0]


def test_input_sensitivity_on_c():
    # width-1 network whose only nonzero weight reads c_0
    a, b = generate(GenSpec("random_pd", n=2, m=4, count=2))
    b = a.replace(c=a.c + np.array([1.0, 0.0]))
    W0 = np.zeros((1, flat_size(2, 4)))
    W0[0, 4] = 1.0
    net = InputAwareNet([flat_size(2, 4), 1, 2], [W0, np.ones((2, 1))], [np.array([5.0]), np.zeros(2)])
    Pa, Pb = forward(net, a), forward(net, b)
    # hidden = relu(c_0 + 5); output = hidden * (1, 1)
    np.testing.assert_allclose(Pa.ravel(), [a.c[0] + 5] * 2)
    np.testing.assert_allclose(Pb.ravel(), [a.c[0] + 6] * 2)


def test_dimension_mismatch():
    inst = generate(GenSpec("random_pd", n=3, m=6))[0]
    with pytest.raises(ValueError, match="input size"):
        forward(InputAwareNet.create(3, 7, 1), inst)


def test_rank_repair():
    P = np.zeros((3, 2))
    R, repaired = repair_rank(P)
    assert repaired and np.linalg.matrix_rank(R) == 2
    Q, repaired = repair_rank(np.eye(3, 2))
    assert not repaired and Q is not None


def test_doubling_first_layer_scales_preactivations():
    net = InputAwareNet.create(2, 4, 1, hidden=(6,), seed=4)
    x = flatten(generate(GenSpec("random_pd", n=2, m=4))[0])
    _, (_, pre) = net.raw(x)
    net.weights[0] *= 2
    net.biases[0] *= 2
    _, (_, pre2) = net.raw(x)
    np.testing.assert_allclose(pre2[0], 2 * pre[0])


def test_zero_iters_matches_fixed_P():
    sample = generate(GenSpec("random_pd", n=3, m=7, count=3, seed=5))
    P0 = np.eye(3, 2)
    net = InputAwareNet.constant([flat_size(3, 7), 4, 6], P0)
    cfg = TrainConfig(k=2, iters=0)
    _, rep = train_input_aware(sample, [4], cfg, net=net)
    want = np.mean([objective_loss(i, P0, cfg.gamma) for i in sample])
    assert rep.loss_trace == [(0, pytest.approx(want))]


def _theta_fd(net, sample, cfg, structure, j, idx, h=1e-5):
    p = net.params()[j]
    old = p[idx]
    p[idx] = old + h
    fp = loss_and_grads(net, sample, cfg, structure)[0].mean()
    p[idx] = old - h
    fm = loss_and_grads(net, sample, cfg, structure)[0].mean()
    p[idx] = old
    return (fp - fm) / (2 * h)


@pytest.mark.parametrize("seed", range(4))
def test_backprop_matches_fd(seed):
    sample = generate(GenSpec("random_pd", n=3, m=7, count=2, seed=seed))
    net = InputAwareNet.create(3, 7, 2, hidden=(8, 8), seed=seed, out_scale=0.5)
    cfg = TrainConfig(k=2, gamma=1e-6)
    _, grads = loss_and_grads(net, sample, cfg)
    rng = np.random.default_rng(seed)
    for j in range(len(grads)):
        idx = tuple(rng.integers(0, s) for s in grads[j].shape)
        fd = _theta_fd(net, sample, cfg, None, j, idx)
        assert abs(grads[j][idx] - fd) <= 1e-3 * max(abs(fd), 1e-4)


def test_backprop_through_structure():
    sample = generate(GenSpec("lower_bound_family", n=6, k=1))
    st_ = LowerBoundBox(6, 1)
    net = InputAwareNet.create(6, 2, 1, hidden=(8,), seed=2, out_bias=np.full(6, -0.5))
    cfg = TrainConfig(k=1, gamma=1e-6)
    _, grads = loss_and_grads(net, sample, cfg, st_)
    fd = _theta_fd(net, sample, cfg, st_, len(grads) - 1, (0,))
    assert grads[-1][0] == pytest.approx(fd, rel=1e-3)


def test_checkpoint_round_trip():
    net = InputAwareNet.create(2, 4, 1, hidden=(3,), seed=1)
    back = InputAwareNet.from_json(json.loads(json.dumps(net.to_json())))
    assert back.widths == net.widths
    for a, b in zip(back.params(), net.params()):
        np.testing.assert_array_equal(a, b)
