import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridpv.anfis import (
    AnfisError,
    AnfisNet,
    BellMf,
    TrainingSet,
    firing_strengths,
    forward,
    gradient_check,
    gradients,
    hybrid_train,
    membership,
    normalize,
    rmse,
)


def fixed_net():
    return AnfisNet(
        a_x=[1.5, 2.0],
        d_x=[0.0, 3.0],
        a_y=[1.0, 2.5],
        d_y=[1.0, 4.0],
        consequents=[[0.5, -1.0, 2.0], [1.0, 0.25, -0.5], [-0.75, 0.5, 1.0], [2.0, -0.5, 0.0]],
    )


def hand_forward(x, y):
    """Layer-by-layer evaluation written out longhand."""
    mu_x1 = 1.0 / (1.0 + ((x - 0.0) / 1.5) ** 2)
    mu_x2 = 1.0 / (1.0 + ((x - 3.0) / 2.0) ** 2)
    mu_y1 = 1.0 / (1.0 + ((y - 1.0) / 1.0) ** 2)
    mu_y2 = 1.0 / (1.0 + ((y - 4.0) / 2.5) ** 2)
    w1, w2, w3, w4 = mu_x1 * mu_y1, mu_x1 * mu_y2, mu_x2 * mu_y1, mu_x2 * mu_y2
    s = w1 + w2 + w3 + w4
    f1 = 0.5 * x - 1.0 * y + 2.0
    f2 = 1.0 * x + 0.25 * y - 0.5
    f3 = -0.75 * x + 0.5 * y + 1.0
    f4 = 2.0 * x - 0.5 * y + 0.0
    return (w1 * f1 + w2 * f2 + w3 * f3 + w4 * f4) / s


def random_net(rng, nx=3, ny=2):
    return AnfisNet(
        rng.uniform(0.5, 2.0, nx), rng.uniform(-2, 2, nx), rng.uniform(0.5, 2.0, ny), rng.uniform(-2, 2, ny),
        rng.normal(size=(nx * ny, 3)),
    )


def test_membership_values():
    assert membership(BellMf(1.0, 0.0), 0.0) == 1.0
    assert membership(BellMf(1.0, 0.0), 1.0) == 0.5
    assert membership(BellMf(2.0, 3.0), 3.4) == pytest.approx(membership(BellMf(2.0, 3.0), 2.6), abs=1e-15)


def test_firing_is_product():
    net = AnfisNet([1.0], [0.0], [1.0], [0.0], [[0, 0, 0]])
    assert firing_strengths(net, 0.0, 0.0)[0] == 1.0
    net = AnfisNet([1.0], [0.0], [2.0], [0.0], [[0, 0, 0]])
    # mu_x = 0.5 at x = 1, mu_y = 0.4 at y = 2.449...
    y = 2.0 * math.sqrt(1.5)
    assert firing_strengths(net, 1.0, y)[0] == pytest.approx(0.2)


def test_firing_bounded_by_factors():
    net = fixed_net()
    w = firing_strengths(net, 1.0, 2.0)
    assert len(w) == 4
    mx = [membership(m, 1.0) for m in net.mfs_x]
    my = [membership(m, 2.0) for m in net.mfs_y]
    for k, (i, j) in enumerate(net.rules):
        assert w[k] <= min(mx[i], my[j])


def test_normalize_examples():
    assert normalize([0.2, 0.6]) == pytest.approx([0.25, 0.75])
    assert normalize([0.3] * 4) == pytest.approx([0.25] * 4)
    with pytest.raises(AnfisError):
        normalize([0.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=9), st.floats(1e-3, 1e3))
def test_normalize_scale_invariant_and_sums_to_one(w, c):
    a = normalize(w)
    assert a.sum() == pytest.approx(1.0, abs=1e-12)
    assert normalize(np.array(w) * c) == pytest.approx(a, abs=1e-12)


def test_forward_matches_hand_oracle():
    net = fixed_net()
    for x, y in [(0.0, 0.0), (1.3, 2.7), (-2.0, 5.5), (4.1, -1.2)]:
        assert abs(forward(net, x, y) - hand_forward(x, y)) < 1e-12


def test_single_rule_is_linear():
    net = AnfisNet([0.7], [5.0], [3.0], [-1.0], [[2.0, -3.0, 0.5]])
    assert forward(net, 1.5, 2.0) == pytest.approx(2.0 * 1.5 - 3.0 * 2.0 + 0.5, abs=1e-14)


def test_two_equal_rules_midpoint():
    net = AnfisNet([1.0, 1.0], [-1.0, 1.0], [1.0], [0.0], [[0, 0, 0], [0, 0, 2.0]])
    assert forward(net, 0.0, 0.0) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-10, 10))
def test_constant_consequents(x, y, c):
    net = fixed_net()
    net.consequents[:] = [0.0, 0.0, c]
    assert forward(net, x, y) == pytest.approx(c, abs=1e-12)


def test_gradient_check_random():
    rng = np.random.default_rng(3)
    for _ in range(20):
        net = random_net(rng)
        x, y = rng.uniform(-3, 3, 2)
        assert gradient_check(net, float(x), float(y)) < 1e-5


def test_consequent_r_gradient_is_normalized_strength():
    net = fixed_net()
    g = gradients(net, 1.0, 2.0)
    assert np.array_equal(g.consequents[:, 2], normalize(firing_strengths(net, 1.0, 2.0)))


def test_centre_gradient_sign_symmetry():
    # one MF per input pair; moving the centre toward the input raises the
    # membership, so the sign of df/dd follows the side of the input
    net = AnfisNet([1.0, 1.0], [0.0, 5.0], [1.0], [0.0], [[0, 0, 1.0], [0, 0, 0.0]])
    right = gradients(net, 0.5, 0.0).d_x[0]
    left = gradients(net, -0.5, 0.0).d_x[0]
    assert right > 0 and left < 0


def test_lse_recovers_linear_plane():
    rng = np.random.default_rng(0)
    x, y = rng.uniform(0, 5, 200), rng.uniform(0, 5, 200)
    net = AnfisNet.grid_init((0, 5), (0, 5), 2, 2)
    trained, _ = hybrid_train(net, TrainingSet(x, y, 2 * x + 3 * y), epochs=1, premise_updates=False)
    assert trained.consequents == pytest.approx(np.tile([2.0, 3.0, 0.0], (4, 1)), abs=1e-8)


def test_self_recovery():
    rng = np.random.default_rng(5)
    truth = AnfisNet.grid_init((0, 4), (0, 4), 3, 3)
    truth.consequents = rng.normal(size=(9, 3))
    x, y = rng.uniform(0, 4, 400), rng.uniform(0, 4, 400)
    data = TrainingSet(x, y, forward(truth, x, y))
    start = AnfisNet.grid_init((0, 4), (0, 4), 3, 3)
    _, trace = hybrid_train(start, data, epochs=5)
    assert trace.rmse[-1] < 1e-6


def test_lse_pass_never_increases_error():
    rng = np.random.default_rng(2)
    x, y = rng.uniform(-1, 1, 150), rng.uniform(-1, 1, 150)
    data = TrainingSet(x, y, np.sin(3 * x) * np.cos(2 * y))
    _, trace = hybrid_train(AnfisNet.grid_init((-1, 1), (-1, 1)), data, epochs=20)
    for before, after in zip(trace.pre_lse_rmse, trace.lse_rmse):
        assert after <= before + 1e-12
    assert all(b <= a + 1e-12 for a, b in zip(trace.rmse, trace.rmse[1:]))


def test_rank_deficiency_flagged():
    data = TrainingSet([1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [3.0, 3.0, 3.0])
    net, trace = hybrid_train(AnfisNet.grid_init((0, 2), (0, 4), 2, 2), data, epochs=1)
    assert trace.rank_deficient[0]
    assert rmse(net, data) < 1e-9


def test_training_argument_checks():
    data = TrainingSet([0.0], [0.0], [0.0])
    with pytest.raises(AnfisError):
        hybrid_train(fixed_net(), data, epochs=0)
    with pytest.raises(AnfisError):
        hybrid_train(fixed_net(), data, lr=0.0)
    with pytest.raises(AnfisError):
        TrainingSet([], [], [])
    with pytest.raises(AnfisError):
        TrainingSet([math.nan], [0.0], [0.0])


def test_invalid_net_rejected():
    with pytest.raises(AnfisError):
        AnfisNet([0.0], [0.0], [1.0], [0.0], [[0, 0, 0]])
    with pytest.raises(AnfisError):
        AnfisNet([1.0], [0.0], [1.0], [0.0], [[0, 0, 0], [0, 0, 0]])


def test_parameter_file_round_trip(tmp_path):
    net = fixed_net()
    net.save(tmp_path / "n.txt")
    back = AnfisNet.load(tmp_path / "n.txt")
    for name in ("a_x", "d_x", "a_y", "d_y", "consequents"):
        assert np.array_equal(getattr(back, name), getattr(net, name))


def test_parameter_file_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("a_x 1 x\n")
    with pytest.raises(AnfisError, match=":1:"):
        AnfisNet.load(p)
    p.write_text("a_x 1\n")
    with pytest.raises(AnfisError, match="missing"):
        AnfisNet.load(p)


def test_dataset_csv_round_trip(tmp_path):
    d = TrainingSet([0.1, 1 / 3], [2.0, 7.25], [1e-17, -4.0])
    d.save_csv(tmp_path / "d.csv")
    back = TrainingSet.load_csv(tmp_path / "d.csv")
    assert np.array_equal(back.x, d.x) and np.array_equal(back.target, d.target)
