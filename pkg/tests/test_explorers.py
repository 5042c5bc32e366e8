import numpy as np
import pytest

from melee.core import SupervisedDataset, check_distribution, sample, uniform
from melee.explorers import (
    Cover,
    EGEpsilonGreedy,
    EpisodeSetup,
    LinUCB,
    LinUCBState,
    cover_distribution,
    decayed_epsilon,
    eg_update,
    epsilon_greedy,
    epsilon_greedy_dist,
    tau_first,
)
from melee.linear import FeatureScaler, Scorer
from melee.polopt import HypothesisConfig


def greedy_scorer(action, K, D=1):
    f = Scorer.zeros(K, D)
    f.bias[action] = 1.0
    return f


def setup(K, D, horizon=100):
    hyp = HypothesisConfig(K, D, FeatureScaler.identity(D))
    holdout = SupervisedDataset(np.zeros((1, D)), np.eye(K)[[0]])
    return EpisodeSetup(K, D, horizon, hyp, holdout)


def test_epsilon_greedy_examples():
    x = np.zeros(1)
    np.testing.assert_array_equal(epsilon_greedy(greedy_scorer(2, 3), x, 0.0), [0, 0, 1])
    np.testing.assert_allclose(epsilon_greedy(greedy_scorer(0, 4), x, 1.0), np.full(4, 0.25))
    np.testing.assert_allclose(epsilon_greedy(greedy_scorer(1, 2), x, 0.1), [0.05, 0.95], atol=1e-15)


def test_decayed_epsilon_examples():
    assert decayed_epsilon(0.1, 1) == 0.1
    assert decayed_epsilon(0.1, 1000) == pytest.approx(1e-4, abs=1e-18)
    p = epsilon_greedy_dist(1, decayed_epsilon(0.1, 10**12), 2)
    assert p[1] == pytest.approx(1.0, abs=1e-12)


def test_tau_first_examples():
    f, x = greedy_scorer(1, 2), np.zeros(1)
    np.testing.assert_array_equal(tau_first(f, x, 2, 0.02, 100), [0.5, 0.5])
    np.testing.assert_array_equal(tau_first(f, x, 3, 0.02, 100), [0, 1])
    np.testing.assert_array_equal(tau_first(f, x, 1, 0.0, 100), [0, 1])
    with pytest.raises(ValueError):
        tau_first(f, x, 1, 0.02, None)


def test_uniform_equivalences():
    f, x = greedy_scorer(2, 5), np.zeros(1)
    u = uniform(5)
    np.testing.assert_allclose(epsilon_greedy(f, x, 1.0), u, atol=1e-12)
    np.testing.assert_allclose(tau_first(f, x, 1, 0.5, 10), u, atol=1e-12)


def _eg(K=2):
    eg = EGEpsilonGreedy()
    eg.start(setup(K, 1, 500), np.random.default_rng(0))
    return eg


def test_eg_initial_weights_uniform():
    np.testing.assert_allclose(_eg().weights, np.full(10, 0.1))


def test_eg_zero_rewards_keep_uniform_weights():
    eg = _eg()
    rng = np.random.default_rng(1)
    for t in range(1, 200):
        x = np.array([rng.normal()])
        a, p = sample(eg.act(x, t), rng)
        eg.observe(x, a, 0.0, p)
    np.testing.assert_allclose(eg.weights, np.full(10, 0.1), atol=1e-15)


@pytest.mark.parametrize("seed", range(10))
def test_eg_smallest_epsilon_weight_grows(seed):
    eg = EGEpsilonGreedy()
    eg.start(setup(3, 1, 500), np.random.default_rng(seed))
    rng = np.random.default_rng(1000 + seed)
    trace = [eg.weights[0]]
    for t in range(1, 501):
        x = np.array([rng.normal()])
        p = eg.act(x, t)
        a, prop = sample(p, rng)
        eg.observe(x, a, float(a == eg.scorer.predict(x)), prop)
        trace.append(eg.weights[0])
        check_distribution(eg.weights, 10)
    assert np.all(np.diff(trace) >= -1e-15)
    assert trace[-1] > trace[0]


def test_eg_update_stays_on_simplex():
    rng = np.random.default_rng(2)
    w = np.full(10, 0.1)
    for _ in range(300):
        w = eg_update(w, rng.random(10), float(rng.random()), 0.1)
        assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12


def test_linucb_fresh_state_ties_to_first_action():
    lin = LinUCB()
    lin.start(setup(3, 2), np.random.default_rng(0))
    np.testing.assert_array_equal(lin.act(np.array([0.3, -0.7]), 1), [1, 0, 0])


@pytest.mark.parametrize("D, diagonal", [(150, False), (151, True)])
def test_linucb_diagonal_threshold(D, diagonal):
    lin = LinUCB()
    lin.start(setup(2, D), np.random.default_rng(0))
    assert lin.state.diagonal is diagonal


@pytest.mark.parametrize("seed", range(10))
def test_linucb_finds_better_arm(seed):
    rng = np.random.default_rng(seed)
    state = LinUCBState(2, 1, alpha=1.0)
    means = (0.9, 0.1)
    x = np.array([1.0])
    pulls = np.zeros(2)
    for _ in range(2000):
        a = state.choose(x)
        state.update(x, a, float(rng.random() < means[a]))
        pulls[a] += 1
    assert pulls[0] / 2000 >= 0.95


def test_linucb_full_and_diagonal_agree_on_axis_inputs():
    rng = np.random.default_rng(4)
    full = LinUCBState(3, 5, alpha=0.7)
    diag = LinUCBState(3, 5, alpha=0.7, diagonal=True)
    for _ in range(300):
        x = np.zeros(5)
        x[rng.integers(5)] = rng.normal()
        np.testing.assert_allclose(full.ucb(x), diag.ucb(x), rtol=1e-12, atol=1e-12)
        a = full.choose(x)
        assert diag.choose(x) == a
        r = float(rng.random())
        full.update(x, a, r)
        diag.update(x, a, r)


def test_cover_distribution_examples():
    np.testing.assert_array_equal(cover_distribution([1] * 16, 2, smooth=False), [0, 1])
    p = cover_distribution([1] * 16, 2, psi=0.1, smooth=True)
    assert p[0] > 0
    check_distribution(p, 2)
    np.testing.assert_array_equal(cover_distribution([0] * 8 + [1] * 8, 2, smooth=False), [0.5, 0.5])


def test_cover_smoothing_value():
    # unanimous bag: voted action gets min(1/2, 0.1/2) = 0.05, the other 1/2
    p = cover_distribution([1] * 16, 2, psi=0.1)
    np.testing.assert_allclose(p, np.array([0.5, 1.05]) / 1.55)


def test_cover_unanimous_bag_at_start():
    c = Cover(smooth=False)
    c.start(setup(3, 2), np.random.default_rng(0))
    np.testing.assert_array_equal(c.act(np.array([1.0, 2.0]), 1), [1, 0, 0])


@pytest.mark.parametrize("explorer", [EGEpsilonGreedy(), LinUCB(), Cover(bag_size=4), Cover(bag_size=4, smooth=False)])
def test_explorers_emit_distributions(explorer):
    rng = np.random.default_rng(0)
    explorer.start(setup(3, 2, 50), np.random.default_rng(1))
    for t in range(1, 51):
        x = rng.normal(size=2)
        p = explorer.act(x, t)
        check_distribution(p, 3)
        a, prop = sample(p, rng)
        explorer.observe(x, a, float(a == 0), prop)
