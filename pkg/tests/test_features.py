import inspect
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from melee.core import History, Interaction
from melee.features import entropy, extract, extract_from, feature_length, feature_names
from melee.linear import Calibrator, FeatureScaler, Scorer


def test_empty_history_uniform_probs():
    phi = extract(np.array([0.5, 0.5]), 0, np.array([], dtype=int), np.array([]), 3, 10)
    expected = [0.5, 0.5, math.log(2), 1, 0, 0.3, 0, 0, 0, 0, 0, 0]
    np.testing.assert_allclose(phi, expected, atol=1e-15)


def test_point_mass_has_zero_entropy():
    assert entropy(np.array([0.0, 1.0, 0.0])) == 0.0


def test_reward_moments_hand_computed():
    # action 0 played with rewards 0 and 1, action 1 once with reward 0.4
    phi = extract(np.array([0.3, 0.7]), 1, np.array([0, 0, 1]), np.array([0.0, 1.0, 0.4]), 4, 4)
    K = 2
    freq, mean, var = phi[2 * K + 2:3 * K + 2], phi[3 * K + 2:4 * K + 2], phi[4 * K + 2:]
    np.testing.assert_allclose(freq, [2 / 3, 1 / 3])
    np.testing.assert_allclose(mean, [0.5, 0.4])
    np.testing.assert_allclose(var, [0.25, 0.0], atol=1e-15)


@given(st.integers(2, 8), st.integers(0, 40), st.integers(0, 10_000))
def test_feature_invariants(K, n, seed):
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.ones(K))
    actions = rng.integers(K, size=n)
    rewards = rng.random(n)
    phi = extract(probs, int(rng.integers(K)), actions, rewards, n + 1, 50)
    assert phi.size == feature_length(K) == len(feature_names(K))
    assert np.all(np.isfinite(phi))
    assert abs(phi[:K].sum() - 1) <= 1e-12
    assert 0.0 <= phi[K] <= math.log(K) + 1e-12
    assert phi[K + 1:2 * K + 1].sum() == 1.0
    counts = phi[2 * K + 2:3 * K + 2]
    assert abs(counts.sum() - (1.0 if n else 0.0)) <= 1e-12


def _calibrated(K, D, seed):
    rng = np.random.default_rng(seed)
    f = Scorer(rng.normal(size=(K, D)), rng.normal(size=K), FeatureScaler.identity(D))
    f.calibrator = Calibrator(np.ones(K), np.zeros(K))
    return f


def test_length_independent_of_input_dimension():
    h2, h50 = History(3), History(3)
    a = extract_from(_calibrated(3, 2, 0), np.ones(2), h2, 1, 10)
    b = extract_from(_calibrated(3, 50, 0), np.ones(50), h50, 1, 10)
    assert a.shape == b.shape == (17,)


def test_history_contexts_are_never_read():
    f = _calibrated(2, 3, 1)
    x = np.array([0.1, 0.2, 0.3])
    h1, h2 = History(2), History(2)
    rng = np.random.default_rng(7)
    for _ in range(20):
        a, r = int(rng.integers(2)), float(rng.random())
        h1.append(Interaction(rng.normal(size=3), a, r, 0.5))
        h2.append(Interaction(np.full(3, 1e6), a, r, 0.5))
    np.testing.assert_array_equal(extract_from(f, x, h1, 5, 30), extract_from(f, x, h2, 5, 30))


def test_extract_signature_takes_no_contexts():
    params = set(inspect.signature(extract).parameters)
    assert params == {"probs", "predicted_action", "actions", "rewards", "t", "horizon"}


@pytest.mark.parametrize("K", [2, 5])
def test_uniform_entropy_is_log_k(K):
    assert entropy(np.full(K, 1.0 / K)) == pytest.approx(math.log(K), abs=1e-12)
