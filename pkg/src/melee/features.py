"""Task-independent exploration features.

The layout for K actions (length ``5K + 2``)::

    [calibrated probabilities (K)] [entropy (1)] [one-hot predicted action (K)]
    [t / horizon (1)] [action frequencies in history (K)]
    [mean observed reward per action (K)] [reward variance per action (K)]

:func:`extract` only receives the classifier's outputs on the current context
and the action/reward columns of the history, so no context coordinates can
leak into the features.
"""
from __future__ import annotations

import numpy as np

from .core import History
from .linear import Scorer


def feature_length(n_actions: int) -> int:
    return 5 * n_actions + 2


def feature_names(n_actions: int) -> list[str]:
    k = range(n_actions)
    return (
        [f"prob_{a}" for a in k]
        + ["entropy"]
        + [f"pred_{a}" for a in k]
        + ["time"]
        + [f"count_{a}" for a in k]
        + [f"mean_reward_{a}" for a in k]
        + [f"var_reward_{a}" for a in k]
    )


def entropy(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def extract(probs: np.ndarray, predicted_action: int, actions: np.ndarray, rewards: np.ndarray, t: int, horizon: int) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    K = probs.size
    actions = np.asarray(actions, dtype=int)
    rewards = np.asarray(rewards, dtype=float)

    onehot = np.zeros(K)
    onehot[predicted_action] = 1.0

    counts = np.bincount(actions, minlength=K).astype(float)
    sums = np.bincount(actions, weights=rewards, minlength=K)
    sq = np.bincount(actions, weights=rewards * rewards, minlength=K)
    seen = counts > 0
    mean = np.zeros(K)
    var = np.zeros(K)
    mean[seen] = sums[seen] / counts[seen]
    var[seen] = np.maximum(sq[seen] / counts[seen] - mean[seen] ** 2, 0.0)
    freq = counts / counts.sum() if actions.size else counts

    return np.concatenate([probs, [entropy(probs)], onehot, [t / horizon], freq, mean, var])


def extract_from(f: Scorer, x: np.ndarray, h: History, t: int, horizon: int) -> np.ndarray:
    """Features of calibrated scorer ``f`` on context ``x`` given history ``h``."""
    return extract(f.predict_proba(x), f.predict(x), h.actions, h.rewards, t, horizon)
