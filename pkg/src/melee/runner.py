"""Simulated bandit episodes over fully labelled datasets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import History, Interaction, SupervisedDataset, sample
from .datasets import HOLDOUT_SIZE, bandit_stream
from .explorers import EpisodeSetup, Explorer
from .linear import FeatureScaler, select_hyperparams
from .polopt import HypothesisConfig, PolOptMethod


@dataclass
class Episode:
    history: History
    rewards: np.ndarray
    distributions: list[np.ndarray] = field(default_factory=list)


def prepare(ds: SupervisedDataset, seed: int, method: PolOptMethod | str = PolOptMethod.DIRECT, holdout: int = HOLDOUT_SIZE) -> tuple[EpisodeSetup, SupervisedDataset]:
    """Split off the labelled holdout and pick scaler + learning rate on it."""
    held, stream = bandit_stream(ds, seed, holdout)
    mode, lr = select_hyperparams(held)
    scaler = FeatureScaler.fit(held.X, mode)
    hyp = HypothesisConfig(ds.n_actions, ds.dim, scaler, lr, seed=seed)
    return EpisodeSetup(ds.n_actions, ds.dim, len(stream), hyp, held, PolOptMethod(method)), stream


def episode_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """(action-sampling, explorer-internal) generators for one episode.

    Every algorithm run with the same seed sees the same action-sampling
    stream.
    """
    ss = np.random.SeedSequence([int(seed), 0x6D656C])
    a, b = ss.spawn(2)
    return np.random.default_rng(a), np.random.default_rng(b)


def run_episode(explorer: Explorer, ds: SupervisedDataset, seed: int, method: PolOptMethod | str = PolOptMethod.DIRECT, keep_distributions: bool = False) -> Episode:
    setup, stream = prepare(ds, seed, method)
    return run_stream(explorer, setup, stream, seed, keep_distributions)


def run_stream(explorer: Explorer, setup: EpisodeSetup, stream: SupervisedDataset, seed: int, keep_distributions: bool = False) -> Episode:
    act_rng, own_rng = episode_rngs(seed)
    explorer.start(setup, own_rng)
    h = History(setup.n_actions)
    rewards = np.empty(len(stream))
    dists = []
    for t, (x, r) in enumerate(zip(stream.X, stream.R), start=1):
        p = explorer.act(x, t)
        a, prop = sample(p, act_rng)
        rew = float(r[a])
        explorer.observe(x, a, rew, prop)
        h.append(Interaction(x, a, rew, prop))
        rewards[t - 1] = rew
        if keep_distributions:
            dists.append(p)
    return Episode(h, rewards, dists)
