"""Policy optimisation: reduce a bandit history to regression and fit a scorer.

Two reductions are available. IPS maps ``(x, a, r, p)`` to a K-vector that is
zero except ``r/p`` at ``a`` and regresses every output on it. The direct
method regresses only the observed action's output on ``r`` and leaves the
others untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .core import History, Interaction, make_rng
from .linear import FeatureScaler, Scorer


class PolOptMethod(str, Enum):
    DIRECT = "direct"
    IPS = "ips"


@dataclass(frozen=True)
class HypothesisConfig:
    """Everything needed to build and train a scorer for one task."""

    n_actions: int
    dim: int
    scaler: FeatureScaler
    lr: float = 0.1
    epochs: int = 5
    seed: int = 0


def ips_targets(rec: Interaction, n_actions: int) -> np.ndarray:
    out = np.zeros(n_actions)
    out[rec.action] = rec.reward / rec.propensity
    return out


def direct_targets(rec: Interaction, n_actions: int) -> tuple[np.ndarray, np.ndarray]:
    targets = np.zeros(n_actions)
    mask = np.zeros(n_actions)
    targets[rec.action] = rec.reward
    mask[rec.action] = 1.0
    return targets, mask


def reduce(rec: Interaction, n_actions: int, method: PolOptMethod | str) -> tuple[np.ndarray, np.ndarray]:
    """Regression target and per-action weight for one record."""
    if PolOptMethod(method) is PolOptMethod.IPS:
        return ips_targets(rec, n_actions), np.ones(n_actions)
    return direct_targets(rec, n_actions)


def _canonical_order(h: History) -> list[Interaction]:
    return sorted(h, key=lambda rec: (rec.action, rec.reward, rec.propensity, tuple(rec.context)))


def polopt(method: PolOptMethod | str, config: HypothesisConfig, h: History) -> Scorer:
    """Full refit: ``config.epochs`` passes of SGD over the reduced history.

    Records are put in a canonical order before the seeded per-epoch shuffle,
    so the result does not depend on the order of ``h``.
    """
    f = Scorer.zeros(config.n_actions, config.dim, config.scaler)
    if len(h) == 0:
        return f
    records = _canonical_order(h)
    rows = [reduce(rec, config.n_actions, method) for rec in records]
    rng = make_rng(config.seed)
    for _ in range(config.epochs):
        for i in rng.permutation(len(records)):
            f.step(records[i].context, rows[i][0], rows[i][1], config.lr)
    return f


class OnlinePolOpt:
    """Incremental PolOpt: one SGD step per appended record.

    ``probe`` answers "what would the scorer be after this record" without
    touching the real state.
    """

    def __init__(self, method: PolOptMethod | str, config: HypothesisConfig):
        self.method = PolOptMethod(method)
        self.config = config
        self.scorer = Scorer.zeros(config.n_actions, config.dim, config.scaler)

    def update(self, rec: Interaction, weight: float = 1.0) -> None:
        target, mask = reduce(rec, self.config.n_actions, self.method)
        self.scorer.step(rec.context, target, mask * weight, self.config.lr)

    def probe(self, rec: Interaction) -> Scorer:
        f = self.scorer.copy()
        target, mask = reduce(rec, self.config.n_actions, self.method)
        f.step(rec.context, target, mask, self.config.lr)
        return f


def ips_value(h: History, policy: Callable[[np.ndarray], int]) -> float:
    """IPS estimate of a deterministic policy's value from logged data."""
    if len(h) == 0:
        return 0.0
    total = 0.0
    for rec in h:
        if policy(rec.context) == rec.action:
            total += rec.reward / rec.propensity
    return total / len(h)
