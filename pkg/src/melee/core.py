"""Bandit data model shared across the package.

Actions are 0-based everywhere in code and in every file format. Action
distributions are plain 1-D float arrays of length K; :func:`check_distribution`
validates them.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

DIST_ATOL = 1e-9


class MeleeError(Exception):
    """Base class for package errors."""


class ParameterError(MeleeError, ValueError):
    """A hyperparameter or argument is outside its allowed range."""


class ShapeError(MeleeError, ValueError):
    """Array dimensions do not agree."""


class DataError(MeleeError, ValueError):
    """Input data violates a dataset invariant."""


class NumericError(MeleeError, ArithmeticError):
    """A computation produced non-finite values."""


class StateError(MeleeError, RuntimeError):
    """An object was used before it was ready (e.g. uncalibrated scorer)."""


def make_rng(seed: int | np.random.SeedSequence | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def split_rng(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Independent child generators; the parent stream is not consumed."""
    return list(rng.spawn(n))


@dataclass(frozen=True)
class Interaction:
    """One logged bandit round ``(x, a, r(a), p(a))``."""

    context: np.ndarray
    action: int
    reward: float
    propensity: float

    def __post_init__(self):
        x = np.array(self.context, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise ShapeError("context must be a non-empty 1-D vector")
        if not np.all(np.isfinite(x)):
            raise DataError("context contains non-finite values")
        x.setflags(write=False)
        object.__setattr__(self, "context", x)
        object.__setattr__(self, "action", int(self.action))
        object.__setattr__(self, "reward", float(self.reward))
        object.__setattr__(self, "propensity", float(self.propensity))
        if self.action < 0:
            raise DataError(f"action must be >= 0, got {self.action}")
        if not 0.0 <= self.reward <= 1.0:
            raise DataError(f"reward {self.reward} outside [0, 1]")
        if not 0.0 < self.propensity <= 1.0:
            raise DataError(f"propensity {self.propensity} outside (0, 1]")

    def to_json(self) -> dict:
        return {"x": self.context.tolist(), "a": self.action, "r": self.reward, "p": self.propensity}

    @classmethod
    def from_json(cls, obj: dict) -> "Interaction":
        return cls(np.asarray(obj["x"], dtype=float), obj["a"], obj["r"], obj["p"])


class History:
    """Append-only sequence of :class:`Interaction` records for one episode."""

    def __init__(self, n_actions: int, records: Iterable[Interaction] = ()):
        self.n_actions = int(n_actions)
        self._records: list[Interaction] = []
        self._actions: list[int] = []
        self._rewards: list[float] = []
        self._propensities: list[float] = []
        for rec in records:
            self.append(rec)

    def append(self, rec: Interaction) -> None:
        if rec.action >= self.n_actions:
            raise DataError(f"action {rec.action} outside [0, {self.n_actions})")
        if self._records and rec.context.shape != self._records[0].context.shape:
            raise ShapeError("all records in a history must share the context dimension")
        self._records.append(rec)
        self._actions.append(rec.action)
        self._rewards.append(rec.reward)
        self._propensities.append(rec.propensity)

    def extended(self, rec: Interaction) -> "History":
        """A new history equal to this one plus ``rec``; ``self`` is untouched."""
        out = History(self.n_actions)
        out._records = list(self._records)
        out._actions = list(self._actions)
        out._rewards = list(self._rewards)
        out._propensities = list(self._propensities)
        out.append(rec)
        return out

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[Interaction]:
        return iter(self._records)

    def __getitem__(self, i: int) -> Interaction:
        return self._records[i]

    @property
    def actions(self) -> np.ndarray:
        return np.asarray(self._actions, dtype=int)

    @property
    def rewards(self) -> np.ndarray:
        return np.asarray(self._rewards, dtype=float)

    @property
    def propensities(self) -> np.ndarray:
        return np.asarray(self._propensities, dtype=float)

    def write_ndjson(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for rec in self._records:
                fh.write(json.dumps(rec.to_json()) + "\n")

    @classmethod
    def read_ndjson(cls, path: str | Path, n_actions: int) -> "History":
        h = cls(n_actions)
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    h.append(Interaction.from_json(json.loads(line)))
        return h


@dataclass
class SupervisedDataset:
    """Fully labelled rows ``(x_n, r_n)``; ``X`` is (n, D), ``R`` is (n, K)."""

    X: np.ndarray
    R: np.ndarray
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if self.X.shape[0] == 0:
            raise DataError("dataset is empty")
        if self.X.shape[0] != self.R.shape[0]:
            raise ShapeError(f"{self.X.shape[0]} contexts but {self.R.shape[0]} reward vectors")
        if self.R.shape[1] < 2:
            raise DataError("need at least two actions")
        if not np.all(np.isfinite(self.X)):
            raise DataError("contexts contain non-finite values")
        if np.any(self.R < 0.0) or np.any(self.R > 1.0) or not np.all(np.isfinite(self.R)):
            raise DataError("rewards must lie in [0, 1]")

    @property
    def n_actions(self) -> int:
        return self.R.shape[1]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def labels(self) -> np.ndarray:
        """Best action per row (lowest index on ties)."""
        return np.argmax(self.R, axis=1)

    def subset(self, idx: Sequence[int] | np.ndarray, name: str | None = None) -> "SupervisedDataset":
        idx = np.asarray(idx, dtype=int)
        return SupervisedDataset(self.X[idx], self.R[idx], self.name if name is None else name, dict(self.meta))


def check_distribution(p: np.ndarray, n_actions: int | None = None) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or (n_actions is not None and p.size != n_actions):
        raise ShapeError(f"distribution must have shape ({n_actions},), got {p.shape}")
    if np.any(p < 0.0) or abs(p.sum() - 1.0) > DIST_ATOL:
        raise DataError(f"not a probability distribution: {p}")
    return p


def uniform(n_actions: int) -> np.ndarray:
    return np.full(n_actions, 1.0 / n_actions)


def point_mass(action: int, n_actions: int) -> np.ndarray:
    p = np.zeros(n_actions)
    p[action] = 1.0
    return p


def mixture(greedy_action: int, mu: float, n_actions: int) -> np.ndarray:
    """Play ``greedy_action`` w.p. 1-mu, uniform otherwise.

    The greedy action ends up with mass ``1 - mu + mu/K``; every other action
    with ``mu/K``.
    """
    if not 0 <= greedy_action < n_actions:
        raise ParameterError(f"greedy action {greedy_action} outside [0, {n_actions})")
    if not 0.0 <= mu <= 1.0 / n_actions:
        raise ParameterError(f"mu={mu} outside [0, 1/K]")
    p = np.full(n_actions, mu / n_actions)
    p[greedy_action] = 1.0 - mu + mu / n_actions
    return p


def sample(dist: np.ndarray, rng: np.random.Generator) -> tuple[int, float]:
    """Draw an action; returns it with its exact probability mass."""
    dist = check_distribution(dist)
    # inverse-CDF on a single uniform keeps the stream consumption fixed per call
    u = rng.random()
    a = int(np.searchsorted(np.cumsum(dist), u, side="right"))
    a = min(a, dist.size - 1)
    while dist[a] == 0.0:  # float slack at the top of the CDF
        a -= 1
    return a, float(dist[a])
