"""Classical exploration strategies used as baselines.

Each strategy exists as a pure distribution function (``epsilon_greedy``,
``tau_first``, ``cover_distribution``...) and as a stateful :class:`Explorer`
that the episode runner drives round by round::

    explorer.start(setup, rng)
    for t, x in enumerate(stream, 1):
        p = explorer.act(x, t)
        ... sample a ~ p, observe r ...
        explorer.observe(x, a, r, p[a])
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Interaction, ParameterError, SupervisedDataset, point_mass, uniform
from .linear import Scorer
from .polopt import HypothesisConfig, OnlinePolOpt, PolOptMethod

EG_CANDIDATES = tuple(0.05 * i + 0.01 for i in range(1, 11))


@dataclass
class EpisodeSetup:
    """Per-task information handed to an explorer before round 1."""

    n_actions: int
    dim: int
    horizon: int
    hypothesis: HypothesisConfig
    holdout: SupervisedDataset
    method: PolOptMethod = PolOptMethod.DIRECT


class Explorer:
    name = "explorer"

    def start(self, setup: EpisodeSetup, rng: np.random.Generator) -> None:
        self.setup = setup
        self.rng = rng

    def act(self, x: np.ndarray, t: int) -> np.ndarray:
        raise NotImplementedError

    def observe(self, x: np.ndarray, action: int, reward: float, propensity: float) -> None:
        raise NotImplementedError

    def params(self) -> dict:
        return {}


# --------------------------------------------------------------------------
# distribution rules


def epsilon_greedy_dist(greedy_action: int, eps: float, n_actions: int) -> np.ndarray:
    if not 0.0 <= eps <= 1.0:
        raise ParameterError(f"epsilon={eps} outside [0, 1]")
    p = np.full(n_actions, eps / n_actions)
    p[greedy_action] += 1.0 - eps
    return p


def epsilon_greedy(f: Scorer, x: np.ndarray, eps: float) -> np.ndarray:
    return epsilon_greedy_dist(f.predict(x), eps, f.n_actions)


def decayed_epsilon(eps0: float, t: int) -> float:
    if t < 1:
        raise ParameterError("round index t starts at 1")
    if not 0.0 < eps0 <= 1.0:
        raise ParameterError(f"eps0={eps0} outside (0, 1]")
    return min(1.0, eps0 / t)


def epsilon_decreasing(f: Scorer, x: np.ndarray, eps0: float, t: int) -> np.ndarray:
    return epsilon_greedy(f, x, decayed_epsilon(eps0, t))


def tau_first(f: Scorer, x: np.ndarray, t: int, tau: float, horizon: int | None) -> np.ndarray:
    if horizon is None:
        raise ParameterError("tau-first needs the stream length")
    if not 0.0 <= tau <= 1.0:
        raise ParameterError(f"tau={tau} outside [0, 1]")
    if t <= tau * horizon + 1e-9:
        return uniform(f.n_actions)
    return point_mass(f.predict(x), f.n_actions)


def cover_distribution(greedy_actions: np.ndarray, n_actions: int, psi: float = 0.1, smooth: bool = True) -> np.ndarray:
    """Empirical distribution of the bag's votes, optionally smoothed.

    With ``smooth`` every action ``a`` gains ``min(1/K, psi / (K * p(a)))``
    (``1/K`` for actions without votes) before renormalising.
    """
    votes = np.bincount(np.asarray(greedy_actions, dtype=int), minlength=n_actions).astype(float)
    p = votes / votes.sum()
    if not smooth:
        return p
    extra = np.full(n_actions, 1.0 / n_actions)
    voted = p > 0
    extra[voted] = np.minimum(1.0 / n_actions, psi / (n_actions * p[voted]))
    q = p + extra
    return q / q.sum()


def eg_update(weights: np.ndarray, action_probs: np.ndarray, reward: float, eta: float) -> np.ndarray:
    """Exponentiated-gradient step on candidate weights.

    ``action_probs[j]`` is the probability candidate ``j`` would have played the
    logged action. Each candidate's reward is estimated by importance weighting
    against the weight-averaged behaviour, then weights are multiplied by
    ``exp(eta * estimate)`` and renormalised.
    """
    behaviour = float(np.dot(weights, action_probs))
    est = reward * action_probs / behaviour
    w = weights * np.exp(eta * (est - est.max()))
    return w / w.sum()


# --------------------------------------------------------------------------
# stateful explorers built on a PolOpt learner


class _LearnerExplorer(Explorer):
    def start(self, setup, rng):
        super().start(setup, rng)
        self.learner = OnlinePolOpt(setup.method, setup.hypothesis)

    @property
    def scorer(self) -> Scorer:
        return self.learner.scorer

    def observe(self, x, action, reward, propensity):
        self.learner.update(Interaction(x, action, reward, propensity))


class EpsilonGreedy(_LearnerExplorer):
    name = "epsilon-greedy"

    def __init__(self, eps: float = 0.0):
        if not 0.0 <= eps <= 1.0:
            raise ParameterError(f"epsilon={eps} outside [0, 1]")
        self.eps = eps

    def act(self, x, t):
        return epsilon_greedy(self.scorer, x, self.eps)

    def params(self):
        return {"eps": self.eps}


class EpsilonDecreasing(_LearnerExplorer):
    name = "epsilon-decreasing"

    def __init__(self, eps0: float = 0.1):
        decayed_epsilon(eps0, 1)
        self.eps0 = eps0

    def act(self, x, t):
        return epsilon_decreasing(self.scorer, x, self.eps0, t)

    def params(self):
        return {"eps0": self.eps0}


class EGEpsilonGreedy(_LearnerExplorer):
    """Epsilon-greedy whose epsilon is chosen online from a candidate set."""

    name = "eg-greedy"

    def __init__(self, eta: float = 0.1, candidates: tuple[float, ...] = EG_CANDIDATES):
        self.eta = eta
        self.candidates = np.asarray(candidates, dtype=float)

    def start(self, setup, rng):
        super().start(setup, rng)
        self.weights = np.full(self.candidates.size, 1.0 / self.candidates.size)
        self._greedy = 0

    def act(self, x, t):
        self._greedy = self.scorer.predict(x)
        j = int(self.rng.choice(self.candidates.size, p=self.weights))
        return epsilon_greedy_dist(self._greedy, float(self.candidates[j]), self.setup.n_actions)

    def observe(self, x, action, reward, propensity):
        K = self.setup.n_actions
        probs = self.candidates / K + (action == self._greedy) * (1.0 - self.candidates)
        self.weights = eg_update(self.weights, probs, reward, self.eta)
        super().observe(x, action, reward, propensity)

    def params(self):
        return {"eta": self.eta, "candidates": self.candidates.tolist()}


class TauFirst(_LearnerExplorer):
    """Uniform exploration for the first ``tau`` fraction, then frozen greedy."""

    name = "tau-first"

    def __init__(self, tau: float = 0.02):
        if not 0.0 <= tau <= 1.0:
            raise ParameterError(f"tau={tau} outside [0, 1]")
        self.tau = tau

    def start(self, setup, rng):
        super().start(setup, rng)
        self._exploring = True

    def act(self, x, t):
        p = tau_first(self.scorer, x, t, self.tau, self.setup.horizon)
        self._exploring = t <= self.tau * self.setup.horizon + 1e-9
        return p

    def observe(self, x, action, reward, propensity):
        if self._exploring:
            super().observe(x, action, reward, propensity)

    def params(self):
        return {"tau": self.tau}


class Cover(Explorer):
    """Bag of scorers trained on Poisson(1)-reweighted replays of the history.

    ``smooth=True`` is Cover (extra uniform-ish mass), ``smooth=False`` is
    Cover-NU. This follows the high-level description of the method; it is not
    a port of the original online cover algorithm.
    """

    def __init__(self, bag_size: int = 16, psi: float = 0.1, smooth: bool = True):
        if bag_size < 1:
            raise ParameterError("bag size must be positive")
        self.bag_size = bag_size
        self.psi = psi
        self.smooth = smooth
        self.name = "cover" if smooth else "cover-nu"

    def start(self, setup, rng):
        super().start(setup, rng)
        self.bag = [OnlinePolOpt(setup.method, setup.hypothesis) for _ in range(self.bag_size)]

    def act(self, x, t):
        votes = [m.scorer.predict(x) for m in self.bag]
        return cover_distribution(votes, self.setup.n_actions, self.psi, self.smooth)

    def observe(self, x, action, reward, propensity):
        rec = Interaction(x, action, reward, propensity)
        for member, k in zip(self.bag, self.rng.poisson(1.0, size=self.bag_size)):
            for _ in range(k):
                member.update(rec)

    def params(self):
        return {"bag_size": self.bag_size, "psi": self.psi}


# --------------------------------------------------------------------------
# LinUCB


class LinUCBState:
    """Per-action ridge statistics ``A_k = I + sum x x^T`` and ``b_k = sum r x``.

    With ``diagonal=True`` only the diagonal of ``A_k`` is kept.
    """

    def __init__(self, n_actions: int, dim: int, alpha: float = 1.0, diagonal: bool = False):
        if alpha <= 0:
            raise ParameterError("alpha must be positive")
        self.alpha = alpha
        self.diagonal = diagonal
        self.b = np.zeros((n_actions, dim))
        if diagonal:
            self.A = np.ones((n_actions, dim))
        else:
            self.A = np.tile(np.eye(dim), (n_actions, 1, 1))

    def ucb(self, x: np.ndarray) -> np.ndarray:
        if self.diagonal:
            theta = self.b / self.A
            ainv_x = x / self.A
        else:
            rhs = np.stack([self.b, np.broadcast_to(x, self.b.shape)], axis=-1)
            sol = np.linalg.solve(self.A, rhs)
            theta, ainv_x = sol[..., 0], sol[..., 1]
        width = np.sqrt(np.maximum(ainv_x @ x, 0.0))
        return theta @ x + self.alpha * width

    def choose(self, x: np.ndarray) -> int:
        return int(np.argmax(self.ucb(x)))

    def update(self, x: np.ndarray, action: int, reward: float) -> None:
        if self.diagonal:
            self.A[action] += x * x
        else:
            self.A[action] += np.outer(x, x)
        self.b[action] += reward * x


class LinUCB(Explorer):
    """LinUCB on scaled contexts with an appended constant feature."""

    name = "linucb"

    def __init__(self, alpha: float = 1.0, diagonal_above: int = 150):
        self.alpha = alpha
        self.diagonal_above = diagonal_above

    def start(self, setup, rng):
        super().start(setup, rng)
        self.scaler = setup.hypothesis.scaler
        diagonal = setup.dim > self.diagonal_above
        self.state = LinUCBState(setup.n_actions, setup.dim + 1, self.alpha, diagonal)

    def _embed(self, x):
        return np.append(self.scaler.transform(x), 1.0)

    def act(self, x, t):
        return point_mass(self.state.choose(self._embed(x)), self.setup.n_actions)

    def observe(self, x, action, reward, propensity):
        self.state.update(self._embed(x), action, reward)

    def params(self):
        return {"alpha": self.alpha}
