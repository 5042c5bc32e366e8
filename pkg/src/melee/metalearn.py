"""Learning an exploration policy by imitation on fully labelled tasks.

Training simulates a bandit episode on each sampled task. At every step the
learner tries each action against the current history, scores it with the
one-step expert roll-out (the true reward), and stores the pair
(exploration features, per-action values). The policy is refit on all data
aggregated so far after each episode, and the next episode rolls in with it.

At test time :class:`MeleeExplorer` computes the same features and plays the
policy's choice, mixed with a little uniform exploration ``test_mu``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .core import History, Interaction, ParameterError, SupervisedDataset, make_rng, mixture, sample
from .datasets import sample_training_suite
from .explorers import Explorer
from .features import extract, extract_from, feature_length
from .linear import Calibrator, FeatureScaler, Scorer, fit_calibration, select_hyperparams
from .polopt import HypothesisConfig, OnlinePolOpt, PolOptMethod, polopt
from .runner import Episode, run_episode

POLICY_FORMAT_VERSION = 1
DEFAULT_HYPERPARAMS = ("standardize", 0.1)


@dataclass
class MeleeConfig:
    mu: float = 0.1
    n_val: int = 30
    rounds: int = 10
    test_mu: float = 0.0
    calib_every: int = 50
    method: str = "direct"
    ridge: float = 1e-3
    selection_tasks: int = 5
    selection_size: int = 500
    probe_mode: str = "incremental"

    def validate(self, n_actions: int) -> None:
        if not 0.0 <= self.mu <= 1.0 / n_actions:
            raise ParameterError(f"mu={self.mu} outside [0, 1/K] for K={n_actions}")
        if not 0.0 <= self.test_mu <= 1.0 / n_actions:
            raise ParameterError(f"test_mu={self.test_mu} outside [0, 1/K] for K={n_actions}")
        if self.rounds < 1:
            raise ParameterError("need at least one training round")
        if self.n_val < 1:
            raise ParameterError("n_val must be positive")
        if self.calib_every < 1:
            raise ParameterError("calib_every must be positive")
        if self.probe_mode not in ("incremental", "full"):
            raise ParameterError(f"unknown probe mode {self.probe_mode!r}")
        PolOptMethod(self.method)


@dataclass
class ExplorationPolicy:
    """K linear value regressors over exploration features; acts by argmax."""

    weights: np.ndarray
    bias: np.ndarray
    config: dict = field(default_factory=dict)

    @property
    def n_actions(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_len(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def zeros(cls, n_actions: int) -> "ExplorationPolicy":
        return cls(np.zeros((n_actions, feature_length(n_actions))), np.zeros(n_actions))

    @classmethod
    def follow_probabilities(cls, n_actions: int) -> "ExplorationPolicy":
        """Values equal the calibrated probabilities: play their argmax."""
        pi = cls.zeros(n_actions)
        pi.weights[:, :n_actions] = np.eye(n_actions)
        return pi

    @classmethod
    def follow_prediction(cls, n_actions: int) -> "ExplorationPolicy":
        """Values equal the one-hot of the classifier's prediction: play it."""
        pi = cls.zeros(n_actions)
        start = n_actions + 1
        pi.weights[:, start:start + n_actions] = np.eye(n_actions)
        return pi

    def values(self, phi: np.ndarray) -> np.ndarray:
        return self.weights @ phi + self.bias

    def act(self, phi: np.ndarray) -> int:
        return int(np.argmax(self.values(phi)))

    def to_json(self) -> dict:
        return {
            "version": POLICY_FORMAT_VERSION,
            "K": self.n_actions,
            "feature_len": self.feature_len,
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "config": self.config,
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> "ExplorationPolicy":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if obj.get("version") != POLICY_FORMAT_VERSION:
            raise ParameterError(f"unsupported policy format version {obj.get('version')}")
        K, F = obj["K"], obj["feature_len"]
        if F != feature_length(K):
            raise ParameterError(f"feature_len {F} does not match K={K}")
        return cls(np.asarray(obj["weights"], dtype=float).reshape(K, F), np.asarray(obj["bias"], dtype=float), obj.get("config", {}))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "ExplorationPolicy":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def pi_act(pi: ExplorationPolicy, phi: np.ndarray) -> int:
    return pi.act(phi)


def rollout_value(rv: np.ndarray, action: int) -> float:
    """One-step expert roll-out: the true reward of ``action``."""
    if not 0 <= action < len(rv):
        raise ParameterError(f"action {action} outside [0, {len(rv)})")
    return float(rv[action])


def expert_rollout(rv: np.ndarray, action: int, probe: Scorer) -> float:
    return rollout_value(rv, action)


@dataclass
class MetaExample:
    features: np.ndarray
    values: np.ndarray


def learn(examples: list[MetaExample], n_actions: int, ridge: float = 1e-3) -> ExplorationPolicy:
    """Per-action ridge regression of roll-out values on features (intercept unpenalised)."""
    Phi = np.stack([e.features for e in examples])
    V = np.stack([e.values for e in examples])
    Z = np.hstack([Phi, np.ones((Phi.shape[0], 1))])
    reg = ridge * np.eye(Z.shape[1])
    reg[-1, -1] = 0.0
    coef = np.linalg.solve(Z.T @ Z + reg, Z.T @ V)
    return ExplorationPolicy(coef[:-1].T.copy(), coef[-1].copy())


def _hypothesis_for(val: SupervisedDataset, seed: int) -> HypothesisConfig:
    mode, lr = select_hyperparams(val) if len(val) >= 6 else DEFAULT_HYPERPARAMS
    scaler = FeatureScaler.fit(val.X, mode)
    return HypothesisConfig(val.n_actions, val.dim, scaler, lr, seed=seed)


def collect_episode(
    task: SupervisedDataset,
    roll_in: ExplorationPolicy,
    cfg: MeleeConfig,
    rng: np.random.Generator,
    rollout: Callable[[np.ndarray, int, Scorer], float] = expert_rollout,
) -> tuple[list[MetaExample], History]:
    """One simulated episode on ``task``; returns its meta-examples and the real history."""
    K = task.n_actions
    if len(task) <= cfg.n_val:
        raise ParameterError(f"task {task.name!r} has {len(task)} rows; need more than n_val={cfg.n_val}")
    perm = rng.permutation(len(task))
    val, tr = task.subset(perm[:cfg.n_val]), task.subset(perm[cfg.n_val:])
    hyp = _hypothesis_for(val, int(rng.integers(2**31)))
    learner = OnlinePolOpt(cfg.method, hyp)
    h = History(K)
    T = len(tr)
    probe_p = 1.0 - (K - 1) * cfg.mu
    examples = []
    cal: Calibrator | None = None
    for t in range(1, T + 1):
        x, r = tr.X[t - 1], tr.R[t - 1]
        values = np.empty(K)
        for a in range(K):
            probe_rec = Interaction(x, a, r[a], probe_p)
            if cfg.probe_mode == "full":
                f_a = polopt(cfg.method, hyp, h.extended(probe_rec))
            else:
                f_a = learner.probe(probe_rec)
            values[a] = rollout(r, a, f_a)
        f = learner.scorer
        if cal is None or (t - 1) % cfg.calib_every == 0:
            cal = fit_calibration(f, val)
        f.calibrator = cal
        phi = extract_from(f, x, h, t, T)
        examples.append(MetaExample(phi, values))
        a, p = sample(mixture(roll_in.act(phi), cfg.mu, K), rng)
        rec = Interaction(x, a, r[a], p)
        learner.update(rec)
        h.append(rec)
    return examples, h


@dataclass
class TrainingResult:
    policies: list[ExplorationPolicy]
    selected: ExplorationPolicy
    selected_index: int
    selection_scores: list[float]
    examples: list[MetaExample]


def train_melee(
    tasks: list[SupervisedDataset],
    cfg: MeleeConfig | None = None,
    rng: np.random.Generator | int | None = None,
    log: Callable[[dict], None] | None = None,
    rollout: Callable[[np.ndarray, int, Scorer], float] = expert_rollout,
    initial_policy: ExplorationPolicy | None = None,
) -> TrainingResult:
    """Imitation-learning loop (AggreVaTe with one-step expert roll-outs).

    Each round samples a task, rolls in with the previous policy, appends
    the new examples to the aggregate set and refits. The returned
    ``selected`` policy has the best mean progressive reward on
    ``cfg.selection_tasks`` fresh synthetic tasks (skipped if that is 0, in
    which case the last policy is selected).
    """
    cfg = cfg or MeleeConfig()
    if not tasks:
        raise ParameterError("need at least one training task")
    K = tasks[0].n_actions
    if any(t.n_actions != K for t in tasks):
        raise ParameterError("all training tasks must share the number of actions")
    cfg.validate(K)
    rng = make_rng(rng)
    train_rng, select_rng = rng.spawn(2)

    prev = initial_policy or ExplorationPolicy.follow_probabilities(K)
    aggregated: list[MetaExample] = []
    policies = []
    for n in range(1, cfg.rounds + 1):
        task = tasks[int(train_rng.integers(len(tasks)))]
        examples, _ = collect_episode(task, prev, cfg, train_rng, rollout)
        aggregated.extend(examples)
        prev = learn(aggregated, K, cfg.ridge)
        prev.config = asdict(cfg)
        policies.append(prev)
        if log is not None:
            log({"round": n, "task": task.name, "episode_examples": len(examples), "total_examples": len(aggregated)})

    scores: list[float] = []
    if cfg.selection_tasks > 0 and K == 2:
        held_out = sample_training_suite(cfg.selection_tasks, cfg.selection_size, select_rng)
        seeds = [int(s) for s in select_rng.integers(2**31, size=len(held_out))]
        for n, pi in enumerate(policies, start=1):
            g = np.mean([run_agent(pi, ds, seed, cfg.test_mu, cfg.method, cfg.calib_every).rewards.mean() for ds, seed in zip(held_out, seeds)])
            scores.append(float(g))
            if log is not None:
                log({"round": n, "selection_G": float(g)})
        best = int(np.argmax(scores))
    else:
        best = len(policies) - 1
    return TrainingResult(policies, policies[best], best, scores, aggregated)


class MeleeExplorer(Explorer):
    """Test-time agent driven by a learned exploration policy."""

    name = "melee"

    def __init__(self, policy: ExplorationPolicy, test_mu: float = 0.0, calib_every: int = 50):
        self.policy = policy
        self.test_mu = test_mu
        self.calib_every = calib_every

    def start(self, setup, rng):
        super().start(setup, rng)
        if setup.n_actions != self.policy.n_actions:
            raise ParameterError(f"policy trained for K={self.policy.n_actions}, task has K={setup.n_actions}")
        self.learner = OnlinePolOpt(setup.method, setup.hypothesis)
        self.history = History(setup.n_actions)
        self.last_greedy = 0

    def act(self, x, t):
        f = self.learner.scorer
        if f.calibrator is None or (t - 1) % self.calib_every == 0:
            f.calibrator = fit_calibration(f, self.setup.holdout)
        phi = extract(f.predict_proba(x), f.predict(x), self.history.actions, self.history.rewards, t, self.setup.horizon)
        self.last_greedy = self.policy.act(phi)
        return mixture(self.last_greedy, self.test_mu, self.setup.n_actions)

    def observe(self, x, action, reward, propensity):
        rec = Interaction(x, action, reward, propensity)
        self.learner.update(rec)
        self.history.append(rec)

    def params(self):
        return {"test_mu": self.test_mu, "calib_every": self.calib_every}


def run_agent(
    policy: ExplorationPolicy,
    ds: SupervisedDataset,
    seed: int,
    test_mu: float = 0.0,
    method: PolOptMethod | str = PolOptMethod.DIRECT,
    calib_every: int = 50,
    keep_distributions: bool = False,
) -> Episode:
    """Deploy ``policy`` on ``ds`` as a bandit; the first 30 rows (after the
    seeded shuffle) are the labelled holdout, the rest the reward trace."""
    return run_episode(MeleeExplorer(policy, test_mu, calib_every), ds, seed, method, keep_distributions)
