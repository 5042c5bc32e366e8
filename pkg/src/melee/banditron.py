"""Banditron and its exploration-policy variant, as an experimental instrument.

Both learn a multiclass linear classifier ``W`` (K x D) from bandit feedback on
one-hot reward vectors. The sampling distribution is

    Q(a) = mu + (1 - K mu) * 1[a == g]

where ``g`` is the vanilla Banditron's own prediction ``argmax(W x)`` or, for
the policy variant, an action suggested by an exploration policy. The update
adds ``x * (1[correct] 1[a_t == a] / Q(a) - 1[argmax(Wx) == a])`` to row ``a``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .core import DataError, ParameterError, sample

# (W, x, true_label, rng) -> suggested action; stands in for pi(W, x)
SuggestFn = Callable[[np.ndarray, np.ndarray, int, np.random.Generator], int]


def check_mu(mu: float, n_actions: int) -> None:
    if not 0.0 < mu < 1.0 / (2 * n_actions):
        raise ParameterError(f"mu={mu} outside (0, 1/(2K)) for K={n_actions}")


def exploration_distribution(suggested: int, mu: float, n_actions: int) -> np.ndarray:
    q = np.full(n_actions, mu)
    q[suggested] += 1.0 - n_actions * mu
    return q


def banditron_update(x: np.ndarray, predicted: int, played: int, correct: bool, q: np.ndarray) -> np.ndarray:
    """The update matrix ``U`` for one round."""
    U = np.zeros((q.size, x.size))
    if correct:
        U[played] += x / q[played]
    U[predicted] -= x
    return U


def expected_update(x: np.ndarray, predicted: int, true_label: int, q: np.ndarray) -> np.ndarray:
    """Average of :func:`banditron_update` over ``a ~ q``, enumerated exactly."""
    U = np.zeros((q.size, x.size))
    for a in range(q.size):
        U += q[a] * banditron_update(x, predicted, a, a == true_label, q)
    return U


def hinge_loss(W: np.ndarray, x: np.ndarray, rv: np.ndarray) -> float:
    rv = np.asarray(rv, dtype=float)
    if not (np.all((rv == 0) | (rv == 1)) and rv.sum() == 1):
        raise DataError("hinge loss needs a one-hot reward vector")
    s = np.asarray(W) @ np.asarray(x, dtype=float)
    star = int(np.argmax(rv))
    others = np.delete(s, star)
    return float(max(0.0, np.max(1.0 - s[star] + others)))


def edge_stats(pi_correct: np.ndarray, f_correct: np.ndarray, n_actions: int) -> tuple[np.ndarray, float]:
    """Per-round edge ``gamma_t = P[pi correct] - P[f correct]`` and
    ``Gamma = mean(1 / (1 + K gamma_t))``."""
    pi_correct = np.asarray(pi_correct, dtype=float)
    f_correct = np.asarray(f_correct, dtype=float)
    if np.any((pi_correct < 0) | (pi_correct > 1)) or np.any((f_correct < 0) | (f_correct > 1)):
        raise ParameterError("probabilities must lie in [0, 1]")
    gamma = pi_correct - f_correct
    return gamma, float(np.mean(1.0 / (1.0 + n_actions * gamma)))


@dataclass
class BanditronState:
    W: np.ndarray
    t: int = 0
    mistakes: int = 0
    edge_sum: float = 0.0
    trace: list[tuple[int, float, float, float]] = field(default_factory=list)

    @classmethod
    def zeros(cls, n_actions: int, dim: int) -> "BanditronState":
        return cls(np.zeros((n_actions, dim)))

    @property
    def n_actions(self) -> int:
        return self.W.shape[0]

    @property
    def mistake_rate(self) -> float:
        return self.mistakes / self.t if self.t else 0.0

    @property
    def Gamma(self) -> float:
        return self.edge_sum / self.t if self.t else 1.0

    def write_trace_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mistake_rate", "gamma", "running_Gamma"])
            w.writerows(self.trace)


def _normalize(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x)
    return x / n if n > 1.0 else x


def banditron_step(
    state: BanditronState,
    x: np.ndarray,
    true_label: int,
    mu: float,
    rng: np.random.Generator,
    suggest: SuggestFn | None = None,
    suggest_correct_prob: float | None = None,
) -> BanditronState:
    """One round, updating ``state`` in place (and returning it).

    ``suggest`` plays the exploration policy; ``None`` is the vanilla
    Banditron. ``suggest_correct_prob`` is the probability (known to the
    simulator, not the learner) that the suggestion is correct, used for the
    edge statistic; when omitted it is taken as the indicator of the drawn
    suggestion being correct.
    """
    K = state.n_actions
    check_mu(mu, K)
    x = _normalize(np.asarray(x, dtype=float))
    predicted = int(np.argmax(state.W @ x))
    suggested = predicted if suggest is None else int(suggest(state.W, x, true_label, rng))
    q = exploration_distribution(suggested, mu, K)
    played, _ = sample(q, rng)
    correct = played == true_label
    state.W += banditron_update(x, predicted, played, correct, q)

    f_ok = float(predicted == true_label)
    if suggest is None:
        pi_ok = f_ok
    elif suggest_correct_prob is not None:
        pi_ok = suggest_correct_prob
    else:
        pi_ok = float(suggested == true_label)
    gamma = pi_ok - f_ok
    state.t += 1
    state.mistakes += int(predicted != true_label)
    state.edge_sum += 1.0 / (1.0 + K * gamma)
    state.trace.append((state.t, state.mistake_rate, gamma, state.Gamma))
    return state


def run_banditron(
    X: np.ndarray,
    labels: np.ndarray,
    n_actions: int,
    mu: float,
    rng: np.random.Generator,
    suggest: SuggestFn | None = None,
    suggest_correct_prob: Callable[[bool], float] | None = None,
) -> BanditronState:
    """Run over a labelled stream; ``suggest_correct_prob(f_correct)`` gives the
    simulator's P[suggestion correct] for the edge statistic."""
    state = BanditronState.zeros(n_actions, X.shape[1])
    for x, y in zip(X, labels):
        prob = None
        if suggest_correct_prob is not None:
            pred = int(np.argmax(state.W @ _normalize(x)))
            prob = suggest_correct_prob(pred == y)
        banditron_step(state, x, int(y), mu, rng, suggest, prob)
    return state


def correcting_oracle(p_fix: float = 0.5) -> tuple[SuggestFn, Callable[[bool], float]]:
    """A simulated exploration policy that, when the classifier is wrong,
    suggests the true label with probability ``p_fix`` (otherwise it agrees
    with the classifier). Returns the suggestion function and its exact
    correctness probability."""

    def suggest(W, x, y, rng):
        pred = int(np.argmax(W @ x))
        if pred != y and rng.random() < p_fix:
            return y
        return pred

    def correct_prob(f_correct: bool) -> float:
        return 1.0 if f_correct else p_fix

    return suggest, correct_prob


def separable_stream(n: int, margin: float, rng: np.random.Generator, dim: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Points uniform in the unit ball, labelled by a random unit direction,
    keeping only those at distance >= ``margin`` from the separating plane."""
    w = rng.normal(size=dim)
    w /= np.linalg.norm(w)
    X = np.empty((0, dim))
    while X.shape[0] < n:
        cand = rng.uniform(-1.0, 1.0, size=(2 * n, dim))
        cand = cand[(np.linalg.norm(cand, axis=1) <= 1.0) & (np.abs(cand @ w) >= margin)]
        X = np.vstack([X, cand])
    X = X[:n]
    return X, (X @ w > 0).astype(int)
