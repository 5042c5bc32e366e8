"""Per-action linear scorers trained by SGD, with feature scaling and Platt calibration."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .core import NumericError, ParameterError, ShapeError, StateError, SupervisedDataset

SCALER_MODES = ("standardize", "minmax", "identity")
LR_GRID = (0.001, 0.01, 0.1, 1.0)
MODE_GRID = ("standardize", "minmax")
PROB_CLIP = 1e-6
SCORER_FORMAT_VERSION = 1


@dataclass
class FeatureScaler:
    """Affine per-dimension map ``(x - shift) * inv_scale``.

    Constant dimensions get ``inv_scale = 0`` and therefore map to 0.
    """

    mode: str = "identity"
    shift: np.ndarray | None = None
    inv_scale: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in SCALER_MODES:
            raise ParameterError(f"unknown scaler mode {self.mode!r}; expected one of {SCALER_MODES}")

    @classmethod
    def fit(cls, X: np.ndarray, mode: str = "standardize") -> "FeatureScaler":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if mode == "identity":
            shift, spread = np.zeros(X.shape[1]), np.ones(X.shape[1])
        elif mode == "standardize":
            shift, spread = X.mean(axis=0), X.std(axis=0)
        elif mode == "minmax":
            shift = X.min(axis=0)
            spread = X.max(axis=0) - shift
        else:
            raise ParameterError(f"unknown scaler mode {mode!r}")
        inv = np.zeros_like(spread)
        ok = spread > 1e-12
        inv[ok] = 1.0 / spread[ok]
        return cls(mode, shift, inv)

    @classmethod
    def identity(cls, dim: int) -> "FeatureScaler":
        return cls("identity", np.zeros(dim), np.ones(dim))

    @property
    def fitted(self) -> bool:
        return self.shift is not None

    def transform(self, X: np.ndarray) -> np.ndarray:
        if not self.fitted:
            raise StateError("scaler used before fit")
        return (np.asarray(X, dtype=float) - self.shift) * self.inv_scale

    def to_json(self) -> dict:
        return {"mode": self.mode, "shift": self.shift.tolist(), "inv_scale": self.inv_scale.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureScaler":
        return cls(obj["mode"], np.asarray(obj["shift"], dtype=float), np.asarray(obj["inv_scale"], dtype=float))


def fit_platt(scores: np.ndarray, labels: np.ndarray, ridge: float = 1e-2, max_iter: int = 100, tol: float = 1e-10) -> tuple[float, float]:
    """Fit ``P(label=1 | s) = sigmoid(A*s + B)`` by penalised maximum likelihood.

    One pseudo-positive and one pseudo-negative are placed at the mean score,
    which bounds the intercept and turns the constant-score case into the
    Laplace-smoothed base rate ``(n_pos + 1) / (n + 2)``. ``ridge`` penalises
    the slope measured on standardised scores. Returns ``(A, B)``.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    n_pos = y.sum()
    n = y.size
    base = (n_pos + 1.0) / (n + 2.0)
    center = s.mean()
    spread = s.std()
    if n_pos == 0 or n_pos == n or spread < 1e-12:
        return 0.0, float(logit(np.clip(base, PROB_CLIP, 1 - PROB_CLIP)))

    u = np.concatenate([(s - center) / spread, [0.0, 0.0]])
    t = np.concatenate([y, [1.0, 0.0]])

    def objective(a, b):
        z = a * u + b
        # log(1 + e^z) - t z, written stably
        return np.sum(np.logaddexp(0.0, z) - t * z) + 0.5 * ridge * a * a

    a, b = 0.0, float(logit(base))
    f = objective(a, b)
    for _ in range(max_iter):
        p = expit(a * u + b)
        r = p - t
        w = p * (1.0 - p)
        g = np.array([np.dot(r, u) + ridge * a, r.sum()])
        H = np.array([[np.dot(w, u * u) + ridge, np.dot(w, u)], [np.dot(w, u), w.sum()]])
        step = np.linalg.solve(H, g)
        lam = 1.0
        while True:
            a_new, b_new = a - lam * step[0], b - lam * step[1]
            f_new = objective(a_new, b_new)
            if f_new <= f + 1e-12 or lam < 1e-8:
                break
            lam *= 0.5
        if f_new > f + 1e-12:
            break
        converged = abs(f - f_new) < tol * max(1.0, abs(f))
        a, b, f = a_new, b_new, f_new
        if converged:
            break
    A = a / spread
    return float(A), float(b - A * center)


@dataclass
class Calibrator:
    """Per-action Platt maps; ``A`` and ``B`` have shape (K,)."""

    A: np.ndarray
    B: np.ndarray

    def transform(self, scores: np.ndarray) -> np.ndarray:
        return np.clip(expit(self.A * scores + self.B), PROB_CLIP, 1.0 - PROB_CLIP)

    def to_json(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Calibrator":
        return cls(np.asarray(obj["A"], dtype=float), np.asarray(obj["B"], dtype=float))


@dataclass
class Scorer:
    """Linear model ``W @ scale(x) + b`` with one output per action."""

    weights: np.ndarray
    bias: np.ndarray
    scaler: FeatureScaler
    calibrator: Calibrator | None = None

    @classmethod
    def zeros(cls, n_actions: int, dim: int, scaler: FeatureScaler | None = None) -> "Scorer":
        return cls(np.zeros((n_actions, dim)), np.zeros(n_actions), scaler or FeatureScaler.identity(dim))

    @property
    def n_actions(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "Scorer":
        return Scorer(self.weights.copy(), self.bias.copy(), self.scaler, self.calibrator)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ShapeError(f"context has dimension {x.shape[-1]}, scorer expects {self.dim}")
        return x

    def scores(self, x: np.ndarray) -> np.ndarray:
        """Raw scores; ``x`` may be one context (D,) or a batch (n, D)."""
        z = self.scaler.transform(self._check(x))
        return z @ self.weights.T + self.bias

    def predict(self, x: np.ndarray) -> int | np.ndarray:
        s = self.scores(x)
        return int(np.argmax(s)) if s.ndim == 1 else np.argmax(s, axis=1)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        if self.calibrator is None:
            raise StateError("predict_proba needs a fitted calibrator")
        c = self.calibrator.transform(self.scores(x))
        return c / c.sum(axis=-1, keepdims=True)

    def step(self, x: np.ndarray, target: np.ndarray, mask: np.ndarray, lr: float) -> None:
        """In-place squared-loss SGD step, per action weighted by ``mask``."""
        z = self.scaler.transform(self._check(x))
        with np.errstate(over="ignore", invalid="ignore"):
            resid = (z @ self.weights.T + self.bias - target) * mask
            new_w = self.weights - lr * np.outer(resid, z)
            new_b = self.bias - lr * resid
        if not (np.all(np.isfinite(new_w)) and np.all(np.isfinite(new_b))):
            raise NumericError("SGD step produced non-finite weights; learning rate too large?")
        self.weights = new_w
        self.bias = new_b

    def to_json(self) -> dict:
        return {
            "version": SCORER_FORMAT_VERSION,
            "K": self.n_actions,
            "D": self.dim,
            "scaler": self.scaler.to_json(),
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "calibrator": None if self.calibrator is None else self.calibrator.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> "Scorer":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if obj.get("version") != SCORER_FORMAT_VERSION:
            raise ParameterError(f"unsupported scorer format version {obj.get('version')}")
        cal = obj.get("calibrator")
        out = cls(
            np.asarray(obj["weights"], dtype=float).reshape(obj["K"], obj["D"]),
            np.asarray(obj["bias"], dtype=float),
            FeatureScaler.from_json(obj["scaler"]),
            None if cal is None else Calibrator.from_json(cal),
        )
        return out


def sgd_update(f: Scorer, x: np.ndarray, target: np.ndarray, weight_mask: np.ndarray, lr: float) -> Scorer:
    """Functional form of :meth:`Scorer.step`; ``f`` is not modified."""
    if lr < 0:
        raise ParameterError("learning rate must be non-negative")
    out = f.copy()
    out.step(x, np.asarray(target, dtype=float), np.asarray(weight_mask, dtype=float), lr)
    return out


def fit_calibration(f: Scorer, val: SupervisedDataset, ridge: float = 1e-2) -> Calibrator:
    """Platt-scale each action's score against ``1[action is best]`` on ``val``."""
    S = f.scores(val.X)
    y = val.labels()
    A = np.zeros(f.n_actions)
    B = np.zeros(f.n_actions)
    for k in range(f.n_actions):
        A[k], B[k] = fit_platt(S[:, k], (y == k).astype(float), ridge=ridge)
    return Calibrator(A, B)


def calibrated(f: Scorer, val: SupervisedDataset) -> Scorer:
    out = f.copy()
    out.calibrator = fit_calibration(f, val)
    return out


def cv_folds(n: int, k: int = 3) -> list[np.ndarray]:
    """Contiguous fold indices; sizes differ by at most one."""
    return np.array_split(np.arange(n), k)


def fit_full_information(X: np.ndarray, R: np.ndarray, scaler: FeatureScaler, lr: float, epochs: int = 5) -> Scorer:
    """SGD regression on every action's reward (supervised, not bandit)."""
    f = Scorer.zeros(R.shape[1], X.shape[1], scaler)
    ones = np.ones(R.shape[1])
    for _ in range(epochs):
        for x, r in zip(X, R):
            f.step(x, r, ones, lr)
    return f


def training_diverged(f: Scorer, X: np.ndarray, R: np.ndarray) -> bool:
    """True if the fit is worse on its own data than the all-zero model."""
    with np.errstate(over="ignore", invalid="ignore"):
        loss = np.mean((f.scores(X) - R) ** 2)
    return not np.isfinite(loss) or loss > np.mean(R ** 2)


def cv_accuracy(train: SupervisedDataset, mode: str, lr: float, epochs: int = 5, folds: int = 3) -> float:
    """Mean held-out-fold reward of the predicted action.

    Configurations whose SGD blows up, or ends worse on its training folds
    than the zero model, score -inf.
    """
    accs = []
    for test_idx in cv_folds(len(train), folds):
        train_idx = np.setdiff1d(np.arange(len(train)), test_idx)
        Xtr, Rtr = train.X[train_idx], train.R[train_idx]
        scaler = FeatureScaler.fit(Xtr, mode)
        try:
            f = fit_full_information(Xtr, Rtr, scaler, lr, epochs)
        except NumericError:
            return -np.inf
        if training_diverged(f, Xtr, Rtr):
            return -np.inf
        pred = f.predict(train.X[test_idx])
        accs.append(train.R[test_idx, pred].mean())
    return float(np.mean(accs))


def select_hyperparams(train: SupervisedDataset, epochs: int = 5, folds: int = 3) -> tuple[str, float]:
    """Three-fold CV over scaler mode x learning rate; returns the most accurate pair.

    Ties keep the earliest grid entry.
    """
    if len(train) < 2 * folds:
        raise ParameterError(f"need at least {2 * folds} rows for {folds}-fold CV, got {len(train)}")
    best, best_acc = (MODE_GRID[0], LR_GRID[0]), -np.inf
    for mode in MODE_GRID:
        for lr in LR_GRID:
            acc = cv_accuracy(train, mode, lr, epochs, folds)
            if acc > best_acc + 1e-12:
                best, best_acc = (mode, lr), acc
    return best
