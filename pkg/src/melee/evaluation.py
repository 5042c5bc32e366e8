"""Progressive validation, paired significance tests and aggregate reports."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .core import DataError, ParameterError

A_WINS = "A_wins"
B_WINS = "B_wins"
TIE = "tie"
CDF_GRID = np.round(np.arange(101) / 100.0, 2)


def progressive_validation(trace: Sequence[float]) -> float:
    """Average reward collected along the run."""
    trace = np.asarray(trace, dtype=float)
    if trace.size == 0:
        raise DataError("empty reward trace")
    return float(math.fsum(trace) / trace.size)


@dataclass
class RunResult:
    algorithm: str
    dataset: str
    seed: int
    rewards: list[float]
    params: dict = field(default_factory=dict)

    @property
    def G(self) -> float:
        return progressive_validation(self.rewards)

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "dataset": self.dataset,
            "seed": self.seed,
            "params": self.params,
            "G": self.G,
            "rewards": [float(r) for r in self.rewards],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunResult":
        return cls(obj["algorithm"], obj["dataset"], obj["seed"], list(obj["rewards"]), obj.get("params", {}))


def save_results(results: Sequence[RunResult], path: str | Path) -> None:
    ordered = sorted(results, key=lambda r: (r.dataset, r.algorithm, r.seed))
    with open(path, "w") as fh:
        json.dump([r.to_json() for r in ordered], fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_results(path: str | Path) -> list[RunResult]:
    with open(path) as fh:
        return [RunResult.from_json(o) for o in json.load(fh)]


def paired_t(trace_a: Sequence[float], trace_b: Sequence[float]) -> tuple[float, float]:
    """Paired t statistic and two-sided p-value for ``mean(a - b) != 0``.

    Zero-variance differences give ``t = +-inf, p = 0`` (or ``t = 0, p = 1``
    when all differences vanish).
    """
    a = np.asarray(trace_a, dtype=float)
    b = np.asarray(trace_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ParameterError("paired traces must be 1-D and of equal length")
    n = a.size
    if n < 2:
        raise ParameterError("need at least two paired rounds")
    d = a - b
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * stats.t.sf(abs(t), n - 1)
    return float(t), float(p)


def paired_ttest(trace_a: Sequence[float], trace_b: Sequence[float], alpha: float = 0.01) -> str:
    t, p = paired_t(trace_a, trace_b)
    if p < alpha:
        return A_WINS if t > 0 else B_WINS
    return TIE


@dataclass
class WinLossMatrix:
    algorithms: list[str]
    counts: np.ndarray

    def __getitem__(self, pair: tuple[str, str]) -> int:
        i, j = (self.algorithms.index(p) for p in pair)
        return int(self.counts[i, j])

    def is_antisymmetric(self) -> bool:
        return bool(np.array_equal(self.counts, -self.counts.T))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["algorithm"] + self.algorithms)
            for name, row in zip(self.algorithms, self.counts):
                w.writerow([name] + [int(v) for v in row])


def win_loss_matrix(traces: Mapping[str, Mapping[str, Sequence[float]]], algorithms: Sequence[str] | None = None, alpha: float = 0.01) -> WinLossMatrix:
    """``traces[dataset][algorithm]`` -> wins minus losses per ordered pair."""
    if algorithms is None:
        algorithms = sorted({a for per in traces.values() for a in per})
    algorithms = list(algorithms)
    M = np.zeros((len(algorithms), len(algorithms)), dtype=int)
    for ds, per in traces.items():
        for a in algorithms:
            if a not in per:
                raise DataError(f"missing run for algorithm {a!r} on dataset {ds!r}")
        for i, a in enumerate(algorithms):
            for j in range(i + 1, len(algorithms)):
                verdict = paired_ttest(per[a], per[algorithms[j]], alpha)
                if verdict == A_WINS:
                    M[i, j] += 1
                    M[j, i] -= 1
                elif verdict == B_WINS:
                    M[i, j] -= 1
                    M[j, i] += 1
    return WinLossMatrix(algorithms, M)


def relative_rewards(G: Mapping[str, Mapping[str, float]]) -> dict[str, dict[str, float]]:
    """Min-max normalise each dataset's returns across algorithms.

    A dataset where every algorithm got the same return assigns 1 to all.
    """
    out = {}
    for ds, per in G.items():
        if len(per) < 2:
            raise DataError(f"dataset {ds!r} needs at least two algorithms")
        lo, hi = min(per.values()), max(per.values())
        if hi == lo:
            out[ds] = {a: 1.0 for a in per}
        else:
            out[ds] = {a: (g - lo) / (hi - lo) for a, g in per.items()}
    return out


def relative_reward_cdf(G: Mapping[str, Mapping[str, float]], grid: np.ndarray = CDF_GRID) -> dict[str, np.ndarray]:
    """For each algorithm, the fraction of datasets with relative reward >= x."""
    rel = relative_rewards(G)
    algorithms = sorted({a for per in rel.values() for a in per})
    out = {}
    for a in algorithms:
        vals = np.array([per[a] for per in rel.values() if a in per])
        out[a] = np.array([np.mean(vals >= x - 1e-12) for x in grid])
    return out


def write_cdf_csv(cdf: Mapping[str, np.ndarray], path: str | Path, grid: np.ndarray = CDF_GRID) -> None:
    names = sorted(cdf)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x"] + names)
        for i, x in enumerate(grid):
            w.writerow([f"{x:.2f}"] + [f"{cdf[n][i]:.6f}" for n in names])
