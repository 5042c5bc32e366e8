"""Synthetic task generation and CSV ingestion.

Synthetic geometry
------------------
Each class is uniform on a unit square. Class 0 occupies ``[0, 1] x [0, 1]``;
class 1 occupies ``[s, s + 1] x [0, 1]``. The squares overlap on a vertical
strip of width ``w = 1 - s``. With balanced classes, inside the strip both
class densities are equal, so any classifier errs on half of the strip's
mass, and the strip carries mass ``0.5 w + 0.5 w = w``. Outside the strip the
class is determined. The Bayes error is therefore ``w / 2`` and we set
``w = 2 * bayes_error``. The vertical line through the middle of the strip,
``x0 = (1 + s) / 2``, is a Bayes-optimal boundary.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import DataError, ParameterError, SupervisedDataset, make_rng

HOLDOUT_SIZE = 30
MAX_CLASSES = 10_000


@dataclass(frozen=True)
class SyntheticSpec:
    bayes_error: float
    n: int
    seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.bayes_error <= 0.5:
            raise ParameterError(f"bayes_error={self.bayes_error} outside [0, 0.5]")
        if self.n < 2:
            raise ParameterError("need at least two rows")


def class_offset(bayes_error: float) -> float:
    """Horizontal shift of the class-1 square."""
    return 1.0 - 2.0 * bayes_error


def optimal_boundary(bayes_error: float) -> float:
    """``x0`` threshold of a Bayes-optimal classifier (class 0 to the left)."""
    return (1.0 + class_offset(bayes_error)) / 2.0


def gen_synthetic(spec: SyntheticSpec, rng: np.random.Generator | None = None) -> SupervisedDataset:
    rng = make_rng(spec.seed) if rng is None else rng
    s = class_offset(spec.bayes_error)
    n0 = math.ceil(spec.n / 2)
    n1 = spec.n - n0
    X = rng.random((spec.n, 2))
    y = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])
    X[n0:, 0] += s
    order = rng.permutation(spec.n)
    X, y = X[order], y[order]
    R = np.eye(2)[y]
    name = f"synthetic-be{spec.bayes_error:.4f}-n{spec.n}"
    return SupervisedDataset(X, R, name, {"bayes_error": spec.bayes_error, "boundary": optimal_boundary(spec.bayes_error)})


def boundary_error(ds: SupervisedDataset) -> float:
    """Error rate of the analytic boundary stored in a synthetic dataset."""
    pred = (ds.X[:, 0] >= ds.meta["boundary"]).astype(int)
    return float(np.mean(pred != ds.labels()))


def sample_training_suite(count: int = 10, size: int = 500, rng: np.random.Generator | int | None = None) -> list[SupervisedDataset]:
    """``count`` synthetic tasks with Bayes error drawn from U[0, 0.5]."""
    if count < 1:
        raise ParameterError("count must be at least 1")
    rng = make_rng(rng)
    out = []
    for i, child in enumerate(rng.spawn(count)):
        be = float(child.uniform(0.0, 0.5))
        ds = gen_synthetic(SyntheticSpec(be, size), child)
        ds.name = f"synthetic-{i:03d}"
        out.append(ds)
    return out


# --------------------------------------------------------------------------
# CSV


def write_csv(ds: SupervisedDataset, path: str | Path) -> None:
    D, K = ds.dim, ds.n_actions
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{j}" for j in range(D)] + [f"r{k}" for k in range(K)])
        for x, r in zip(ds.X, ds.R):
            w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in r])


def _parse_header(header: list[str], path) -> tuple[int, str, int]:
    """Returns (D, kind, K) where kind is 'y' or 'r' (K is 0 for 'y')."""
    header = [h.strip() for h in header]
    if not header:
        raise DataError(f"{path}: empty header line")
    D = 0
    while D < len(header) and header[D] == f"f{D}":
        D += 1
    if D == 0:
        raise DataError(f"{path}: header must start with f0; found column {header[0]!r}")
    rest = header[D:]
    if rest == ["y"]:
        return D, "y", 0
    for k, col in enumerate(rest):
        if col != f"r{k}":
            raise DataError(f"{path}: unexpected column {col!r} at position {D + k}; expected 'r{k}' or a single 'y'")
    if len(rest) < 2:
        raise DataError(f"{path}: need a 'y' column or at least two reward columns r0, r1")
    return D, "r", len(rest)


def load_csv(path: str | Path, name: str | None = None) -> SupervisedDataset:
    """Load ``f0..f{D-1}`` plus either ``y`` (0-based class) or ``r0..r{K-1}``.

    Class labels are one-hot encoded as 0/1 rewards. Rows with empty cells
    are dropped with a warning.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        D, kind, K = _parse_header(header, path)
        width = len(header)
        xs, targets = [], []
        dropped = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DataError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
            if any(c.strip() == "" or c.strip().lower() in ("nan", "?") for c in row):
                dropped += 1
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if not all(math.isfinite(v) for v in vals):
                raise DataError(f"{path}:{lineno}: non-finite value")
            xs.append(vals[:D])
            targets.append(vals[D:])
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} rows with missing values", stacklevel=2)
    if not xs:
        raise DataError(f"{path}: no usable rows")
    X = np.asarray(xs)
    T = np.asarray(targets)
    if kind == "y":
        y = T[:, 0]
        if np.any(y != np.round(y)) or np.any(y < 0):
            raise DataError(f"{path}: class labels must be non-negative integers")
        if y.max() >= MAX_CLASSES:
            raise DataError(f"{path}: class label {int(y.max())} exceeds the supported {MAX_CLASSES} classes")
        y = y.astype(int)
        K = max(int(y.max()) + 1, 2)
        R = np.eye(K)[y]
    else:
        R = T
        bad = np.flatnonzero(np.any((R < 0) | (R > 1), axis=1))
        if bad.size:
            raise DataError(f"{path}:{int(bad[0]) + 2}: rewards must lie in [0, 1]")
    return SupervisedDataset(X, R, name or path.stem)


def read_manifest(path: str | Path | None = None) -> list[tuple[int, int]]:
    """``(openml_id, size)`` pairs; defaults to the bundled evaluation list."""
    if path is None:
        text = resources.files("melee").joinpath("data/datasets.txt").read_text()
    else:
        text = Path(path).read_text()
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            a, b = line.replace(",", " ").split()
            out.append((int(a), int(b)))
    return out


def bandit_stream(ds: SupervisedDataset, seed: int, holdout: int = HOLDOUT_SIZE) -> tuple[SupervisedDataset, SupervisedDataset]:
    """Seeded permutation split into (fully labelled holdout, bandit stream).

    The same ``(ds, seed)`` always gives the same order, so runs of different
    algorithms are paired round by round.
    """
    if len(ds) <= holdout:
        raise ParameterError(f"dataset {ds.name!r} has {len(ds)} rows; need more than {holdout}")
    order = np.random.default_rng(seed).permutation(len(ds))
    return ds.subset(order[:holdout]), ds.subset(order[holdout:])
