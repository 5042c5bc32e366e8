"""Command-line entry point: ``melee {gen,train,run,bench}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
``MELEE_THREADS`` caps the number of worker processes used by ``bench``.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .core import DataError, NumericError, ParameterError, SupervisedDataset
from .datasets import load_csv, sample_training_suite, write_csv
from .evaluation import RunResult, relative_reward_cdf, save_results, win_loss_matrix, write_cdf_csv
from .explorers import Cover, EGEpsilonGreedy, EpsilonDecreasing, EpsilonGreedy, LinUCB, TauFirst
from .metalearn import ExplorationPolicy, MeleeConfig, MeleeExplorer, train_melee
from .runner import run_episode

log = logging.getLogger("melee")

EXPLORERS = ("epsilon-greedy", "epsilon-decreasing", "eg-greedy", "linucb", "tau-first", "cover", "cover-nu", "melee")

# explorer hyperparameters with their defaults; shared by `run` flags and `bench` config keys
EXPLORER_DEFAULTS = {
    "eps": 0.0,
    "eps0": 0.1,
    "eta": 0.1,
    "alpha": 1.0,
    "tau": 0.02,
    "bag_size": 16,
    "psi": 0.1,
    "test_mu": 0.0,
    "calib_every": 50,
}
BENCH_DEFAULTS = {
    "datasets": "",
    "synthetic": "",
    "explorers": ",".join(EXPLORERS[:-1]),
    "policy": "",
    "seeds": "0",
    "out": "bench-out",
    "method": "direct",
    "alpha_test": 0.01,
    **EXPLORER_DEFAULTS,
}


class UsageError(Exception):
    pass


def make_explorer(name: str, params: dict, policy: ExplorationPolicy | None = None):
    p = {**EXPLORER_DEFAULTS, **params}
    if name == "epsilon-greedy":
        return EpsilonGreedy(float(p["eps"]))
    if name == "epsilon-decreasing":
        return EpsilonDecreasing(float(p["eps0"]))
    if name == "eg-greedy":
        return EGEpsilonGreedy(float(p["eta"]))
    if name == "linucb":
        return LinUCB(float(p["alpha"]))
    if name == "tau-first":
        return TauFirst(float(p["tau"]))
    if name == "cover":
        return Cover(int(p["bag_size"]), float(p["psi"]), smooth=True)
    if name == "cover-nu":
        return Cover(int(p["bag_size"]), float(p["psi"]), smooth=False)
    if name == "melee":
        if policy is None:
            raise UsageError("explorer 'melee' needs a trained policy (--policy)")
        return MeleeExplorer(policy, float(p["test_mu"]), int(p["calib_every"]))
    raise UsageError(f"unknown explorer {name!r}; valid names: {', '.join(EXPLORERS)}")


def _write_json_atomic(obj, path: Path) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _collect_csvs(specs: list[str]) -> list[Path]:
    out = []
    for s in specs:
        p = Path(s)
        if p.is_dir():
            out.extend(sorted(p.glob("*.csv")))
        elif p.exists():
            out.append(p)
        else:
            raise DataError(f"no such dataset file or directory: {s}")
    return out


# --------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    if args.size < 31:
        raise UsageError("--size must exceed the 30-row holdout")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    suite = sample_training_suite(args.count, args.size, args.seed)
    lines = []
    for ds in suite:
        write_csv(ds, out / f"{ds.name}.csv")
        lines.append(f"{ds.name}.csv {ds.meta['bayes_error']!r}")
    (out / "manifest.txt").write_text("# file bayes_error\n" + "\n".join(lines) + "\n")
    print(f"wrote {len(suite)} datasets to {out}")
    return 0


# --------------------------------------------------------------------------
# train


def cmd_train(args) -> int:
    paths = _collect_csvs(args.tasks)
    if not paths:
        raise UsageError("--tasks matched no CSV files")
    tasks = [load_csv(p) for p in paths]
    cfg = MeleeConfig(
        mu=args.mu, n_val=args.nval, rounds=args.rounds, test_mu=args.test_mu,
        calib_every=args.calib_every, method=args.method, selection_tasks=args.selection_tasks,
    )
    out = Path(args.out)
    log_path = Path(args.log) if args.log else out.with_suffix(".log.ndjson")
    t0 = time.time()
    with open(log_path, "w") as logfh:
        def emit(rec):
            logfh.write(json.dumps(rec, sort_keys=True) + "\n")
            logfh.flush()

        result = train_melee(tasks, cfg, np.random.default_rng(args.seed), log=emit)
        emit({"selected_round": result.selected_index + 1, "elapsed_s": round(time.time() - t0, 3)})
    result.selected.save(out)
    print(f"trained {len(result.policies)} policies; selected round {result.selected_index + 1}; wrote {out}")
    return 0


# --------------------------------------------------------------------------
# run


def run_cell(name: str, params: dict, ds: SupervisedDataset, seed: int, method: str, policy_json: dict | None) -> RunResult:
    policy = ExplorationPolicy.from_json(policy_json) if policy_json is not None else None
    explorer = make_explorer(name, params, policy)
    ep = run_episode(explorer, ds, seed, method)
    return RunResult(name, ds.name, seed, ep.rewards.tolist(), explorer.params())


def cmd_run(args) -> int:
    if args.explorer not in EXPLORERS:
        raise UsageError(f"unknown explorer {args.explorer!r}; valid names: {', '.join(EXPLORERS)}")
    ds = load_csv(args.dataset)
    policy = ExplorationPolicy.load(args.policy).to_json() if args.policy else None
    params = {k: getattr(args, k) for k in EXPLORER_DEFAULTS}
    res = run_cell(args.explorer, params, ds, args.seed, args.method, policy)
    _write_json_atomic(res.to_json(), Path(args.out))
    print(f"{res.algorithm} on {res.dataset}: G = {res.G:.4f}")
    return 0


# --------------------------------------------------------------------------
# bench


def read_config(path: str | Path | None) -> dict:
    """Flat ``key = value`` file; unknown keys are rejected."""
    if path is None:
        return {}
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[bench]\n" + Path(path).read_text())
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    cfg = dict(parser["bench"])
    unknown = sorted(set(cfg) - set(BENCH_DEFAULTS))
    if unknown:
        raise UsageError(f"{path}: unknown config keys {unknown}")
    return cfg


def _split(s: str) -> list[str]:
    return [p.strip() for p in str(s).replace(";", ",").split(",") if p.strip()]


def bench_settings(file_cfg: dict, overrides: dict) -> dict:
    merged = {**BENCH_DEFAULTS, **file_cfg, **{k: v for k, v in overrides.items() if v is not None}}
    for k, default in BENCH_DEFAULTS.items():
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            try:
                merged[k] = type(default)(merged[k])
            except ValueError:
                raise UsageError(f"config key {k!r} must be {type(default).__name__}, got {merged[k]!r}") from None
    return merged


def _bench_datasets(cfg: dict) -> list[SupervisedDataset]:
    sets = [load_csv(p) for p in _collect_csvs(_split(cfg["datasets"]))]
    if cfg["synthetic"]:
        parts = [int(v) for v in str(cfg["synthetic"]).split()]
        if len(parts) != 3:
            raise UsageError("synthetic = <count> <size> <seed>")
        sets.extend(sample_training_suite(*parts))
    names = [d.name for d in sets]
    if len(set(names)) != len(names):
        raise UsageError("dataset names (file stems) must be unique")
    return sets


def _cell_key(alg: str, ds: str, seed: int, params: dict, method: str) -> str:
    blob = json.dumps([alg, ds, seed, params, method], sort_keys=True)
    return f"{alg}__{ds}__{seed}__{hashlib.sha1(blob.encode()).hexdigest()[:10]}"


def _bench_worker(job) -> None:
    name, params, ds, seed, method, policy_json, path = job
    res = run_cell(name, params, ds, seed, method, policy_json)
    _write_json_atomic(res.to_json(), Path(path))


def cmd_bench(args) -> int:
    cfg = bench_settings(read_config(args.config), {"out": args.out, "seeds": args.seeds})
    algs = _split(cfg["explorers"])
    for a in algs:
        if a not in EXPLORERS:
            raise UsageError(f"unknown explorer {a!r}; valid names: {', '.join(EXPLORERS)}")
    if len(algs) < 2:
        raise UsageError("bench needs at least two explorers")
    datasets = _bench_datasets(cfg)
    if not datasets:
        raise UsageError("no datasets given (set 'datasets' and/or 'synthetic')")
    seeds = [int(s) for s in _split(cfg["seeds"])]
    policy_json = None
    if "melee" in algs:
        if not cfg["policy"]:
            raise UsageError("explorer 'melee' needs 'policy = <file>'")
        policy_json = ExplorationPolicy.load(cfg["policy"]).to_json()
    params = {k: cfg[k] for k in EXPLORER_DEFAULTS}
    method = cfg["method"]

    out = Path(cfg["out"])
    runs = out / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    jobs, cells = [], []
    for ds in datasets:
        for seed in seeds:
            for a in algs:
                path = runs / f"{_cell_key(a, ds.name, seed, params, method)}.json"
                cells.append(path)
                if not path.exists():
                    jobs.append((a, params, ds, seed, method, policy_json if a == "melee" else None, str(path)))
    log.info("%d cells, %d to run", len(cells), len(jobs))
    workers = max(1, int(os.environ.get("MELEE_THREADS", os.cpu_count() or 1)))
    if workers == 1 or len(jobs) <= 1:
        for job in jobs:
            _bench_worker(job)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_bench_worker, jobs))

    results = []
    for path in cells:
        with open(path) as fh:
            results.append(RunResult.from_json(json.load(fh)))
    save_results(results, out / "results.json")

    traces: dict[str, dict[str, list[float]]] = {}
    G: dict[str, dict[str, list[float]]] = {}
    for r in results:
        traces.setdefault(f"{r.dataset}#{r.seed}", {})[r.algorithm] = r.rewards
        G.setdefault(r.dataset, {}).setdefault(r.algorithm, []).append(r.G)
    matrix = win_loss_matrix(traces, algs, cfg["alpha_test"])
    matrix.write_csv(out / "winloss.csv")
    mean_G = {d: {a: float(np.mean(v)) for a, v in per.items()} for d, per in G.items()}
    write_cdf_csv(relative_reward_cdf(mean_G), out / "cdf.csv")
    print(f"{len(results)} runs over {len(datasets)} datasets; results in {out}")
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="melee", description="Meta-learned contextual bandit exploration")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write synthetic training tasks as CSV")
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--size", type=int, default=500)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train an exploration policy")
    t.add_argument("--tasks", nargs="+", required=True, help="CSV files or directories")
    t.add_argument("--mu", type=float, default=0.1)
    t.add_argument("--nval", type=int, default=30)
    t.add_argument("--rounds", type=int, default=10)
    t.add_argument("--test-mu", type=float, default=0.0)
    t.add_argument("--calib-every", type=int, default=50)
    t.add_argument("--selection-tasks", type=int, default=5)
    t.add_argument("--method", choices=("direct", "ips"), default="direct")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--log", help="training log (NDJSON); default <out>.log.ndjson")
    t.add_argument("--out", default="policy.json")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("run", help="run one explorer on one dataset")
    r.add_argument("--dataset", required=True)
    r.add_argument("--explorer", required=True, help="one of: " + ", ".join(EXPLORERS))
    r.add_argument("--policy")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--method", choices=("direct", "ips"), default="direct")
    r.add_argument("--out", default="result.json")
    for k, v in EXPLORER_DEFAULTS.items():
        r.add_argument("--" + k.replace("_", "-"), dest=k, type=type(v), default=v)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="run every explorer on every dataset and aggregate")
    b.add_argument("--config", help="flat key = value file")
    b.add_argument("--out", help="overrides 'out' from the config")
    b.add_argument("--seeds", help="overrides 'seeds' from the config")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        print(f"melee: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"melee: data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"melee: numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
