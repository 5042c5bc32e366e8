"""Train an exploration policy on synthetic tasks, then compare it with the
classical explorers on a fresh held-out suite.

    python3 demos/train_and_compare.py
"""
import numpy as np

from melee import MeleeConfig, MeleeExplorer, run_episode, sample_training_suite, train_melee
from melee.cli import EXPLORERS, make_explorer


def mean_reward(make, suite):
    return np.array([run_episode(make(), ds, seed=1000 + i).rewards.mean() for i, ds in enumerate(suite)])


def main():
    train = sample_training_suite(10, 500, rng=100)
    result = train_melee(train, MeleeConfig(rounds=10), rng=200)
    print(f"trained {len(result.policies)} policies, kept #{result.selected_index}")

    held_out = sample_training_suite(10, 500, rng=12345)
    uniform = mean_reward(lambda: make_explorer("epsilon-greedy", {"eps": 1.0}), held_out)
    print(f"{'uniform':<20} {uniform.mean():.4f}")
    for name in EXPLORERS[:-1]:
        G = mean_reward(lambda n=name: make_explorer(n, {}), held_out)
        print(f"{name:<20} {G.mean():.4f}")
    G = mean_reward(lambda: MeleeExplorer(result.selected), held_out)
    print(f"{'melee':<20} {G.mean():.4f}  (beats uniform on {np.mean(G > uniform):.0%} of tasks)")


if __name__ == "__main__":
    main()
