"""Banditron on a separable stream, alone and with a simulated exploration
policy that corrects the classifier half the time it is wrong.

    python3 demos/banditron_edge.py
"""
import math

import numpy as np

from melee.banditron import correcting_oracle, run_banditron, separable_stream


def main(T=5000, K=2, D=2):
    mu = math.sqrt(D / (T * K))
    rng = np.random.default_rng(0)
    X, y = separable_stream(T, 0.2, rng, D)

    plain = run_banditron(X, y, K, mu, np.random.default_rng(1))
    print(f"mu = {mu:.4f}, mistake rate {plain.mistake_rate:.4f}")

    for p_fix in (0.0, 0.5, 0.9):
        suggest, prob = correcting_oracle(p_fix)
        s = run_banditron(X, y, K, mu, np.random.default_rng(1), suggest, prob)
        print(f"p_fix = {p_fix}: mistake rate {s.mistake_rate:.4f}, Gamma {s.Gamma:.4f}")


if __name__ == "__main__":
    main()
