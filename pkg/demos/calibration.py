"""How per-action calibration changes probability quality as tasks get noisier.

    python3 demos/calibration.py
"""
import numpy as np
from scipy.special import log_expit, logsumexp

from melee import FeatureScaler, SyntheticSpec, bandit_stream, gen_synthetic, select_hyperparams
from melee.linear import calibrated, fit_full_information


def log_loss(P, y):
    return -np.log(P[np.arange(len(y)), y]).mean()


def main():
    print(" BE    raw     calibrated")
    for be in (0.0, 0.1, 0.25, 0.4, 0.5):
        ds = gen_synthetic(SyntheticSpec(be, 1000, seed=7))
        val, rest = bandit_stream(ds, 0)
        mode, lr = select_hyperparams(val)
        tr, te = rest.subset(np.arange(200)), rest.subset(np.arange(200, len(rest)))
        f = fit_full_information(tr.X, tr.R, FeatureScaler.fit(val.X, mode), lr)
        S = log_expit(f.scores(te.X))
        raw = np.exp(S - logsumexp(S, axis=1, keepdims=True))
        cal = calibrated(f, val).predict_proba(te.X)
        print(f"{be:4.2f}  {log_loss(raw, te.labels()):.4f}  {log_loss(cal, te.labels()):.4f}")


if __name__ == "__main__":
    main()
