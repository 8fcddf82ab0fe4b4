"""Held-out error and parameter count of the Tucker regression across ranks.

Fits the regression on a noisy planted model for a sweep of ranks and
prints one row per rank. Lower ranks trade accuracy for parameters.

    python3 scripts/rank_ablation.py --iterations 3000
"""

import argparse
import itertools

import numpy as np

from tensoredit.regression import RegressionConfig, fit, parameter_counts, predict_batch
from tensoredit.synth import make_synthetic, sample


def sweep(d=16, shape=(8, 4, 4), samples=2000, noise_sigma=0.05, iterations=3000, seed=0):
    model = make_synthetic(d, shape, "multilinear", noise_sigma, seed)
    z, x = sample(model, samples, seed + 1)
    zt, xt = sample(model, 1000, seed + 2)
    choices = [sorted({min(r, n) for r in (2, 4, n)}) for n in shape]
    ranks = [r + (d,) for r in itertools.product(*choices)]
    rows = []
    for rank in ranks:
        cfg = RegressionConfig(rank=rank, learning_rate=1e-2, iterations=iterations, seed=seed)
        w = fit((z, x), cfg)
        mse = float(np.mean(np.sum((predict_batch(xt, w) - zt) ** 2, axis=1)))
        rows.append((rank, parameter_counts(shape, d, rank), mse))
    return rows


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--iterations", type=int, default=3000)
    p.add_argument("--noise-sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    print(f"{'rank':>18} {'factored':>9} {'dense':>7} {'held-out MSE':>13}")
    for rank, counts, mse in sweep(noise_sigma=args.noise_sigma, iterations=args.iterations, seed=args.seed):
        print(f"{str(rank):>18} {counts['factored']:>9} {counts['dense']:>7} {mse:>13.3e}")
