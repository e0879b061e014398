"""Weighted PAV, the fitted step function, and isotonic recalibration.

Recalibration estimates E[Y | prediction] without binning choices: pool
adjacent violators merges neighbouring prediction levels until the fitted
means are monotone.
"""

import numpy as np

import edfcalib as ec

print("== pool adjacent violators on a tiny sample ==")
y = [1.0, 3.0, 2.0, 4.0, 3.5]
ranks = [1.0, 2.0, 3.0, 4.0, 5.0]
fit = ec.pav_fit(y, ranks=ranks)
print("responses:     ", y)
print("block values:  ", fit.block_values)
print("block weights: ", fit.block_weights)
print("blocks span [left, right] rank edges:",
      list(zip(fit.left_edges, fit.breakpoints)))
print("step function: f(2.5) =", fit.predict(2.5), " f(0) =", fit.predict(0.0),
      " f(9) =", fit.predict(9.0))

print("\n== recalibrating a miscalibrated claim-frequency portfolio ==")
rng = np.random.default_rng(7)
cfg = ec.ScenarioConfig(n=20000, slope=0.7)
mu_star = ec.generate_true_means(cfg, rng)
mu_hat = ec.apply_miscalibration(mu_star, 0.7, cfg.mu_bar)
sample = ec.TestSample("poisson", 1.0, rng.poisson(mu_star), mu_hat)
mu_rc = ec.recalibrate(sample)

order = np.argsort(mu_hat)
deciles = np.array_split(order, 10)
for label, idx in (("bottom", deciles[0]), ("middle", deciles[4]),
                   ("top", deciles[-1])):
    print(
        f"{label:>6s} decile: prediction {mu_hat[idx].mean():.4f} -> "
        f"recalibrated {mu_rc[idx].mean():.4f} (truth {mu_star[idx].mean():.4f})"
    )
print("low predictions recalibrate downward and high ones upward: the")
print("predictions were shrunk toward the pivot, and recalibration undoes it")
