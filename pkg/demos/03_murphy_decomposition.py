"""Murphy's score decomposition and its bridge to the likelihood ratio.

score = UNC - DSC + MCB: uncertainty of the responses, discrimination earned
by ranking them, and the miscalibration penalty.  Within the EDF the MCB
term is exactly the log likelihood-ratio statistic per unit total weight.
"""

import numpy as np

import edfcalib as ec

rng = np.random.default_rng(11)
cfg = ec.ScenarioConfig(n=30000)

print("slope  score      unc        dsc        mcb        log-LRS/sum(v)")
for slope in (1.0, 0.9, 0.8, 0.7):
    mu_star = ec.generate_true_means(cfg, rng)
    mu_hat = ec.apply_miscalibration(mu_star, slope, cfg.mu_bar)
    sample = ec.TestSample("poisson", 1.0, rng.poisson(mu_star), mu_hat)
    dec = ec.decompose(sample)
    bridge = ec.mcb_from_log_lrs(ec.log_lrs(sample), sample.total_weight)
    print(
        f"{slope:.1f}  {dec.score:.6f}  {dec.unc:.6f}  {dec.dsc:.6f}  "
        f"{dec.mcb:.2e}  {bridge:.2e}"
    )

print(
    "\nUNC is slope-free, DSC shrinks as predictions flatten toward the "
    "pivot,\nand MCB grows with miscalibration while matching the LRS bridge "
    "to machine precision."
)
