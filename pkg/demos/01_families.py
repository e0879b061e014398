"""Tour of the exponential-dispersion-family primitives.

Each family is defined by its cumulant function on an open canonical domain;
means and canonical parameters convert in closed form, and the unit deviance
is the strictly consistent loss the tests are built on.
"""

import numpy as np

import edfcalib as ec

rng = np.random.default_rng(1)

print("== cumulants and links ==")
for name in ec.FAMILY_NAMES:
    fam = ec.get_family(name)
    mu = 0.4 if name == "binomial" else 1.3
    theta = fam.canonical_from_mean(mu)
    print(
        f"{name:17s} mean {mu:.2f} -> canonical {theta:+.4f} "
        f"-> kappa {fam.cumulant(theta):+.4f} -> mean {fam.mean_from_canonical(theta):.2f}"
    )

print("\n== unit deviance is zero only at the observation ==")
fam = ec.get_family("poisson")
for mu in (1.0, 2.0, 3.0, 4.0):
    print(f"d(y=2, mu={mu:.0f}) = {fam.deviance(2.0, mu):.4f}")

print("\n== samplers match the EDF variance phi/v * V(mu) ==")
n = 200_000
for name, mu, v, phi, var_fn in [
    ("poisson", 0.8, 1.0, 1.0, lambda m: m),
    ("gamma", 2.0, 4.0, 1.0, lambda m: m**2),
    ("inverse_gaussian", 1.5, 2.0, 1.0, lambda m: m**3),
]:
    fam = ec.get_family(name)
    y = fam.sample(np.full(n, mu), v, phi, rng)
    print(
        f"{name:17s} sample mean {y.mean():.4f} (target {mu}), "
        f"sample var {y.var():.4f} (target {phi / v * var_fn(mu):.4f})"
    )

print("\n== the log e-factor compares two canonical parameters ==")
theta, xi = np.log(0.5), np.log(0.7)
for y in (0.0, 1.0, 2.0):
    val = ec.log_e_factor("poisson", y, theta, xi)
    print(f"y={y:.0f}: log factor {val:+.5f}")
print("large responses favour the larger mean, zeros favour the smaller one")
