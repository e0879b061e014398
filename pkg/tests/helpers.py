"""Independent oracles and sample builders shared across the test modules."""

from itertools import product

import numpy as np
from scipy.special import gammaln

import edfcalib as ec
from edfcalib._rng import child_rng


def brute_force_isotonic(y, v, ranks):
    """Exact weighted isotonic fit by enumerating contiguous block partitions.

    Assumes distinct ranks.  The optimal monotone solution is piecewise
    constant with each block fitted by its weighted mean, so enumerating the
    2**(n-1) ordered partitions and keeping the best feasible one is exact.
    Returns fitted values aligned with the input order.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    ranks = np.asarray(ranks, dtype=float)
    order = np.argsort(ranks, kind="stable")
    ys, vs = y[order], v[order]
    n = y.size
    best, best_sse = None, np.inf
    for cuts in product((False, True), repeat=n - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [n]
        values = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            values.append(float(np.dot(vs[a:b], ys[a:b]) / vs[a:b].sum()))
        if any(values[k + 1] < values[k] for k in range(len(values) - 1)):
            continue
        fitted = np.empty(n)
        for (a, b), m in zip(zip(bounds[:-1], bounds[1:]), values):
            fitted[a:b] = m
        sse = float(np.dot(vs, (ys - fitted) ** 2))
        if sse < best_sse - 1e-15:
            best_sse, best = sse, fitted.copy()
    out = np.empty(n)
    out[order] = best
    return out


def poisson_efactor_expectation(theta, xi, v=1.0, phi=1.0):
    """Exact E[exp(log_e_factor)] for a weighted Poisson response.

    Sums the factor against the count distribution K ~ Poi(v * exp(theta) / phi)
    with y = K * phi / v, truncating once the tail is negligible.
    """
    lam = v * np.exp(theta) / phi
    # generous truncation: tail of Poi(lam) * exp(k * (xi - theta)) decays
    # super-exponentially once k >> lam * exp(xi - theta)
    k_hi = int(max(60.0, lam * np.exp(max(xi - theta, 0.0)) * 6 + 80))
    k = np.arange(k_hi + 1)
    log_pmf = k * np.log(lam) - lam - gammaln(k + 1.0)
    y = k * phi / v
    log_fac = (v / phi) * (y * (xi - theta) - (np.exp(xi) - np.exp(theta)))
    terms = np.exp(log_pmf + log_fac)
    assert terms[-1] < 1e-16, "truncation too short"
    return float(terms.sum())


H0_LEVELS = {
    "poisson": (0.6, 1.0, 1.5, 2.2),
    "gamma": (0.6, 1.0, 1.5, 2.2),
    "normal": (-0.8, -0.2, 0.4, 1.0),
    "binomial": (0.25, 0.4, 0.55, 0.7),
    "inverse_gaussian": (0.6, 1.0, 1.5, 2.2),
}


def h0_level_sample(family, rng, n=200, phi=1.0):
    """Calibrated sample with predicted means on a few tied levels."""
    fam = ec.get_family(family)
    mu = rng.choice(H0_LEVELS[family], size=n)
    y = fam.sample(mu, 1.0, phi, rng)
    return ec.TestSample(fam, phi, y, mu)


def random_sample(family, rng, n=40, weighted=True):
    """A valid miscalibrated sample for the given family."""
    fam = ec.get_family(family)
    v = rng.integers(1, 4, size=n).astype(float) if weighted else np.ones(n)
    if family == "poisson":
        mu_true = rng.uniform(0.2, 2.5, n)
        mu_hat = rng.uniform(0.2, 2.5, n)
    elif family == "gamma":
        mu_true = rng.uniform(0.5, 3.0, n)
        mu_hat = rng.uniform(0.5, 3.0, n)
    elif family == "normal":
        mu_true = rng.uniform(-2.0, 2.0, n)
        mu_hat = rng.uniform(-2.0, 2.0, n)
    elif family == "binomial":
        mu_true = rng.uniform(0.15, 0.85, n)
        mu_hat = rng.uniform(0.15, 0.85, n)
    else:
        mu_true = rng.uniform(0.5, 3.0, n)
        mu_hat = rng.uniform(0.5, 3.0, n)
    y = fam.sample(mu_true, v, 1.0, rng)
    return ec.TestSample(fam, 1.0, y, mu_hat, v)


def poisson_portfolio(rng, n, slope=1.0):
    """Paper-style claim-frequency portfolio with the given miscalibration."""
    cfg = ec.ScenarioConfig(n=n, slope=slope)
    mu_star = ec.generate_true_means(cfg, rng)
    mu_hat = ec.apply_miscalibration(mu_star, slope, cfg.mu_bar)
    y = rng.poisson(mu_star).astype(float)
    return ec.TestSample("poisson", 1.0, y, mu_hat)


def trial_rng(*keys):
    return child_rng(*keys)
