"""Classical inference: in-sample LRS, parametric bootstrap and CORP bands.

The likelihood-ratio statistic compares the isotonic maximum-likelihood
means against the predicted means on the full sample, so exp(log_lrs) >= 1
by construction.  Its null distribution is intractable in practice and is
estimated by a parametric bootstrap that keeps ``(mu_hat, v)`` fixed and
resamples responses from the family under the null of calibration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from ._io import write_csv
from ._rng import check_seed, child_rng
from .exceptions import ConfigError


def _nearest_rank_index(n: int, q: float) -> int:
    """0-based index of the nearest-rank empirical q-quantile of n sorted draws."""
    k = int(np.ceil(q * n))
    return min(max(k, 1), n) - 1


class _NullWorkspace:
    """Per-sample precomputation reused across bootstrap draws.

    Works at the level of distinct predicted means: observations sharing a
    mu_hat are pooled once, and each draw only recomputes the response
    aggregates, the PAV fit, and two dot products.
    """

    __slots__ = (
        "family", "phi", "mu", "v", "starts", "pav_w",
        "mu_m", "theta_m", "w_m", "const_wk",
    )

    def __init__(self, sample):
        fam, phi = sample.family, sample.phi
        order = sample._order
        self.family = fam
        self.phi = phi
        self.mu = sample.mu_hat[order]
        self.v = sample.v[order]
        same = self.mu[1:] == self.mu[:-1]
        if same.any():
            self.starts = np.flatnonzero(np.concatenate(([True], ~same)))
            sv = np.add.reduceat(self.v, self.starts)
            self.pav_w = sv
            self.mu_m = self.mu[self.starts]
            self.w_m = sv / phi
        else:
            self.starts = None
            uniform = bool(np.all(self.v == self.v[0]))
            self.pav_w = None if uniform else self.v
            self.mu_m = self.mu
            self.w_m = self.v / phi
        self.theta_m = fam._theta_of_mean(self.mu_m)
        self.const_wk = float(np.dot(self.w_m, fam._kappa(self.theta_m)))

    def sorted_y(self, sample) -> np.ndarray:
        return sample.y[sample._order]

    def draw_responses(self, rng) -> np.ndarray:
        return self.family.sample(self.mu, self.v, self.phi, rng)

    def merge(self, y_sorted: np.ndarray):
        """Aggregate responses per distinct mu_hat: (pav response, wy_m)."""
        if self.starts is None:
            wy_m = self.v * y_sorted / self.phi
            return y_sorted, wy_m
        sv_y = np.add.reduceat(self.v * y_sorted, self.starts)
        return sv_y / self.pav_w, sv_y / self.phi

    def fitted_means(self, y_m: np.ndarray) -> np.ndarray:
        """Isotonic fitted mean per distinct mu_hat (unclamped)."""
        res = isotonic_regression(y_m, weights=self.pav_w)
        return np.asarray(res.x)

    def log_lrs(self, y_sorted: np.ndarray) -> float:
        y_m, wy_m = self.merge(y_sorted)
        res = isotonic_regression(y_m, weights=self.pav_w)
        starts = res.blocks[:-1]
        sizes = np.diff(res.blocks)
        bv = self.family.clamp_mean(np.asarray(res.x)[starts])
        xi_b = self.family._theta_of_mean(bv)
        kxi_b = self.family._kappa(xi_b)
        xi = np.repeat(xi_b, sizes)
        kxi = np.repeat(kxi_b, sizes)
        return float(
            np.dot(wy_m, xi) - np.dot(wy_m, self.theta_m)
            - np.dot(self.w_m, kxi) + self.const_wk
        )


def log_lrs(sample) -> float:
    """Log likelihood-ratio statistic of the full-sample isotonic fit.

    The alternative means are the isotonic recalibration of the sample
    (clamped inside the mean domain before the canonical conversion), the
    null means are ``mu_hat``.  Nonnegative up to roundoff, and equal to
    ``total_weight * decompose(sample).mcb``.
    """
    ws = _NullWorkspace(sample)
    return ws.log_lrs(ws.sorted_y(sample))


@dataclass(frozen=True, eq=False)
class BootstrapNull:
    """Sorted bootstrap draws of the log-LRS under the calibration null."""

    statistics: np.ndarray
    n_boot: int
    seed: int

    def critical_value(self, alpha: float) -> float:
        """Nearest-rank empirical (1 - alpha) quantile of the null draws."""
        return float(self.statistics[_nearest_rank_index(self.n_boot, 1.0 - alpha)])


@dataclass(frozen=True)
class LrtResult:
    log_lrs: float
    critical_value: float
    p_value: float
    reject: bool
    alpha: float
    n_boot: int
    seed: int


def bootstrap_null(sample, n_boot: int, seed: int) -> BootstrapNull:
    """Parametric bootstrap of the log-LRS under the null of calibration.

    Keeps ``(mu_hat, v)`` fixed, redraws responses from the family with those
    means for ``b = 1..n_boot`` using streams derived from ``(seed, b)``, and
    refits the isotonic regression each time.  Deterministic for fixed seed,
    regardless of how calls are scheduled.
    """
    if n_boot < 100:
        raise ConfigError("n_boot must be at least 100")
    seed = check_seed(seed)
    ws = _NullWorkspace(sample)
    stats = np.empty(n_boot, dtype=np.float64)
    for b in range(1, n_boot + 1):
        y_star = ws.draw_responses(child_rng(seed, b))
        stats[b - 1] = ws.log_lrs(y_star)
    stats.sort()
    stats.setflags(write=False)
    return BootstrapNull(statistics=stats, n_boot=n_boot, seed=seed)


def lrt_test(sample, alpha: float, n_boot: int, seed: int) -> LrtResult:
    """Bootstrap likelihood-ratio test of mean calibration.

    Rejects when the observed log-LRS exceeds the empirical ``1 - alpha``
    quantile of the bootstrap null.  The p-value uses the finite-sample
    correction ``(1 + #{draws >= observed}) / (n_boot + 1)``, which keeps the
    randomized bootstrap test valid for any ``n_boot``.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    boot = bootstrap_null(sample, n_boot, seed)
    observed = log_lrs(sample)
    critical = boot.critical_value(alpha)
    p_value = (1 + int(np.count_nonzero(boot.statistics >= observed))) / (n_boot + 1)
    return LrtResult(
        log_lrs=observed,
        critical_value=critical,
        p_value=float(p_value),
        reject=bool(observed > critical),
        alpha=float(alpha),
        n_boot=int(n_boot),
        seed=seed,
    )


@dataclass(frozen=True, eq=False)
class ReliabilityDiagram:
    """CORP reliability-diagram data with point-wise consistency bands.

    One row per distinct predicted mean: the recalibrated mean from the
    observed responses and nearest-rank bootstrap quantiles of recalibrated
    means simulated under the null of calibration.
    """

    mu_hat: np.ndarray
    mu_rc: np.ndarray
    band_low: np.ndarray
    band_high: np.ndarray
    level: float
    n_boot: int
    seed: int

    def to_csv(self, dest) -> None:
        write_csv(
            dest,
            ["mu_hat", "mu_rc", "band_lo", "band_hi"],
            zip(
                map(float, self.mu_hat),
                map(float, self.mu_rc),
                map(float, self.band_low),
                map(float, self.band_high),
            ),
        )


def reliability_diagram(sample, level: float, n_boot: int, seed: int) -> ReliabilityDiagram:
    """CORP diagram points plus a point-wise H0 consistency band.

    The band stores, per distinct ``mu_hat``, the nearest-rank
    ``(1 - level)/2`` and ``(1 + level)/2`` quantiles of recalibrated means
    across bootstrap resamples drawn exactly as in :func:`bootstrap_null`.
    Memory grows as ``n_boot * n_distinct`` doubles.
    """
    if not 0.0 < level < 1.0:
        raise ConfigError("level must lie in (0, 1)")
    if n_boot < 1:
        raise ConfigError("n_boot must be at least 1")
    seed = check_seed(seed)
    ws = _NullWorkspace(sample)
    y_m, _ = ws.merge(ws.sorted_y(sample))
    observed_rc = ws.fitted_means(y_m)

    draws = np.empty((n_boot, ws.mu_m.size), dtype=np.float64)
    for b in range(1, n_boot + 1):
        y_star = ws.draw_responses(child_rng(seed, b))
        y_sm, _ = ws.merge(y_star)
        draws[b - 1] = ws.fitted_means(y_sm)
    draws.sort(axis=0)
    lo = _nearest_rank_index(n_boot, (1.0 - level) / 2.0)
    hi = _nearest_rank_index(n_boot, (1.0 + level) / 2.0)
    return ReliabilityDiagram(
        mu_hat=ws.mu_m.copy(),
        mu_rc=observed_rc,
        band_low=draws[lo].copy(),
        band_high=draws[hi].copy(),
        level=float(level),
        n_boot=int(n_boot),
        seed=seed,
    )
