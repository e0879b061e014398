"""Classical LRS, parametric bootstrap test and reliability diagrams."""

import io

import numpy as np
import pytest

import edfcalib as ec
from edfcalib import ConfigError
from helpers import poisson_portfolio, random_sample, trial_rng

ALL_FAMILIES = ["poisson", "gamma", "normal", "binomial", "inverse_gaussian"]


def test_log_lrs_zero_on_exactly_calibrated_monotone_data():
    s = ec.TestSample("normal", 1.0, [1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert ec.log_lrs(s) == 0.0


def test_log_lrs_hand_computed_five_points():
    # PAV of y=(0,1,0,2,1) pools to (0, .5, .5, 1.5, 1.5); first block clamps
    s = ec.TestSample("poisson", 1.0, [0, 1, 0, 2, 1], [0.2, 0.4, 0.5, 0.6, 0.8])
    eps = 1e-12
    fit = np.array([eps, 0.5, 0.5, 1.5, 1.5])
    y = s.y
    mu = s.mu_hat
    want = float(np.sum(y * (np.log(fit) - np.log(mu)) - (fit - mu)))
    assert ec.log_lrs(s) == pytest.approx(want, rel=1e-12)
    assert ec.log_lrs(s) == pytest.approx(1.1843336744838941, rel=1e-12)


@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_log_lrs_nonnegative_and_bridges_to_mcb(family):
    rng = trial_rng(21)
    for _ in range(10):
        s = random_sample(family, rng, n=int(rng.integers(5, 60)))
        val = ec.log_lrs(s)
        assert val >= -1e-10
        assert val == pytest.approx(
            s.total_weight * ec.decompose(s).mcb, abs=1e-8 * max(1.0, abs(val))
        )


def test_log_lrs_handles_tied_predictions():
    s = ec.TestSample("poisson", 1.0, [0, 3, 1, 2], [0.5, 0.5, 0.9, 0.9])
    # tied groups pool to means (1.5, 1.5); already monotone
    fit = np.array([1.5, 1.5, 1.5, 1.5])
    want = float(np.sum(s.y * (np.log(fit) - np.log(s.mu_hat)) - (fit - s.mu_hat)))
    assert ec.log_lrs(s) == pytest.approx(want, rel=1e-12)


def test_bootstrap_null_shape_and_determinism():
    rng = trial_rng(22)
    s = poisson_portfolio(rng, 300)
    boot = ec.bootstrap_null(s, 100, seed=5)
    assert boot.n_boot == 100
    assert boot.statistics.shape == (100,)
    assert np.all(np.diff(boot.statistics) >= 0.0)
    again = ec.bootstrap_null(s, 100, seed=5)
    np.testing.assert_array_equal(boot.statistics, again.statistics)
    other = ec.bootstrap_null(s, 100, seed=6)
    assert not np.array_equal(boot.statistics, other.statistics)
    with pytest.raises(ConfigError):
        ec.bootstrap_null(s, 99, seed=5)


def test_lrt_test_contract():
    rng = trial_rng(23)
    s = poisson_portfolio(rng, 400, slope=0.6)
    res = ec.lrt_test(s, alpha=0.05, n_boot=120, seed=11)
    boot = ec.bootstrap_null(s, 120, seed=11)
    observed = ec.log_lrs(s)
    assert res.log_lrs == observed
    # nearest-rank (1 - alpha) quantile of the sorted draws
    k = int(np.ceil(0.95 * 120))
    assert res.critical_value == boot.statistics[k - 1]
    want_p = (1 + np.count_nonzero(boot.statistics >= observed)) / 121
    assert res.p_value == pytest.approx(want_p, rel=1e-15)
    assert res.reject == (observed > res.critical_value)
    with pytest.raises(ConfigError):
        ec.lrt_test(s, alpha=1.5, n_boot=120, seed=1)


def test_lrt_level_calibration_under_null():
    # level of the bootstrap test under its own null, 600 outer trials
    rejections = 0
    trials = 600
    for i in range(trials):
        rng = trial_rng(24, i)
        s = poisson_portfolio(rng, 250, slope=1.0)
        res = ec.lrt_test(s, alpha=0.05, n_boot=100, seed=int(rng.integers(2**32)))
        rejections += res.reject
    rate = rejections / trials
    assert abs(rate - 0.05) <= 0.02


def test_pvalue_uniform_under_null_ks():
    # Kolmogorov-Smirnov distance of null p-values to U(0,1) below 0.05
    trials = 1000
    pvals = np.empty(trials)
    for i in range(trials):
        rng = trial_rng(25, i)
        s = poisson_portfolio(rng, 2000, slope=1.0)
        res = ec.lrt_test(s, alpha=0.05, n_boot=500, seed=int(rng.integers(2**32)))
        pvals[i] = res.p_value
    grid = np.sort(pvals)
    ecdf_hi = np.arange(1, trials + 1) / trials
    ecdf_lo = np.arange(0, trials) / trials
    ks = max(np.abs(ecdf_hi - grid).max(), np.abs(grid - ecdf_lo).max())
    assert ks < 0.05


def test_reliability_diagram_constant_predictions():
    s = ec.TestSample("poisson", 1.0, [0, 1, 2, 1], [0.9, 0.9, 0.9, 0.9])
    d = ec.reliability_diagram(s, level=0.9, n_boot=200, seed=4)
    assert d.mu_hat.shape == (1,)
    assert d.mu_hat[0] == 0.9
    assert d.mu_rc[0] == 1.0  # plain mean of the responses
    assert d.band_low[0] <= d.band_high[0]


def test_reliability_diagram_structure_and_determinism():
    rng = trial_rng(26)
    s = poisson_portfolio(rng, 500)
    d = ec.reliability_diagram(s, level=0.95, n_boot=150, seed=9)
    assert np.all(np.diff(d.mu_hat) > 0.0)
    assert np.all(np.diff(d.mu_rc) >= 0.0)
    assert np.all(d.band_low <= d.band_high)
    again = ec.reliability_diagram(s, level=0.95, n_boot=150, seed=9)
    np.testing.assert_array_equal(d.band_low, again.band_low)
    np.testing.assert_array_equal(d.band_high, again.band_high)

    buf = io.StringIO()
    d.to_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "mu_hat,mu_rc,band_lo,band_hi"
    assert len(lines) == 1 + d.mu_hat.size
    first = [float(tok) for tok in lines[1].split(",")]
    assert first[0] == d.mu_hat[0]

    with pytest.raises(ConfigError):
        ec.reliability_diagram(s, level=1.2, n_boot=150, seed=9)


def test_reliability_diagram_band_coverage_under_null():
    # point-wise band: well-calibrated data should sit inside most of it
    # violations are correlated across neighbours (isotonic blocks move as
    # one), so the realized inside-fraction scatters around the level
    rng = trial_rng(27)
    s = poisson_portfolio(rng, 3000, slope=1.0)
    d = ec.reliability_diagram(s, level=0.95, n_boot=200, seed=13)
    inside = np.mean((d.mu_rc >= d.band_low) & (d.mu_rc <= d.band_high))
    assert inside >= 0.85


def test_reliability_diagram_reveals_miscalibration():
    # slope 0.7: true conditional means are steeper than the predictions,
    # so the diagram leaves the band at both ends of the mu_hat range
    rng = trial_rng(28)
    s = poisson_portfolio(rng, 10000, slope=0.7)
    d = ec.reliability_diagram(s, level=0.95, n_boot=200, seed=14)
    # predictions are shrunk toward the pivot, so the recalibrated curve is
    # steeper than the diagonal: below it at the low end, above at the top
    k = d.mu_hat.size // 10
    low, high = slice(0, k), slice(-k, None)
    assert np.mean(d.mu_rc[low] < d.mu_hat[low]) > 0.9
    assert np.mean(d.mu_rc[high] > d.mu_hat[high]) > 0.9
    # and it leaves the H0 consistency band over a sizable part of both ends
    # (the very last points carry wide bands, so check the outer deciles)
    assert np.mean(d.mu_rc[low] < d.band_low[low]) > 0.3
    assert np.mean(d.mu_rc[high] > d.band_high[high]) > 0.3
