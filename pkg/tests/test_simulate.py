"""Synthetic-portfolio generation and the Monte Carlo study drivers."""

import io

import numpy as np
import pytest

import edfcalib as ec
from edfcalib import ConfigError, DomainError, InsufficientData
from helpers import trial_rng


def test_generate_true_means_range_and_moments():
    cfg = ec.ScenarioConfig(n=1_000_000)
    mu = ec.generate_true_means(cfg, trial_rng(60))
    assert mu.min() >= 0.02 and mu.max() <= 0.25
    # Beta(1.5, 5) mean mapped into the range: 0.02 + (1.5/6.5) * 0.23
    se = mu.std() / np.sqrt(mu.size)
    assert abs(mu.mean() - 0.07307692307692308) <= 3 * se
    # right skew
    assert np.median(mu) < mu.mean()


def test_apply_miscalibration():
    mu = np.array([0.02, 0.075, 0.25])
    np.testing.assert_allclose(ec.apply_miscalibration(mu, 1.0, 0.075), mu,
                               rtol=1e-15)
    out = ec.apply_miscalibration(mu, 0.7, 0.075)
    assert out[1] == 0.075
    assert out[2] == pytest.approx(0.1975, rel=1e-12)
    with pytest.raises(DomainError):
        ec.apply_miscalibration(mu, 4.0, 0.075, family="poisson")


def test_scenario_validation():
    with pytest.raises(ConfigError):
        ec.ScenarioConfig(n=1)
    with pytest.raises(ConfigError):
        ec.ScenarioConfig(n=100, mu_min=0.1, mu_bar=0.05, mu_max=0.3)
    with pytest.raises(ConfigError):
        ec.ScenarioConfig(n=100, beta_a=0.0)
    with pytest.raises(ConfigError):
        ec.TestSpec(name="x", kind="bogus")
    with pytest.raises(ConfigError):
        ec.TestSpec(name="x", kind="power")
    with pytest.raises(ConfigError):
        ec.TestSpec(name="x", kind="lrt", use_true_means=True)


def test_run_trial_structure_and_determinism():
    cfg = ec.ScenarioConfig(n=500, slope=0.8)
    tests = [
        ec.TestSpec(name="split", kind="split", b=5),
        ec.TestSpec(name="lrt", kind="lrt", n_boot=100),
        ec.TestSpec(name="oracle", kind="split", b=2, use_true_means=True),
    ]
    out1 = ec.run_trial(cfg, tests, trial_rng(61))
    out2 = ec.run_trial(cfg, tests, trial_rng(61))
    assert [o.name for o in out1] == ["split", "lrt", "oracle"]
    assert out1 == out2
    split, lrt, oracle = out1
    assert split.b_used == 5 and split.p_value is None
    assert lrt.b_used is None and 0.0 < lrt.p_value <= 1.0
    assert np.isfinite(oracle.log_statistic)


def test_type_one_error_at_small_scale():
    cfg = ec.ScenarioConfig(n=300, slope=1.0)
    tests = [
        ec.TestSpec(name="lrt", kind="lrt", n_boot=100),
        ec.TestSpec(name="subsplit", kind="split", b=20),
    ]
    result = ec.power_study([cfg], tests, n_trials=200, seed=62)
    lrt = result.cell(300, 1.0, "lrt")
    sub = result.cell(300, 1.0, "subsplit")
    # classical test holds its level, the universal one stays below it
    assert abs(lrt.power - 0.05) <= 0.05
    assert sub.power <= 0.05


def test_power_study_result_table():
    scenarios = [ec.ScenarioConfig(n=400, slope=s) for s in (1.0, 0.6)]
    tests = [ec.TestSpec(name="split_b10", kind="split", b=10)]
    result = ec.power_study(scenarios, tests, n_trials=30, seed=63)
    assert len(result.cells) == 2
    cell = result.cell(400, 0.6, "split_b10")
    assert 0.0 <= cell.power <= 1.0
    assert cell.n_trials == 30
    assert cell.se == pytest.approx(
        np.sqrt(cell.power * (1 - cell.power) / 30), rel=1e-12
    )
    text = result.csv_text()
    header = text.splitlines()[0]
    assert header == "n,slope,test,s,B,power,se,e_power,n_trials"
    assert len(text.strip().splitlines()) == 3

    buf = io.StringIO()
    result.to_csv(buf)
    assert buf.getvalue() == text

    sh, rows = result.summary_rows("power")
    assert sh == ["n", "test", "slope=1", "slope=0.6"]
    assert len(rows) == 1


def test_power_study_deterministic():
    scenarios = [ec.ScenarioConfig(n=300, slope=0.7)]
    tests = [ec.TestSpec(name="t", kind="mean_power", b=3)]
    a = ec.power_study(scenarios, tests, n_trials=20, seed=64)
    b = ec.power_study(scenarios, tests, n_trials=20, seed=64)
    assert a.csv_text() == b.csv_text()
    c = ec.power_study(scenarios, tests, n_trials=20, seed=65)
    assert a.csv_text() != c.csv_text()


def test_power_monotone_in_n_and_slope():
    scenarios = [
        ec.ScenarioConfig(n=n, slope=s)
        for n in (1500, 4000)
        for s in (1.0, 0.7)
    ]
    tests = [ec.TestSpec(name="split", kind="split", b=40)]
    result = ec.power_study(scenarios, tests, n_trials=150, seed=66)

    def cell(n, s):
        return result.cell(n, s, "split")

    def se(a, b):
        return np.sqrt(a.se**2 + b.se**2)

    # non-decreasing in n at fixed slope, non-increasing in slope at fixed n
    a, b = cell(1500, 0.7), cell(4000, 0.7)
    assert b.power >= a.power - 2 * se(a, b)
    for n in (1500, 4000):
        lo, hi = cell(n, 1.0), cell(n, 0.7)
        assert hi.power >= lo.power - 2 * se(lo, hi)
    # e-power increases with miscalibration as well
    assert cell(4000, 0.7).e_power > cell(4000, 1.0).e_power


def test_power_variants_dominate_split_at_b1():
    scenarios = [ec.ScenarioConfig(n=2000, slope=0.7)]
    tests = [
        ec.TestSpec(name="split", kind="split", b=1),
        ec.TestSpec(name="mean", kind="mean_power", b=1),
        ec.TestSpec(name="max", kind="max_power", b=1),
        ec.TestSpec(name="split_b40", kind="split", b=40),
    ]
    result = ec.power_study(scenarios, tests, n_trials=250, seed=67)
    split = result.cell(2000, 0.7, "split")
    for name in ("mean", "max"):
        variant = result.cell(2000, 0.7, name)
        tol = 2 * np.sqrt(split.se**2 + variant.se**2)
        assert variant.power >= split.power - tol
    sub = result.cell(2000, 0.7, "split_b40")
    assert sub.power >= split.power - 2 * np.sqrt(split.se**2 + sub.se**2)


def test_crossing_histogram():
    cfg = ec.ScenarioConfig(n=2000, slope=0.6)
    spec = ec.TestSpec(name="cross", kind="split", b=60, stop_at_crossing=True)
    study = ec.crossing_histogram(cfg, spec, n_trials=60, seed=68)
    assert study.b_used.shape == (60,)
    assert study.b_max == 60
    values, counts = study.histogram()
    assert counts.sum() == study.crossed.sum()
    assert 0.0 <= study.power <= 1.0
    assert np.all(study.b_used[study.crossed] <= 60)
    buf = io.StringIO()
    study.to_csv(buf)
    assert buf.getvalue().splitlines()[0] == "b,count"

    with pytest.raises(ConfigError):
        ec.crossing_histogram(cfg, ec.TestSpec(name="x", kind="split", b=5),
                              n_trials=5, seed=1)
    with pytest.raises(ConfigError):
        ec.crossing_histogram(
            cfg,
            ec.TestSpec(name="x", kind="lrt", stop_at_crossing=True),
            n_trials=5,
            seed=1,
        )


def test_crossing_rare_under_null():
    cfg = ec.ScenarioConfig(n=1000, slope=1.0)
    spec = ec.TestSpec(name="cross", kind="split", b=40, stop_at_crossing=True)
    study = ec.crossing_histogram(cfg, spec, n_trials=120, seed=69)
    assert study.power <= 0.05 + 2 * np.sqrt(0.05 * 0.95 / 120)


def test_relation_study():
    cfg = ec.ScenarioConfig(n=2000)
    with pytest.raises(InsufficientData):
        ec.lrs_relation_study(cfg, 1, seed=1)
    study = ec.lrs_relation_study(cfg, 40, seed=70, b=50)
    assert study.log_lrt.shape == (40,)
    assert study.log_subsplit.shape == (40,)
    assert set(np.unique(study.slopes)) == {1.0, 0.9, 0.8, 0.7}
    assert study.slope_reference == pytest.approx(0.6)
    assert np.isfinite(study.fitted_slope)
    assert study.fitted_slope > 0.0
    assert set(study.per_slope) == {1.0, 0.9, 0.8, 0.7}
    buf = io.StringIO()
    study.to_csv(buf)
    assert buf.getvalue().splitlines()[0] == "slope,log_lrt,log_subsplit"
    assert len(buf.getvalue().strip().splitlines()) == 41
