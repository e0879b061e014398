"""Monte Carlo studies of the calibration tests on synthetic portfolios.

The data generator mimics an insurance claim-frequency setting: true annual
frequencies are right-skewed Beta(1.5, 5) draws mapped into [0.02, 0.25],
responses are Poisson with unit exposure by default, and miscalibration is
introduced by shrinking the true means toward the pivot 0.075 with a slope
in {1.0, 0.9, 0.8, 0.7} (slope 1 means calibrated predictions).

Every trial is driven by its own RNG stream keyed by (seed, cell, trial), so
study cells are independently reproducible and results do not depend on how
the trial loop is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._io import csv_text, write_csv, write_json
from ._rng import check_seed, child_rng
from .classical import log_lrs, lrt_test
from .exceptions import ConfigError, InsufficientData
from .families import TestSample, get_family
from .universal import DEFAULT_T_GRID, SplitConfig, subsampled_test

DEFAULT_SLOPES = (1.0, 0.9, 0.8, 0.7)

#: OLS slope between log statistics predicted for Gaussian models.
RELATION_SLOPE_REFERENCE = 3.0 / 5.0


@dataclass(frozen=True)
class ScenarioConfig:
    """One synthetic-portfolio scenario: sample size and miscalibration slope."""

    n: int
    slope: float = 1.0
    mu_min: float = 0.02
    mu_max: float = 0.25
    beta_a: float = 1.5
    beta_b: float = 5.0
    mu_bar: float = 0.075
    family: str = "poisson"
    phi: float = 1.0
    v: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("scenario sample size must be at least 2")
        if not self.mu_min < self.mu_bar < self.mu_max:
            raise ConfigError("need mu_min < mu_bar < mu_max")
        if self.beta_a <= 0.0 or self.beta_b <= 0.0:
            raise ConfigError("beta shape parameters must be positive")
        if self.phi <= 0.0 or self.v <= 0.0:
            raise ConfigError("phi and v must be positive")


@dataclass(frozen=True)
class TestSpec:
    """A named test to run on each simulated sample.

    ``kind`` selects the statistic: ``lrt`` (classical bootstrap test),
    ``split``, ``power`` (requires ``t``), ``mean_power`` or ``max_power``;
    ``b`` is the number of sub-sample partitions for the universal kinds and
    ``n_boot`` the bootstrap size for the classical one.  With
    ``use_true_means`` the isotonic estimate is replaced by the true
    canonical parameters (the oracle variant).
    """

    name: str
    kind: str = "split"
    s: float = 0.5
    b: int = 1
    t: float | None = None
    t_grid: tuple = DEFAULT_T_GRID
    alpha: float = 0.05
    stop_at_crossing: bool = False
    n_boot: int = 500
    use_true_means: bool = False

    def __post_init__(self):
        if self.kind not in ("lrt", "split", "power", "mean_power", "max_power"):
            raise ConfigError(f"unknown test kind {self.kind!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.kind == "power" and self.t is None:
            raise ConfigError("kind='power' requires t")
        if self.kind == "lrt" and self.use_true_means:
            raise ConfigError("use_true_means applies to split kinds only")


@dataclass(frozen=True)
class TestOutcome:
    """Decision and statistic of one test on one simulated sample."""

    name: str
    reject: bool
    log_statistic: float
    b_used: int | None = None
    p_value: float | None = None


def generate_true_means(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """True means: Beta(a, b) draws mapped affinely into [mu_min, mu_max]."""
    r = rng.beta(config.beta_a, config.beta_b, size=config.n)
    return config.mu_min + r * (config.mu_max - config.mu_min)


def apply_miscalibration(true_means, slope: float, mu_bar: float, family=None) -> np.ndarray:
    """Shrink true means toward the pivot: ``mu_bar + slope * (mu - mu_bar)``."""
    out = mu_bar + slope * (np.asarray(true_means, dtype=np.float64) - mu_bar)
    if family is not None:
        get_family(family)._check_mean(out)
    return out


def _generate_sample(config: ScenarioConfig, rng: np.random.Generator):
    fam = get_family(config.family)
    mu_star = generate_true_means(config, rng)
    mu_hat = apply_miscalibration(mu_star, config.slope, config.mu_bar, family=fam)
    y = fam.sample(mu_star, config.v, config.phi, rng)
    sample = TestSample(
        fam, config.phi, y, mu_hat, np.full(config.n, float(config.v))
    )
    return sample, mu_star


def _run_test(sample, mu_star, spec: TestSpec, seed: int) -> TestOutcome:
    if spec.kind == "lrt":
        res = lrt_test(sample, spec.alpha, spec.n_boot, seed)
        return TestOutcome(
            name=spec.name,
            reject=res.reject,
            log_statistic=res.log_lrs,
            p_value=res.p_value,
        )
    cfg = SplitConfig(
        s=spec.s,
        b_max=spec.b,
        t_grid=spec.t_grid,
        alpha=spec.alpha,
        stop_at_crossing=spec.stop_at_crossing,
        seed=seed,
    )
    xi_true = None
    if spec.use_true_means:
        xi_true = sample.family._theta_of_mean(np.asarray(mu_star, dtype=np.float64))
    report = subsampled_test(sample, cfg, kind=spec.kind, t=spec.t, xi_true=xi_true)
    return TestOutcome(
        name=spec.name,
        reject=report.reject,
        log_statistic=report.log_statistic,
        b_used=report.b_used,
    )


def run_trial(config: ScenarioConfig, tests, rng: np.random.Generator) -> list[TestOutcome]:
    """Simulate one portfolio and run every requested test on it.

    Data are drawn from ``rng`` first; each test then gets its own integer
    seed drawn from the same stream, so the whole trial is reproducible from
    the generator state.
    """
    sample, mu_star = _generate_sample(config, rng)
    outcomes = []
    for spec in tests:
        test_seed = int(rng.integers(0, 2**62))
        outcomes.append(_run_test(sample, mu_star, spec, test_seed))
    return outcomes


@dataclass(frozen=True)
class StudyCell:
    """Power estimate of one (scenario, test) cell."""

    n: int
    slope: float
    test: str
    s: float | None
    b: int | None
    power: float
    se: float
    e_power: float
    n_trials: int


@dataclass(frozen=True)
class StudyResult:
    """Estimated power / e-power over a scenario-by-test grid."""

    cells: tuple[StudyCell, ...]

    _HEADER = ("n", "slope", "test", "s", "B", "power", "se", "e_power", "n_trials")

    def _rows(self):
        for c in self.cells:
            yield (c.n, c.slope, c.test, c.s, c.b, c.power, c.se, c.e_power, c.n_trials)

    def to_csv(self, dest) -> None:
        write_csv(dest, self._HEADER, self._rows())

    def csv_text(self) -> str:
        return csv_text(self._HEADER, self._rows())

    def to_json(self, dest) -> None:
        write_json(dest, [dict(zip(self._HEADER, row)) for row in self._rows()])

    def cell(self, n: int, slope: float, test: str) -> StudyCell:
        for c in self.cells:
            if c.n == n and c.slope == slope and c.test == test:
                return c
        raise KeyError(f"no cell (n={n}, slope={slope}, test={test!r})")

    def summary_rows(self, value: str = "power"):
        """Pivot to one row per (n, test) with one column per slope."""
        slopes = sorted({c.slope for c in self.cells}, reverse=True)
        keys = []
        for c in self.cells:
            if (c.n, c.test) not in keys:
                keys.append((c.n, c.test))
        header = ["n", "test"] + [f"slope={s:g}" for s in slopes]
        rows = []
        for n, test in keys:
            row = [n, test]
            for s in slopes:
                try:
                    row.append(getattr(self.cell(n, s, test), value))
                except KeyError:
                    row.append(None)
            rows.append(row)
        return header, rows


def power_study(scenarios, tests, n_trials: int, seed: int) -> StudyResult:
    """Estimate power and e-power on a scenario-by-test grid.

    All tests of a scenario share its simulated samples (as in the source
    study); scenarios are independent cells.  Per-trial streams are keyed by
    ``(seed, scenario_index, trial_index)``.
    """
    if n_trials < 1:
        raise ConfigError("n_trials must be at least 1")
    seed = check_seed(seed)
    tests = list(tests)
    cells = []
    for ci, scenario in enumerate(scenarios):
        rejects = np.zeros(len(tests), dtype=np.int64)
        log_stats = np.zeros((len(tests), n_trials), dtype=np.float64)
        for trial in range(n_trials):
            rng = child_rng(seed, ci, trial)
            for j, outcome in enumerate(run_trial(scenario, tests, rng)):
                rejects[j] += outcome.reject
                log_stats[j, trial] = outcome.log_statistic
        for j, spec in enumerate(tests):
            p = rejects[j] / n_trials
            cells.append(
                StudyCell(
                    n=scenario.n,
                    slope=scenario.slope,
                    test=spec.name,
                    s=None if spec.kind == "lrt" else spec.s,
                    b=None if spec.kind == "lrt" else spec.b,
                    power=float(p),
                    se=float(math.sqrt(p * (1.0 - p) / n_trials)),
                    e_power=float(log_stats[j].mean()),
                    n_trials=n_trials,
                )
            )
    return StudyResult(cells=tuple(cells))


@dataclass(frozen=True, eq=False)
class CrossingStudy:
    """First-crossing behaviour of a stop-at-crossing sub-sampled test."""

    b_used: np.ndarray
    crossed: np.ndarray
    b_max: int
    n_trials: int

    @property
    def power(self) -> float:
        return float(self.crossed.mean())

    def histogram(self):
        """(b, count) pairs of the first-crossing index among crossing trials."""
        crossing = self.b_used[self.crossed]
        if crossing.size == 0:
            return np.array([], dtype=np.int64), np.array([], dtype=np.int64)
        values, counts = np.unique(crossing, return_counts=True)
        return values.astype(np.int64), counts.astype(np.int64)

    def to_csv(self, dest) -> None:
        values, counts = self.histogram()
        write_csv(dest, ["b", "count"], zip(map(int, values), map(int, counts)))


def crossing_histogram(config: ScenarioConfig, spec: TestSpec,
                       n_trials: int, seed: int) -> CrossingStudy:
    """Distribution of the number of sub-samples until the threshold crossing.

    ``spec`` must have ``stop_at_crossing=True``; ``spec.b`` bounds the wait.
    Power is the fraction of trials that cross within the bound.
    """
    if not spec.stop_at_crossing:
        raise ConfigError("crossing_histogram needs a stop_at_crossing test spec")
    if spec.kind == "lrt":
        raise ConfigError("crossing_histogram applies to sub-sampled kinds")
    if n_trials < 1:
        raise ConfigError("n_trials must be at least 1")
    seed = check_seed(seed)
    b_used = np.empty(n_trials, dtype=np.int64)
    crossed = np.empty(n_trials, dtype=bool)
    for trial in range(n_trials):
        rng = child_rng(seed, trial)
        outcome = run_trial(config, [spec], rng)[0]
        b_used[trial] = outcome.b_used
        crossed[trial] = outcome.reject
    b_used.setflags(write=False)
    crossed.setflags(write=False)
    return CrossingStudy(b_used=b_used, crossed=crossed, b_max=spec.b, n_trials=n_trials)


@dataclass(frozen=True, eq=False)
class RelationStudy:
    """Per-trial classical and sub-sampled split log statistics plus OLS slope."""

    slopes: np.ndarray
    log_lrt: np.ndarray
    log_subsplit: np.ndarray
    fitted_slope: float
    slope_reference: float
    per_slope: dict

    def to_csv(self, dest) -> None:
        write_csv(
            dest,
            ["slope", "log_lrt", "log_subsplit"],
            zip(map(float, self.slopes), map(float, self.log_lrt),
                map(float, self.log_subsplit)),
        )

    def to_json(self, dest) -> None:
        write_json(
            dest,
            {
                "fitted_slope": self.fitted_slope,
                "slope_reference": self.slope_reference,
                "per_slope": {repr(k): v for k, v in self.per_slope.items()},
                "n_trials": int(self.log_lrt.size),
            },
        )


def lrs_relation_study(config: ScenarioConfig, n_trials: int, seed: int,
                       b: int = 1000, s: float = 0.5,
                       slopes=DEFAULT_SLOPES) -> RelationStudy:
    """Relate the sub-sampled split LRS to the classical LRS on the log scale.

    Trials are spread round-robin over ``slopes`` (the pooled scatter is what
    the fitted OLS slope summarizes; per-slope fits are reported as
    supplementary output).  The Gaussian-theory reference slope 3/5 is
    attached as metadata.
    """
    if n_trials < 2:
        raise InsufficientData("the relation study needs at least 2 trials")
    seed = check_seed(seed)
    slopes = tuple(slopes)
    slope_col = np.empty(n_trials, dtype=np.float64)
    x = np.empty(n_trials, dtype=np.float64)
    y = np.empty(n_trials, dtype=np.float64)
    for trial in range(n_trials):
        slope = slopes[trial % len(slopes)]
        scenario = replace(config, slope=slope)
        rng = child_rng(seed, trial)
        sample, _ = _generate_sample(scenario, rng)
        x[trial] = log_lrs(sample)
        cfg = SplitConfig(s=s, b_max=b, seed=int(rng.integers(0, 2**62)))
        y[trial] = subsampled_test(sample, cfg, kind="split").log_statistic
        slope_col[trial] = slope
    fitted = float(np.polyfit(x, y, 1)[0])
    per_slope = {}
    for slope in slopes:
        mask = slope_col == slope
        if np.count_nonzero(mask) >= 2:
            per_slope[slope] = float(np.polyfit(x[mask], y[mask], 1)[0])
    for arr in (slope_col, x, y):
        arr.setflags(write=False)
    return RelationStudy(
        slopes=slope_col,
        log_lrt=x,
        log_subsplit=y,
        fitted_slope=fitted,
        slope_reference=RELATION_SLOPE_REFERENCE,
        per_slope=per_slope,
    )
