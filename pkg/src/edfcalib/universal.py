"""Universal inference for mean calibration: split LRTs and e-power tools.

The split statistic fits an isotonic regression on a random training part
``D1`` and evaluates an out-of-sample likelihood ratio on the validation
part ``D0``.  Under the null of calibration each such statistic is an exact
e-variable (unit expectation), so comparing it, or the running average over
``B`` independent partitions, against the universal critical value
``1 / alpha`` controls the type I error on finite samples without any
resampling of the null distribution.

Power-family variants raise each observation factor to ``t in (0, 1]`` with
the exact mean-one correction through the cumulant; averaging over a grid of
``t`` keeps the e-variable property, while the maximum over the grid keeps
type I control for a single partition only (the factors are comonotone given
the partition) and loses the formal guarantee once sub-sampled.

All likelihood-ratio arithmetic is carried in log space; sub-sample averages
accumulate through ``logaddexp``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from ._rng import check_seed, child_rng
from .exceptions import ConfigError, DegenerateSplit, DomainError
from .families import get_family
from .isotonic import _merge_ties_sorted

#: Ten uniform powers with 1 included, the default grid for mean/max variants.
DEFAULT_T_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)

_KINDS = ("split", "power", "mean_power", "max_power")


@dataclass(frozen=True)
class SplitConfig:
    """Configuration of (sub-sampled) split tests.

    ``s`` is the fraction of observations assigned to the validation part
    ``D0`` (size ``floor(n * s)``); ``b_max`` bounds the number of
    independent partitions; ``t_grid`` feeds the power variants and must
    contain 1 when they are used; ``stop_at_crossing`` stops the sub-sampling
    at the first ``b`` whose running average meets the threshold.
    """

    s: float = 0.5
    b_max: int = 1
    t_grid: tuple = DEFAULT_T_GRID
    alpha: float = 0.05
    stop_at_crossing: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ConfigError("split ratio s must lie in (0, 1)")
        if not (isinstance(self.b_max, (int, np.integer)) and self.b_max >= 1):
            raise ConfigError("b_max must be an integer >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        grid = tuple(float(t) for t in self.t_grid)
        if any(not 0.0 < t <= 1.0 for t in grid):
            raise ConfigError("every t in t_grid must lie in (0, 1]")
        object.__setattr__(self, "t_grid", grid)
        object.__setattr__(self, "seed", check_seed(self.seed))

    @property
    def threshold(self) -> float:
        return 1.0 / self.alpha


@dataclass(frozen=True, eq=False)
class EvalueReport:
    """Result of a (sub-sampled) split test.

    ``log_trace[b-1]`` is the log of the running average of the per-partition
    statistics after ``b`` sub-samples; ``b_used`` is the first crossing index
    under ``stop_at_crossing``, else ``b_max``.  ``is_evalue`` is False only
    for the sub-sampled max-power variant, whose rejection rule carries no
    formal type I guarantee.
    """

    kind: str
    log_trace: np.ndarray
    b_used: int
    threshold: float
    reject: bool
    is_evalue: bool

    @property
    def log_statistic(self) -> float:
        return float(self.log_trace[-1])

    @property
    def statistic(self) -> float:
        return float(np.exp(self.log_trace[-1]))

    def to_dict(self, include_trace: bool = True) -> dict:
        payload = {
            "kind": self.kind,
            "threshold": self.threshold,
            "reject": bool(self.reject),
            "b_used": int(self.b_used),
            "log_statistic": self.log_statistic,
            "is_evalue": bool(self.is_evalue),
        }
        if include_trace:
            payload["log_trace"] = [float(x) for x in self.log_trace]
        return payload

    def to_json(self, include_trace: bool = True) -> str:
        return json.dumps(self.to_dict(include_trace=include_trace))


def split_once(n: int, s: float, rng: np.random.Generator):
    """Random partition of ``range(n)`` into ``(d0, d1)`` index arrays.

    ``d0`` holds ``floor(n * s)`` indices drawn uniformly without
    replacement, ``d1`` the complement.  Index order within each part is
    arbitrary but deterministic for a given generator state.
    """
    if not 0.0 < s < 1.0:
        raise ConfigError("split ratio s must lie in (0, 1)")
    n0 = math.floor(n * s)
    if n0 < 1 or n0 > n - 1:
        raise DegenerateSplit(
            f"split of n={n} at s={s} leaves an empty part (|D0|={n0})"
        )
    keys = rng.random(n)
    idx = np.argpartition(keys, n0)
    return idx[:n0], idx[n0:]


class _SplitWorkspace:
    """Sample arrays sorted by predicted mean, plus per-observation constants.

    Built once per test call so the per-partition work reduces to masked
    gathers, one PAV fit and a few dot products.
    """

    __slots__ = (
        "family", "phi", "n", "mu", "y", "v", "w", "wy",
        "theta", "ktheta", "c0", "inv", "has_ties", "uniform",
        "xi_true", "oracle_split", "_oracle_power",
    )

    def __init__(self, sample, xi_true=None):
        fam, phi = sample.family, sample.phi
        order = sample._order
        self.family = fam
        self.phi = phi
        self.n = sample.n
        self.mu = sample.mu_hat[order]
        self.y = sample.y[order]
        self.v = sample.v[order]
        self.uniform = bool(np.all(self.v == self.v[0]))
        self.w = self.v / phi
        self.wy = self.w * self.y
        self.theta = fam._theta_of_mean(self.mu)
        self.ktheta = fam._kappa(self.theta)
        self.c0 = self.wy * self.theta - self.w * self.ktheta
        self.inv = np.empty(self.n, dtype=np.intp)
        self.inv[order] = np.arange(self.n, dtype=np.intp)
        self.has_ties = bool(np.any(self.mu[1:] == self.mu[:-1]))
        if xi_true is None:
            self.xi_true = None
            self.oracle_split = None
        else:
            xi = np.asarray(xi_true, dtype=np.float64).ravel()
            if xi.shape != (self.n,):
                raise ConfigError("xi_true must hold one canonical parameter per observation")
            fam._check_canonical(xi)
            xi = xi[order]
            kxi = fam._kappa(xi)
            self.xi_true = xi
            self.oracle_split = self.wy * (xi - self.theta) - self.w * (kxi - self.ktheta)
        self._oracle_power = {}

    def _mask0(self, d0) -> np.ndarray:
        """Validation part as a 0/1 vector in sorted order (for dot products)."""
        m0f = np.zeros(self.n, dtype=np.float64)
        m0f[self.inv.take(np.asarray(d0))] = 1.0
        return m0f

    def _fit_d1(self, d1):
        """Isotonic fit on the training part.

        Returns clamped block canonical parameters ``xi_b`` and the block
        index of every observation's predicted mean (prediction through the
        right-continuous step function).
        """
        i1 = np.sort(self.inv.take(np.asarray(d1)))
        y1 = self.y.take(i1)
        r1 = self.mu.take(i1)
        w1 = None if self.uniform else self.v.take(i1)
        if self.has_ties:
            r1, y1, w1, _ = _merge_ties_sorted(r1, y1, w1)
        res = isotonic_regression(y1, weights=w1)
        starts = res.blocks[:-1]
        bv = self.family.clamp_mean(np.asarray(res.x)[starts])
        xi_b = self.family._theta_of_mean(bv)
        pos = np.searchsorted(r1[starts], self.mu, side="right") - 1
        np.maximum(pos, 0, out=pos)
        return xi_b, pos

    # -- statistics over D0 --------------------------------------------------

    def logstat_split(self, d0, d1) -> float:
        """Log split LRS; block-space evaluation of the t = 1 statistic."""
        if self.oracle_split is not None:
            return float(self._mask0(d0) @ self.oracle_split)
        m0f = self._mask0(d0)
        xi_b, pos = self._fit_d1(d1)
        kxi_b = self.family._kappa(xi_b)
        terms = self.wy * xi_b.take(pos)
        terms -= self.w * kxi_b.take(pos)
        terms -= self.c0
        return float(m0f @ terms)

    def _oracle_power_terms(self, t: float) -> np.ndarray:
        terms = self._oracle_power.get(t)
        if terms is None:
            blend = t * self.xi_true + (1.0 - t) * self.theta
            terms = (
                t * self.wy * (self.xi_true - self.theta)
                - self.w * (self.family._kappa(blend) - self.ktheta)
            )
            self._oracle_power[t] = terms
        return terms

    def logstats_power(self, d0, d1, ts) -> np.ndarray:
        """Log split power LRS for each t, sharing one D1 fit."""
        m0f = self._mask0(d0)
        if self.xi_true is not None:
            return np.array(
                [float(m0f @ self._oracle_power_terms(t)) for t in ts]
            )
        xi_b, pos = self._fit_d1(d1)
        xi = xi_b.take(pos)
        a_lin = float(m0f @ (self.wy * (xi - self.theta)))
        out = np.empty(len(ts), dtype=np.float64)
        for j, t in enumerate(ts):
            blend = t * xi + (1.0 - t) * self.theta
            out[j] = t * a_lin - m0f @ (
                self.w * (self.family._kappa(blend) - self.ktheta)
            )
        return out


def _check_partition(sample, partition):
    d0, d1 = partition
    d0 = np.asarray(d0, dtype=np.intp).ravel()
    d1 = np.asarray(d1, dtype=np.intp).ravel()
    n = sample.n
    if d0.size == 0 or d1.size == 0:
        raise DegenerateSplit("both parts of a partition must be non-empty")
    seen = np.zeros(n, dtype=bool)
    for part in (d0, d1):
        if part.min() < 0 or part.max() >= n:
            raise ConfigError("partition indices out of range")
        seen[part] = True
    if d0.size + d1.size != n or not seen.all():
        raise ConfigError("partition must split range(n) into disjoint parts")
    return d0, d1


def log_split_power_lrs(sample, partition, t: float, xi_true=None) -> float:
    """Log split power LRS for one partition and power ``t in (0, 1]``.

    Sums ``(v/phi) * (t*y*(xi-theta) - (kappa(t*xi + (1-t)*theta) - kappa(theta)))``
    over the validation part, with ``xi`` from the isotonic fit on the
    training part (or from ``xi_true`` when given).  ``t = 1`` is exactly the
    split LRS.
    """
    if not 0.0 < t <= 1.0:
        raise ConfigError("t must lie in (0, 1]")
    ws = _SplitWorkspace(sample, xi_true)
    d0, d1 = _check_partition(sample, partition)
    return float(ws.logstats_power(d0, d1, [float(t)])[0])


def log_split_lrs(sample, partition, xi_true=None) -> float:
    """Log split LRS for one partition (out-of-sample likelihood ratio).

    Fits the isotonic regression on ``D1``, predicts alternative means for
    ``D0`` through the step function, clamps them inside the mean domain and
    accumulates the log e-factors over ``D0``.  May be negative.
    """
    return log_split_power_lrs(sample, partition, 1.0, xi_true=xi_true)


def combine(sample, partition, t_grid, mode: str, xi_true=None) -> float:
    """Merge split power statistics over a grid of powers.

    ``mode="mean"`` returns the log of the arithmetic mean of the e-variables
    (computed by log-sum-exp), ``mode="max"`` the log of their maximum.
    """
    grid = tuple(float(t) for t in t_grid)
    if len(grid) == 0:
        raise ConfigError("t_grid must be non-empty")
    if any(not 0.0 < t <= 1.0 for t in grid):
        raise ConfigError("every t in t_grid must lie in (0, 1]")
    if mode not in ("mean", "max"):
        raise ConfigError("mode must be 'mean' or 'max'")
    ws = _SplitWorkspace(sample, xi_true)
    d0, d1 = _check_partition(sample, partition)
    stats = ws.logstats_power(d0, d1, grid)
    return _combine_stats(stats, mode)


def _combine_stats(stats: np.ndarray, mode: str) -> float:
    if mode == "max":
        return float(stats.max())
    m = stats.max()
    return float(m + np.log(np.mean(np.exp(stats - m))))


def _report_kind(kind: str, t, b_max: int) -> str:
    if kind == "split":
        base = "split"
    elif kind == "power":
        base = f"split_power(t={t:g})"
    elif kind == "mean_power":
        base = "mean_power"
    else:
        base = "max_power"
    if b_max > 1:
        return "subsampled_" + base
    return base


def subsampled_test(sample, config: SplitConfig, kind: str = "split",
                    t: float | None = None, xi_true=None) -> EvalueReport:
    """Sub-sampled split test of mean calibration.

    Draws independent partitions ``b = 1..b_max`` (streams keyed by
    ``(seed, b)``), evaluates the chosen per-partition statistic, and tracks
    the running average of the e-variables in log space.  Rejects when the
    final (or, with ``stop_at_crossing``, the first crossing) running average
    reaches ``1 / alpha``.

    ``kind`` is one of ``split``, ``power`` (requires ``t``), ``mean_power``
    or ``max_power``; the power variants use ``config.t_grid``, which must
    contain 1.  ``xi_true`` substitutes known alternative canonical
    parameters for the isotonic estimate (the oracle variant used in
    simulation studies).
    """
    if kind not in _KINDS:
        raise ConfigError(f"unknown statistic kind {kind!r}; choose from {_KINDS}")
    if kind == "power":
        if t is None:
            raise ConfigError("kind='power' requires the power t")
        if not 0.0 < float(t) <= 1.0:
            raise ConfigError("t must lie in (0, 1]")
        t = float(t)
    if kind in ("mean_power", "max_power"):
        if len(config.t_grid) == 0:
            raise ConfigError("power variants need a non-empty t_grid")
        if not any(tv == 1.0 for tv in config.t_grid):
            raise ConfigError("t_grid must contain 1.0 for power variants")

    ws = _SplitWorkspace(sample, xi_true)
    log_threshold = -math.log(config.alpha)
    trace = np.empty(config.b_max, dtype=np.float64)
    acc = -np.inf
    b_used = config.b_max
    for b in range(1, config.b_max + 1):
        rng = child_rng(config.seed, b)
        d0, d1 = split_once(sample.n, config.s, rng)
        if kind == "split":
            log_e = ws.logstat_split(d0, d1)
        elif kind == "power":
            log_e = float(ws.logstats_power(d0, d1, [t])[0])
        else:
            stats = ws.logstats_power(d0, d1, config.t_grid)
            log_e = _combine_stats(stats, "mean" if kind == "mean_power" else "max")
        acc = np.logaddexp(acc, log_e)
        trace[b - 1] = acc - math.log(b)
        if config.stop_at_crossing and trace[b - 1] >= log_threshold:
            b_used = b
            break
    trace = trace[:b_used].copy()
    trace.setflags(write=False)
    return EvalueReport(
        kind=_report_kind(kind, t, config.b_max),
        log_trace=trace,
        b_used=b_used,
        threshold=config.threshold,
        reject=bool(trace[-1] >= log_threshold),
        is_evalue=not (kind == "max_power" and config.b_max > 1),
    )


# -- conditional power diagnostics -------------------------------------------


def conditional_power_factor(family, phi, v, theta_hat, xi_hat, pi, t) -> float:
    """Expected power-t e-factor of one observation under the alternative pi.

    Closed form from the EDF moment generating function:
    ``exp((v/phi) * (kappa(pi + t*d) - kappa(pi) - kappa(theta_hat + t*d)
    + kappa(theta_hat)))`` with ``d = xi_hat - theta_hat``.  Strictly greater
    than one whenever ``pi`` and ``xi_hat`` lie strictly on the same side of
    ``theta_hat``.
    """
    fam = get_family(family)
    if not 0.0 < t <= 1.0:
        raise ConfigError("t must lie in (0, 1]")
    fam._check_positive(phi, "dispersion")
    fam._check_positive(v, "case weight")
    for value in (theta_hat, xi_hat, pi):
        fam._check_canonical(value)
    delta = xi_hat - theta_hat
    shifted = pi + t * delta
    fam._check_canonical(shifted)
    val = (
        fam._kappa(np.float64(shifted)) - fam._kappa(np.float64(pi))
        - (fam._kappa(np.float64(theta_hat + t * delta)) - fam._kappa(np.float64(theta_hat)))
    )
    return float(np.exp((v / phi) * val))


def conditional_e_power(family, phi, v, theta_hat, xi_hat, pi, t) -> float:
    """Expected log power-t e-factor of one observation under ``pi``.

    ``(v/phi) * (t * kappa'(pi) * (xi_hat - theta_hat) -
    (kappa(t*xi_hat + (1-t)*theta_hat) - kappa(theta_hat)))``; concave in t
    with limit 0 at t -> 0.
    """
    fam = get_family(family)
    if not 0.0 < t <= 1.0:
        raise ConfigError("t must lie in (0, 1]")
    fam._check_positive(phi, "dispersion")
    fam._check_positive(v, "case weight")
    for value in (theta_hat, xi_hat, pi):
        fam._check_canonical(value)
    blend = t * xi_hat + (1.0 - t) * theta_hat
    val = (
        t * fam._kappa_prime(np.float64(pi)) * (xi_hat - theta_hat)
        - (fam._kappa(np.float64(blend)) - fam._kappa(np.float64(theta_hat)))
    )
    return float((v / phi) * val)


def pi_star(family, theta_hat, xi_hat) -> float:
    """Boundary alternative: kappa'(pi*) equals the divided difference of kappa.

    The unique canonical parameter strictly between ``theta_hat`` and
    ``xi_hat`` at which the conditional e-power at ``t = 1`` changes sign.
    Symmetric in its last two arguments.
    """
    fam = get_family(family)
    fam._check_canonical(theta_hat)
    fam._check_canonical(xi_hat)
    if theta_hat == xi_hat:
        raise DomainError("theta_hat and xi_hat must be distinct")
    slope = (
        fam._kappa(np.float64(xi_hat)) - fam._kappa(np.float64(theta_hat))
    ) / (xi_hat - theta_hat)
    return float(fam._theta_of_mean(np.float64(slope)))


def t_opt(family, theta_hat, xi_hat, pi) -> float:
    """Power maximizing the conditional e-power: clamp((pi-theta)/(xi-theta), (0,1]].

    Requires ``pi`` on the ``xi_hat`` side of ``theta_hat``; returns 1 exactly
    when ``pi`` is at or beyond ``xi_hat``.
    """
    fam = get_family(family)
    for value in (theta_hat, xi_hat, pi):
        fam._check_canonical(value)
    if theta_hat == xi_hat:
        raise DomainError("theta_hat and xi_hat must be distinct")
    ratio = (pi - theta_hat) / (xi_hat - theta_hat)
    if ratio <= 0.0:
        raise DomainError("pi must lie on the xi_hat side of theta_hat")
    return float(min(ratio, 1.0))


@dataclass(frozen=True)
class PowerDiagnostics:
    """Closed-form e-power diagnostics of one observation."""

    theta_hat: float
    xi_hat: float
    pi: float
    v: float
    phi: float
    pi_star: float
    t_opt: float


def power_diagnostics(family, phi, v, theta_hat, xi_hat, pi) -> PowerDiagnostics:
    """Bundle ``pi_star`` and ``t_opt`` for one observation's parameters."""
    return PowerDiagnostics(
        theta_hat=float(theta_hat),
        xi_hat=float(xi_hat),
        pi=float(pi),
        v=float(v),
        phi=float(phi),
        pi_star=pi_star(family, theta_hat, xi_hat),
        t_opt=t_opt(family, theta_hat, xi_hat, pi),
    )
