"""Exponential dispersion family (EDF) primitives.

Every family is described by its cumulant function ``kappa`` on an open
canonical domain.  The density of a response with canonical parameter
``theta``, dispersion ``phi`` and case weight ``v`` is

    f(y) = exp((y * theta - kappa(theta)) / (phi / v) + a(y, v / phi)),

so the mean is ``kappa'(theta)`` and the variance ``phi / v * kappa''(theta)``.
All mean <-> canonical conversions are closed form; no root finding is used.

Weights follow the standard EDF convention: for the Poisson family
``y * v / phi`` is a count, and for the binomial family ``v / phi`` is the
number of trials with ``y`` the success fraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import special

from .exceptions import DomainError, EmptyInput, NonpositiveWeight

#: Fitted means are pulled this far inside the mean domain before converting
#: to canonical parameters, so likelihood-ratio factors stay finite even when
#: an isotonic block collapses onto the support boundary.
MEAN_CLAMP_EPS = 1e-12

#: Absolute tolerance (on the count scale) when checking that Poisson and
#: binomial responses are consistent with integer counts.
_COUNT_ATOL = 1e-6


def _as_float_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _scalar_like(x_in, out: np.ndarray):
    if np.ndim(x_in) == 0:
        return float(out)
    return out


class EdfFamily:
    """Base class for EDF members.

    Subclasses define the cumulant and its closed-form links, the unit
    deviance, a response sampler, and support checks.  Instances carry no
    state; all methods are pure and accept scalars or numpy arrays.
    """

    name: str = "edf"
    #: open interval of valid canonical parameters
    theta_low: float = -np.inf
    theta_high: float = np.inf
    #: open interval of valid means
    mean_low: float = -np.inf
    mean_high: float = np.inf

    # -- cumulant and links -------------------------------------------------

    def _kappa(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _kappa_prime(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _theta_of_mean(self, mu: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def cumulant(self, theta):
        """Evaluate kappa(theta) on the effective domain."""
        theta = self._check_canonical(theta)
        return _scalar_like(theta, self._kappa(_as_float_array(theta)))

    def mean_from_canonical(self, theta):
        """Evaluate the mean kappa'(theta)."""
        theta = self._check_canonical(theta)
        return _scalar_like(theta, self._kappa_prime(_as_float_array(theta)))

    def canonical_from_mean(self, mu):
        """Invert kappa': return the canonical parameter of a mean."""
        mu = self._check_mean(mu)
        return _scalar_like(mu, self._theta_of_mean(_as_float_array(mu)))

    # -- losses and sampling ------------------------------------------------

    def deviance(self, y, mu):
        """Unit deviance ``d(y, mu) >= 0``, zero iff ``mu == y``.

        Support-boundary means (for instance a Poisson mean of zero) are
        evaluated by their conventional limits, e.g. ``0 * log 0 = 0``, so
        that recalibrated means of boundary blocks remain scoreable.
        """
        raise NotImplementedError

    def sample(self, mu, v, phi, rng: np.random.Generator):
        """Draw responses with mean ``mu`` and variance ``phi/v * V(mu)``."""
        raise NotImplementedError

    def validate_support(self, y, v, phi) -> None:
        """Raise :class:`DomainError` unless every response is in the support."""
        raise NotImplementedError

    # -- helpers ------------------------------------------------------------

    def clamp_mean(self, mu):
        """Pull means into the open mean domain (distance ``MEAN_CLAMP_EPS``).

        Unbounded sides are left untouched, so this is a no-op for the
        normal family and a one-sided floor for Poisson, gamma and inverse
        Gaussian means.
        """
        mu = _as_float_array(mu)
        lo, hi = self.mean_low, self.mean_high
        if np.isfinite(lo):
            mu = np.maximum(mu, lo + MEAN_CLAMP_EPS)
        if np.isfinite(hi):
            mu = np.minimum(mu, hi - MEAN_CLAMP_EPS)
        return mu

    def _check_canonical(self, theta):
        arr = _as_float_array(theta)
        ok = (arr > self.theta_low) & (arr < self.theta_high)
        if not np.all(ok):
            raise DomainError(
                f"{self.name}: canonical parameter must lie in "
                f"({self.theta_low}, {self.theta_high})"
            )
        return theta

    def _check_mean(self, mu):
        arr = _as_float_array(mu)
        ok = (arr > self.mean_low) & (arr < self.mean_high)
        if not np.all(ok):
            raise DomainError(
                f"{self.name}: mean must lie in ({self.mean_low}, {self.mean_high})"
            )
        return mu

    def _check_positive(self, value, what: str):
        arr = _as_float_array(value)
        if not np.all(np.isfinite(arr) & (arr > 0.0)):
            raise DomainError(f"{self.name}: {what} must be strictly positive")
        return arr

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"{type(self).__name__}()"


class Poisson(EdfFamily):
    """Poisson family: kappa(theta) = exp(theta), log link."""

    name = "poisson"
    mean_low = 0.0

    def _kappa(self, theta):
        return np.exp(theta)

    def _kappa_prime(self, theta):
        return np.exp(theta)

    def _theta_of_mean(self, mu):
        return np.log(mu)

    def deviance(self, y, mu):
        y_a, mu_a = _as_float_array(y), _as_float_array(mu)
        if np.any(mu_a < 0.0) or not np.all(np.isfinite(mu_a)):
            raise DomainError("poisson: mean must lie in [0, inf) for the deviance")
        if np.any(y_a < 0.0):
            raise DomainError("poisson: responses must be nonnegative")
        d = 2.0 * (mu_a - y_a + special.xlogy(y_a, y_a) - special.xlogy(y_a, mu_a))
        return _scalar_like(y, d)

    def sample(self, mu, v, phi, rng):
        mu_a = _as_float_array(self._check_mean(mu))
        v_a = self._check_positive(v, "case weight")
        phi_f = float(self._check_positive(phi, "dispersion"))
        counts = rng.poisson(v_a * mu_a / phi_f)
        return _scalar_like(mu, counts * (phi_f / v_a))

    def validate_support(self, y, v, phi):
        y_a = _as_float_array(y)
        if not np.all(np.isfinite(y_a) & (y_a >= 0.0)):
            raise DomainError("poisson: responses must be finite and >= 0")
        counts = y_a * _as_float_array(v) / float(phi)
        if np.any(np.abs(counts - np.round(counts)) > _COUNT_ATOL):
            raise DomainError("poisson: y * v / phi must be a nonnegative integer")


class Gamma(EdfFamily):
    """Gamma family: kappa(theta) = -log(-theta) on theta < 0."""

    name = "gamma"
    theta_high = 0.0
    mean_low = 0.0

    def _kappa(self, theta):
        return -np.log(-theta)

    def _kappa_prime(self, theta):
        return -1.0 / theta

    def _theta_of_mean(self, mu):
        return -1.0 / mu

    def deviance(self, y, mu):
        y_a, mu_a = _as_float_array(y), _as_float_array(mu)
        if not np.all(np.isfinite(mu_a) & (mu_a > 0.0)):
            raise DomainError("gamma: mean must lie in (0, inf)")
        if not np.all(y_a > 0.0):
            raise DomainError("gamma: responses must be strictly positive")
        d = 2.0 * ((y_a - mu_a) / mu_a - np.log(y_a / mu_a))
        return _scalar_like(y, d)

    def sample(self, mu, v, phi, rng):
        mu_a = _as_float_array(self._check_mean(mu))
        v_a = self._check_positive(v, "case weight")
        phi_f = float(self._check_positive(phi, "dispersion"))
        shape = v_a / phi_f
        return _scalar_like(mu, rng.gamma(shape, mu_a / shape))

    def validate_support(self, y, v, phi):
        y_a = _as_float_array(y)
        if not np.all(np.isfinite(y_a) & (y_a > 0.0)):
            raise DomainError("gamma: responses must be finite and > 0")


class Normal(EdfFamily):
    """Normal family: kappa(theta) = theta**2 / 2, identity link."""

    name = "normal"

    def _kappa(self, theta):
        return 0.5 * theta * theta

    def _kappa_prime(self, theta):
        return np.positive(theta)

    def _theta_of_mean(self, mu):
        return np.positive(mu)

    def deviance(self, y, mu):
        y_a, mu_a = _as_float_array(y), _as_float_array(mu)
        if not np.all(np.isfinite(mu_a)):
            raise DomainError("normal: mean must be finite")
        return _scalar_like(y, (y_a - mu_a) ** 2)

    def sample(self, mu, v, phi, rng):
        mu_a = _as_float_array(self._check_mean(mu))
        v_a = self._check_positive(v, "case weight")
        phi_f = float(self._check_positive(phi, "dispersion"))
        return _scalar_like(mu, rng.normal(mu_a, np.sqrt(phi_f / v_a)))

    def validate_support(self, y, v, phi):
        y_a = _as_float_array(y)
        if not np.all(np.isfinite(y_a)):
            raise DomainError("normal: responses must be finite")


class Binomial(EdfFamily):
    """Binomial family with trials carried by the weight.

    ``v / phi`` is the number of trials and ``y`` the observed success
    fraction, so kappa(theta) = log(1 + exp(theta)) and the mean is the
    success probability in (0, 1).
    """

    name = "binomial"
    mean_low = 0.0
    mean_high = 1.0

    def _kappa(self, theta):
        return np.logaddexp(0.0, theta)

    def _kappa_prime(self, theta):
        return special.expit(theta)

    def _theta_of_mean(self, mu):
        return special.logit(mu)

    def deviance(self, y, mu):
        y_a, mu_a = _as_float_array(y), _as_float_array(mu)
        if np.any(mu_a < 0.0) or np.any(mu_a > 1.0):
            raise DomainError("binomial: mean must lie in [0, 1] for the deviance")
        if np.any(y_a < 0.0) or np.any(y_a > 1.0):
            raise DomainError("binomial: responses must lie in [0, 1]")
        d = 2.0 * (
            special.xlogy(y_a, y_a)
            - special.xlogy(y_a, mu_a)
            + special.xlogy(1.0 - y_a, 1.0 - y_a)
            - special.xlogy(1.0 - y_a, 1.0 - mu_a)
        )
        return _scalar_like(y, d)

    def sample(self, mu, v, phi, rng):
        mu_a = _as_float_array(self._check_mean(mu))
        v_a = self._check_positive(v, "case weight")
        phi_f = float(self._check_positive(phi, "dispersion"))
        trials = v_a / phi_f
        rounded = np.round(trials)
        if np.any(np.abs(trials - rounded) > _COUNT_ATOL) or np.any(rounded < 1):
            raise DomainError("binomial: v / phi must be a positive integer trial count")
        counts = rng.binomial(rounded.astype(np.int64), mu_a)
        return _scalar_like(mu, counts / rounded)

    def validate_support(self, y, v, phi):
        y_a = _as_float_array(y)
        if not np.all(np.isfinite(y_a) & (y_a >= 0.0) & (y_a <= 1.0)):
            raise DomainError("binomial: responses must lie in [0, 1]")
        counts = y_a * _as_float_array(v) / float(phi)
        if np.any(np.abs(counts - np.round(counts)) > _COUNT_ATOL):
            raise DomainError("binomial: y * v / phi must be an integer success count")


class InverseGaussian(EdfFamily):
    """Inverse Gaussian family: kappa(theta) = -sqrt(-2 theta) on theta < 0."""

    name = "inverse_gaussian"
    theta_high = 0.0
    mean_low = 0.0

    def _kappa(self, theta):
        return -np.sqrt(-2.0 * theta)

    def _kappa_prime(self, theta):
        return 1.0 / np.sqrt(-2.0 * theta)

    def _theta_of_mean(self, mu):
        return -0.5 / (mu * mu)

    def deviance(self, y, mu):
        y_a, mu_a = _as_float_array(y), _as_float_array(mu)
        if not np.all(np.isfinite(mu_a) & (mu_a > 0.0)):
            raise DomainError("inverse_gaussian: mean must lie in (0, inf)")
        if not np.all(y_a > 0.0):
            raise DomainError("inverse_gaussian: responses must be strictly positive")
        d = (y_a - mu_a) ** 2 / (y_a * mu_a * mu_a)
        return _scalar_like(y, d)

    def sample(self, mu, v, phi, rng):
        mu_a = _as_float_array(self._check_mean(mu))
        v_a = self._check_positive(v, "case weight")
        phi_f = float(self._check_positive(phi, "dispersion"))
        lam = v_a / phi_f
        return _scalar_like(mu, rng.wald(mu_a, lam))

    def validate_support(self, y, v, phi):
        y_a = _as_float_array(y)
        if not np.all(np.isfinite(y_a) & (y_a > 0.0)):
            raise DomainError("inverse_gaussian: responses must be finite and > 0")


_FAMILIES = {
    f.name: f
    for f in (Poisson(), Gamma(), Normal(), Binomial(), InverseGaussian())
}

FAMILY_NAMES = tuple(_FAMILIES)


def get_family(name) -> EdfFamily:
    """Look up a family by name, or pass an :class:`EdfFamily` through."""
    if isinstance(name, EdfFamily):
        return name
    try:
        return _FAMILIES[str(name)]
    except KeyError:
        raise DomainError(
            f"unknown family {name!r}; choose one of {sorted(_FAMILIES)}"
        ) from None


def log_e_factor(family, y, theta, xi, v=1.0, phi=1.0):
    """Log likelihood-ratio factor of one observation.

    Returns ``(v / phi) * (y * (xi - theta) - (kappa(xi) - kappa(theta)))``,
    the log of the e-factor comparing the alternative canonical parameter
    ``xi`` against the null ``theta``.  Both parameters must be interior to
    the effective domain (clamped fitted means always are), so the result is
    finite.
    """
    fam = get_family(family)
    fam._check_canonical(theta)
    fam._check_canonical(xi)
    fam._check_positive(v, "case weight")
    fam._check_positive(phi, "dispersion")
    y_a = _as_float_array(y)
    if not np.all(np.isfinite(y_a)):
        raise DomainError(f"{fam.name}: responses must be finite")
    theta_a, xi_a = _as_float_array(theta), _as_float_array(xi)
    out = (_as_float_array(v) / _as_float_array(phi)) * (
        y_a * (xi_a - theta_a) - (fam._kappa(xi_a) - fam._kappa(theta_a))
    )
    if np.ndim(y) == 0 and np.ndim(theta) == 0 and np.ndim(xi) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Observation:
    """One test-sample triple: response, predicted mean and case weight."""

    y: float
    mu_hat: float
    v: float = 1.0


@dataclass(frozen=True, eq=False)
class TestSample:
    """Observations ``(y_i, mu_hat_i, v_i)`` plus family and dispersion.

    Arrays are coerced to read-only float64 vectors and validated on
    construction: ``phi > 0``, all weights positive, predicted means in the
    family's open mean domain and responses in its support.  Instances are
    immutable and safe to share across threads.
    """

    family: EdfFamily
    phi: float
    y: np.ndarray
    mu_hat: np.ndarray
    v: np.ndarray

    def __init__(self, family, phi, y, mu_hat, v=None):
        fam = get_family(family)
        phi_f = float(phi)
        if not np.isfinite(phi_f) or phi_f <= 0.0:
            raise DomainError("dispersion phi must be strictly positive")
        y_a = np.array(y, dtype=np.float64, copy=True).ravel()
        mu_a = np.array(mu_hat, dtype=np.float64, copy=True).ravel()
        if v is None:
            v_a = np.ones_like(y_a)
        else:
            v_a = np.array(v, dtype=np.float64, copy=True).ravel()
        if y_a.size == 0:
            raise EmptyInput("a test sample needs at least two observations")
        if y_a.size < 2:
            raise DomainError("a test sample needs at least two observations")
        if mu_a.shape != y_a.shape or v_a.shape != y_a.shape:
            raise DomainError("y, mu_hat and v must have equal lengths")
        if not np.all(np.isfinite(v_a) & (v_a > 0.0)):
            raise NonpositiveWeight("case weights must be finite and > 0")
        fam._check_mean(mu_a)
        fam.validate_support(y_a, v_a, phi_f)
        for arr in (y_a, mu_a, v_a):
            arr.setflags(write=False)
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "phi", phi_f)
        object.__setattr__(self, "y", y_a)
        object.__setattr__(self, "mu_hat", mu_a)
        object.__setattr__(self, "v", v_a)

    @classmethod
    def from_observations(cls, family, phi, obs: Sequence[Observation]) -> "TestSample":
        return cls(
            family,
            phi,
            y=[o.y for o in obs],
            mu_hat=[o.mu_hat for o in obs],
            v=[o.v for o in obs],
        )

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def obs(self) -> list[Observation]:
        return [
            Observation(float(a), float(b), float(c))
            for a, b, c in zip(self.y, self.mu_hat, self.v)
        ]

    @cached_property
    def total_weight(self) -> float:
        return float(self.v.sum())

    @cached_property
    def theta_hat(self) -> np.ndarray:
        """Canonical parameters of the predicted means."""
        theta = self.family._theta_of_mean(self.mu_hat)
        theta.setflags(write=False)
        return theta

    @cached_property
    def _order(self) -> np.ndarray:
        """Stable sort order of the predicted means."""
        order = np.argsort(self.mu_hat, kind="stable")
        order.setflags(write=False)
        return order
