"""Score computation and the UNC / DSC / MCB decomposition.

The score of a mean vector is the weighted average unit deviance divided by
``2 * phi``.  On this (log-likelihood) scale the miscalibration component of
the decomposition coincides exactly with the likelihood-ratio statistic per
unit total weight, which is the bridge exploited by the classical test:

    mcb == log_lrs / total_weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .isotonic import recalibrate


@dataclass(frozen=True)
class MurphyDecomposition:
    """Decomposition ``score = unc - dsc + mcb`` with ``dsc, mcb >= 0``."""

    score: float
    unc: float
    dsc: float
    mcb: float


def score(sample, means) -> float:
    """Weighted mean deviance of ``means`` for the sample, on the 1/(2 phi) scale.

    ``means`` may be a scalar (a constant prediction) or one value per
    observation.  Boundary means arising from recalibration (e.g. a Poisson
    block of zero responses) are scored by the conventional deviance limits.
    """
    d = sample.family.deviance(sample.y, means)
    return float(np.sum(sample.v * d) / (2.0 * sample.phi * sample.total_weight))


def decompose(sample) -> MurphyDecomposition:
    """Split the score of the predicted means into UNC - DSC + MCB.

    UNC is the score of the constant weighted-mean prediction, DSC the score
    improvement of the recalibrated means over that constant, and MCB the
    score excess of the predicted means over their recalibrated version.
    """
    mu_rc = recalibrate(sample)
    y_bar = float(np.dot(sample.v, sample.y) / sample.total_weight)
    s_hat = score(sample, sample.mu_hat)
    s_rc = score(sample, mu_rc)
    unc = score(sample, y_bar)
    return MurphyDecomposition(score=s_hat, unc=unc, dsc=unc - s_rc, mcb=s_hat - s_rc)


def mcb_from_log_lrs(log_lrs: float, total_weight: float) -> float:
    """Convert a log likelihood-ratio statistic to the MCB scale."""
    if not total_weight > 0.0:
        raise DomainError("total weight must be strictly positive")
    return float(log_lrs) / float(total_weight)


def log_lrs_from_mcb(mcb: float, total_weight: float) -> float:
    """Inverse of :func:`mcb_from_log_lrs`."""
    if not total_weight > 0.0:
        raise DomainError("total weight must be strictly positive")
    return float(mcb) * float(total_weight)
