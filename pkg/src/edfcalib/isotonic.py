"""Weighted isotonic regression via pool-adjacent-violators.

``pav_fit`` solves

    min sum_i v_i * (y_i - g_i)**2   subject to g monotone in the ranks,

which is also the maximum-likelihood estimate of monotone means within any
EDF member.  Observations sharing a rank are pooled into one point first
(weight ``sum v``, response the weighted mean), so tied ranks always receive
a common fitted value, and the fit is invariant under strictly increasing
transforms of the ranks.

The solution is interpolated by a right-continuous step function: the fitted
value jumps at each block's left edge, and queries outside the observed rank
range are clamped to the first/last block value.  This side convention is
not canonical; it is the common choice for recalibration plots and is the
one used throughout this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from .exceptions import EmptyInput, NonpositiveWeight


def _merge_ties_sorted(ranks, y, w):
    """Pool equal adjacent ranks of rank-sorted data.

    Returns ``(ranks, y, w, starts)`` where ``starts`` indexes the first
    member of each pooled group in the input (or ``None`` when there were no
    ties and the inputs are returned unchanged).
    """
    same = ranks[1:] == ranks[:-1]
    if not same.any():
        return ranks, y, w, None
    starts = np.flatnonzero(np.concatenate(([True], ~same)))
    if w is None:
        w = np.ones_like(y)
    gw = np.add.reduceat(w, starts)
    gy = np.add.reduceat(w * y, starts) / gw
    return ranks[starts], gy, gw, starts


@dataclass(frozen=True, eq=False)
class IsotonicFit:
    """A fitted step function over predicted-mean breakpoints.

    ``block_values`` are non-decreasing, ``block_weights`` sum to the total
    input weight, and ``left_edges``/``breakpoints`` hold each block's first
    and last rank (so ``breakpoints`` are the block right edges).
    """

    breakpoints: np.ndarray
    block_values: np.ndarray
    block_weights: np.ndarray
    left_edges: np.ndarray

    @property
    def n_blocks(self) -> int:
        return self.block_values.size

    def predict(self, m):
        """Evaluate the step function at ``m``.

        Right-continuous: returns the value of the last block whose left
        edge is <= ``m``; arguments below the first left edge map to the
        first block value, above the last breakpoint to the last.
        """
        m_a = np.asarray(m, dtype=np.float64)
        pos = np.searchsorted(self.left_edges, m_a, side="right") - 1
        pos = np.maximum(pos, 0)
        out = self.block_values[pos]
        if np.ndim(m) == 0:
            return float(out)
        return out


def pav_fit(y, v=None, ranks=None) -> IsotonicFit:
    """Weighted isotonic least squares in the order given by ``ranks``.

    Parameters
    ----------
    y : array_like
        Response values.
    v : array_like, optional
        Strictly positive case weights (default all ones).
    ranks : array_like, optional
        Values whose order the fit must respect (default input order).
    """
    y_a = np.asarray(y, dtype=np.float64).ravel()
    n = y_a.size
    if n == 0:
        raise EmptyInput("isotonic regression needs at least one observation")
    if ranks is None:
        ranks_a = np.arange(n, dtype=np.float64)
    else:
        ranks_a = np.asarray(ranks, dtype=np.float64).ravel()
    if v is None:
        w = None
    else:
        w = np.asarray(v, dtype=np.float64).ravel()
        if w.shape != y_a.shape:
            raise ValueError("y and v must have equal lengths")
        if not np.all(np.isfinite(w) & (w > 0.0)):
            raise NonpositiveWeight("case weights must be finite and > 0")
    if ranks_a.shape != y_a.shape:
        raise ValueError("y and ranks must have equal lengths")
    if not (np.all(np.isfinite(y_a)) and np.all(np.isfinite(ranks_a))):
        raise ValueError("responses and ranks must be finite")

    order = np.argsort(ranks_a, kind="stable")
    ranks_s = ranks_a[order]
    y_s = y_a[order]
    w_s = None if w is None else w[order]

    ranks_m, y_m, w_m, _ = _merge_ties_sorted(ranks_s, y_s, w_s)
    res = isotonic_regression(y_m, weights=w_m)
    starts = res.blocks[:-1]
    ends = res.blocks[1:] - 1
    fit = IsotonicFit(
        breakpoints=ranks_m[ends],
        block_values=np.asarray(res.x)[starts],
        block_weights=np.asarray(res.weights, dtype=np.float64),
        left_edges=ranks_m[starts],
    )
    for arr in (fit.breakpoints, fit.block_values, fit.block_weights, fit.left_edges):
        arr.setflags(write=False)
    return fit


def recalibrate(sample) -> np.ndarray:
    """Isotonic recalibration of a test sample's mean estimates.

    Fits ``pav_fit`` to the responses weighted by the case weights and ranked
    by the predicted means, then evaluates the step function back at every
    predicted mean.  The result is the per-observation recalibrated mean,
    non-decreasing in ``mu_hat``.
    """
    fit = pav_fit(sample.y, sample.v, ranks=sample.mu_hat)
    return fit.predict(sample.mu_hat)
