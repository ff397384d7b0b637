"""Threshold truncation of sorted distributions.

``truncate(q, k, s)`` zeroes every minority arm (index > k in 1-based
terms) whose mass is <= s and hands the removed mass to the majority
arms (the first k) in proportion to their current masses.  Minority
arms above the threshold are left untouched.  Mass comparisons against
the threshold are exact floating comparisons: an arm sitting exactly on
the threshold is removed.

The convention s = 0 is accepted and acts as the identity, since no
positive mass can be <= 0.
"""

from __future__ import annotations

import numpy as np

from . import simplex

DRIFT_TOL = 1e-9


def _check_params(size: int, pivot: int, threshold: float) -> None:
    if not 1 <= pivot <= size:
        raise ValueError(f"pivot {pivot} outside [1, {size}]")
    if not 0.0 <= threshold <= 0.5:
        raise ValueError(f"threshold {threshold} outside [0, 1/2]")


def truncate(q: np.ndarray, pivot: int, threshold: float) -> np.ndarray:
    """Apply the truncation operator to a sorted distribution.

    ``q`` must be a distribution whose first ``pivot`` entries carry
    positive total mass.  Returns a new array; the input is not modified.
    Raises RuntimeError if redistribution fails to conserve mass to within
    ``DRIFT_TOL`` (an arithmetic inconsistency, not a user error).
    """
    q = simplex.require_distribution(q, what="truncation input")
    _check_params(q.size, pivot, threshold)
    majority_mass = float(q[:pivot].sum())
    if majority_mass <= 0.0:
        raise ValueError("majority arms carry no mass, cannot redistribute")

    out = q.copy()
    minority = q[pivot:]
    removed = minority <= threshold
    dropped = float(minority[removed].sum())
    out[pivot:][removed] = 0.0
    out[:pivot] = q[:pivot] * (1.0 + dropped / majority_mass)

    drift = abs(float(out.sum()) - float(q.sum()))
    if drift > DRIFT_TOL:
        raise RuntimeError(f"truncation failed to conserve mass, drift {drift:.3e}")
    return out


def truncated_mass(q: np.ndarray, pivot: int, threshold: float) -> float:
    """Total minority mass at or below the threshold (the mass truncate removes)."""
    q = np.asarray(q, dtype=float)
    _check_params(q.size, pivot, threshold)
    minority = q[pivot:]
    return float(minority[minority <= threshold].sum())


def truncated_mass_table(minority_desc: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Removed mass per threshold for a non-increasing minority block.

    ``minority_desc`` holds the minority masses in non-increasing order,
    ``thresholds`` is ascending.  Entry j is the total minority mass <=
    thresholds[j], computed with one prefix-sum pass and one binary search
    per threshold instead of a quadratic rescan.
    """
    minority_desc = np.asarray(minority_desc, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    ascending = minority_desc[::-1]
    prefix = np.concatenate(([0.0], np.cumsum(ascending)))
    counts = np.searchsorted(ascending, thresholds, side="right")
    return prefix[counts]
