"""Self-consistent mixture of truncations.

Each auxiliary expert is defined by a threshold s: its advice is the
s-truncation of the final play distribution q itself.  With a base
weight on the real-expert mixture zeta and one weight per threshold,
q must therefore solve

    q = base * zeta + sum_s w_s * truncate(q, k, s)

in sorted coordinates with pivot k.  On the minority side the equation
decouples per arm: q(i) satisfies q(i) = base*zeta(i) + q(i) * (total
weight of thresholds strictly below q(i)), a one-dimensional piecewise
linear fixed point.  The solver grows a per-threshold zero boundary
from full truncation upward until no boundary can advance, which lands
on the least such fixed point.

``solve_fixed_point`` advances every boundary as far as the current
masses justify in each sweep (a unit advance is only taken when the arm
being crossed strictly exceeds the threshold, so no sweep overshoots),
and counts unit advances.  Termination leaves boundaries and masses
mutually consistent: an arm is above a threshold exactly when that
threshold's boundary has passed it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import simplex

RESIDUAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MixtureWeights:
    """Normalized weight shares: one base share plus one share per threshold.

    ``base`` is the aggregate share of all real experts; ``per_threshold``
    is aligned with the ascending threshold grid.  All shares are strictly
    positive and sum to 1.
    """

    base: float
    per_threshold: np.ndarray

    def require(self, num_thresholds: int, tol: float = 1e-9) -> None:
        per = np.asarray(self.per_threshold, dtype=float)
        if per.shape != (num_thresholds,):
            raise ValueError(
                f"threshold weight count {per.shape} does not match grid size {num_thresholds}")
        if self.base <= 0.0 or np.any(per <= 0.0):
            raise ValueError("mixture weight shares must be strictly positive")
        total = self.base + float(per.sum())
        if abs(total - 1.0) > tol:
            raise ValueError(f"mixture weight shares sum to {total!r}, expected 1")


def _require_sorted_inputs(zeta_sorted: np.ndarray, pivot: int,
                           thresholds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    zeta = simplex.require_distribution(zeta_sorted, what="sorted mixture")
    if np.any(np.diff(zeta) > 0.0):
        raise ValueError("sorted mixture must be non-increasing")
    if not 1 <= pivot <= zeta.size:
        raise ValueError(f"pivot {pivot} outside [1, {zeta.size}]")
    if float(zeta[:pivot].sum()) < 0.5:
        raise ValueError("majority prefix of the sorted mixture is lighter than 1/2")
    if pivot > 1 and float(zeta[:pivot - 1].sum()) >= 0.5:
        raise ValueError("pivot is not minimal for the sorted mixture")
    grid = np.asarray(thresholds, dtype=float)
    if grid.ndim != 1:
        raise ValueError("thresholds must be a 1-d array")
    if grid.size:
        if np.any(np.diff(grid) <= 0.0):
            raise ValueError("thresholds must be strictly increasing")
        if grid[0] <= 0.0 or grid[-1] > 0.5:
            raise ValueError("thresholds must lie in (0, 1/2]")
    return zeta, grid


def _solve(zeta_sorted: np.ndarray, pivot: int, weights: MixtureWeights,
           thresholds: np.ndarray, sweep_log: list | None = None
           ) -> tuple[np.ndarray, int, float]:
    zeta, grid = _require_sorted_inputs(zeta_sorted, pivot, thresholds)
    weights.require(grid.size)
    num_arms = zeta.size
    k = pivot
    minority = num_arms - k

    if grid.size == 0 or minority == 0:
        q = zeta.copy()
        return q, 0, mixture_residual(q, zeta, k, weights, grid)

    base = float(weights.base)
    w_thresh = np.asarray(weights.per_threshold, dtype=float)
    zeta_min = zeta[k:]

    # boundary[j]: first sorted index (0-based) zeroed for threshold j;
    # starts at k (all minority zeroed), capped at num_arms (nothing zeroed).
    boundary = np.full(grid.size, k, dtype=np.int64)
    blocked = np.zeros(minority)
    q_min = base * zeta_min
    iterations = 0
    if sweep_log is not None:
        sweep_log.append((q_min.copy(), boundary.copy()))

    max_sweeps = minority * grid.size + 2
    for _ in range(max_sweeps):
        ascending = q_min[::-1]
        count_at_or_below = np.searchsorted(ascending, grid, side="right")
        target = np.minimum(k + (minority - count_at_or_below), num_arms)
        new_boundary = np.maximum(boundary, target)
        moved = new_boundary > boundary
        if not np.any(moved):
            if not np.array_equal(boundary, target):
                raise RuntimeError(
                    "zero boundaries disagree with solved masses at termination")
            break
        iterations += int((new_boundary - boundary).sum())
        delta = np.zeros(minority + 1)
        np.add.at(delta, boundary[moved] - k, w_thresh[moved])
        np.add.at(delta, new_boundary[moved] - k, -w_thresh[moved])
        blocked += np.cumsum(delta[:minority])
        denom = 1.0 - blocked
        if np.any(denom <= 0.0):
            raise RuntimeError("threshold weight mass exhausted the mixture")
        q_min = base * zeta_min / denom
        boundary = new_boundary
        if sweep_log is not None:
            sweep_log.append((q_min.copy(), boundary.copy()))
    else:
        raise RuntimeError("boundary growth failed to terminate")

    if iterations > minority * grid.size:
        raise RuntimeError("unit advances exceeded the guaranteed bound")

    q = np.empty(num_arms)
    q[k:] = q_min
    majority_zeta = float(zeta[:k].sum())
    q[:k] = zeta[:k] * ((1.0 - float(q_min.sum())) / majority_zeta)
    resid = mixture_residual(q, zeta, k, weights, grid)
    if resid > RESIDUAL_TOL:
        raise RuntimeError(f"fixed-point residual {resid:.3e} exceeds {RESIDUAL_TOL:.1e}")
    return q, iterations, resid


def solve_fixed_point(zeta_sorted: np.ndarray, pivot: int, weights: MixtureWeights,
                      thresholds: np.ndarray, sweep_log: list | None = None
                      ) -> tuple[np.ndarray, int]:
    """Solve q = base*zeta + sum_s w_s * truncate(q, pivot, s) in sorted coordinates.

    Returns the solved distribution and the number of unit boundary
    advances, which never exceeds (arms - pivot) * len(thresholds).
    ``sweep_log``, if given, receives one (minority masses, boundaries)
    snapshot per sweep for diagnostic tests.  Raises RuntimeError rather
    than returning a distribution whose residual exceeds 1e-9.
    """
    q, iterations, _ = _solve(zeta_sorted, pivot, weights, thresholds, sweep_log)
    return q, iterations


def mixture_residual(q: np.ndarray, zeta_sorted: np.ndarray, pivot: int,
                     weights: MixtureWeights, thresholds: np.ndarray) -> float:
    """Max-norm distance between q and the truncation mixture evaluated at q."""
    q = np.asarray(q, dtype=float)
    zeta = np.asarray(zeta_sorted, dtype=float)
    grid = np.asarray(thresholds, dtype=float)
    base = float(weights.base)
    w_thresh = np.asarray(weights.per_threshold, dtype=float)
    k = pivot
    q_min = q[k:]
    majority_mass = float(q[:k].sum())
    if majority_mass <= 0.0:
        raise ValueError("majority arms carry no mass, truncation undefined")

    if grid.size == 0:
        target = base * zeta
        return float(np.max(np.abs(q - target))) if q.size else 0.0

    if q_min.size and np.any(np.diff(q_min) > 0.0):
        # Arbitrary (non-monotone) minority blocks take the literal route.
        removed = q_min[None, :] <= grid[:, None]
        dropped = (q_min[None, :] * removed).sum(axis=1)
        kept_weight = ((~removed) * w_thresh[:, None]).sum(axis=0)
    else:
        ascending = q_min[::-1]
        prefix = np.concatenate(([0.0], np.cumsum(ascending)))
        dropped = prefix[np.searchsorted(ascending, grid, side="right")]
        weight_prefix = np.concatenate(([0.0], np.cumsum(w_thresh)))
        kept_weight = weight_prefix[np.searchsorted(grid, q_min, side="left")]

    target = np.empty_like(q)
    target[k:] = base * zeta[k:] + q_min * kept_weight
    scale = (1.0 - base) + float(w_thresh @ dropped) / majority_mass
    target[:k] = base * zeta[:k] + q[:k] * scale
    return float(np.max(np.abs(q - target)))


def two_arm_fixed_point(base_mass: float, weights: MixtureWeights,
                        thresholds: np.ndarray) -> float:
    """Closed-form least fixed point of the one-dimensional threshold map.

    Solves x = base*base_mass + x * (weight of thresholds strictly below x)
    on [0, 1/2] by enumerating the linear pieces between consecutive
    thresholds and keeping the smallest candidate consistent with its own
    piece.  This is the minority mass of the two-arm problem, and equally
    the per-arm decoupled solution for any single minority coordinate.
    """
    if not 0.0 <= base_mass <= 0.5:
        raise ValueError(f"base mass {base_mass} outside [0, 1/2]")
    grid = np.asarray(thresholds, dtype=float)
    weights.require(grid.size)
    w_thresh = np.asarray(weights.per_threshold, dtype=float)
    cum = np.concatenate(([0.0], np.cumsum(w_thresh)))
    best = None
    for j in range(grid.size + 1):
        x = weights.base * base_mass / (1.0 - cum[j])
        if j > 0 and not x > grid[j - 1]:
            continue
        if j < grid.size and not x <= grid[j]:
            continue
        if best is None or x < best:
            best = x
    if best is None:
        raise RuntimeError("no piece of the threshold map is self-consistent")
    return float(best)
