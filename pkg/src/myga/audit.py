"""Runtime invariant auditing and regret accounting.

The auditor consumes one trace per round together with the true loss
vector (simulator knowledge) and checks the structural guarantees the
policy's play distribution must satisfy:

  * threshold advice proportionality: on majority arms every auxiliary
    advice is the real mixture rescaled by a common per-threshold factor;
  * minority cap / majority floor: the solved distribution never raises
    a minority arm above the real mixture nor lowers a majority arm
    below it, and every majority mixture mass is at least 1/(2K);
  * play-mass bounds: playing masses stay within the truncation's
    guaranteed factor of the solved distribution, and any played arm
    retains at least its solved mass;
  * majority loss domination: per round and cumulatively, the loss mass
    sitting on majority arms is at most 2K times the expected play loss.

Checks compare at tolerance 1e-9.  Violations are recorded, never
repaired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .policy import RoundTrace

AUDIT_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    t: int
    rule: str
    margin: float
    detail: str


@dataclass
class RegretReport:
    """Cumulative loss accounting for one seeded run."""

    per_expert_loss: np.ndarray
    total_play_loss: float = 0.0
    majority_loss: float = 0.0
    minority_loss: float = 0.0
    rounds: int = 0
    bound_value: float | None = None

    @classmethod
    def empty(cls, num_experts: int) -> "RegretReport":
        return cls(per_expert_loss=np.zeros(num_experts))

    @property
    def best_expert_loss(self) -> float:
        return float(self.per_expert_loss.min())

    @property
    def regret(self) -> float:
        return self.total_play_loss - self.best_expert_loss


def check_round(trace: RoundTrace, gamma: float, num_arms: int,
                tol: float = AUDIT_TOL) -> list[Violation]:
    """Structural checks on one round's solved and played distributions."""
    violations: list[Violation] = []
    k = trace.pivot
    zeta = trace.zeta_sorted
    q = trace.q_sorted
    p = trace.p_sorted

    zeta_majority = float(zeta[:k].sum())
    if trace.thresholds.size:
        aux_majority = np.outer(trace.majority_mass + trace.dropped_table, q[:k]) \
            / trace.majority_mass
        lhs = aux_majority * zeta_majority
        rhs = np.outer(1.0 - (trace.minority_mass - trace.dropped_table), zeta[:k])
        margin = float(np.max(np.abs(lhs - rhs)))
        if margin > tol:
            violations.append(Violation(
                trace.t, "threshold_advice_proportionality", margin,
                "auxiliary majority advice is not a common rescale of the mixture"))

    over = float(np.max(q[k:] - zeta[k:], initial=0.0))
    if over > tol:
        violations.append(Violation(
            trace.t, "minority_cap", over,
            "solved mass exceeds the mixture on a minority arm"))
    under = float(np.max(zeta[:k] - q[:k]))
    if under > tol:
        violations.append(Violation(
            trace.t, "majority_floor", under,
            "solved mass fell below the mixture on a majority arm"))
    floor = 1.0 / (2.0 * num_arms)
    short = float(np.max(floor - zeta[:k]))
    if short > tol:
        violations.append(Violation(
            trace.t, "pivot_mass_floor", short,
            f"majority mixture mass fell below 1/(2K) = {floor}"))

    shrink = float(np.max((1.0 - 2.0 * num_arms * gamma) * p - q))
    if shrink > tol:
        violations.append(Violation(
            trace.t, "play_mass_upper", shrink,
            "played mass exceeds the truncation growth factor"))
    support = p > 0.0
    drop = float(np.max(q[support] - p[support], initial=0.0))
    if drop > tol:
        violations.append(Violation(
            trace.t, "play_mass_support", drop,
            "a played arm lost mass relative to the solved distribution"))
    return violations


def check_round_losses(trace: RoundTrace, losses: np.ndarray, num_arms: int,
                       tol: float = AUDIT_TOL) -> list[Violation]:
    """Per-round majority loss domination against the expected play loss."""
    losses_sorted = trace.perm.to_sorted(np.asarray(losses, dtype=float))
    observable = losses_sorted * (trace.p_sorted > 0.0)
    majority_part = float(observable[:trace.pivot].sum())
    expected = float(trace.p_sorted @ losses_sorted)
    margin = majority_part - 2.0 * num_arms * expected
    if margin > tol:
        return [Violation(trace.t, "majority_loss_round", margin,
                          "majority loss mass exceeded 2K times the expected loss")]
    return []


def accumulate(report: RegretReport, trace, losses: np.ndarray) -> RegretReport:
    """Fold one round into the report: play loss, expert losses, loss split."""
    losses = np.asarray(losses, dtype=float)
    report.total_play_loss += float(trace.p_original @ losses)
    report.per_expert_loss += trace.advices @ losses
    report.rounds += 1
    if isinstance(trace, RoundTrace):
        losses_sorted = trace.perm.to_sorted(losses)
        observable = losses_sorted * (trace.p_sorted > 0.0)
        report.majority_loss += float(observable[:trace.pivot].sum())
        report.minority_loss += float(observable[trace.pivot:].sum())
    return report


def check_majority_bound(report: RegretReport, num_arms: int,
                         tol: float = AUDIT_TOL) -> tuple[bool, float]:
    """Cumulative majority loss domination: M <= 2K * total play loss."""
    margin = report.majority_loss - 2.0 * num_arms * report.total_play_loss
    return margin <= tol, float(margin)


def theorem_bound_value(num_arms: int, num_experts: int, horizon: int,
                        l_star: float) -> float:
    """sqrt(K * log(E*T) * L) + K * log(E*T), the first-order regret scale."""
    width = num_arms * math.log(num_experts * horizon)
    return math.sqrt(width * max(l_star, 0.0)) + width


def evaluate_theorem_bound(report: RegretReport, num_arms: int, num_experts: int,
                           horizon: int, l_star: float, factor: float = 10.0) -> bool:
    """Record the bound scale on the report and test regret against factor times it."""
    report.bound_value = theorem_bound_value(num_arms, num_experts, horizon, l_star)
    return report.regret <= factor * report.bound_value


class Auditor:
    """Streaming per-round checker and accumulator for one seeded run."""

    def __init__(self, num_arms: int, num_experts: int, gamma: float = 0.0,
                 tol: float = AUDIT_TOL, enabled: bool = True):
        self.num_arms = num_arms
        self.gamma = gamma
        self.tol = tol
        self.enabled = enabled
        self.report = RegretReport.empty(num_experts)
        self.violations: list[Violation] = []

    def observe_round(self, trace, losses: np.ndarray) -> int:
        """Check and accumulate one round; returns this round's violation count."""
        fresh: list[Violation] = []
        if self.enabled and isinstance(trace, RoundTrace):
            fresh.extend(check_round(trace, self.gamma, self.num_arms, self.tol))
            fresh.extend(check_round_losses(trace, losses, self.num_arms, self.tol))
        accumulate(self.report, trace, losses)
        self.violations.extend(fresh)
        return len(fresh)

    def finalize(self) -> list[Violation]:
        """Run cumulative checks; returns all violations recorded for the run."""
        if self.enabled:
            ok, margin = check_majority_bound(self.report, self.num_arms, self.tol)
            if not ok:
                self.violations.append(Violation(
                    self.report.rounds, "majority_loss_cumulative", margin,
                    "cumulative majority loss exceeded 2K times the play loss"))
        return self.violations
