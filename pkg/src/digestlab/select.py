"""Factor-count search with reliability-based rejection rules.

Candidate group-factor counts are fitted one by one through the full
extraction / rotation / orthogonalization pipeline; a count is rejected
when some group factor explains too little total variance or is dominated
by the general factor.  The chosen count is the largest surviving one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bifactor import ReliabilityReport, build_report
from .corr import CorrelationMatrix
from .efa import (BifactorSolution, ConvergenceError, extract_paf,
                  rotate_quartimin, schmid_leiman, second_order)

CORR_KINDS = ("pearson", "polychoric")


@dataclass(frozen=True)
class SelectionConfig:
    """Search range, rejection thresholds, and estimation settings.

    Parameters
    ----------
    k_min, k_max : int
        Candidate group-factor counts, 2 <= k_min <= k_max (and k_max is
        further bounded by p/2 at fit time).
    min_group_omega : float
        Reject a candidate whose smallest omega_group falls below this.
    max_general_dominance : float
        Reject a candidate where the general factor explains at least this
        share of some item cluster's common variance.
    corr_kind : str
        Correlation estimator feeding the pipeline, "pearson" or
        "polychoric".
    seed : int
        Seed for the rotation's random restarts.
    """

    k_min: int = 2
    k_max: int = 6
    min_group_omega: float = 0.1
    max_general_dominance: float = 0.6
    corr_kind: str = "pearson"
    seed: int = 0

    def __post_init__(self):
        if not 2 <= self.k_min <= self.k_max:
            raise ValueError(
                f"need 2 <= k_min <= k_max, got {self.k_min}..{self.k_max}")
        if not 0.0 < self.min_group_omega < 1.0:
            raise ValueError("min_group_omega must lie in (0, 1)")
        if not 0.0 < self.max_general_dominance < 1.0:
            raise ValueError("max_general_dominance must lie in (0, 1)")
        if self.corr_kind not in CORR_KINDS:
            raise ValueError(f"corr_kind must be one of {CORR_KINDS}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reasons: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.accepted and not self.reasons:
            raise ValueError("a rejection must carry at least one reason")


@dataclass(frozen=True)
class KCandidate:
    """One evaluated factor count: metrics, dominance, and the verdict.

    ``report``, ``dominance``, and ``solution`` are None/empty when the
    pipeline failed to estimate this count (the verdict then carries the
    failure as its reason).
    """

    k: int
    verdict: Verdict
    report: ReliabilityReport | None = None
    dominance: tuple[float, ...] = ()
    solution: BifactorSolution | None = None


@dataclass(frozen=True)
class SelectionTrace:
    entries: tuple[KCandidate, ...]
    chosen_k: int | None = None

    def __post_init__(self):
        accepted = [e.k for e in self.entries if e.verdict.accepted]
        expect = max(accepted) if accepted else None
        if self.chosen_k != expect:
            raise ValueError("chosen_k must be the largest accepted k")

    @property
    def has_model(self) -> bool:
        return self.chosen_k is not None

    def chosen(self) -> KCandidate:
        if self.chosen_k is None:
            raise ValueError("no candidate factor count was accepted")
        return next(e for e in self.entries if e.k == self.chosen_k)


def dominance_by_cluster(solution: BifactorSolution) -> np.ndarray:
    """Per-factor share of cluster common variance held by the general factor.

    Items are clustered by the group factor carrying their
    largest-magnitude loading.  For cluster C_i,
    dominance_i = sum_{j in C_i} lambda_gj^2 /
    (sum_{j in C_i} lambda_gj^2 + sum_{j in C_i} lambda_ij^2).
    A factor owning no items (or only zero-loading ones) gets 1.0.
    """
    owner = np.argmax(np.abs(solution.group), axis=1)
    out = np.empty(solution.k)
    for i in range(solution.k):
        members = owner == i
        gen = float(np.sum(solution.general[members] ** 2))
        grp = float(np.sum(solution.group[members, i] ** 2))
        out[i] = gen / (gen + grp) if gen + grp > 0.0 else 1.0
    return out


def evaluate_k(report: ReliabilityReport, dominance,
               config: SelectionConfig) -> Verdict:
    """Apply the rejection rules to one candidate's metrics.

    Each triggered rule contributes one reason; a candidate with no
    triggered rule is accepted.
    """
    dominance = np.asarray(dominance, dtype=float)
    if dominance.shape != (report.k,):
        raise ValueError("dominance length must equal report.k")
    reasons = []
    if any(w < config.min_group_omega for w in report.omega_group):
        reasons.append(f"group reliability below {config.min_group_omega:g}")
    if np.any(dominance >= config.max_general_dominance):
        reasons.append(
            f"general-factor dominance ≥ {config.max_general_dominance:g}")
    return Verdict(accepted=not reasons, reasons=tuple(reasons))


def fit_k(corr: CorrelationMatrix, k: int,
          seed: int = 0) -> tuple[BifactorSolution, ReliabilityReport]:
    """Run extraction, rotation, second-order, and Schmid-Leiman for one k."""
    loadings = extract_paf(corr, k)
    oblique = rotate_quartimin(loadings, seed=seed)
    gamma = second_order(oblique.phi)
    solution = schmid_leiman(oblique, gamma)
    return solution, build_report(corr, solution)


def select_factor_count(corr: CorrelationMatrix,
                        config: SelectionConfig) -> SelectionTrace:
    """Evaluate every candidate k and choose the largest accepted one.

    A candidate whose estimation fails (non-convergence, degenerate
    matrices) is recorded as rejected with the failure message rather than
    aborting the search.  When no candidate survives, the trace carries
    ``chosen_k = None`` (the caller-visible no-model outcome).
    """
    if 2 * config.k_max > corr.p:
        raise ValueError(
            f"k_max={config.k_max} exceeds p/2 for p={corr.p} items")
    entries = []
    for k in range(config.k_min, config.k_max + 1):
        try:
            solution, report = fit_k(corr, k, seed=config.seed)
        except (ValueError, ConvergenceError) as exc:
            entries.append(KCandidate(
                k=k, verdict=Verdict(False, (f"estimation failed: {exc}",))))
            continue
        dominance = dominance_by_cluster(solution)
        verdict = evaluate_k(report, dominance, config)
        entries.append(KCandidate(
            k=k, verdict=verdict, report=report,
            dominance=tuple(float(d) for d in dominance), solution=solution))
    accepted = [e.k for e in entries if e.verdict.accepted]
    return SelectionTrace(entries=tuple(entries),
                          chosen_k=max(accepted) if accepted else None)
