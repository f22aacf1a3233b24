"""Reliability and dimensionality indices for a bifactor solution.

All coefficients use the additive full-test decomposition: the total-score
variance splits into a general-factor part, one part per group factor, and
the uniqueness part, so omega_general plus the omega_group values equals
omega_total by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corr import CorrelationMatrix
from .efa import BifactorSolution

_DECOMP_TOL = 1e-10


@dataclass(frozen=True)
class ReliabilityReport:
    """Omega coefficients, ECV, and residual fit for one factor count.

    Parameters
    ----------
    k : int
        Number of group factors.
    omega_total : float
        Share of total-score variance explained by all common factors.
    omega_general : float
        Share explained by the general factor alone.
    omega_group : tuple of float
        Share explained by each group factor alone, length k.
    ecv : float or None
        General-factor share of common variance; None when not computed.
    rmsr : float or None
        Root-mean-square off-diagonal residual; None when not computed.
    """

    k: int
    omega_total: float
    omega_general: float
    omega_group: tuple[float, ...]
    ecv: float | None = None
    rmsr: float | None = None

    def __post_init__(self):
        if self.k != len(self.omega_group):
            raise ValueError("k must equal the number of omega_group entries")
        parts = (self.omega_total, self.omega_general, *self.omega_group)
        if min(parts) < -_DECOMP_TOL or max(parts) > 1.0 + _DECOMP_TOL:
            raise ValueError("omega coefficients must lie in [0, 1]")
        gap = self.omega_general + sum(self.omega_group) - self.omega_total
        if abs(gap) > _DECOMP_TOL:
            raise ValueError("omega_general + sum(omega_group) must equal "
                             f"omega_total (off by {gap:.3e})")
        if self.ecv is not None and not 0.0 <= self.ecv <= 1.0:
            raise ValueError("ecv must lie in [0, 1]")
        if self.rmsr is not None and self.rmsr < 0.0:
            raise ValueError("rmsr must be nonnegative")


def omegas(solution: BifactorSolution) -> ReliabilityReport:
    """Omega decomposition of total-score variance.

    With column sums S_g = sum_j lambda_gj and S_i = sum_j lambda_ij, the
    total variance is V = S_g^2 + sum_i S_i^2 + sum_j psi_j and
    omega_total = (S_g^2 + sum_i S_i^2) / V, omega_general = S_g^2 / V,
    omega_group(i) = S_i^2 / V.  All-zero loadings yield all zeros.  The
    returned report carries neither ECV nor RMSR (see :func:`build_report`).
    """
    s_g = float(np.sum(solution.general)) ** 2
    s_i = np.sum(solution.group, axis=0) ** 2
    v_total = s_g + float(np.sum(s_i)) + float(np.sum(solution.uniqueness))
    omega_group = s_i / v_total
    return ReliabilityReport(
        k=solution.k,
        omega_total=(s_g + float(np.sum(s_i))) / v_total,
        omega_general=s_g / v_total,
        omega_group=tuple(float(w) for w in omega_group),
    )


def ecv(solution: BifactorSolution) -> float:
    """Explained common variance of the general factor.

    ECV = sum(lambda_g^2) / (sum(lambda_g^2) + sum(lambda_group^2)); equals
    1 when all common variance is general and 0 when none is.

    Raises
    ------
    ValueError
        If every loading is zero (no common variance to apportion).
    """
    gen = float(np.sum(solution.general**2))
    grp = float(np.sum(solution.group**2))
    if gen + grp == 0.0:
        raise ValueError("ECV is undefined when all loadings are zero")
    return gen / (gen + grp)


def implied_correlation(solution: BifactorSolution) -> CorrelationMatrix:
    """Model-implied correlation matrix lam_g lam_g' + Grp Grp' + diag(psi)."""
    g = solution.general
    R = np.outer(g, g) + solution.group @ solution.group.T
    R += np.diag(solution.uniqueness)
    np.fill_diagonal(R, 1.0)  # communality + uniqueness = 1 within 1e-6
    return CorrelationMatrix(R)


def rmsr(observed: CorrelationMatrix, solution: BifactorSolution) -> float:
    """Root-mean-square residual over off-diagonal correlations."""
    if observed.p != solution.p:
        raise ValueError("observed matrix and solution disagree on item count")
    resid = observed.values - implied_correlation(solution).values
    iu = np.triu_indices(observed.p, k=1)
    return float(np.sqrt(np.mean(resid[iu] ** 2)))


def build_report(observed: CorrelationMatrix,
                 solution: BifactorSolution) -> ReliabilityReport:
    """Full report: omegas plus ECV and RMSR against observed correlations."""
    base = omegas(solution)
    return ReliabilityReport(
        k=base.k,
        omega_total=base.omega_total,
        omega_general=base.omega_general,
        omega_group=base.omega_group,
        ecv=ecv(solution),
        rmsr=rmsr(observed, solution),
    )
