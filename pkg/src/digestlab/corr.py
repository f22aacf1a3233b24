"""Correlation-matrix estimation from ordinal response data.

Two estimators are provided: plain Pearson product-moment correlations
(the pipeline default) and two-step polychoric correlations, which treat
each 6-category item as a discretized standard-normal variable.  Both use
pairwise listwise deletion, so the resulting matrix maximizes data use but
is not guaranteed positive semidefinite; downstream factoring floors
negative eigenvalues at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, owens_t  # ndtr = standard normal CDF
from scipy.stats import norm

from .instrument import ResponseMatrix

#: Polychoric estimates are clamped to this magnitude.
RHO_MAX = 0.999

_SYMMETRY_TOL = 1e-12


@dataclass(eq=False)
class CorrelationMatrix:
    """A validated p x p correlation matrix."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("correlation matrix must be square")
        if not np.allclose(np.diag(v), 1.0, rtol=0, atol=1e-12):
            raise ValueError("correlation matrix must have a unit diagonal")
        if np.max(np.abs(v - v.T)) > _SYMMETRY_TOL:
            raise ValueError("correlation matrix must be symmetric")
        v = (v + v.T) / 2.0
        if np.max(np.abs(v)) > 1.0 + 1e-9:
            raise ValueError("correlation entries must lie in [-1, 1]")
        self.values = np.clip(v, -1.0, 1.0)
        np.fill_diagonal(self.values, 1.0)

    @property
    def p(self) -> int:
        return self.values.shape[0]


def bvn_cdf(h, k, rho: float):
    """Standard bivariate normal CDF P(X <= h, Y <= k) with correlation rho.

    Computed through Owen's T function (via ``scipy.special.owens_t``),
    which is exact to near machine precision -- far inside the required
    1e-7 absolute error.  ``h`` and ``k`` broadcast; infinite limits are
    handled so rectangle probabilities can be built from a threshold grid
    with -inf/+inf sentinels.
    """
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    h, k = np.broadcast_arrays(h, k)
    out = np.empty(h.shape, dtype=float)

    neg_inf = (h == -np.inf) | (k == -np.inf)
    out[neg_inf] = 0.0
    h_inf = (h == np.inf) & ~neg_inf
    out[h_inf] = ndtr(k[h_inf])
    k_inf = (k == np.inf) & ~neg_inf & ~h_inf
    out[k_inf] = ndtr(h[k_inf])

    fin = ~(neg_inf | h_inf | k_inf)
    if not np.any(fin):
        return out
    hf, kf = h[fin], k[fin]

    if rho >= 1.0:
        out[fin] = ndtr(np.minimum(hf, kf))
        return out
    if rho <= -1.0:
        out[fin] = np.maximum(0.0, ndtr(hf) + ndtr(kf) - 1.0)
        return out
    if rho == 0.0:
        out[fin] = ndtr(hf) * ndtr(kf)
        return out

    d = math.sqrt(1.0 - rho * rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        ah = (kf - rho * hf) / (hf * d)
        ak = (hf - rho * kf) / (kf * d)
    # T(0, a) = arctan(a) / 2pi, so T(0, +-inf) = +-1/4; owens_t itself
    # needs finite arguments.
    th = np.where(hf != 0.0,
                  owens_t(hf, np.where(np.isfinite(ah), ah, 0.0)),
                  np.sign(kf) * 0.25)
    tk = np.where(kf != 0.0,
                  owens_t(kf, np.where(np.isfinite(ak), ak, 0.0)),
                  np.sign(hf) * 0.25)
    hk = hf * kf
    beta = np.where((hk < 0) | ((hk == 0) & (hf + kf < 0)), 0.5, 0.0)
    p = 0.5 * (ndtr(hf) + ndtr(kf)) - th - tk - beta
    # Both arguments zero: the general formula degenerates (0/0 slope).
    both_zero = (hf == 0.0) & (kf == 0.0)
    if np.any(both_zero):
        p = np.where(both_zero, 0.25 + math.asin(rho) / (2.0 * math.pi), p)
    out[fin] = np.clip(p, 0.0, 1.0)
    return out


def _joint_columns(values: np.ndarray, i: int, j: int, min_n: int = 3):
    x, y = values[:, i], values[:, j]
    joint = np.isfinite(x) & np.isfinite(y)
    if int(joint.sum()) < min_n:
        raise ValueError(
            f"columns {i} and {j}: only {int(joint.sum())} jointly observed "
            f"rows (need >= {min_n})"
        )
    return x[joint], y[joint]


def pearson(responses: ResponseMatrix) -> CorrelationMatrix:
    """Pearson correlation matrix with pairwise listwise deletion.

    Raises
    ------
    ValueError
        If a column is constant on the rows used for some pair, or a pair
        has fewer than 3 jointly observed rows.
    """
    values = responses.values
    p = responses.n_items
    R = np.eye(p)
    for i in range(p):
        for j in range(i + 1, p):
            x, y = _joint_columns(values, i, j)
            if np.ptp(x) == 0:
                raise ValueError(
                    f"constant column {responses.item_ids[i]!r} on rows "
                    f"shared with {responses.item_ids[j]!r}"
                )
            if np.ptp(y) == 0:
                raise ValueError(
                    f"constant column {responses.item_ids[j]!r} on rows "
                    f"shared with {responses.item_ids[i]!r}"
                )
            xd = x - x.mean()
            yd = y - y.mean()
            r = float(xd @ yd) / math.sqrt(float(xd @ xd) * float(yd @ yd))
            R[i, j] = R[j, i] = min(1.0, max(-1.0, r))
    return CorrelationMatrix(R)


def _thresholds(counts: np.ndarray) -> np.ndarray:
    """Interior normal quantiles of a category-count vector, with sentinels.

    Returns an array of length len(counts)+1 starting at -inf and ending at
    +inf; empty leading/trailing categories produce repeated infinities and
    hence zero cell probabilities, matching their zero counts.
    """
    cum = np.cumsum(counts) / counts.sum()
    return np.concatenate(([-np.inf], norm.ppf(cum[:-1]), [np.inf]))


def _polychoric_loglik(table: np.ndarray, tau_x: np.ndarray,
                       tau_y: np.ndarray, rho: float) -> float:
    F = bvn_cdf(tau_x[:, None], tau_y[None, :], rho)
    P = F[1:, 1:] - F[:-1, 1:] - F[1:, :-1] + F[:-1, :-1]
    P = np.clip(P, 1e-300, None)
    mask = table > 0
    return float(np.sum(table[mask] * np.log(P[mask])))


def _golden_max(fun, lo: float, hi: float, tol: float, max_iter: int) -> float:
    """Golden-section maximization of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    else:
        raise RuntimeError(
            f"golden-section search did not reach tolerance {tol} "
            f"within {max_iter} iterations"
        )
    return (a + b) / 2.0


def polychoric_pair(x: np.ndarray, y: np.ndarray, tol: float = 1e-6,
                    max_iter: int = 200) -> float:
    """Two-step polychoric correlation of two complete ordinal vectors.

    Thresholds come from each variable's marginal category proportions via
    the inverse normal CDF; the latent correlation is then the 1-D maximum
    of the bivariate-normal cell likelihood, located by golden-section
    search on [-0.999, 0.999] and clamped to that interval.
    """
    xi = x.astype(int) - 1
    yi = y.astype(int) - 1
    if np.unique(xi).size < 2 or np.unique(yi).size < 2:
        raise ValueError("polychoric needs >= 2 observed categories per variable")
    table = np.zeros((6, 6))
    np.add.at(table, (xi, yi), 1.0)
    tau_x = _thresholds(table.sum(axis=1))
    tau_y = _thresholds(table.sum(axis=0))

    def loglik(rho):
        return _polychoric_loglik(table, tau_x, tau_y, rho)

    est = _golden_max(loglik, -RHO_MAX, RHO_MAX, tol, max_iter)
    # A boundary maximum stalls a tolerance away from the clamp; snap to
    # whichever candidate actually maximizes the likelihood.
    candidates = [est, -RHO_MAX, RHO_MAX]
    best = max(candidates, key=loglik)
    return min(RHO_MAX, max(-RHO_MAX, best))


def polychoric(responses: ResponseMatrix, tol: float = 1e-6,
               max_iter: int = 200) -> CorrelationMatrix:
    """Polychoric correlation matrix with pairwise listwise deletion.

    Raises
    ------
    ValueError
        If a variable shows fewer than 2 categories on the rows used for
        some pair, or a pair has insufficient overlap.
    RuntimeError
        If the 1-D likelihood search fails to converge.
    """
    values = responses.values
    p = responses.n_items
    R = np.eye(p)
    for i in range(p):
        for j in range(i + 1, p):
            x, y = _joint_columns(values, i, j)
            try:
                r = polychoric_pair(x, y, tol=tol, max_iter=max_iter)
            except ValueError as exc:
                raise ValueError(
                    f"columns {responses.item_ids[i]!r} / "
                    f"{responses.item_ids[j]!r}: {exc}"
                ) from None
            R[i, j] = R[j, i] = r
    return CorrelationMatrix(R)


def smc(corr: CorrelationMatrix) -> np.ndarray:
    """Squared multiple correlations, SMC_j = 1 - 1/(R^-1)_jj.

    The matrix is regularized by adding 1e-8 to the diagonal if it is
    singular; values are clipped into [0, 1) to guard against mild
    non-positive-definiteness from pairwise deletion.
    """
    R = corr.values
    try:
        Rinv = np.linalg.inv(R)
    except np.linalg.LinAlgError:
        try:
            Rinv = np.linalg.inv(R + 1e-8 * np.eye(corr.p))
        except np.linalg.LinAlgError:
            raise ValueError("correlation matrix is singular even after "
                             "diagonal regularization") from None
    return np.clip(1.0 - 1.0 / np.diag(Rinv), 0.0, 1.0 - 1e-9)
