"""Exploratory factor analysis toward a bifactor solution.

The route is the classic exploratory one: iterated principal-axis
extraction, quartimin (oblique) rotation by gradient projection, a
one-factor second-order model on the factor correlations, and the
Schmid-Leiman orthogonalization that splits every item's common variance
into one general factor plus orthogonal group factors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .corr import CorrelationMatrix, smc

#: Communalities are clamped here to keep uniquenesses bounded away from 0.
COMMUNALITY_CAP = 0.998

_BOUND_TOL = 1e-8


class ConvergenceError(RuntimeError):
    """An iterative estimation routine failed to reach its tolerance."""


def _align_signs(loadings: np.ndarray) -> np.ndarray:
    """Signs per column: -1 where the column sum is negative, else +1."""
    s = np.where(loadings.sum(axis=0) < 0, -1.0, 1.0)
    return s


@dataclass(eq=False)
class LoadingMatrix:
    """A p x k matrix of factor loadings, entries in [-1, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("loadings must form a nonempty 2-D matrix")
        if not np.all(np.isfinite(v)):
            raise ValueError("loadings must be finite")
        if np.max(np.abs(v)) > 1.0 + _BOUND_TOL:
            raise ValueError("loadings must lie in [-1, 1]")
        self.values = np.clip(v, -1.0, 1.0)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def communalities(self) -> np.ndarray:
        """Row sums of squares (communalities under orthogonal factors)."""
        return np.sum(self.values**2, axis=1)


@dataclass(eq=False)
class ObliqueSolution:
    """Pattern loadings plus factor correlations from an oblique rotation."""

    pattern: LoadingMatrix
    phi: np.ndarray
    criterion: float = field(default=float("nan"))

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        k = self.pattern.k
        if phi.shape != (k, k):
            raise ValueError("phi must be k x k for a k-factor pattern")
        CorrelationMatrix(phi)  # symmetry, unit diagonal, [-1, 1]
        self.phi = (phi + phi.T) / 2.0

    @property
    def k(self) -> int:
        return self.pattern.k

    def communalities(self) -> np.ndarray:
        """diag(P phi P^T), the model communalities under oblique factors."""
        P = self.pattern.values
        return np.einsum("ia,ab,ib->i", P, self.phi, P)


@dataclass(eq=False)
class BifactorSolution:
    """General loadings, group loadings, and uniquenesses per item.

    The three parts satisfy the variance identity
    ``uniqueness_j = 1 - general_j**2 - sum_i group_ji**2`` within 1e-6,
    so the model-implied correlation matrix has a unit diagonal.
    """

    general: np.ndarray
    group: np.ndarray
    uniqueness: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.general, dtype=float)
        G = np.asarray(self.group, dtype=float)
        u = np.asarray(self.uniqueness, dtype=float)
        if g.ndim != 1 or G.ndim != 2 or u.ndim != 1:
            raise ValueError("general/uniqueness must be vectors, group a matrix")
        p = g.shape[0]
        if G.shape[0] != p or u.shape[0] != p:
            raise ValueError("general, group, uniqueness disagree on item count")
        if max(np.max(np.abs(g), initial=0.0), np.max(np.abs(G), initial=0.0)) \
                > 1.0 + _BOUND_TOL:
            raise ValueError("loadings must lie in [-1, 1]")
        if np.min(u) < -_BOUND_TOL or np.max(u) > 1.0 + _BOUND_TOL:
            raise ValueError("uniquenesses must lie in [0, 1]")
        h2 = g**2 + np.sum(G**2, axis=1)
        if np.max(np.abs(u - (1.0 - h2))) > 1e-6:
            raise ValueError("uniqueness must equal 1 - communality per item")
        self.general = g
        self.group = G
        self.uniqueness = np.clip(u, 0.0, 1.0)

    @property
    def p(self) -> int:
        return self.general.shape[0]

    @property
    def k(self) -> int:
        return self.group.shape[1]

    def communalities(self) -> np.ndarray:
        return self.general**2 + np.sum(self.group**2, axis=1)


def _paf(R: np.ndarray, k: int, h0: np.ndarray, tol: float,
         max_iter: int) -> tuple[np.ndarray, bool, bool]:
    """Iterated principal-axis factoring core.

    Returns (loadings, converged, heywood_hit).  Communalities are clamped
    at COMMUNALITY_CAP between iterations; the final loadings are rescaled
    row-wise if they still exceed the cap.
    """
    h = np.clip(h0, 0.0, COMMUNALITY_CAP)
    L = np.zeros((R.shape[0], k))
    heywood = False
    converged = False
    for _ in range(max_iter):
        Rh = R.copy()
        np.fill_diagonal(Rh, h)
        w, V = np.linalg.eigh(Rh)
        order = np.argsort(w)[::-1][:k]
        lam = np.clip(w[order], 0.0, None)
        L = V[:, order] * np.sqrt(lam)
        h_new = np.sum(L**2, axis=1)
        if np.any(h_new > COMMUNALITY_CAP):
            heywood = True
            h_new = np.minimum(h_new, COMMUNALITY_CAP)
        if np.max(np.abs(h_new - h)) < tol:
            h = h_new
            converged = True
            break
        h = h_new
    over = np.sum(L**2, axis=1)
    bad = over > COMMUNALITY_CAP
    if np.any(bad):
        heywood = True
        L[bad] *= np.sqrt(COMMUNALITY_CAP / over[bad])[:, None]
    return L * _align_signs(L), converged, heywood


def extract_paf(corr: CorrelationMatrix, k: int, tol: float = 1e-6,
                max_iter: int = 200) -> LoadingMatrix:
    """Extract k factors by iterated principal-axis factoring.

    Starting communalities are squared multiple correlations.  Each
    iteration eigendecomposes the reduced correlation matrix, keeps the
    top-k components (negative eigenvalues floored at 0), and updates the
    communalities, stopping when the largest communality change drops
    below ``tol``.  Columns are ordered by explained variance and
    sign-aligned so every column sum is nonnegative.

    Parameters
    ----------
    corr : CorrelationMatrix
        Observed correlations.
    k : int
        Number of factors, 1 <= k <= p/2.
    tol : float
        Convergence tolerance on communality change.
    max_iter : int
        Iteration budget.

    Raises
    ------
    ConvergenceError
        If the communality iteration does not settle within ``max_iter``.

    Warns
    -----
    RuntimeWarning
        On a Heywood case (communality clamped at 0.998).
    """
    p = corr.p
    if k < 1 or 2 * k > p:
        raise ValueError(f"factor count must satisfy 1 <= k <= p/2, got k={k} "
                         f"for p={p}")
    L, ok, heywood = _paf(corr.values, k, smc(corr), tol, max_iter)
    if heywood:
        warnings.warn("Heywood case: communality clamped at "
                      f"{COMMUNALITY_CAP}", RuntimeWarning, stacklevel=2)
    if not ok:
        raise ConvergenceError(
            f"principal-axis factoring did not converge in {max_iter} "
            f"iterations (k={k})")
    return LoadingMatrix(L)


def quartimin_criterion(loadings: np.ndarray) -> float:
    """Quartimin objective: sum over factor pairs of squared-loading overlap.

    Q = sum_j sum_{a != b} L_ja^2 L_jb^2 / 4; zero exactly at perfect
    simple structure (each item loads on one factor only).
    """
    L2 = np.asarray(loadings, dtype=float) ** 2
    k = L2.shape[1]
    N = np.ones((k, k)) - np.eye(k)
    return float(np.sum(L2 * (L2 @ N)) / 4.0)


def _quartimin_grad(L: np.ndarray) -> tuple[float, np.ndarray]:
    L2 = L**2
    k = L2.shape[1]
    N = np.ones((k, k)) - np.eye(k)
    X = L2 @ N
    return float(np.sum(L2 * X) / 4.0), L * X


def _gpa_oblique(A: np.ndarray, T: np.ndarray, tol: float,
                 max_iter: int) -> tuple[np.ndarray, np.ndarray, float, bool]:
    """Gradient projection on the oblique manifold (unit-column T).

    Minimizes the quartimin criterion of L = A (T^-1)' over T; returns
    (pattern, phi, criterion, converged).
    """
    T = T.copy()
    Ti = np.linalg.inv(T)
    L = A @ Ti.T
    f, Gq = _quartimin_grad(L)
    G = -(L.T @ Gq @ Ti).T
    converged = False
    al = 1.0
    for _ in range(max_iter):
        Gp = G - T * np.sum(T * G, axis=0)  # project onto unit-column tangent
        s = float(np.linalg.norm(Gp))
        if s < tol:
            converged = True
            break
        al *= 2.0
        Tt, Lt, ft, Gqt, Tit = T, L, f, Gq, Ti
        for _ in range(11):
            X = T - al * Gp
            norms = np.sqrt(np.sum(X**2, axis=0))
            if np.any(norms == 0.0):
                al /= 2.0
                continue
            Tc = X / norms
            try:
                Tic = np.linalg.inv(Tc)
            except np.linalg.LinAlgError:
                al /= 2.0
                continue
            Lc = A @ Tic.T
            fc, Gqc = _quartimin_grad(Lc)
            Tt, Lt, ft, Gqt, Tit = Tc, Lc, fc, Gqc, Tic
            if fc < f - 0.5 * s * s * al:
                break
            al /= 2.0
        T, L, f, Gq, Ti = Tt, Lt, ft, Gqt, Tit
        G = -(L.T @ Gq @ Ti).T
    return L, T.T @ T, f, converged


def rotate_quartimin(loadings: LoadingMatrix, n_starts: int = 10,
                     seed: int = 0, tol: float = 1e-6,
                     max_iter: int = 500) -> ObliqueSolution:
    """Oblique quartimin rotation by gradient projection with restarts.

    Runs the identity start plus ``n_starts`` random orthonormal starts
    (seeded, so the result is deterministic), keeps the converged run with
    the lowest criterion (ties broken by start index), then orders factors
    by explained variance and sign-aligns columns.

    Raises
    ------
    ValueError
        If the input has fewer than 2 factors.
    ConvergenceError
        If no start converges within ``max_iter`` iterations.
    """
    A = loadings.values
    k = loadings.k
    if k < 2:
        raise ValueError("oblique rotation needs at least 2 factors")
    starts = [np.eye(k)]
    rng = np.random.default_rng(seed)
    for _ in range(n_starts):
        Q, R = np.linalg.qr(rng.standard_normal((k, k)))
        starts.append(Q * np.where(np.diag(R) < 0, -1.0, 1.0))
    best = None
    for idx, T0 in enumerate(starts):
        L, phi, f, ok = _gpa_oblique(A, T0, tol, max_iter)
        if ok and (best is None or (f, idx) < best[:2]):
            best = (f, idx, L, phi)
    if best is None:
        raise ConvergenceError(
            f"quartimin rotation did not converge from any of "
            f"{len(starts)} starts within {max_iter} iterations")
    f, _, L, phi = best
    order = np.argsort(-np.sum(L**2, axis=0), kind="stable")
    L, phi = L[:, order], phi[np.ix_(order, order)]
    s = _align_signs(L)
    L = L * s
    phi = phi * np.outer(s, s)
    return ObliqueSolution(pattern=LoadingMatrix(L), phi=phi, criterion=f)


def second_order(phi: np.ndarray, tol: float = 1e-6,
                 max_iter: int = 200) -> np.ndarray:
    """One-factor loadings gamma of the factor correlation matrix.

    For k >= 3 this is a one-factor principal-axis fit of ``phi``.  A 2 x 2
    correlation matrix cannot identify two loadings, so k = 2 uses the
    equal-loading rule gamma_1 = gamma_2 = sqrt(max(phi_12, 0)).  Entries
    are clamped into [0, 0.999]; degenerate (near-orthogonal) factor
    correlations simply yield zeros.
    """
    phi = CorrelationMatrix(np.asarray(phi, dtype=float)).values
    k = phi.shape[0]
    if k < 2:
        raise ValueError("second-order factoring needs k >= 2 factors")
    if k == 2:
        g = np.sqrt(max(phi[0, 1], 0.0))
        gamma = np.array([g, g])
    else:
        corr = CorrelationMatrix(phi)
        gamma, _, _ = _paf(phi, 1, smc(corr), tol, max_iter)
        gamma = gamma[:, 0]
    return np.clip(gamma, 0.0, 0.999)


def schmid_leiman(oblique: ObliqueSolution,
                  gamma: np.ndarray | None = None) -> BifactorSolution:
    """Orthogonalize an oblique solution into general + group factors.

    With pattern P and second-order loadings gamma, the general loadings
    are ``P @ gamma`` and group loadings ``P * sqrt(1 - gamma**2)`` per
    column.  Uniquenesses are set to one minus the resulting communality,
    which reproduces the oblique communalities whenever the one-factor
    model holds for phi.  When ``gamma`` is omitted it is computed by
    :func:`second_order`.

    Warns
    -----
    RuntimeWarning
        If an item's communality exceeds 0.998 (row rescaled).
    """
    P = oblique.pattern.values
    k = oblique.k
    if gamma is None:
        gamma = second_order(oblique.phi)
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (k,):
        raise ValueError(f"gamma must have length {k}")
    if np.min(gamma) < 0.0 or np.max(gamma) > 1.0:
        raise ValueError("gamma entries must lie in [0, 1]")
    lam_g = P @ gamma
    grp = P * np.sqrt(1.0 - gamma**2)
    h2 = lam_g**2 + np.sum(grp**2, axis=1)
    bad = h2 > COMMUNALITY_CAP
    if np.any(bad):
        warnings.warn("Heywood case: communality clamped at "
                      f"{COMMUNALITY_CAP}", RuntimeWarning, stacklevel=2)
        scale = np.sqrt(COMMUNALITY_CAP / h2[bad])
        lam_g[bad] *= scale
        grp[bad] *= scale[:, None]
        h2[bad] = COMMUNALITY_CAP
    return BifactorSolution(general=lam_g, group=grp, uniqueness=1.0 - h2)
