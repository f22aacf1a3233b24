"""Shared builders for population models and random valid solutions."""

import numpy as np

from digestlab import BifactorSolution, CorrelationMatrix, ObliqueSolution
from digestlab.efa import LoadingMatrix


def block_loadings(p, k, value):
    """Group-loading matrix with p/k items per factor, all at ``value``."""
    size = p // k
    G = np.zeros((p, k))
    for i in range(k):
        G[i * size:(i + 1) * size, i] = value
    return G


def population_corr(general, group):
    """Model-implied correlation matrix of a bifactor population."""
    general = np.asarray(general, dtype=float)
    group = np.asarray(group, dtype=float)
    R = np.outer(general, general) + group @ group.T
    np.fill_diagonal(R, 1.0)
    return CorrelationMatrix(R)


def random_solution(rng, p=None, k=None):
    """A random BifactorSolution with communalities bounded away from 1."""
    p = int(rng.integers(4, 13)) if p is None else p
    k = int(rng.integers(1, 5)) if k is None else k
    general = rng.uniform(0.1, 0.6, size=p)
    group = rng.uniform(-0.2, 0.6, size=(p, k))
    h2 = general**2 + np.sum(group**2, axis=1)
    scale = np.sqrt(np.minimum(1.0, 0.9 / h2))
    general *= scale
    group *= scale[:, None]
    psi = 1.0 - general**2 - np.sum(group**2, axis=1)
    return BifactorSolution(general=general, group=group, uniqueness=psi)


def random_hierarchical_oblique(rng, p=None, k=None):
    """Random oblique solution whose phi is exactly one-factor.

    Returns (oblique, gamma) with phi = gamma gamma' + diag(1 - gamma^2),
    the regime where the Schmid-Leiman transform preserves communalities
    exactly.  Pattern rows are scaled so oblique communalities stay <= 0.9.
    """
    p = int(rng.integers(6, 14)) if p is None else p
    k = int(rng.integers(2, 5)) if k is None else k
    gamma = rng.uniform(0.0, 0.9, size=k)
    phi = np.outer(gamma, gamma) + np.diag(1.0 - gamma**2)
    pattern = rng.uniform(-0.4, 0.8, size=(p, k))
    h2 = np.einsum("ia,ab,ib->i", pattern, phi, pattern)
    pattern *= np.sqrt(np.minimum(1.0, 0.9 / h2))[:, None]
    oblique = ObliqueSolution(pattern=LoadingMatrix(pattern), phi=phi)
    return oblique, gamma
