"""Deterministic synthetic data from a bifactor population model.

Scores are built as x_j = lambda_gj * g + sum_i lambda_ij * f_i +
sqrt(psi_j) * e_j from independent standard-normal draws, optionally
discretized into 6 ordinal categories.  Streams come from numpy's
``default_rng`` (PCG64) with a fixed draw order -- general scores first,
then group scores, then noise -- so identical specs give bit-identical
data on any platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .instrument import ResponseMatrix

__all__ = [
    "GeneratorSpec", "load_generator_spec", "default_thresholds",
    "skewed_thresholds", "generate_continuous", "generate_likert",
]


def default_thresholds() -> np.ndarray:
    """Equiprobable 6-category cuts: normal quantiles at i/6, i = 1..5."""
    return norm.ppf(np.arange(1, 6) / 6.0)


def skewed_thresholds() -> np.ndarray:
    """Right-skewed preset (cumulative 0.40/0.65/0.82/0.92/0.975).

    Piles mass into the low categories, for robustness checks of the
    ordinal estimators under asymmetric marginals.
    """
    return norm.ppf(np.array([0.40, 0.65, 0.82, 0.92, 0.975]))


@dataclass(frozen=True)
class GeneratorSpec:
    """Population bifactor model plus sampling settings.

    Parameters
    ----------
    general : array_like, shape (p,)
        General-factor loadings lambda_g.
    group : array_like, shape (p, k)
        Group-factor loadings; k may be 0.
    n : int
        Rows to generate.
    seed : int
        Seed for the pseudorandom stream.
    thresholds : array_like or None
        Discretization cuts: either 5 shared values or a (p, 5) grid, each
        row strictly increasing.  None selects the equiprobable default.
    item_ids : sequence of str or None
        Column names for generated ResponseMatrix values; None yields
        v01, v02, ...
    """

    general: np.ndarray
    group: np.ndarray
    n: int
    seed: int
    thresholds: np.ndarray | None = None
    item_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.general, dtype=float))
        G = np.asarray(self.group, dtype=float)
        if G.ndim == 1:
            G = G[:, None]
        p = g.shape[0]
        if g.ndim != 1 or p < 1:
            raise ValueError("general must be a nonempty vector")
        if G.ndim != 2 or G.shape[0] != p:
            raise ValueError("group must be a p x k matrix")
        if max(np.max(np.abs(g)), np.max(np.abs(G), initial=0.0)) > 1.0:
            raise ValueError("loadings must lie in [-1, 1]")
        psi = 1.0 - g**2 - np.sum(G**2, axis=1)
        if np.min(psi) < -1e-12:
            j = int(np.argmin(psi))
            raise ValueError(
                f"negative implied uniqueness for item {j}: psi={psi[j]:.6f}")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        t = self.thresholds
        if t is not None:
            t = np.asarray(t, dtype=float)
            if t.shape == (5,):
                t = np.tile(t, (p, 1))
            if t.shape != (p, 5):
                raise ValueError("thresholds must be 5 values or a (p, 5) grid")
            if np.any(np.diff(t, axis=1) <= 0.0):
                raise ValueError("thresholds must be strictly increasing")
        ids = self.item_ids
        if ids is not None:
            ids = tuple(str(i) for i in ids)
            if len(ids) != p or len(set(ids)) != p:
                raise ValueError("item_ids must be p unique names")
        object.__setattr__(self, "general", g)
        object.__setattr__(self, "group", G)
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "item_ids", ids)

    @property
    def p(self) -> int:
        return self.general.shape[0]

    @property
    def k(self) -> int:
        return self.group.shape[1]

    @property
    def uniqueness(self) -> np.ndarray:
        return np.clip(1.0 - self.general**2 - np.sum(self.group**2, axis=1),
                       0.0, 1.0)

    def resolved_item_ids(self) -> list[str]:
        if self.item_ids is not None:
            return list(self.item_ids)
        width = max(2, len(str(self.p)))
        return [f"v{j + 1:0{width}d}" for j in range(self.p)]

    def with_overrides(self, n: int | None = None,
                       seed: int | None = None) -> "GeneratorSpec":
        kwargs = {}
        if n is not None:
            kwargs["n"] = n
        if seed is not None:
            kwargs["seed"] = seed
        return replace(self, **kwargs) if kwargs else self


def load_generator_spec(path: str | Path) -> GeneratorSpec:
    """Read a GeneratorSpec from JSON.

    Required keys: general, group, n, seed; optional: thresholds, item_ids.
    """
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: generator spec must be a JSON object")
    missing = [key for key in ("general", "group", "n", "seed")
               if key not in raw]
    if missing:
        raise ValueError(f"{path}: missing generator key(s) "
                         + ", ".join(missing))
    return GeneratorSpec(
        general=raw["general"], group=raw["group"],
        n=int(raw["n"]), seed=int(raw["seed"]),
        thresholds=raw.get("thresholds"), item_ids=raw.get("item_ids"))


def generate_continuous(spec: GeneratorSpec) -> np.ndarray:
    """Standardized continuous scores, shape (n, p).

    Draw order within the seeded stream: general scores g (n values),
    group scores F (n x k), then noise E (n x p).
    """
    rng = np.random.default_rng(spec.seed)
    g = rng.standard_normal(spec.n)
    F = rng.standard_normal((spec.n, spec.k))
    E = rng.standard_normal((spec.n, spec.p))
    return (np.outer(g, spec.general) + F @ spec.group.T
            + E * np.sqrt(spec.uniqueness))


def generate_likert(spec: GeneratorSpec) -> ResponseMatrix:
    """Generated 6-category responses: continuous scores cut at thresholds.

    Category = 1 + number of cuts at or below the score, so the mapping is
    monotone and the default cuts make all six categories equiprobable.
    """
    scores = generate_continuous(spec)
    cuts = spec.thresholds
    if cuts is None:
        cuts = np.tile(default_thresholds(), (spec.p, 1))
    cats = np.empty_like(scores)
    for j in range(spec.p):
        cats[:, j] = np.searchsorted(cuts[j], scores[:, j], side="right") + 1
    return ResponseMatrix(item_ids=spec.resolved_item_ids(), values=cats)
