"""Digestion-efficiency scoring.

The score rho of a piece of content is a convex combination of per-factor
subjective evaluations ev(F_i) in [0, 1], weighted by normalized
group-factor reliabilities.  Four built-in weight presets (media labels A
through D) ship with the package; weights can also be derived from any
fitted ReliabilityReport.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .bifactor import ReliabilityReport

#: Weight sets are renormalized at load when their sum misses 1 by more
#: than this (presets with tiny rounding slack are kept as printed).
NORMALIZATION_SLACK = 1e-9

MEDIA_LABELS = ("A", "B", "C", "D")

_PRESETS = {
    "A": (("未開拓性", 0.272), ("簡潔性", 0.360), ("親密性", 0.378)),
    "B": (("網羅性", 0.384), ("簡潔性", 0.312), ("結論へのアクセス性", 0.304)),
    "C": (("親密性", 0.279), ("簡潔性", 0.400), ("未開拓性", 0.321)),
    "D": (("説明可能性", 0.557), ("簡潔性", 0.443)),
}


@dataclass(frozen=True)
class FactorWeightSet:
    """Named nonnegative weights over group factors, summing to 1.

    Entries keep their given order.  If the raw weights miss a unit sum by
    more than NORMALIZATION_SLACK they are divided by their sum once at
    construction; weights already summing to 1 are stored untouched.
    """

    label: str
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("a weight set needs at least one factor")
        names = [n for n, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("factor names must be unique")
        w = np.array([float(v) for _, v in self.entries])
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        total = float(np.sum(w))
        if total <= 0.0:
            raise ValueError("weights must not all be zero")
        if abs(total - 1.0) > NORMALIZATION_SLACK:
            w = w / total
        object.__setattr__(
            self, "entries",
            tuple((n, float(v)) for n, v in zip(names, w)))

    @property
    def factor_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.entries)

    @property
    def weights(self) -> np.ndarray:
        return np.array([v for _, v in self.entries])

    def as_dict(self) -> dict[str, float]:
        return dict(self.entries)


@dataclass(frozen=True)
class EvaluationSheet:
    """Raters x factors grid of subjective evaluations in [0, 1]."""

    factor_names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        names = tuple(self.factor_names)
        if len(set(names)) != len(names) or not names:
            raise ValueError("factor names must be nonempty and unique")
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != len(names):
            raise ValueError("values must be raters x factors")
        if v.shape[0] < 1:
            raise ValueError("at least one rater is required")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("every evaluation must lie in [0, 1]")
        object.__setattr__(self, "factor_names", names)
        object.__setattr__(self, "values", v)

    @property
    def n_raters(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class DigestionScore:
    """rho plus its per-factor breakdown; rho is the exact sum."""

    rho: float
    contributions: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if abs(self.rho - sum(c for _, c in self.contributions)) > 1e-12:
            raise ValueError("rho must equal the sum of contributions")
        if not -1e-9 <= self.rho <= 1.0 + 1e-9:
            raise ValueError("rho must lie in [0, 1]")


def builtin_weights(media: str) -> FactorWeightSet:
    """Weight preset for one of the media labels A, B, C, or D.

    B, C, and D are stored exactly as printed (their coefficients sum to
    1.000); A's printed coefficients sum to 1.010 and are divided by that
    sum at construction.
    """
    if media not in _PRESETS:
        raise ValueError(
            f"unknown media label {media!r}; expected one of "
            f"{', '.join(MEDIA_LABELS)}")
    return FactorWeightSet(label=media, entries=_PRESETS[media])


def weights_from_report(report: ReliabilityReport, factor_names,
                        label: str = "fitted") -> FactorWeightSet:
    """Normalize a report's omega_group values into factor weights.

    w_i = omega_group(i) / sum_j omega_group(j); invariant under positive
    rescaling of the omegas.

    Raises
    ------
    ValueError
        If every omega_group is zero, or the name count mismatches.
    """
    names = tuple(factor_names)
    if len(names) != report.k:
        raise ValueError(f"expected {report.k} factor names, got {len(names)}")
    if sum(report.omega_group) <= 0.0:
        raise ValueError("cannot derive weights: all omega_group values are zero")
    return FactorWeightSet(label=label,
                           entries=tuple(zip(names, report.omega_group)))


def load_evaluations(path: str | Path) -> EvaluationSheet:
    """Read an evaluation sheet: CSV header = factor names, one row per rater."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty evaluation sheet") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row {lineno} has {len(row)} cells, "
                    f"expected {len(header)}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise ValueError(
                    f"{path}: row {lineno} contains a non-numeric cell"
                ) from None
    if not rows:
        raise ValueError(f"{path}: no rater rows")
    return EvaluationSheet(factor_names=tuple(header), values=np.array(rows))


def load_weight_set(path: str | Path) -> FactorWeightSet:
    """Read a weight set from JSON: {"label": ..., "weights": {name: w}}."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        label = raw["label"]
        weights = raw["weights"]
    except (TypeError, KeyError):
        raise ValueError(
            f"{path}: expected an object with 'label' and 'weights'") from None
    if isinstance(weights, Mapping):
        entries = tuple((str(n), float(v)) for n, v in weights.items())
    else:
        entries = tuple((str(n), float(v)) for n, v in weights)
    return FactorWeightSet(label=str(label), entries=entries)


def average_evaluations(sheet: EvaluationSheet) -> dict[str, float]:
    """Per-factor arithmetic mean across raters, keyed by factor name."""
    means = sheet.values.mean(axis=0)
    return {n: float(m) for n, m in zip(sheet.factor_names, means)}


def score(weights: FactorWeightSet, ev: Mapping[str, float]) -> DigestionScore:
    """Digestion efficiency rho = sum_i w_i * ev(F_i).

    ``ev`` must provide exactly the weight set's factor names (any order);
    contributions are reported in the weight set's order.

    Raises
    ------
    ValueError
        On a factor-name mismatch or an evaluation outside [0, 1].
    """
    missing = set(weights.factor_names) - set(ev)
    extra = set(ev) - set(weights.factor_names)
    if missing or extra:
        parts = []
        if missing:
            parts.append("missing: " + ", ".join(sorted(missing)))
        if extra:
            parts.append("unexpected: " + ", ".join(sorted(extra)))
        raise ValueError("evaluation factors do not match the weight set "
                         f"({'; '.join(parts)})")
    for name in weights.factor_names:
        if not 0.0 <= float(ev[name]) <= 1.0:
            raise ValueError(f"evaluation for {name!r} must lie in [0, 1], "
                             f"got {ev[name]}")
    contributions = tuple(
        (name, w * float(ev[name])) for name, w in weights.entries)
    return DigestionScore(rho=sum(c for _, c in contributions),
                          contributions=contributions)
