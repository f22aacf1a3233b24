"""Survey instrument definition, response ingestion, and paired-item diagnostics.

The instrument is a set of 6-point Likert items organized in opposite-meaning
pairs: each substantive feature appears twice, once worded affirmatively and
once worded as its opposite.  Both members of a pair enter the analysis as
separate observed variables (no reverse scoring), which lets the pipeline
quantify how far each pair is from a perfect mirror (r = -1).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

POLARITIES = ("positive", "negative")

#: Likert codes: 6 = strongest agreement ("very much so"),
#: 1 = strongest counter-effect rating.  Cells may be empty (missing).
LIKERT_MIN = 1
LIKERT_MAX = 6


@dataclass(frozen=True)
class ObservedItem:
    """A single observed variable of the instrument."""

    id: str
    text: str
    pair_id: str
    polarity: str

    def __post_init__(self):
        if self.polarity not in POLARITIES:
            raise ValueError(
                f"item {self.id!r}: polarity must be one of {POLARITIES}, "
                f"got {self.polarity!r}"
            )


@dataclass(frozen=True)
class Instrument:
    """An ordered collection of observed items organized in opposite pairs.

    Invariants enforced at construction: item ids are unique, the item count
    is even, and every ``pair_id`` maps to exactly two items of opposite
    polarity.
    """

    items: tuple[ObservedItem, ...]

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        if not items:
            raise ValueError("instrument has no items")
        if len(items) % 2 != 0:
            raise ValueError(f"odd item count: {len(items)}")
        seen = set()
        for item in items:
            if item.id in seen:
                raise ValueError(f"duplicate item id: {item.id!r}")
            seen.add(item.id)
        by_pair: dict[str, list[ObservedItem]] = {}
        for item in items:
            by_pair.setdefault(item.pair_id, []).append(item)
        for pair_id, members in by_pair.items():
            if len(members) != 2:
                raise ValueError(
                    f"pair {pair_id!r} has {len(members)} items, expected 2"
                )
            if members[0].polarity == members[1].polarity:
                raise ValueError(
                    f"pair {pair_id!r} has two {members[0].polarity!r} items; "
                    "members must have opposite polarity"
                )

    @property
    def ids(self) -> list[str]:
        return [item.id for item in self.items]

    @property
    def n_items(self) -> int:
        return len(self.items)

    def pairs(self) -> list[tuple[str, ObservedItem, ObservedItem]]:
        """Pairs in first-appearance order as (pair_id, positive, negative)."""
        order: list[str] = []
        by_pair: dict[str, list[ObservedItem]] = {}
        for item in self.items:
            if item.pair_id not in by_pair:
                order.append(item.pair_id)
            by_pair.setdefault(item.pair_id, []).append(item)
        out = []
        for pair_id in order:
            a, b = by_pair[pair_id]
            if a.polarity != "positive":
                a, b = b, a
            out.append((pair_id, a, b))
        return out


@dataclass(eq=False)
class ResponseMatrix:
    """Respondents x items grid of 6-point ordinal answers.

    ``values`` is a float array of shape (n_rows, n_items); missing cells are
    NaN and present cells are integers in [1, 6].
    """

    item_ids: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D array")
        if self.values.shape[1] != len(self.item_ids):
            raise ValueError(
                f"row length {self.values.shape[1]} does not match "
                f"item count {len(self.item_ids)}"
            )
        present = self.values[np.isfinite(self.values)]
        if present.size:
            if not np.all(present == np.round(present)):
                raise ValueError("present values must be integers")
            if present.min() < LIKERT_MIN or present.max() > LIKERT_MAX:
                raise ValueError(
                    f"values must lie in [{LIKERT_MIN}, {LIKERT_MAX}]"
                )

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_items(self) -> int:
        return self.values.shape[1]

    def column(self, item_id: str) -> np.ndarray:
        return self.values[:, self.item_ids.index(item_id)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResponseMatrix):
            return NotImplemented
        return self.item_ids == other.item_ids and np.array_equal(
            self.values, other.values, equal_nan=True
        )


@dataclass(frozen=True)
class PairStat:
    """Mirror diagnostic for one opposite pair.

    ``r`` is the Pearson correlation between the paired items on jointly
    observed rows and ``deviation`` = r - (-1) measures the distance from an
    exact mirror.  When a pair cannot be evaluated, ``error`` carries the
    reason and r/deviation are NaN.
    """

    pair_id: str
    r: float
    deviation: float
    error: str | None = None


def bundled_instrument_path() -> Path:
    """Path to the packaged 22-item media-digestibility instrument."""
    return Path(str(resources.files("digestlab").joinpath("data/instrument_22.json")))


def load_instrument(path: str | Path | None = None) -> Instrument:
    """Load and validate an instrument definition.

    Parameters
    ----------
    path : str or Path, optional
        JSON file with an ``items`` list of ``{id, text, pair_id, polarity}``
        records.  When omitted, the bundled 22-item instrument is loaded.

    Returns
    -------
    Instrument

    Raises
    ------
    ValueError
        On duplicate ids, same-polarity pairs, odd item counts, or a
        malformed file.
    """
    if path is None:
        path = bundled_instrument_path()
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict) or "items" not in raw:
        raise ValueError(f"{path}: instrument file must be an object with an 'items' list")
    items = []
    for i, rec in enumerate(raw["items"]):
        try:
            items.append(
                ObservedItem(
                    id=str(rec["id"]),
                    text=str(rec.get("text", "")),
                    pair_id=str(rec["pair_id"]),
                    polarity=str(rec["polarity"]),
                )
            )
        except KeyError as exc:
            raise ValueError(f"{path}: item #{i + 1} is missing field {exc}") from None
    return Instrument(items=tuple(items))


def _parse_cell(token: str, row: int, item_id: str) -> float:
    token = token.strip()
    if token == "":
        return math.nan
    try:
        value = int(token)
    except ValueError:
        raise ValueError(
            f"row {row}: column {item_id!r} has non-integer value {token!r}"
        ) from None
    if not LIKERT_MIN <= value <= LIKERT_MAX:
        raise ValueError(
            f"row {row}: column {item_id!r} value {value} outside "
            f"[{LIKERT_MIN}, {LIKERT_MAX}]"
        )
    return float(value)


def load_responses(path: str | Path, instrument: Instrument | None = None) -> ResponseMatrix:
    """Read a responses CSV (header = item ids, one row per respondent).

    Empty cells are recorded as missing.  With an ``instrument``, the header
    must be a permutation of the instrument's ids and columns are reordered
    to instrument order; without one, the header is taken as-is.

    Raises
    ------
    ValueError
        On out-of-range values, unknown or missing columns, or ragged rows.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty responses file") from None
        if len(set(header)) != len(header):
            raise ValueError(f"{path}: duplicate column in header")
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ValueError(
                    f"{path}: row {lineno} has {len(record)} cells, "
                    f"expected {len(header)}"
                )
            rows.append(
                [_parse_cell(tok, lineno, header[j]) for j, tok in enumerate(record)]
            )
    values = np.array(rows, dtype=float).reshape(len(rows), len(header))
    matrix = ResponseMatrix(item_ids=header, values=values)
    if instrument is None:
        return matrix
    unknown = [h for h in header if h not in set(instrument.ids)]
    if unknown:
        raise ValueError(f"{path}: unknown column(s) {unknown}")
    missing = [i for i in instrument.ids if i not in set(header)]
    if missing:
        raise ValueError(f"{path}: header is missing item id(s) {missing}")
    order = [header.index(i) for i in instrument.ids]
    return ResponseMatrix(item_ids=list(instrument.ids), values=values[:, order])


def write_responses(responses: ResponseMatrix, fh) -> None:
    """Write a ResponseMatrix as CSV to an open text stream."""
    writer = csv.writer(fh)
    writer.writerow(responses.item_ids)
    for row in responses.values:
        writer.writerow(
            ["" if not np.isfinite(v) else str(int(v)) for v in row]
        )


def save_responses(responses: ResponseMatrix, path: str | Path) -> None:
    """Write a ResponseMatrix in the CSV format accepted by load_responses."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_responses(responses, fh)


def _pearson_xy(x: np.ndarray, y: np.ndarray) -> float:
    # Definitional product-moment formula on complete data.
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float(xd @ xd) * float(yd @ yd))
    return float(xd @ yd) / denom


def pair_asymmetry(responses: ResponseMatrix, instrument: Instrument) -> list[PairStat]:
    """Quantify how far each opposite pair is from an exact mirror.

    For each pair, the Pearson correlation r between the two items is
    computed on jointly non-missing rows; ``deviation`` = r + 1 is 0 for a
    perfect mirror and 2 for identical columns.  Pairs with fewer than 3
    usable rows or zero variance are reported with an ``error`` instead of
    failing the whole call.
    """
    if responses.item_ids != instrument.ids:
        raise ValueError("responses do not match the instrument item order")
    stats = []
    for pair_id, pos, neg in instrument.pairs():
        x = responses.column(pos.id)
        y = responses.column(neg.id)
        joint = np.isfinite(x) & np.isfinite(y)
        n = int(joint.sum())
        if n < 3:
            stats.append(
                PairStat(pair_id, math.nan, math.nan,
                         error=f"only {n} jointly observed rows (need >= 3)")
            )
            continue
        xj, yj = x[joint], y[joint]
        if np.ptp(xj) == 0 or np.ptp(yj) == 0:
            stats.append(
                PairStat(pair_id, math.nan, math.nan,
                         error="zero variance on jointly observed rows")
            )
            continue
        r = min(1.0, max(-1.0, _pearson_xy(xj, yj)))
        stats.append(PairStat(pair_id, r, r - (-1.0)))
    return stats
