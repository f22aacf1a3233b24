"""Instrument loading, response ingestion, and paired-item diagnostics."""

import json

import numpy as np
import pytest

from digestlab import (GeneratorSpec, Instrument, ObservedItem,
                       ResponseMatrix, generate_likert, load_instrument,
                       load_responses, pair_asymmetry, save_responses)


def make_items(n_pairs, prefix="it"):
    items = []
    for i in range(n_pairs):
        items.append(ObservedItem(id=f"{prefix}{2 * i + 1:02d}", text="plus",
                                  pair_id=f"p{i}", polarity="positive"))
        items.append(ObservedItem(id=f"{prefix}{2 * i + 2:02d}", text="minus",
                                  pair_id=f"p{i}", polarity="negative"))
    return tuple(items)


def write_instrument(path, records):
    path.write_text(json.dumps({"items": records}), encoding="utf-8")
    return path


def test_bundled_instrument_shape():
    inst = load_instrument()
    assert inst.n_items == 22
    assert len(inst.pairs()) == 11
    assert len(set(inst.ids)) == 22
    for _, pos, neg in inst.pairs():
        assert pos.polarity == "positive"
        assert neg.polarity == "negative"
        assert pos.text and neg.text


def test_load_instrument_from_file(tmp_path):
    records = [{"id": f"q{i}", "text": f"t{i}", "pair_id": f"p{i // 2}",
                "polarity": "positive" if i % 2 == 0 else "negative"}
               for i in range(4)]
    inst = load_instrument(write_instrument(tmp_path / "inst.json", records))
    assert inst.ids == ["q0", "q1", "q2", "q3"]


def test_duplicate_id_rejected(tmp_path):
    records = [
        {"id": "a", "text": "", "pair_id": "p", "polarity": "positive"},
        {"id": "a", "text": "", "pair_id": "p", "polarity": "negative"},
    ]
    with pytest.raises(ValueError, match="duplicate item id"):
        load_instrument(write_instrument(tmp_path / "dup.json", records))


def test_same_polarity_pair_rejected(tmp_path):
    records = [
        {"id": "a", "text": "", "pair_id": "p", "polarity": "positive"},
        {"id": "b", "text": "", "pair_id": "p", "polarity": "positive"},
    ]
    with pytest.raises(ValueError, match="opposite polarity"):
        load_instrument(write_instrument(tmp_path / "pol.json", records))


def test_odd_item_count_rejected():
    items = make_items(1)[:1]
    with pytest.raises(ValueError, match="odd item count"):
        Instrument(items=items)


def test_pair_with_extra_member_rejected():
    items = make_items(1) + (
        ObservedItem(id="x1", text="", pair_id="p0", polarity="positive"),
        ObservedItem(id="x2", text="", pair_id="q", polarity="negative"),
    )
    with pytest.raises(ValueError, match="expected 2"):
        Instrument(items=items)


def test_bad_polarity_rejected():
    with pytest.raises(ValueError, match="polarity"):
        ObservedItem(id="a", text="", pair_id="p", polarity="both")


def test_load_responses_happy_path(tmp_path):
    inst = Instrument(items=make_items(1))
    csv_path = tmp_path / "r.csv"
    csv_path.write_text("it01,it02\n1,6\n2,5\n3,\n", encoding="utf-8")
    rm = load_responses(csv_path, inst)
    assert rm.n_rows == 3
    assert rm.item_ids == ["it01", "it02"]
    assert np.isnan(rm.values[2, 1])
    assert rm.values[0, 0] == 1 and rm.values[1, 1] == 5


def test_load_responses_reorders_permuted_header(tmp_path):
    inst = Instrument(items=make_items(2))
    csv_path = tmp_path / "r.csv"
    csv_path.write_text("it03,it01,it04,it02\n3,1,4,2\n", encoding="utf-8")
    rm = load_responses(csv_path, inst)
    assert rm.item_ids == ["it01", "it02", "it03", "it04"]
    assert rm.values[0].tolist() == [1.0, 2.0, 3.0, 4.0]


def test_load_responses_out_of_range(tmp_path):
    csv_path = tmp_path / "r.csv"
    csv_path.write_text("a,b\n1,7\n", encoding="utf-8")
    with pytest.raises(ValueError, match=r"row 2.*outside \[1, 6\]"):
        load_responses(csv_path)


def test_load_responses_non_integer(tmp_path):
    csv_path = tmp_path / "r.csv"
    csv_path.write_text("a,b\n1,2.5\n", encoding="utf-8")
    with pytest.raises(ValueError, match="row 2.*non-integer"):
        load_responses(csv_path)


def test_load_responses_ragged_row(tmp_path):
    csv_path = tmp_path / "r.csv"
    csv_path.write_text("a,b\n1,2\n3\n", encoding="utf-8")
    with pytest.raises(ValueError, match="row 3 has 1 cells"):
        load_responses(csv_path)


def test_load_responses_header_mismatch(tmp_path):
    inst = Instrument(items=make_items(1))
    csv_path = tmp_path / "r.csv"
    csv_path.write_text("it01,zz\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="unknown column"):
        load_responses(csv_path, inst)
    csv_path.write_text("it01\n1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="missing item id"):
        load_responses(csv_path, inst)


def test_response_matrix_validation():
    with pytest.raises(ValueError, match="integers"):
        ResponseMatrix(item_ids=["a"], values=np.array([[1.5]]))
    with pytest.raises(ValueError, match=r"\[1, 6\]"):
        ResponseMatrix(item_ids=["a"], values=np.array([[0.0]]))
    with pytest.raises(ValueError, match="does not match"):
        ResponseMatrix(item_ids=["a", "b"], values=np.array([[1.0]]))


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    values = rng.integers(1, 7, size=(20, 4)).astype(float)
    values[rng.random(values.shape) < 0.2] = np.nan
    rm = ResponseMatrix(item_ids=["a", "b", "c", "d"], values=values)
    path = tmp_path / "round.csv"
    save_responses(rm, path)
    assert load_responses(path) == rm


def test_pair_asymmetry_identity_and_mirror():
    inst = Instrument(items=make_items(2))
    base = np.tile(np.arange(1, 7), 5).astype(float)
    values = np.column_stack([base, base, base, 7 - base])
    rm = ResponseMatrix(item_ids=inst.ids, values=values)
    stats = pair_asymmetry(rm, inst)
    assert [s.pair_id for s in stats] == ["p0", "p1"]
    assert stats[0].r == pytest.approx(1.0, abs=1e-12)
    assert stats[0].deviation == pytest.approx(2.0, abs=1e-12)
    assert stats[1].r == pytest.approx(-1.0, abs=1e-12)
    assert stats[1].deviation == pytest.approx(0.0, abs=1e-12)


def test_pair_asymmetry_independent_columns_near_zero():
    # Two unrelated simulated items: r should be small at n = 2000.
    spec = GeneratorSpec(general=np.zeros(2), group=np.zeros((2, 0)),
                         n=2000, seed=42, item_ids=("it01", "it02"))
    rm = generate_likert(spec)
    inst = Instrument(items=make_items(1))
    stats = pair_asymmetry(rm, inst)
    assert stats[0].error is None
    assert abs(stats[0].r) < 0.1


def test_pair_asymmetry_symmetric_in_member_order():
    inst = Instrument(items=make_items(1))
    swapped = Instrument(items=(
        ObservedItem(id="it01", text="", pair_id="p0", polarity="negative"),
        ObservedItem(id="it02", text="", pair_id="p0", polarity="positive"),
    ))
    rng = np.random.default_rng(7)
    values = rng.integers(1, 7, size=(30, 2)).astype(float)
    rm = ResponseMatrix(item_ids=["it01", "it02"], values=values)
    r1 = pair_asymmetry(rm, inst)[0].r
    r2 = pair_asymmetry(rm, swapped)[0].r
    assert r1 == pytest.approx(r2, abs=1e-15)


def test_pair_asymmetry_r_bounded_on_random_data():
    inst = Instrument(items=make_items(3))
    rng = np.random.default_rng(11)
    for _ in range(20):
        values = rng.integers(1, 7, size=(12, 6)).astype(float)
        rm = ResponseMatrix(item_ids=inst.ids, values=values)
        for s in pair_asymmetry(rm, inst):
            if s.error is None:
                assert -1.0 <= s.r <= 1.0
                assert 0.0 <= s.deviation <= 2.0


def test_pair_asymmetry_insufficient_rows_reported_per_pair():
    inst = Instrument(items=make_items(2))
    values = np.array([
        [1, 6, 1, np.nan],
        [2, 5, np.nan, 2],
        [3, 4, 3, np.nan],
        [4, 3, np.nan, 4],
    ], dtype=float)
    rm = ResponseMatrix(item_ids=inst.ids, values=values)
    stats = pair_asymmetry(rm, inst)
    assert stats[0].error is None
    assert "jointly observed" in stats[1].error
    assert np.isnan(stats[1].r)


def test_pair_asymmetry_zero_variance_reported_per_pair():
    inst = Instrument(items=make_items(1))
    values = np.column_stack([np.full(5, 3.0), [1, 2, 3, 4, 5]])
    rm = ResponseMatrix(item_ids=inst.ids, values=values)
    stats = pair_asymmetry(rm, inst)
    assert "zero variance" in stats[0].error
