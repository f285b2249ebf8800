import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atomfuse import (
    AlignmentError,
    FormatError,
    LabelMatrix,
    ScoreMatrix,
    align,
    evaluate,
    load_labels,
    load_scores,
    write_labels,
    write_report,
    write_scores,
)
from atomfuse.dataset_io import ClipMeta
from conftest import make_taxonomy


def csv_file(tmp_path, text, name="m.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_zero_labels(tmp_path, tax2):
    p = csv_file(tmp_path, "clip_id,x,y\na,0,0\nb,0,0\nc,0,0\n")
    m = load_labels(p, tax2)
    assert m.clip_ids == ("a", "b", "c")
    assert m.values.shape == (3, 2) and not m.values.any()


def test_non_binary_label(tmp_path, tax2):
    p = csv_file(tmp_path, "clip_id,x,y\na,0,0.7\n")
    with pytest.raises(FormatError, match="non-binary"):
        load_labels(p, tax2)


@pytest.mark.parametrize(
    "text, message",
    [
        ("clip_id,y,x\na,0,1\n", "column 1"),
        ("clip_id,x\na,0\n", "header has 1 classes"),
        ("id,x,y\na,0,1\n", "clip_id"),
        ("clip_id,x,y\na,0,1\na,1,0\n", "duplicate clip_id 'a'"),
        ("clip_id,x,y\na,0\n", "expected 3 fields"),
        ("", "empty"),
    ],
)
def test_label_file_errors(tmp_path, tax2, text, message):
    with pytest.raises(FormatError, match=message):
        load_labels(csv_file(tmp_path, text), tax2)


def test_taco_scale_labels(tmp_path):
    tax = make_taxonomy({"C": [f"c{i}" for i in range(64)]})
    rng = np.random.default_rng(3)
    m = LabelMatrix([f"v{i:04d}" for i in range(1148)], rng.integers(0, 2, (1148, 64)))
    write_labels(m, tmp_path / "y.csv", tax)
    back = load_labels(tmp_path / "y.csv", tax)
    assert back.values.shape == (1148, 64)
    assert np.array_equal(back.values, m.values)


def test_load_scores_identity(tmp_path, tax2):
    m = load_scores(csv_file(tmp_path, "clip_id,x,y\na,1,0\nb,0,1\n"), tax2, "eye")
    assert m.model_id == "eye"
    assert m.values.tolist() == [[1.0, 0.0], [0.0, 1.0]]


@pytest.mark.parametrize("token", ["NaN", "nan", "inf", "-Infinity"])
def test_non_finite_score(tmp_path, tax2, token):
    with pytest.raises(FormatError, match="non-finite"):
        load_scores(csv_file(tmp_path, f"clip_id,x,y\na,{token},0\n"), tax2)


def test_model_id_defaults_to_stem(tmp_path, tax2):
    p = csv_file(tmp_path, "clip_id,x,y\na,0.5,1e-3\n", name="x3d_l.csv")
    assert load_scores(p, tax2).model_id == "x3d_l"


def test_matrix_invariants():
    with pytest.raises(FormatError):
        ScoreMatrix("m", ["a"], np.array([[np.nan]]))
    with pytest.raises(FormatError):
        LabelMatrix(["a", "b"], np.array([[1]]))
    with pytest.raises(FormatError):
        LabelMatrix(["a"], np.array([[2]]))
    with pytest.raises(FormatError):
        ClipMeta("a", 0, 512, 1536)
    m = ScoreMatrix("m", ["a"], np.array([[0.5]]))
    with pytest.raises(ValueError):
        m.values[0, 0] = 1.0


def test_align_swaps_rows(tax2):
    labels = LabelMatrix(["a", "b"], np.array([[1, 0], [0, 1]]))
    s = ScoreMatrix("m", ["b", "a"], np.array([[0.2, 0.8], [0.9, 0.1]]))
    (out,), lab = align([s], labels)
    assert out.clip_ids == ("a", "b")
    assert out.values.tolist() == [[0.9, 0.1], [0.2, 0.8]]
    assert lab is labels


def test_align_identity_and_idempotence():
    labels = LabelMatrix(["a", "b", "c"], np.eye(3, dtype=int))
    s = ScoreMatrix("m", ["c", "a", "b"], np.arange(9.0).reshape(3, 3))
    once, _ = align([s], labels)
    twice, _ = align(once, labels)
    assert twice[0] is once[0]
    assert np.array_equal(once[0].values, twice[0].values)


def test_align_missing_clip():
    labels = LabelMatrix(["a", "b"], np.array([[1], [0]]))
    s = ScoreMatrix("x3d", ["b", "z"], np.array([[0.1], [0.2]]))
    with pytest.raises(AlignmentError, match=r"x3d.*'a'"):
        align([s], labels)
    extra = ScoreMatrix("sf", ["a", "b", "c"], np.zeros((3, 1)))
    with pytest.raises(AlignmentError, match=r"sf.*extra clip 'c'"):
        align([extra], labels)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.data())
def test_score_round_trip_bit_exact(tmp_path_factory, n, c, data):
    values = np.array(data.draw(st.lists(st.lists(finite, min_size=c, max_size=c), min_size=n, max_size=n)))
    tax = make_taxonomy({"G": [f"k{i}" for i in range(c)]})
    m = ScoreMatrix("m", [f"clip {i}" for i in range(n)], values)
    path = tmp_path_factory.mktemp("rt") / "s.csv"
    write_scores(m, path, tax)
    back = load_scores(path, tax, "m")
    assert back.clip_ids == m.clip_ids
    assert back.values.tobytes() == m.values.tobytes()


def test_report_round_trip(tmp_path, tax4):
    rng = np.random.default_rng(0)
    ids = [f"c{i}" for i in range(20)]
    y = rng.integers(0, 2, (20, 4))
    y[:, 3] = 0
    report = evaluate(ScoreMatrix("m", ids, rng.random((20, 4))), LabelMatrix(ids, y), tax4)
    write_report(report, tmp_path / "r.json")
    obj = json.loads((tmp_path / "r.json").read_text())
    assert set(obj) == {"map", "map_per_group", "ap_per_class", "excluded_classes"}
    assert obj["map"] == report.map
    assert obj["ap_per_class"] == report.ap_per_class
    assert obj["ap_per_class"]["p1"] is None
    assert obj["excluded_classes"] == ["p1"]
    assert obj["map_per_group"] == report.map_per_group


def test_report_embeds_sampling(tmp_path, tax2):
    from atomfuse import plan_fixed

    ids = ["a", "b"]
    report = evaluate(ScoreMatrix("m", ids, np.eye(2)), LabelMatrix(ids, np.eye(2, dtype=int)), tax2)
    write_report(report, tmp_path / "r.json", sampling=plan_fixed(32, 16))
    obj = json.loads((tmp_path / "r.json").read_text())
    assert obj["sampling"]["indices"] == list(range(1, 32, 2))


def test_failed_write_leaves_target_untouched(tmp_path, tax2, monkeypatch):
    import os

    target = tmp_path / "s.csv"
    target.write_text("previous", encoding="utf-8")
    m = ScoreMatrix("m", ["a"], np.array([[0.1, 0.2]]))

    def boom(src, dst):
        raise OSError("killed")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        write_scores(m, target, tax2)
    assert target.read_text(encoding="utf-8") == "previous"
    assert [p.name for p in tmp_path.iterdir()] == ["s.csv"]
