"""Label and score matrices, their CSV form, alignment and report output.

Matrix CSV layout: header ``clip_id,<class names in taxonomy order>``, one
row per clip, ``.`` decimal separator, ``\\n`` line endings. Score cells are
written with ``repr`` so a write/load round trip is bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import atomic_write
from .errors import AlignmentError, FormatError
from .taxonomy import Taxonomy

__all__ = [
    "ClipMeta",
    "LabelMatrix",
    "ScoreMatrix",
    "load_labels",
    "load_scores",
    "write_labels",
    "write_scores",
    "align",
    "reorder",
    "read_header",
    "write_report",
    "report_to_json",
]


@dataclass(frozen=True)
class ClipMeta:
    clip_id: str
    num_frames: int
    height: int
    width: int

    def __post_init__(self):
        if self.num_frames < 1:
            raise FormatError(f"clip {self.clip_id!r}: num_frames must be >= 1")
        if self.height < 1 or self.width < 1:
            raise FormatError(f"clip {self.clip_id!r}: height and width must be >= 1")


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _check_ids(clip_ids, rows):
    if len(clip_ids) != rows:
        raise FormatError(f"{len(clip_ids)} clip ids for {rows} rows")
    seen = set()
    for cid in clip_ids:
        if cid in seen:
            raise FormatError(f"duplicate clip_id {cid!r}")
        seen.add(cid)


@dataclass(frozen=True, eq=False)
class LabelMatrix:
    """Binary ground truth, clips x classes."""

    clip_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise FormatError("label matrix must be 2-D")
        if not np.all((values == 0) | (values == 1)):
            raise FormatError("label matrix entries must be 0 or 1")
        object.__setattr__(self, "clip_ids", tuple(self.clip_ids))
        _check_ids(self.clip_ids, values.shape[0])
        object.__setattr__(self, "values", _frozen(values, np.int8))

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """One model's real-valued predictions, clips x classes."""

    model_id: str
    clip_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise FormatError(f"score matrix {self.model_id!r} must be 2-D")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise FormatError(f"score matrix {self.model_id!r}: non-finite value at row {r}, column {c}")
        object.__setattr__(self, "clip_ids", tuple(self.clip_ids))
        _check_ids(self.clip_ids, values.shape[0])
        object.__setattr__(self, "values", _frozen(values, np.float64))

    @property
    def shape(self):
        return self.values.shape


def _read_matrix(path, taxonomy: Taxonomy, parse_cell):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8 ({exc})") from None
    rows = list(csv.reader(io.StringIO(text, newline="")))
    rows = [r for r in rows if r]
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    expected = ["clip_id"] + taxonomy.class_names
    if header != expected:
        if not header or header[0] != "clip_id":
            raise FormatError(f"{path}: first header must be 'clip_id'")
        for i, (got, want) in enumerate(zip(header[1:], taxonomy.class_names)):
            if got != want:
                raise FormatError(f"{path}: column {i + 1} is {got!r}, taxonomy expects {want!r}")
        raise FormatError(
            f"{path}: header has {len(header) - 1} classes, taxonomy has {taxonomy.num_classes}"
        )
    width = len(expected)
    clip_ids = []
    values = np.empty((len(rows) - 1, taxonomy.num_classes), dtype=np.float64)
    for r, row in enumerate(rows[1:]):
        line = r + 2
        if len(row) != width:
            raise FormatError(f"{path}:{line}: expected {width} fields, got {len(row)}")
        clip_ids.append(row[0].strip())
        for c, cell in enumerate(row[1:]):
            try:
                values[r, c] = parse_cell(cell.strip())
            except ValueError as exc:
                raise FormatError(
                    f"{path}:{line}: clip {row[0]!r}, class {taxonomy.class_names[c]!r}: {exc}"
                ) from None
    seen = set()
    for cid in clip_ids:
        if cid in seen:
            raise FormatError(f"{path}: duplicate clip_id {cid!r}")
        seen.add(cid)
    return clip_ids, values


def _parse_label(cell: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ValueError(f"non-binary label {cell!r}") from None
    if v != 0.0 and v != 1.0:
        raise ValueError(f"non-binary label {cell!r}")
    return v


def _parse_score(cell: str) -> float:
    v = float(cell)
    if not math.isfinite(v):
        raise ValueError(f"non-finite score {cell!r}")
    return v


def load_labels(path, taxonomy: Taxonomy) -> LabelMatrix:
    clip_ids, values = _read_matrix(path, taxonomy, _parse_label)
    return LabelMatrix(clip_ids, values.astype(np.int8))


def load_scores(path, taxonomy: Taxonomy, model_id: str | None = None) -> ScoreMatrix:
    """Load a score CSV; ``model_id`` defaults to the file stem."""
    clip_ids, values = _read_matrix(path, taxonomy, _parse_score)
    if model_id is None:
        model_id = Path(path).stem
    return ScoreMatrix(model_id, clip_ids, values)


def _matrix_csv(clip_ids, values, taxonomy: Taxonomy, fmt) -> str:
    if values.shape[1] != taxonomy.num_classes:
        raise FormatError(
            f"matrix has {values.shape[1]} classes, taxonomy has {taxonomy.num_classes}"
        )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["clip_id"] + taxonomy.class_names)
    for cid, row in zip(clip_ids, values):
        writer.writerow([cid] + [fmt(v) for v in row])
    return buf.getvalue()


def write_labels(labels: LabelMatrix, path, taxonomy: Taxonomy):
    atomic_write(path, _matrix_csv(labels.clip_ids, labels.values, taxonomy, lambda v: str(int(v))))


def write_scores(scores: ScoreMatrix, path, taxonomy: Taxonomy):
    atomic_write(path, _matrix_csv(scores.clip_ids, scores.values, taxonomy, lambda v: repr(float(v))))


def reorder(s: ScoreMatrix, clip_ids) -> ScoreMatrix:
    """Return ``s`` with rows in the order of ``clip_ids`` (same set required)."""
    clip_ids = tuple(clip_ids)
    if s.clip_ids == clip_ids:
        return s
    order = {cid: i for i, cid in enumerate(clip_ids)}
    present = set(s.clip_ids)
    for cid in clip_ids:
        if cid not in present:
            raise AlignmentError(f"model {s.model_id!r} is missing clip {cid!r}")
    for cid in s.clip_ids:
        if cid not in order:
            raise AlignmentError(f"model {s.model_id!r} has extra clip {cid!r}")
    perm = np.empty(len(order), dtype=np.intp)
    for i, cid in enumerate(s.clip_ids):
        perm[order[cid]] = i
    return ScoreMatrix(s.model_id, clip_ids, s.values[perm])


def align(scores, labels: LabelMatrix):
    """Reorder every score matrix to the label matrix's clip order.

    Returns ``(aligned_scores, labels)``. Matrices already in label order are
    returned as-is.
    """
    out = []
    for s in scores:
        if s.values.shape[1] != labels.values.shape[1]:
            raise AlignmentError(
                f"model {s.model_id!r} has {s.values.shape[1]} classes, labels have {labels.values.shape[1]}"
            )
        out.append(reorder(s, labels.clip_ids))
    return out, labels


def read_header(path) -> list[str]:
    """Class names from a matrix CSV header."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        header = next(csv.reader(fh), None)
    if not header or header[0].strip() != "clip_id":
        raise FormatError(f"{path}: first header must be 'clip_id'")
    return [h.strip() for h in header[1:]]


def report_to_json(report, sampling=None) -> str:
    """Serialize an evaluation report; floats use shortest round-trip repr."""
    obj = report.to_dict()
    if sampling is not None:
        obj["sampling"] = sampling.to_dict() if hasattr(sampling, "to_dict") else sampling
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_report(report, path, sampling=None):
    atomic_write(path, report_to_json(report, sampling))
