"""Average precision and the mAP family (overall and per agent group).

AP is the non-interpolated finite sum: rank clips by descending score, and
average the precision at the rank of every positive clip. Equal scores are
ordered by clip position, so results are deterministic. A class with no
positive clip has undefined AP (``None``) and is left out of every mean.

APs and their means are accumulated as exact rationals and rounded to float
once, so e.g. precisions 1/1 and 2/3 give exactly ``5/6``. Comparisons in
the fusion weight search use the exact values too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dataset_io import LabelMatrix, ScoreMatrix
from .errors import AlignmentError, AtomfuseError
from .taxonomy import Taxonomy

__all__ = [
    "EvalReport",
    "average_precision",
    "exact_ap_per_column",
    "exact_mean",
    "evaluate",
]


def _ranked_hits(scores, labels) -> np.ndarray:
    """Boolean ``(C, N)``: is the clip at each rank positive, per class."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 2:
        raise AlignmentError(f"score shape {scores.shape} does not match label shape {labels.shape}")
    if not np.all(np.isfinite(scores)):
        raise AtomfuseError("scores must be finite")
    order = np.argsort(-scores.T, axis=1, kind="stable")
    return np.take_along_axis(labels.T != 0, order, axis=1)


def _exact_ap(hit_row: np.ndarray) -> Fraction | None:
    ranks = (np.flatnonzero(hit_row) + 1).tolist()
    if not ranks:
        return None
    denom = math.lcm(*ranks)
    # sum over positives of (positives so far) / rank
    num = sum(j * (denom // k) for j, k in enumerate(ranks, 1))
    return Fraction(num, denom * len(ranks))


def exact_ap_per_column(scores, labels, cache: dict | None = None) -> list:
    """Exact AP (``Fraction`` or ``None``) of every column of an ``(N, C)`` matrix.

    ``cache`` maps a ranked-hit pattern to its AP and may be shared across
    calls on the same labels.
    """
    out = []
    for row in _ranked_hits(scores, labels):
        if cache is None:
            out.append(_exact_ap(row))
            continue
        key = np.packbits(row).tobytes() + len(row).to_bytes(8, "little")
        if key not in cache:
            cache[key] = _exact_ap(row)
        out.append(cache[key])
    return out


def exact_mean(values) -> Fraction | None:
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return sum(defined, Fraction(0)) / len(defined)


def _to_float(v):
    return None if v is None else float(v)


def average_precision(scores, labels) -> float | None:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or labels.ndim != 1:
        raise AtomfuseError("average_precision expects 1-D vectors")
    if scores.shape != labels.shape:
        raise AlignmentError(f"{scores.size} scores for {labels.size} labels")
    return _to_float(exact_ap_per_column(scores[:, None], labels[:, None])[0])


@dataclass(frozen=True)
class EvalReport:
    ap_per_class: dict
    map: float | None
    map_per_group: dict
    excluded_classes: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "map": self.map,
            "map_per_group": dict(self.map_per_group),
            "ap_per_class": dict(self.ap_per_class),
            "excluded_classes": list(self.excluded_classes),
        }


def evaluate(scores: ScoreMatrix, labels: LabelMatrix, taxonomy: Taxonomy) -> EvalReport:
    if scores.clip_ids != labels.clip_ids:
        for i, (a, b) in enumerate(zip(scores.clip_ids, labels.clip_ids)):
            if a != b:
                raise AlignmentError(
                    f"model {scores.model_id!r}: row {i} is clip {a!r}, labels have {b!r}; call align() first"
                )
        raise AlignmentError(
            f"model {scores.model_id!r} has {len(scores.clip_ids)} clips, labels have {len(labels.clip_ids)}"
        )
    c = taxonomy.num_classes
    if scores.values.shape[1] != c or labels.values.shape[1] != c:
        raise AlignmentError(
            f"class count mismatch: scores {scores.values.shape[1]}, labels {labels.values.shape[1]}, taxonomy {c}"
        )
    aps = exact_ap_per_column(scores.values, labels.values)
    names = taxonomy.class_names
    per_group = {
        gid: _to_float(exact_mean([aps[i] for i in idx])) for gid, idx in taxonomy.partition().items()
    }
    return EvalReport(
        ap_per_class={name: _to_float(ap) for name, ap in zip(names, aps)},
        map=_to_float(exact_mean(aps)),
        map_per_group=per_group,
        excluded_classes=tuple(name for name, ap in zip(names, aps) if ap is None),
    )
