"""Weighted-sum fusion of score matrices and a search for the weights.

Weights live on the probability simplex: mAP only depends on the ranking
of the fused scores, so a positive rescale of all weights changes nothing.

:func:`optimize_weights` is a two-phase derivative-free search. Phase one
scans the simplex lattice with spacing ``grid_step`` (which contains every
vertex, so the result is never worse than the best single model). Phase two
is coordinate ascent with step ``grid_step / 2**r`` in round ``r``.
mAPs are compared as exact rationals; among equal mAPs the
lexicographically smallest weight vector wins.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dataset_io import LabelMatrix, ScoreMatrix
from .errors import AlignmentError, AtomfuseError, WeightsError
from .metrics import evaluate, exact_ap_per_column, exact_mean
from .taxonomy import Taxonomy

__all__ = [
    "FusionWeights",
    "NORMALIZATION_MODES",
    "normalize_scores",
    "fuse",
    "simplex_lattice",
    "optimize_weights",
]

NORMALIZATION_MODES = ("none", "minmax-per-class", "zscore-per-class")
_MODE_ALIASES = {"minmax": "minmax-per-class", "zscore": "zscore-per-class"}
SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class FusionWeights:
    model_ids: tuple[str, ...]
    w: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "model_ids", tuple(self.model_ids))
        object.__setattr__(self, "w", tuple(float(x) for x in self.w))
        if not self.w:
            raise WeightsError("at least one weight is required")
        if len(self.w) != len(self.model_ids):
            raise WeightsError(f"{len(self.w)} weights for {len(self.model_ids)} models")
        if any(not math.isfinite(x) or x < 0 for x in self.w):
            raise WeightsError(f"weights must be finite and non-negative, got {list(self.w)}")
        total = math.fsum(self.w)
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise WeightsError(f"weights must sum to 1, got {total!r}")

    def to_dict(self) -> dict:
        return {"model_ids": list(self.model_ids), "w": list(self.w)}


def normalize_scores(s: ScoreMatrix, mode: str = "none") -> ScoreMatrix:
    mode = _MODE_ALIASES.get(mode, mode)
    if mode == "none":
        return s
    v = s.values
    if mode == "minmax-per-class":
        lo = v.min(axis=0)
        span = v.max(axis=0) - lo
        flat = span == 0
        out = (v - lo) / np.where(flat, 1.0, span)
        out[:, flat] = 0.5
    elif mode == "zscore-per-class":
        mu = v.mean(axis=0)
        sd = v.std(axis=0)
        flat = sd == 0
        out = (v - mu) / np.where(flat, 1.0, sd)
        out[:, flat] = 0.0
    else:
        raise AtomfuseError(f"unknown normalization mode {mode!r}; expected one of {NORMALIZATION_MODES}")
    return ScoreMatrix(s.model_id, s.clip_ids, out)


def _check_aligned(scores):
    if not scores:
        raise AtomfuseError("no score matrices given")
    ref = scores[0]
    for s in scores[1:]:
        if s.clip_ids != ref.clip_ids:
            raise AlignmentError(f"model {s.model_id!r} is not aligned with {ref.model_id!r}")
        if s.values.shape != ref.values.shape:
            raise AlignmentError(
                f"model {s.model_id!r} has shape {s.values.shape}, {ref.model_id!r} has {ref.values.shape}"
            )


def _weighted_sum(stack: np.ndarray, w) -> np.ndarray:
    out = w[0] * stack[0]
    for wm, sm in zip(w[1:], stack[1:]):
        out = out + wm * sm
    return out


def fuse(scores, weights: FusionWeights) -> ScoreMatrix:
    scores = list(scores)
    _check_aligned(scores)
    if len(scores) != len(weights.w):
        raise WeightsError(f"{len(weights.w)} weights for {len(scores)} models")
    ids = tuple(s.model_id for s in scores)
    if ids != weights.model_ids:
        raise WeightsError(f"weights are for models {list(weights.model_ids)}, got {list(ids)}")
    out = _weighted_sum([s.values for s in scores], weights.w)
    return ScoreMatrix("fusion", scores[0].clip_ids, out)


def simplex_lattice(num_models: int, steps: int):
    """All ``k`` with ``k_m >= 0`` and ``sum(k) == steps``, in lexicographic order."""
    if num_models == 1:
        yield (steps,)
        return
    for first in range(steps + 1):
        for rest in simplex_lattice(num_models - 1, steps - first):
            yield (first,) + rest


def _lattice_steps(grid_step: float) -> int:
    if not (0 < grid_step <= 1):
        raise AtomfuseError(f"grid_step must be in (0, 1], got {grid_step}")
    steps = round(1 / grid_step)
    if abs(steps * grid_step - 1) > 1e-9:
        raise AtomfuseError(f"grid_step {grid_step} does not divide 1 into whole steps")
    return steps


def _move(w: tuple, m: int, delta: float) -> tuple | None:
    """Set coordinate ``m`` to ``w[m] + delta`` and rescale the others to keep the sum at 1."""
    target = min(1.0, max(0.0, w[m] + delta))
    if target == w[m]:
        return None
    rest = math.fsum(w) - w[m]
    remaining = 1.0 - target
    n_other = len(w) - 1
    if n_other == 0:
        return None
    if rest > 0:
        new = [x * remaining / rest for x in w]
    else:
        new = [remaining / n_other] * len(w)
    new[m] = target
    return tuple(new)


def _better(score, w, best_score, best_w) -> bool:
    if best_score is None or score > best_score:
        return True
    return score == best_score and w < best_w


def optimize_weights(
    scores,
    labels: LabelMatrix,
    taxonomy: Taxonomy,
    grid_step: float = 0.05,
    refine_rounds: int = 4,
):
    """Search simplex weights that maximize mAP of the fused scores on ``labels``.

    Returns ``(FusionWeights, achieved_map)``.
    """
    scores = list(scores)
    _check_aligned(scores)
    if refine_rounds < 0:
        raise AtomfuseError("refine_rounds must be >= 0")
    if scores[0].clip_ids != labels.clip_ids:
        raise AlignmentError("scores are not aligned with labels; call align() first")
    if labels.values.shape[1] != taxonomy.num_classes or scores[0].values.shape[1] != taxonomy.num_classes:
        raise AlignmentError("class count mismatch between scores, labels and taxonomy")
    if not np.any(labels.values.sum(axis=0) > 0):
        raise AtomfuseError("every class has zero positives; mAP is undefined")
    steps = _lattice_steps(grid_step)
    stack = [s.values for s in scores]
    y = labels.values

    seen: dict[tuple, object] = {}
    ap_cache: dict = {}

    def objective(w: tuple):
        if w not in seen:
            seen[w] = exact_mean(exact_ap_per_column(_weighted_sum(stack, w), y, ap_cache))
        return seen[w]

    best_w, best = None, None
    for k in simplex_lattice(len(scores), steps):
        w = tuple(km / steps for km in k)
        val = objective(w)
        if _better(val, w, best, best_w):
            best_w, best = w, val

    for r in range(1, refine_rounds + 1):
        delta = grid_step / 2**r
        for m in range(len(scores)):
            candidates = [c for c in (_move(best_w, m, -delta), _move(best_w, m, delta)) if c is not None]
            for cand in candidates:
                val = objective(cand)
                if _better(val, cand, best, best_w):
                    best_w, best = cand, val

    weights = FusionWeights(tuple(s.model_id for s in scores), best_w)
    achieved = evaluate(fuse(scores, weights), labels, taxonomy).map
    return weights, achieved
