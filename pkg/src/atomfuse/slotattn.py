"""Forward pass of an action-slot head: iterative slot attention over a
clip's feature grid, one dedicated slot per class plus optional background
slots, and a per-slot logistic readout.

Weights come from an ``ATSL1`` archive (see :mod:`atomfuse.archive`).
Matrices are stored ``(in, out)`` so a projection is ``x @ W``. Tensors:

=====================  ============  ==========================
name                   shape         role
=====================  ============  ==========================
input_proj.weight      (D_in, D)     feature projection
input_proj.bias        (D,)
norm_inputs.weight     (D,)          layer norm on projected features
norm_inputs.bias       (D,)
norm_slots.weight      (D,)          layer norm before queries
norm_slots.bias        (D,)
to_q.weight            (D, D)
to_k.weight            (D, D)
to_v.weight            (D, D)
slots_init             (S, D)        learned slot starting states
gru.weight_ih          (D, 3D)       gates ordered reset, update, new
gru.weight_hh          (D, 3D)
gru.bias_ih            (3D,)
gru.bias_hh            (3D,)
readout.weight         (S, D)        one readout vector per slot
readout.bias           (S,)
=====================  ============  ==========================

Archive ``meta`` carries ``iterations`` (default 3) and ``num_background``
(default 0). The first ``S - num_background`` slots are class slots.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .archive import read_archive, write_archive
from .dataset_io import ScoreMatrix
from .errors import AtomfuseError, FormatError, ShapeError
from .taxonomy import Taxonomy

__all__ = [
    "SlotModelParams",
    "SlotOutput",
    "TENSOR_NAMES",
    "load_model",
    "save_model",
    "init_params",
    "load_features",
    "save_features",
    "slot_attention_forward",
    "predict_multilabel",
    "score_clips",
]

TENSOR_NAMES = (
    "input_proj.weight",
    "input_proj.bias",
    "norm_inputs.weight",
    "norm_inputs.bias",
    "norm_slots.weight",
    "norm_slots.bias",
    "to_q.weight",
    "to_k.weight",
    "to_v.weight",
    "slots_init",
    "gru.weight_ih",
    "gru.weight_hh",
    "gru.bias_ih",
    "gru.bias_hh",
    "readout.weight",
    "readout.bias",
)

LN_EPS = 1e-5
DENOM_FLOOR = 1e-8
_PROB_EPS = np.finfo(np.float64).eps


def _expected_shapes(d_in, d, s):
    return {
        "input_proj.weight": (d_in, d),
        "input_proj.bias": (d,),
        "norm_inputs.weight": (d,),
        "norm_inputs.bias": (d,),
        "norm_slots.weight": (d,),
        "norm_slots.bias": (d,),
        "to_q.weight": (d, d),
        "to_k.weight": (d, d),
        "to_v.weight": (d, d),
        "slots_init": (s, d),
        "gru.weight_ih": (d, 3 * d),
        "gru.weight_hh": (d, 3 * d),
        "gru.bias_ih": (3 * d,),
        "gru.bias_hh": (3 * d,),
        "readout.weight": (s, d),
        "readout.bias": (s,),
    }


@dataclass(frozen=True, eq=False)
class SlotModelParams:
    tensors: dict
    iterations: int = 3
    num_background: int = 0

    def __post_init__(self):
        missing = [n for n in TENSOR_NAMES if n not in self.tensors]
        if missing:
            raise ShapeError(f"missing tensor(s): {', '.join(missing)}")
        unknown = sorted(set(self.tensors) - set(TENSOR_NAMES))
        if unknown:
            raise ShapeError(f"unexpected tensor(s): {', '.join(unknown)}")
        t = {n: np.asarray(self.tensors[n], dtype=np.float32) for n in TENSOR_NAMES}
        w_in = t["input_proj.weight"]
        init = t["slots_init"]
        if w_in.ndim != 2:
            raise ShapeError(f"input_proj.weight must be 2-D, got shape {w_in.shape}")
        if init.ndim != 2:
            raise ShapeError(f"slots_init must be 2-D, got shape {init.shape}")
        d_in, d = w_in.shape
        s = init.shape[0]
        if d < 1 or d_in < 1 or s < 1:
            raise ShapeError("input_dim, slot_dim and num_slots must be >= 1")
        if init.shape[1] != d:
            raise ShapeError(f"slots_init has width {init.shape[1]}, expected slot_dim {d}")
        for name, shape in _expected_shapes(d_in, d, s).items():
            if t[name].shape != shape:
                raise ShapeError(f"tensor {name!r} has shape {t[name].shape}, expected {shape}")
        for name, arr in t.items():
            if not np.all(np.isfinite(arr)):
                raise ShapeError(f"tensor {name!r} contains non-finite values")
            arr.setflags(write=False)
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ShapeError(f"iterations must be a positive integer, got {self.iterations}")
        if int(self.num_background) != self.num_background or not 0 <= self.num_background < s:
            raise ShapeError(f"num_background must be in [0, {s - 1}], got {self.num_background}")
        object.__setattr__(self, "tensors", t)
        object.__setattr__(self, "iterations", int(self.iterations))
        object.__setattr__(self, "num_background", int(self.num_background))

    @property
    def input_dim(self) -> int:
        return self.tensors["input_proj.weight"].shape[0]

    @property
    def slot_dim(self) -> int:
        return self.tensors["input_proj.weight"].shape[1]

    @property
    def num_slots(self) -> int:
        return self.tensors["slots_init"].shape[0]

    @property
    def num_classes(self) -> int:
        return self.num_slots - self.num_background

    def meta(self) -> dict:
        return {"iterations": self.iterations, "num_background": self.num_background}


@dataclass(frozen=True, eq=False)
class SlotOutput:
    slot_states: np.ndarray  # (S, D)
    attention: tuple  # one (S, L) map per iteration
    class_probs: np.ndarray  # (C,)


def load_model(path) -> SlotModelParams:
    tensors, meta = read_archive(path)
    try:
        return SlotModelParams(
            tensors,
            iterations=meta.get("iterations", 3),
            num_background=meta.get("num_background", 0),
        )
    except ShapeError as exc:
        raise ShapeError(f"{path}: {exc}") from None


def save_model(params: SlotModelParams, path):
    write_archive(path, {n: params.tensors[n] for n in TENSOR_NAMES}, params.meta())


def init_params(num_classes, slot_dim, input_dim, iterations=3, num_background=0, seed=0, scale=None):
    """Random parameters for tests and demos (the head is never trained here)."""
    rng = np.random.default_rng(seed)
    s, d = num_classes + num_background, slot_dim
    scale_d = 1.0 / np.sqrt(d) if scale is None else scale
    scale_in = 1.0 / np.sqrt(input_dim) if scale is None else scale
    t = {}
    for name, shape in _expected_shapes(input_dim, d, s).items():
        if name.endswith("bias"):
            arr = 0.1 * rng.standard_normal(shape)
        elif name.startswith("norm_") and name.endswith("weight"):
            arr = 1.0 + 0.1 * rng.standard_normal(shape)
        else:
            arr = rng.standard_normal(shape) * (scale_in if name == "input_proj.weight" else scale_d)
        t[name] = arr.astype(np.float32)
    return SlotModelParams(t, iterations=iterations, num_background=num_background)


def _layer_norm(x, gamma, beta):
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + LN_EPS) * gamma + beta


def _sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _gru(x, h, w_ih, w_hh, b_ih, b_hh):
    d = h.shape[-1]
    gi = x @ w_ih + b_ih
    gh = h @ w_hh + b_hh
    r = _sigmoid(gi[:, :d] + gh[:, :d])
    z = _sigmoid(gi[:, d : 2 * d] + gh[:, d : 2 * d])
    n = np.tanh(gi[:, 2 * d :] + r * gh[:, 2 * d :])
    return (1.0 - z) * n + z * h


def slot_attention_forward(features, params: SlotModelParams) -> SlotOutput:
    """Run the slot-attention iterations on one clip's ``(L, D_in)`` features."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] < 1:
        raise ShapeError(f"features must have shape (L, D_in) with L >= 1, got {f.shape}")
    if f.shape[1] != params.input_dim:
        raise ShapeError(f"features have dim {f.shape[1]}, model expects {params.input_dim}")
    if not np.all(np.isfinite(f)):
        raise AtomfuseError("features contain non-finite values")
    t = {n: a.astype(np.float64) for n, a in params.tensors.items()}
    d = params.slot_dim

    x = f @ t["input_proj.weight"] + t["input_proj.bias"]
    x = _layer_norm(x, t["norm_inputs.weight"], t["norm_inputs.bias"])
    k = x @ t["to_k.weight"]
    v = x @ t["to_v.weight"]

    slots = t["slots_init"].copy()
    maps = []
    for _ in range(params.iterations):
        q = _layer_norm(slots, t["norm_slots.weight"], t["norm_slots.bias"]) @ t["to_q.weight"]
        logits = (q @ k.T) / np.sqrt(d)  # (S, L)
        logits = logits - logits.max(axis=0, keepdims=True)
        e = np.exp(logits)
        attn = e / e.sum(axis=0, keepdims=True)  # softmax across slots
        maps.append(attn)
        weights = attn / np.maximum(attn.sum(axis=1, keepdims=True), DENOM_FLOOR)
        updates = weights @ v
        slots = _gru(updates, slots, t["gru.weight_ih"], t["gru.weight_hh"], t["gru.bias_ih"], t["gru.bias_hh"])

    logit = np.einsum("sd,sd->s", slots, t["readout.weight"]) + t["readout.bias"]
    probs = _sigmoid(logit[: params.num_classes])
    probs = np.clip(probs, _PROB_EPS, 1.0 - _PROB_EPS)
    return SlotOutput(slots, tuple(maps), probs)


def predict_multilabel(features, params: SlotModelParams, taxonomy: Taxonomy) -> np.ndarray:
    """One score row (length C) for a clip."""
    if params.num_classes != taxonomy.num_classes:
        raise ShapeError(
            f"model has {params.num_classes} class slots, taxonomy has {taxonomy.num_classes} classes"
        )
    return slot_attention_forward(features, params).class_probs


def score_clips(clips, params: SlotModelParams, taxonomy: Taxonomy, model_id="slot") -> ScoreMatrix:
    """Score ``{clip_id: features}`` (in iteration order) into a ScoreMatrix."""
    ids = list(clips)
    rows = [predict_multilabel(clips[cid], params, taxonomy) for cid in ids]
    values = np.array(rows).reshape(len(ids), taxonomy.num_classes)
    return ScoreMatrix(model_id, ids, values)


def save_features(features, path):
    write_archive(path, {"features": np.asarray(features)})


def load_features(path) -> np.ndarray:
    tensors, _ = read_archive(path)
    if "features" not in tensors:
        raise FormatError(f"{path}: archive has no tensor named 'features'")
    f = tensors["features"]
    if f.ndim != 2:
        raise FormatError(f"{path}: features must be 2-D (L, D_in), got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise FormatError(f"{path}: features contain non-finite values")
    return f


def load_feature_dir(directory) -> dict:
    """Load every ``*.atsl`` file in ``directory``; clip id = file stem, sorted."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FormatError(f"{directory}: not a directory")
    files = sorted(directory.glob("*.atsl"))
    if not files:
        raise FormatError(f"{directory}: no .atsl feature files")
    return {p.stem: load_features(p) for p in files}
