"""Temporal frame-index plans and spatial resolution plans.

Nothing here touches pixels; plans only describe which frames to take and
how a frame would be rescaled.

Temporal plans split a clip of ``source_len`` frames into ``target_len``
equal segments. :func:`plan_fixed` takes the frame at each segment's
center and is used for validation and test. :func:`plan_jitter` draws one
frame uniformly inside each segment from NumPy's PCG64 generator seeded
with the given seed, for training-time variation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AtomfuseError

__all__ = [
    "SamplingPlan",
    "ResolutionPlan",
    "plan_fixed",
    "plan_jitter",
    "segment_bounds",
    "plan_resolution",
    "DEFAULT_TARGET_LEN",
]

DEFAULT_TARGET_LEN = 16


@dataclass(frozen=True)
class SamplingPlan:
    source_len: int
    target_len: int
    mode: str  # "fixed" or "jitter"
    indices: tuple[int, ...]
    seed: int | None = None

    def to_dict(self) -> dict:
        d = {
            "source_len": self.source_len,
            "target_len": self.target_len,
            "mode": self.mode,
            "indices": list(self.indices),
        }
        if self.seed is not None:
            d["seed"] = self.seed
        return d


def _check_lengths(source_len, target_len):
    if int(source_len) != source_len or int(target_len) != target_len:
        raise AtomfuseError("frame counts must be integers")
    if source_len < 1 or target_len < 1:
        raise AtomfuseError(
            f"frame counts must be positive (source_len={source_len}, target_len={target_len})"
        )


def segment_bounds(source_len: int, target_len: int) -> np.ndarray:
    """Inclusive ``[lo, hi]`` frame range of each segment, shape ``(target_len, 2)``.

    When the clip is shorter than the plan, a segment may hold no frame of
    its own; it then collapses to ``lo``.
    """
    _check_lengths(source_len, target_len)
    i = np.arange(target_len, dtype=np.int64)
    lo = (i * source_len) // target_len
    # ceil((i+1)L/T) - 1
    hi = -((-(i + 1) * source_len) // target_len) - 1
    return np.stack([lo, np.maximum(lo, hi)], axis=1)


def plan_fixed(source_len: int, target_len: int = DEFAULT_TARGET_LEN) -> SamplingPlan:
    _check_lengths(source_len, target_len)
    i = np.arange(target_len, dtype=np.int64)
    # floor((i + 1/2) * L / T) in exact integer arithmetic
    idx = ((2 * i + 1) * source_len) // (2 * target_len)
    return SamplingPlan(int(source_len), int(target_len), "fixed", tuple(idx.tolist()))


def plan_jitter(source_len: int, target_len: int = DEFAULT_TARGET_LEN, seed: int = 0) -> SamplingPlan:
    _check_lengths(source_len, target_len)
    seed = int(seed) % (1 << 64)
    rng = np.random.Generator(np.random.PCG64(seed))
    bounds = segment_bounds(source_len, target_len)
    idx = rng.integers(bounds[:, 0], bounds[:, 1] + 1)
    return SamplingPlan(int(source_len), int(target_len), "jitter", tuple(idx.tolist()), seed)


@dataclass(frozen=True)
class ResolutionPlan:
    """How a ``src`` frame maps onto a ``dst`` canvas.

    ``scale`` is ``(sy, sx)``; ``content`` is the rescaled frame size before
    padding; ``pad`` is ``(top, bottom, left, right)``.
    """

    src: tuple[int, int]
    dst: tuple[int, int]
    mode: str
    scale: tuple[float, float]
    content: tuple[int, int]
    pad: tuple[int, int, int, int] = field(default=(0, 0, 0, 0))

    def to_dict(self) -> dict:
        return {
            "src": list(self.src),
            "dst": list(self.dst),
            "mode": self.mode,
            "scale": list(self.scale),
            "content": list(self.content),
            "pad": list(self.pad),
        }


def plan_resolution(src_h: int, src_w: int, dst_h: int, dst_w: int, mode: str = "stretch") -> ResolutionPlan:
    dims = (src_h, src_w, dst_h, dst_w)
    if any(int(d) != d or d < 1 for d in dims):
        raise AtomfuseError(f"resolution dimensions must be positive integers, got {dims}")
    src_h, src_w, dst_h, dst_w = (int(d) for d in dims)
    if mode == "stretch":
        return ResolutionPlan(
            (src_h, src_w), (dst_h, dst_w), mode, (dst_h / src_h, dst_w / src_w), (dst_h, dst_w)
        )
    if mode == "letterbox":
        s = min(dst_h / src_h, dst_w / src_w)
        ch = min(dst_h, max(1, round(src_h * s)))
        cw = min(dst_w, max(1, round(src_w * s)))
        ph, pw = dst_h - ch, dst_w - cw
        pad = (ph // 2, ph - ph // 2, pw // 2, pw - pw // 2)
        return ResolutionPlan((src_h, src_w), (dst_h, dst_w), mode, (s, s), (ch, cw), pad)
    raise AtomfuseError(f"unknown resolution mode {mode!r}")
