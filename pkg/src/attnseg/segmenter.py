"""Attention-map thresholding, segment extraction and boundary inference.

The discovery procedure per utterance and layer:

1. build a per-head attention profile over frames (either the aggregate
   token's query row, or the column sum of attention each frame receives),
2. per head, keep the smallest set of frames, taken in descending weight
   order, whose mass reaches ``retain_mass`` of the head's total,
3. take maximal runs of kept frames as attention segments (per head, or on
   the union mask across heads),
4. hypothesize word boundaries at the midpoints between adjacent merged
   segments, plus the outermost segment edges.

Frame ``f`` covers the half-open time span
``[f * frame_shift, (f + 1) * frame_shift)``;  boundary times are
``index * frame_shift`` with segment ends exclusive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError

MERGED = -1  # head tag for union-mode segments

PROFILE_MODES = ("cls_row", "frame_sum")
MERGE_MODES = ("union", "per_head")

# Relative slack on the mass target; guards against summation-order roundoff
# flipping a comparison at an exact-equality boundary.
_MASS_SLACK = 1e-9


@dataclass(frozen=True)
class SegmenterConfig:
    """Layer choice and thresholding behaviour for segment extraction."""

    layer: int
    retain_mass: float = 0.9
    profile_mode: str = "cls_row"
    merge_mode: str = "union"

    def __post_init__(self) -> None:
        if not 0 < self.retain_mass <= 1:
            raise ConfigError(f"retain_mass must be in (0, 1], got {self.retain_mass}")
        if self.profile_mode not in PROFILE_MODES:
            raise ConfigError(f"profile_mode must be one of {PROFILE_MODES}")
        if self.merge_mode not in MERGE_MODES:
            raise ConfigError(f"merge_mode must be one of {MERGE_MODES}")


@dataclass(frozen=True)
class AttentionSegment:
    """Maximal run of retained frames; ``head`` is MERGED for union segments.

    ``start_frame`` inclusive, ``end_frame`` exclusive, CLS position excluded
    from frame indexing.  ``mass`` is the retained attention mass inside the
    segment (summed over heads in union mode).
    """

    head: int
    start_frame: int
    end_frame: int
    mass: float = 0.0

    def __post_init__(self) -> None:
        if self.start_frame >= self.end_frame:
            raise DataError(f"empty segment [{self.start_frame},{self.end_frame})")

    @property
    def num_frames(self) -> int:
        return self.end_frame - self.start_frame

    def span_s(self, frame_shift_s: float) -> tuple[float, float]:
        return self.start_frame * frame_shift_s, self.end_frame * frame_shift_s


@dataclass(frozen=True)
class BoundarySet:
    """Hypothesized word-boundary times (seconds, strictly increasing)."""

    utterance_id: str
    times_s: tuple[float, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.times_s)


def _resolve_layer(layer: int, layers: Sequence[int]) -> int:
    try:
        return list(layers).index(layer)
    except ValueError:
        raise ConfigError(f"layer {layer} not among exported layers {list(layers)}") from None


def attention_profile(
    attn: np.ndarray,
    cfg: SegmenterConfig,
    layers: Sequence[int],
    has_cls: bool,
) -> np.ndarray:
    """Per-head attention profile over frames, shape (heads, num_frames).

    ``cls_row``: the aggregate token's attention over frame keys (the CLS
    key column is dropped), from either a stored CLS-row tensor
    ``[layer, head, key]`` or a full map ``[layer, head, query, key]``.

    ``frame_sum``: for each head of a full map, the sum of attention each
    frame key receives from all frame queries; CLS row and column are
    excluded when present.  Entries are nonnegative but not normalized (a
    uniform map over F frames gives a flat profile of ones).
    """
    attn = np.asarray(attn)
    li = _resolve_layer(cfg.layer, layers)
    if cfg.profile_mode == "cls_row":
        if not has_cls:
            raise DataError("cls_row profile requires an export with a CLS position")
        if attn.ndim == 3:
            profile = attn[li, :, 1:]
        elif attn.ndim == 4:
            profile = attn[li, :, 0, 1:]
        else:
            raise DataError(f"attention tensor must be 3- or 4-dim, got shape {attn.shape}")
    else:  # frame_sum
        if attn.ndim != 4:
            raise DataError(
                f"frame_sum profile requires a full [layer, head, query, key] map, "
                f"got shape {attn.shape}"
            )
        start = 1 if has_cls else 0
        profile = attn[li, :, start:, start:].sum(axis=1)
    profile = np.asarray(profile, dtype=np.float64)
    if profile.size and profile.min() < 0:
        raise DataError("attention profile has negative entries")
    return np.ascontiguousarray(profile)


def threshold_profile(profile: np.ndarray, retain_mass: float) -> np.ndarray:
    """Boolean mask of the frames retained per head.

    Per head, frames are taken in descending weight order (ties broken by
    lower frame index) until their summed weight reaches ``retain_mass`` of
    the head's total.  This is the smallest such frame set.  All-zero heads
    yield empty masks.  The kept set is monotone in ``retain_mass`` and
    invariant to positive rescaling of the profile.
    """
    if not 0 < retain_mass <= 1:
        raise ConfigError(f"retain_mass must be in (0, 1], got {retain_mass}")
    prof = np.asarray(profile, dtype=np.float64)
    squeeze = prof.ndim == 1
    prof = np.atleast_2d(prof)
    masks = np.zeros(prof.shape, dtype=bool)
    for h in range(prof.shape[0]):
        weights = prof[h]
        total = weights.sum()
        if total <= 0:
            continue
        order = np.argsort(-weights, kind="stable")  # stable: ties keep index order
        csum = np.cumsum(weights[order])
        target = retain_mass * csum[-1]
        cutoff = int(np.searchsorted(csum, target - _MASS_SLACK * csum[-1]))
        kept = order[: cutoff + 1]
        masks[h, kept[weights[kept] > 0]] = True
    return masks[0] if squeeze else masks


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True as (start, end) index pairs, end exclusive."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [idx.size - 1]))
    return [(int(idx[s]), int(idx[e]) + 1) for s, e in zip(starts, ends)]


def extract_segments(
    profile: np.ndarray, masks: np.ndarray, cfg: SegmenterConfig
) -> list[AttentionSegment]:
    """Attention segments from retained-frame masks, sorted by start frame.

    ``per_head`` tags each head's runs with its head index; ``union`` keeps a
    frame if any head kept it and tags the merged runs with MERGED.  Segment
    mass sums the retained (masked) profile values inside the run.
    """
    prof = np.atleast_2d(np.asarray(profile, dtype=np.float64))
    masks = np.atleast_2d(np.asarray(masks, dtype=bool))
    if prof.shape != masks.shape:
        raise DataError(f"profile shape {prof.shape} != mask shape {masks.shape}")
    retained = np.where(masks, prof, 0.0)
    segments: list[AttentionSegment] = []
    if cfg.merge_mode == "per_head":
        for h in range(masks.shape[0]):
            for start, end in _runs(masks[h]):
                segments.append(
                    AttentionSegment(h, start, end, mass=float(retained[h, start:end].sum()))
                )
    else:
        union = masks.any(axis=0)
        for start, end in _runs(union):
            segments.append(
                AttentionSegment(MERGED, start, end, mass=float(retained[:, start:end].sum()))
            )
    segments.sort(key=lambda s: (s.start_frame, s.head))
    return segments


def infer_boundaries(
    segments: Sequence[AttentionSegment],
    duration_s: float,
    frame_shift_ms: float,
    utterance_id: str = "",
) -> BoundarySet:
    """Word boundaries from merged segments.

    One boundary at the midpoint between each adjacent segment pair, plus
    the first segment's start edge and the last segment's end edge.  Times
    are clamped to [0, duration_s] and strictly increasing; an empty segment
    list yields an empty set.
    """
    if not segments:
        return BoundarySet(utterance_id)
    ordered = sorted(segments, key=lambda s: s.start_frame)
    for a, b in zip(ordered, ordered[1:]):
        if b.start_frame < a.end_frame:
            raise DataError(
                f"{utterance_id}: overlapping segments [{a.start_frame},{a.end_frame}) "
                f"and [{b.start_frame},{b.end_frame}); merge heads before inferring boundaries"
            )
    shift = frame_shift_ms / 1000.0
    edges = [ordered[0].start_frame * shift]
    for a, b in zip(ordered, ordered[1:]):
        edges.append((a.end_frame + b.start_frame) / 2.0 * shift)
    edges.append(ordered[-1].end_frame * shift)

    times: list[float] = []
    for t in edges:
        t = min(max(t, 0.0), duration_s)
        if not times or t > times[-1]:
            times.append(t)
    return BoundarySet(utterance_id, tuple(times))
