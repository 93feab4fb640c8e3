"""Area and boundary metric suites, plus word-token F1.

Area metrics score how well attention segments cover and localize words:

* WC     -- % of word tokens receiving at least one assigned segment,
* tIoU   -- mean intersection-over-union between each segment and its
            assigned word's span (unassigned segments contribute 0),
* CD     -- mean |segment center - word center| in ms over assigned segments,
* A-score -- harmonic mean of WC and tIoU.

Boundary metrics compare hypothesized boundary times against reference word
edges under a tolerance window, with greedy one-to-one matching; reported as
precision / recall / F1 / over-segmentation / R-value.  Token F1 requires
both edges of a word to be matched.

All corpus-level numbers pool counts across utterances (micro-average).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from ..corpus import WordInterval
from ..errors import DataError
from ..segmenter import AttentionSegment, BoundarySet
from ..util import harmonic_mean, interval_overlap

# Tolerance comparisons use |dt| <= tol + _TIME_EPS so that distances that are
# mathematically equal to the tolerance survive float frame->seconds arithmetic.
_TIME_EPS = 1e-9


@dataclass(frozen=True)
class SegmentAssignment:
    """A segment's ground-truth word, by maximal temporal overlap.

    ``word_index`` is None when the segment overlaps no word at all;
    ``is_hit`` requires strictly more than half the segment inside the word.
    """

    segment: AttentionSegment
    word_index: Optional[int]
    overlap_frac: float
    is_hit: bool
    iou: float
    center_dist_ms: Optional[float]


@dataclass(frozen=True)
class AreaReport:
    wc: float
    tiou: float
    cd_ms: float
    a_score: float


@dataclass(frozen=True)
class BoundaryReport:
    precision: float
    recall: float
    f1: float
    os: float
    r_value: float
    n_hyp: int = 0
    n_ref: int = 0
    n_match: int = 0


@dataclass(frozen=True)
class TokenReport:
    precision: float
    recall: float
    f1: float
    n_hyp: int = 0
    n_ref: int = 0
    n_match: int = 0


def assign_segments_to_words(
    segments: Sequence[AttentionSegment],
    words: Sequence[WordInterval],
    frame_shift_ms: float,
) -> list[SegmentAssignment]:
    """Assign each segment to the word it overlaps most (ties: earlier word)."""
    shift_s = frame_shift_ms / 1000.0
    out: list[SegmentAssignment] = []
    for seg in segments:
        seg_start, seg_end = seg.span_s(shift_s)
        seg_len = seg_end - seg_start
        best_idx, best_overlap = None, 0.0
        for idx, w in enumerate(words):
            ov = interval_overlap(seg_start, seg_end, w.onset_s, w.offset_s)
            if ov > best_overlap:
                best_idx, best_overlap = idx, ov
        if best_idx is None:
            out.append(SegmentAssignment(seg, None, 0.0, False, 0.0, None))
            continue
        w = words[best_idx]
        union = max(seg_end, w.offset_s) - min(seg_start, w.onset_s)
        iou = best_overlap / union if union > 0 else 0.0
        center_dist_ms = abs((seg_start + seg_end) / 2 - (w.onset_s + w.offset_s) / 2) * 1000.0
        # strict "more than half", with an epsilon so an exactly-half overlap
        # cannot flip to a hit through float roundoff
        is_hit = best_overlap > 0.5 * seg_len + _TIME_EPS
        out.append(
            SegmentAssignment(seg, best_idx, best_overlap / seg_len, is_hit, iou, center_dist_ms)
        )
    return out


def area_metrics(
    per_utterance: Iterable[tuple[Sequence[SegmentAssignment], Sequence[WordInterval]]],
    tiou_over_all_segments: bool = True,
) -> AreaReport:
    """Corpus-level Area metrics from per-utterance (assignments, words) pairs.

    By default tIoU averages over every segment, with unassigned segments
    contributing 0 (they are part of the segment set); CD always averages
    over assigned segments only.  ``tiou_over_all_segments=False`` averages
    tIoU over assigned segments instead.
    """
    n_words = 0
    n_hit_words = 0
    n_segments = 0
    iou_sum = 0.0
    cd_sum = 0.0
    n_assigned = 0
    for assignments, words in per_utterance:
        n_words += len(words)
        hit_words = {a.word_index for a in assignments if a.is_hit}
        n_hit_words += len(hit_words)
        for a in assignments:
            n_segments += 1
            if a.word_index is not None:
                iou_sum += a.iou
                cd_sum += a.center_dist_ms
                n_assigned += 1
    if n_words == 0 and n_segments == 0:
        raise DataError("area_metrics: empty corpus")
    wc = 100.0 * n_hit_words / n_words if n_words else 0.0
    tiou_denominator = n_segments if tiou_over_all_segments else n_assigned
    tiou = 100.0 * iou_sum / tiou_denominator if tiou_denominator else 0.0
    cd_ms = cd_sum / n_assigned if n_assigned else 0.0
    return AreaReport(wc, tiou, cd_ms, harmonic_mean(wc, tiou))


def reference_boundaries(words: Sequence[WordInterval]) -> list[float]:
    """Word onset/offset times, deduplicated (shared edges count once)."""
    times: list[float] = []
    for w in words:
        for t in (w.onset_s, w.offset_s):
            if not times or t > times[-1] + _TIME_EPS:
                times.append(t)
    return times


def match_boundaries(
    hyp: Sequence[float], ref: Sequence[float], tol_s: float
) -> int:
    """Greedy in-order one-to-one matching count; |dt| <= tol matches.

    Both inputs must be sorted.  For tolerance windows on sorted sequences
    this greedy scheme attains the maximum matching (checked against an
    exhaustive matcher in the test suite).
    """
    matches = 0
    i = j = 0
    while i < len(hyp) and j < len(ref):
        if abs(hyp[i] - ref[j]) <= tol_s + _TIME_EPS:
            matches += 1
            i += 1
            j += 1
        elif hyp[i] < ref[j]:
            i += 1
        else:
            j += 1
    return matches


def r_value(recall_pct: float, os_pct: float) -> float:
    """Boundary R-value (percent) from recall and over-segmentation percents."""
    r = recall_pct / 100.0
    os_frac = os_pct / 100.0
    r1 = math.sqrt((1.0 - r) ** 2 + os_frac**2)
    r2 = (-os_frac + r - 1.0) / math.sqrt(2.0)
    return 100.0 * (1.0 - (abs(r1) + abs(r2)) / 2.0)


def _drop_edge_times(times: Sequence[float], duration_s: float, tol_s: float) -> list[float]:
    return [
        t
        for t in times
        if t > tol_s + _TIME_EPS and t < duration_s - tol_s - _TIME_EPS
    ]


def boundary_metrics(
    per_utterance: Iterable[tuple[Sequence[float], Sequence[float], float]],
    tol_ms: float,
    include_edges: bool = False,
) -> BoundaryReport:
    """Corpus-level boundary scores from (hyp_times, ref_times, duration) triples.

    Unless ``include_edges`` is set, reference boundaries at t=0 and
    t=duration are excluded before matching and hypothesis boundaries within
    tolerance of those two times are dropped.  An empty hypothesis set gives
    precision 0; a fully empty report is all zeros.
    """
    tol_s = tol_ms / 1000.0
    n_hyp = n_ref = n_match = 0
    for hyp, ref, duration_s in per_utterance:
        hyp = sorted(hyp)
        ref = sorted(ref)
        if not include_edges:
            ref = [t for t in ref if _TIME_EPS < t < duration_s - _TIME_EPS]
            hyp = _drop_edge_times(hyp, duration_s, tol_s)
        n_hyp += len(hyp)
        n_ref += len(ref)
        n_match += match_boundaries(hyp, ref, tol_s)
    precision = 100.0 * n_match / n_hyp if n_hyp else 0.0
    recall = 100.0 * n_match / n_ref if n_ref else 0.0
    f1 = harmonic_mean(precision, recall)
    if n_match == 0:
        # OS is recall/precision - 1, undefined without matches; report all
        # zeros so a segment-free configuration degrades without crashing.
        os_pct, rv = 0.0, 0.0
    else:
        os_pct = 100.0 * (recall / precision - 1.0)
        rv = r_value(recall, os_pct)
    return BoundaryReport(precision, recall, f1, os_pct, rv, n_hyp, n_ref, n_match)


def token_f1(
    per_utterance: Iterable[tuple[BoundarySet | Sequence[float], Sequence[WordInterval]]],
    tol_ms: float,
) -> TokenReport:
    """Word-token F1: a token counts only if both its edges match a word's.

    Hypothesized tokens are the intervals between consecutive hypothesized
    boundaries.  A token matches a reference word when the word's onset and
    offset both lie within tolerance of the token's edges; each word and each
    token is used at most once (greedy, in time order).
    """
    tol_s = tol_ms / 1000.0
    n_hyp = n_ref = n_match = 0
    for boundaries, words in per_utterance:
        times = list(boundaries.times_s) if isinstance(boundaries, BoundarySet) else list(boundaries)
        tokens = list(zip(times, times[1:]))
        n_hyp += len(tokens)
        n_ref += len(words)
        used = [False] * len(words)
        for tok_start, tok_end in tokens:
            for idx, w in enumerate(words):
                if used[idx]:
                    continue
                if w.onset_s > tok_start + tol_s + _TIME_EPS:
                    break
                if (
                    abs(w.onset_s - tok_start) <= tol_s + _TIME_EPS
                    and abs(w.offset_s - tok_end) <= tol_s + _TIME_EPS
                ):
                    used[idx] = True
                    n_match += 1
                    break
    precision = 100.0 * n_match / n_hyp if n_hyp else 0.0
    recall = 100.0 * n_match / n_ref if n_ref else 0.0
    return TokenReport(precision, recall, harmonic_mean(precision, recall), n_hyp, n_ref, n_match)
