"""End-to-end composition: segment a corpus, cluster it, score it.

Per-utterance work is pure, so the corpus loop can fan out to a thread
pool; results are keyed by utterance id and all corpus-level aggregation
is order-independent, so the outcome does not depend on scheduling.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .clustering import PooledSegment, kmeans_assign, kmeans_fit, pool_segment_features
from .corpus import Corpus, CorpusItem
from .metrics.lexicon import LabeledSegment, ned_coverage, word_detection
from .metrics.segmentation import (
    SegmentAssignment,
    area_metrics,
    assign_segments_to_words,
    boundary_metrics,
    reference_boundaries,
    token_f1,
)
from .report import MetricReport, WordReport
from .segmenter import (
    AttentionSegment,
    BoundarySet,
    SegmenterConfig,
    attention_profile,
    extract_segments,
    infer_boundaries,
    threshold_profile,
)
from .tensorio import ManifestEntry, read_tensor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SegmentedUtterance:
    item: CorpusItem
    segments: tuple[AttentionSegment, ...]  # per the configured merge mode
    boundaries: BoundarySet  # always from union-merged segments
    assignments: tuple[SegmentAssignment, ...]


def load_attention(entry: ManifestEntry) -> np.ndarray:
    return read_tensor(entry.attention_path)


def load_features(entry: ManifestEntry) -> np.ndarray:
    return read_tensor(entry.feature_path)


def segment_entry(
    entry: ManifestEntry,
    cfg: SegmenterConfig,
    duration_s: Optional[float] = None,
    profile: Optional[np.ndarray] = None,
) -> tuple[list[AttentionSegment], BoundarySet, np.ndarray, np.ndarray]:
    """Segment one utterance: (segments, boundaries, profile, masks).

    Boundary inference always works on union-merged segments, regardless of
    the configured merge mode.
    """
    if profile is None:
        attn = load_attention(entry)
        profile = attention_profile(attn, cfg, entry.layers, entry.has_cls)
    masks = threshold_profile(profile, cfg.retain_mass)
    segments = extract_segments(profile, masks, cfg)
    if cfg.merge_mode == "union":
        merged = segments
    else:
        union_cfg = SegmenterConfig(cfg.layer, cfg.retain_mass, cfg.profile_mode, "union")
        merged = extract_segments(profile, masks, union_cfg)
    if duration_s is None:
        duration_s = entry.duration_from_frames_s
    boundaries = infer_boundaries(merged, duration_s, entry.frame_shift_ms, entry.utterance_id)
    return segments, boundaries, profile, masks


def segment_corpus(
    corpus: Corpus, cfg: SegmenterConfig, threads: int = 1
) -> list[SegmentedUtterance]:
    """Segment and word-assign every utterance of a joined corpus."""

    def one(item: CorpusItem) -> SegmentedUtterance:
        segments, boundaries, _, _ = segment_entry(
            item.manifest, cfg, duration_s=item.alignment.duration_s
        )
        assignments = assign_segments_to_words(
            segments, item.alignment.words, item.manifest.frame_shift_ms
        )
        return SegmentedUtterance(item, tuple(segments), boundaries, tuple(assignments))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, corpus.items))
    return [one(item) for item in corpus.items]


def pooled_corpus_vectors(
    segmented: Sequence[SegmentedUtterance],
    pooling: str,
    feature_layer: int,
    threads: int = 1,
) -> list[PooledSegment]:
    """Pool features over every segment of every utterance, corpus order."""

    def one(su: SegmentedUtterance) -> list[PooledSegment]:
        entry = su.item.manifest
        feats = load_features(entry)
        return pool_segment_features(
            feats, su.segments, feature_layer, entry.layers, pooling, entry.utterance_id
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(one, segmented))
    else:
        chunks = [one(su) for su in segmented]
    return [p for chunk in chunks for p in chunk]


def _segment_words(segmented: Sequence[SegmentedUtterance]) -> list[Optional[str]]:
    words: list[Optional[str]] = []
    for su in segmented:
        utt_words = su.item.alignment.words
        for a in su.assignments:
            words.append(utt_words[a.word_index].word if a.word_index is not None else None)
    return words


def labeled_segments(
    segmented: Sequence[SegmentedUtterance], labels: Sequence[int]
) -> list[LabeledSegment]:
    """Pair cluster labels with their segments' time spans, corpus order."""
    out = []
    pos = 0
    for su in segmented:
        shift_s = su.item.manifest.frame_shift_s
        for seg in su.segments:
            start_s, end_s = seg.span_s(shift_s)
            out.append(LabeledSegment(su.item.utterance_id, start_s, end_s, int(labels[pos])))
            pos += 1
    if pos != len(labels):
        raise ValueError(f"have {len(labels)} labels for {pos} segments")
    return out


def evaluate_corpus(
    corpus: Corpus,
    cfg: SegmenterConfig,
    tol_ms: float = 20.0,
    pooling: Optional[str] = None,
    k: Optional[int] = None,
    feature_layer: Optional[int] = None,
    n_seeds: int = 5,
    seed: int = 0,
    threads: int = 1,
    include_edges: bool = False,
    segmented: Optional[Sequence[SegmentedUtterance]] = None,
    with_matching: bool = True,
    vector_normalize: str = "none",
) -> tuple[MetricReport, list[SegmentedUtterance], list[int]]:
    """Run the full pipeline on a corpus and score it.

    Returns the metric report, the per-utterance segmentations and the
    cluster labels of the first clustering run (empty when ``k`` is None).
    Word metrics are averaged over ``n_seeds`` clustering runs seeded
    ``seed .. seed + n_seeds - 1``.  Pooled features default to the
    attention layer's exported features; pass ``feature_layer`` to pool a
    different layer.
    """
    if segmented is None:
        segmented = segment_corpus(corpus, cfg, threads)

    area = area_metrics(
        (su.assignments, su.item.alignment.words) for su in segmented
    )
    boundary = boundary_metrics(
        (
            (
                su.boundaries.times_s,
                reference_boundaries(su.item.alignment.words),
                su.item.alignment.duration_s,
            )
            for su in segmented
        ),
        tol_ms,
        include_edges=include_edges,
    )
    token = token_f1(
        ((su.boundaries, su.item.alignment.words) for su in segmented), tol_ms
    )

    word = None
    matching = None
    first_labels: list[int] = []
    if k is not None and pooling is not None:
        pool_layer = feature_layer if feature_layer is not None else cfg.layer
        pooled = pooled_corpus_vectors(segmented, pooling, pool_layer, threads)
        if len(pooled) < k:
            # fewer segments than clusters (e.g. an aggressive threshold in a
            # sweep): report zero word metrics rather than failing the cell
            logger.warning(
                "only %d segments for k=%d: reporting zero word metrics", len(pooled), k
            )
            word = WordReport(0.0, 0.0, 0.0, 0.0, max(1, n_seeds))
        else:
            vectors = np.stack([p.vector for p in pooled])
            seg_words = _segment_words(segmented)
            purities, wds = [], []
            for run in range(max(1, n_seeds)):
                model = kmeans_fit(
                    vectors, k, seed=seed + run, n_threads=threads, normalize=vector_normalize
                )
                labels = kmeans_assign(model, vectors, n_threads=threads)
                detector_report = word_detection(labels.tolist(), seg_words)
                purities.append(detector_report.purity)
                wds.append(detector_report.wd)
                if run == 0:
                    first_labels = [int(x) for x in labels]
            word = WordReport(
                purity_mean=float(np.mean(purities)),
                purity_std=float(np.std(purities)),
                wd_mean=float(np.mean(wds)),
                wd_std=float(np.std(wds)),
                n_seeds=max(1, n_seeds),
            )
        if first_labels and with_matching and all(item.alignment.phones for item in corpus):
            matching = ned_coverage(labeled_segments(segmented, first_labels), corpus, seed=seed)

    report = MetricReport(
        layer=cfg.layer,
        threshold=cfg.retain_mass,
        pooling=pooling,
        k=k,
        area=area,
        boundary=boundary,
        token=token,
        word=word,
        matching=matching,
    )
    return report, list(segmented), first_labels
