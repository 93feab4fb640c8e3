"""Lexicon-level metrics: word detectors, purity, and matching metrics.

Word detection treats every cluster as a candidate detector for every
vocabulary word: a cluster whose best cluster-word F1 reaches 0.5 counts as
a word detector.  Purity is the fraction of segments whose word matches
their cluster's majority word.

The matching metrics score discovered fragments the way zero-resource term
discovery evaluations do: NED is the mean normalized phone edit distance
over within-cluster segment pairs, coverage the fraction of word-aligned
speech covered by discovered segments, and the M-score their harmonic
combination ``harmonic(100 - NED, coverage)``.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from ..corpus import Corpus
from ..errors import DataError
from ..util import harmonic_mean, intersect_interval_sets, merge_intervals

# Pseudo-word for segments that overlap no ground-truth word.
NO_WORD = None


@dataclass(frozen=True)
class Detector:
    cluster: int
    word: str
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class DetectorReport:
    wd: int
    detectors: tuple[Detector, ...]
    purity: float
    n_segments: int = 0


@dataclass(frozen=True)
class LabeledSegment:
    """A discovered fragment: cluster label plus its time span."""

    utterance_id: str
    start_s: float
    end_s: float
    label: int


@dataclass(frozen=True)
class MatchingReport:
    n_words: int
    ned: float
    coverage: float
    m_score: float


def word_detection(
    labels: Sequence[int],
    segment_words: Sequence[Optional[str]],
    recall_denominator: str = "segments",
    word_token_counts: Mapping[str, int] | None = None,
) -> DetectorReport:
    """Detector count and purity from cluster labels and per-segment words.

    ``segment_words[i]`` is the ground-truth word assigned to segment ``i``
    (None when the segment overlaps no word; such segments never provide a
    majority word but do count toward purity's denominator).

    Cluster-word recall divides by the corpus-wide number of segments
    assigned to the word.  Set ``recall_denominator="word_tokens"`` (and pass
    ``word_token_counts``) to divide by ground-truth token counts instead.
    """
    if len(labels) != len(segment_words):
        raise DataError(
            f"labels ({len(labels)}) and segment words ({len(segment_words)}) differ in length"
        )
    if recall_denominator not in ("segments", "word_tokens"):
        raise DataError(f"unknown recall_denominator {recall_denominator!r}")
    if recall_denominator == "word_tokens" and word_token_counts is None:
        raise DataError("word_tokens denominator requires word_token_counts")

    cluster_word: dict[int, Counter] = defaultdict(Counter)
    cluster_size: Counter = Counter()
    word_segments: Counter = Counter()
    for label, word in zip(labels, segment_words):
        cluster_size[label] += 1
        if word is not None:
            cluster_word[label][word] += 1
            word_segments[word] += 1

    detectors = []
    majority_sum = 0
    for cluster, size in sorted(cluster_size.items()):
        counts = cluster_word.get(cluster)
        if not counts:
            continue
        majority_sum += max(counts.values())
        best: Optional[Detector] = None
        for word, n_cw in counts.items():
            precision = n_cw / size
            denom = (
                word_segments[word]
                if recall_denominator == "segments"
                else word_token_counts.get(word, 0)
            )
            recall = n_cw / denom if denom else 0.0
            f1 = harmonic_mean(precision, recall)
            if best is None or f1 > best.f1:
                best = Detector(cluster, word, precision, recall, f1)
        if best is not None and best.f1 >= 0.5:
            detectors.append(best)

    n_segments = len(labels)
    purity = 100.0 * majority_sum / n_segments if n_segments else 0.0
    return DetectorReport(len(detectors), tuple(detectors), purity, n_segments)


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost insert/delete/substitute edit distance between two sequences."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        current = [i]
        for j, y in enumerate(b, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (x != y)))
        previous = current
    return previous[-1]


def transcribe_segment(
    start_s: float, end_s: float, phones: Sequence
) -> tuple[str, ...]:
    """Phones whose midpoint falls inside the half-open span [start_s, end_s)."""
    out = []
    for p in phones:
        mid = (p.onset_s + p.offset_s) / 2.0
        if start_s <= mid < end_s:
            out.append(p.phone)
    return tuple(out)


def _pair_indices(n: int, max_pairs: int, rng: np.random.Generator) -> Iterable[tuple[int, int]]:
    total = n * (n - 1) // 2
    if total <= max_pairs:
        return ((i, j) for i in range(n) for j in range(i + 1, n))
    picks = rng.choice(total, size=max_pairs, replace=False)
    picks.sort()

    def _unrank(k: int) -> tuple[int, int]:
        # pair index k in the lexicographic enumeration of i<j pairs
        i = int((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * k)) // 2)
        j = k - i * (2 * n - i - 1) // 2 + i + 1
        return i, int(j)

    return (_unrank(int(k)) for k in picks)


def ned_coverage(
    segments: Sequence[LabeledSegment],
    corpus: Corpus,
    seed: int = 0,
    max_pairs_per_cluster: int = 10_000,
) -> MatchingReport:
    """NED / coverage / M-score for a clustered set of discovered fragments.

    Every utterance the segments reference must carry a phone tier.  Pairwise
    NED is exact up to ``max_pairs_per_cluster`` pairs per cluster and
    seeded-uniform sampling beyond that.  Coverage counts only word-aligned
    speech: discovered time inside silence does not help (or hurt).
    """
    alignments = {item.utterance_id: item.alignment for item in corpus}
    by_cluster: dict[int, list[tuple[str, ...]]] = defaultdict(list)
    by_utterance: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for seg in segments:
        alignment = alignments.get(seg.utterance_id)
        if alignment is None:
            raise DataError(f"segment references unknown utterance {seg.utterance_id!r}")
        if not alignment.phones:
            raise DataError(f"{seg.utterance_id}: phone tier required for NED")
        by_cluster[seg.label].append(transcribe_segment(seg.start_s, seg.end_s, alignment.phones))
        by_utterance[seg.utterance_id].append((seg.start_s, seg.end_s))

    rng = np.random.default_rng(seed)
    dist_cache: dict[tuple, float] = {}
    dist_sum = 0.0
    n_pairs = 0
    for label in sorted(by_cluster):
        transcripts = by_cluster[label]
        if len(transcripts) < 2:
            continue
        for i, j in _pair_indices(len(transcripts), max_pairs_per_cluster, rng):
            a, b = transcripts[i], transcripts[j]
            key = (a, b) if a <= b else (b, a)
            nd = dist_cache.get(key)
            if nd is None:
                longest = max(len(a), len(b))
                nd = levenshtein(a, b) / longest if longest else 0.0
                dist_cache[key] = nd
            dist_sum += nd
            n_pairs += 1
    ned = 100.0 * dist_sum / n_pairs if n_pairs else 0.0

    speech_total = 0.0
    covered = 0.0
    for item in corpus:
        speech = merge_intervals(
            (w.onset_s, w.offset_s) for w in item.alignment.words
        )
        speech_total += sum(e - s for s, e in speech)
        discovered = merge_intervals(by_utterance.get(item.utterance_id, []))
        covered += intersect_interval_sets(discovered, speech)
    coverage = 100.0 * covered / speech_total if speech_total else 0.0

    return MatchingReport(len(segments), ned, coverage, harmonic_mean(100.0 - ned, coverage))


def write_class_file(segments: Sequence[LabeledSegment], path) -> None:
    """Write discovered fragments in the term-discovery class-file format.

    One block per non-empty cluster: a ``Class <k>`` line followed by
    ``<utterance_id> <onset> <offset>`` lines (3 decimals), with a blank
    line between blocks.
    """
    by_cluster: dict[int, list[LabeledSegment]] = defaultdict(list)
    for seg in segments:
        by_cluster[seg.label].append(seg)
    blocks = []
    for label in sorted(by_cluster):
        lines = [f"Class {label}"]
        for seg in sorted(by_cluster[label], key=lambda s: (s.utterance_id, s.start_s, s.end_s)):
            lines.append(f"{seg.utterance_id} {seg.start_s:.3f} {seg.end_s:.3f}")
        blocks.append("\n".join(lines))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n\n".join(blocks))
        if blocks:
            f.write("\n")


def read_class_file(path) -> list[LabeledSegment]:
    """Inverse of write_class_file (round-trip checked in tests)."""
    segments: list[LabeledSegment] = []
    label: Optional[int] = None
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                label = None
                continue
            if line.startswith("Class "):
                label = int(line.split()[1])
                continue
            if label is None:
                raise DataError(f"{path}: interval line outside a Class block: {line!r}")
            utt_id, on, off = line.split()
            segments.append(LabeledSegment(utt_id, float(on), float(off), label))
    return segments
