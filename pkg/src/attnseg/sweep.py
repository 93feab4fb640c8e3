"""Grid search over (layer, threshold, pooling, K) with per-objective selection.

The sweep evaluates every grid cell on the dev corpus and picks the best
cell for the requested objective; ties go to the lower layer, then the
lower threshold.  Attention profiles are computed once per layer and shared
across thresholds; clustering only runs when the objective needs it, since
K-means dominates the cost.  Final numbers should come from re-evaluating
the chosen cell on a held-out corpus (``finalize_on_test``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .corpus import Corpus
from .errors import ConfigError
from .metrics.segmentation import assign_segments_to_words
from .pipeline import SegmentedUtterance, evaluate_corpus, segment_entry
from .report import MetricReport
from .segmenter import SegmenterConfig, attention_profile
from .tensorio import read_tensor

OBJECTIVES = ("A_score", "boundary_F1", "WD")

DEFAULT_THRESHOLDS = tuple(round(0.05 * i, 2) for i in range(10, 20)) + (0.99, 0.10)


@dataclass(frozen=True)
class SweepCell:
    layer: int
    threshold: float
    pooling: Optional[str] = None
    k: Optional[int] = None


@dataclass(frozen=True)
class SweepGrid:
    layers: tuple[int, ...]
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    poolings: tuple[Optional[str], ...] = (None,)
    ks: tuple[Optional[int], ...] = (None,)
    objective: str = "A_score"
    profile_mode: str = "cls_row"

    def __post_init__(self) -> None:
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}")
        if not self.layers or not self.thresholds or not self.poolings or not self.ks:
            raise ConfigError("sweep grid axes must be non-empty")
        if any(not 0 < t <= 1 for t in self.thresholds):
            raise ConfigError("thresholds must lie in (0, 1]")
        if self.objective == "WD" and (self.ks == (None,) or self.poolings == (None,)):
            raise ConfigError("objective WD needs pooling and K axes")

    def cells(self) -> list[SweepCell]:
        return [
            SweepCell(layer, t, pooling, k)
            for layer in self.layers
            for t in self.thresholds
            for pooling in self.poolings
            for k in self.ks
        ]


@dataclass(frozen=True)
class SweepResult:
    objective: str
    reports: tuple[tuple[SweepCell, MetricReport], ...] = field(default_factory=tuple)

    @property
    def best(self) -> tuple[SweepCell, MetricReport]:
        best_cell, best_report, best_score = None, None, None
        for cell, report in self.reports:
            score = objective_value(report, self.objective)
            key = (-score, cell.layer, cell.threshold)
            if best_score is None or key < best_score:
                best_cell, best_report, best_score = cell, report, key
        if best_cell is None:
            raise ConfigError("empty sweep result")
        return best_cell, best_report


def objective_value(report: MetricReport, objective: str) -> float:
    if objective == "A_score":
        return report.area.a_score if report.area else 0.0
    if objective == "boundary_F1":
        return report.boundary.f1 if report.boundary else 0.0
    if objective == "WD":
        return report.word.wd_mean if report.word else 0.0
    raise ConfigError(f"unknown objective {objective!r}")


def evaluate_config(
    corpus: Corpus,
    cell: SweepCell,
    tol_ms: float = 20.0,
    n_seeds: int = 5,
    seed: int = 0,
    threads: int = 1,
    profile_mode: str = "cls_row",
    include_word: Optional[bool] = None,
    segmented: Optional[Sequence[SegmentedUtterance]] = None,
) -> MetricReport:
    """Full pipeline on one grid cell; word metrics only when requested."""
    cfg = SegmenterConfig(cell.layer, cell.threshold, profile_mode)
    if include_word is None:
        include_word = cell.k is not None and cell.pooling is not None
    report, _, _ = evaluate_corpus(
        corpus,
        cfg,
        tol_ms=tol_ms,
        pooling=cell.pooling if include_word else None,
        k=cell.k if include_word else None,
        n_seeds=n_seeds,
        seed=seed,
        threads=threads,
        segmented=segmented,
        with_matching=False,
    )
    return report


def run_sweep(
    corpus: Corpus,
    grid: SweepGrid,
    tol_ms: float = 20.0,
    n_seeds: int = 5,
    seed: int = 0,
    threads: int = 1,
) -> SweepResult:
    """Evaluate every cell on the dev corpus.

    Layers are processed one at a time with their attention profiles cached,
    so every threshold (and pooling/K combination) reuses the per-utterance
    profile instead of re-reading the attention tensors.
    """
    for layer in grid.layers:
        for item in corpus:
            if layer not in item.manifest.layers:
                raise ConfigError(
                    f"layer {layer} not exported for utterance {item.utterance_id} "
                    f"(has {list(item.manifest.layers)})"
                )
    include_word = grid.objective == "WD"
    reports: list[tuple[SweepCell, MetricReport]] = []
    for layer in grid.layers:
        profiles = {}
        for item in corpus:
            entry = item.manifest
            cfg = SegmenterConfig(layer, 1.0, grid.profile_mode)
            profiles[item.utterance_id] = attention_profile(
                read_tensor(entry.attention_path), cfg, entry.layers, entry.has_cls
            )
        for threshold in grid.thresholds:
            cfg = SegmenterConfig(layer, threshold, grid.profile_mode)
            segmented = []
            for item in corpus:
                segments, boundaries, _, _ = segment_entry(
                    item.manifest,
                    cfg,
                    duration_s=item.alignment.duration_s,
                    profile=profiles[item.utterance_id],
                )
                assignments = assign_segments_to_words(
                    segments, item.alignment.words, item.manifest.frame_shift_ms
                )
                segmented.append(
                    SegmentedUtterance(item, tuple(segments), boundaries, tuple(assignments))
                )
            for pooling in grid.poolings:
                for k in grid.ks:
                    cell = SweepCell(layer, threshold, pooling, k)
                    report = evaluate_config(
                        corpus,
                        cell,
                        tol_ms=tol_ms,
                        n_seeds=n_seeds,
                        seed=seed,
                        threads=threads,
                        profile_mode=grid.profile_mode,
                        include_word=include_word and k is not None and pooling is not None,
                        segmented=segmented,
                    )
                    reports.append((cell, report))
    return SweepResult(grid.objective, tuple(reports))


def finalize_on_test(
    corpus_test: Corpus,
    result: SweepResult,
    tol_ms: float = 20.0,
    n_seeds: int = 5,
    seed: int = 0,
    threads: int = 1,
    profile_mode: str = "cls_row",
) -> tuple[SweepCell, MetricReport]:
    """Re-evaluate the winning dev cell on the held-out corpus."""
    best_cell, _ = result.best
    report = evaluate_config(
        corpus_test,
        best_cell,
        tol_ms=tol_ms,
        n_seeds=n_seeds,
        seed=seed,
        threads=threads,
        profile_mode=profile_mode,
    )
    return best_cell, report
