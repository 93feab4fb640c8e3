"""Evaluation metric suites (segmentation-level and lexicon-level)."""

from .lexicon import (
    Detector,
    DetectorReport,
    LabeledSegment,
    MatchingReport,
    levenshtein,
    ned_coverage,
    read_class_file,
    transcribe_segment,
    word_detection,
    write_class_file,
)
from .segmentation import (
    AreaReport,
    BoundaryReport,
    SegmentAssignment,
    TokenReport,
    area_metrics,
    assign_segments_to_words,
    boundary_metrics,
    match_boundaries,
    r_value,
    reference_boundaries,
    token_f1,
)
