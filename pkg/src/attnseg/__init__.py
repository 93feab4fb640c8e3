"""Attention-based spoken term discovery.

Turn transformer self-attention maps over speech into word segments,
hypothesized boundaries and a clustered lexicon, and score the result with
segmentation boundary metrics, word-detection metrics and term-discovery
matching metrics.
"""

from .clustering import (
    ClusterModel,
    PooledSegment,
    kmeans_assign,
    kmeans_fit,
    load_cluster_model,
    pool_segment_features,
    save_cluster_model,
)
from .corpus import (
    Corpus,
    CorpusItem,
    PhoneInterval,
    UtteranceAlignment,
    WordInterval,
    join_corpus,
    read_alignments,
    write_alignments,
)
from .errors import (
    AlignmentError,
    AttnsegError,
    ConfigError,
    DataError,
    ManifestError,
    TensorFormatError,
)
from .metrics.lexicon import (
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
from .metrics.segmentation import (
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
from .pipeline import (
    SegmentedUtterance,
    evaluate_corpus,
    labeled_segments,
    pooled_corpus_vectors,
    segment_corpus,
    segment_entry,
)
from .report import MetricReport, WordReport, render_table
from .segmenter import (
    MERGED,
    AttentionSegment,
    BoundarySet,
    SegmenterConfig,
    attention_profile,
    extract_segments,
    infer_boundaries,
    threshold_profile,
)
from .sweep import SweepCell, SweepGrid, SweepResult, evaluate_config, finalize_on_test, run_sweep
from .synth import SynthCorpus, SynthSpec, generate_corpus, oracle_boundary_match, oracle_threshold
from .tensorio import (
    ManifestEntry,
    read_manifest,
    read_tensor,
    read_tensor_header,
    write_manifest,
    write_tensor,
)
from .util import harmonic_mean

__version__ = "0.1.0"
