"""Export a clustered lexicon as a term-discovery class file.

The class file is the interchange format external spoken-term-discovery
scorers consume: one block per cluster, one `<utterance> <onset> <offset>`
line per discovered fragment. This lets third-party tooling re-score the
matching metrics (NED / coverage) independently.
"""

import tempfile
from pathlib import Path

from attnseg import (
    SegmenterConfig,
    SynthSpec,
    evaluate_corpus,
    generate_corpus,
    join_corpus,
    labeled_segments,
    ned_coverage,
    read_alignments,
    read_manifest,
    write_class_file,
)

work = Path(tempfile.mkdtemp(prefix="attnseg_demo_"))
spec = SynthSpec(vocab_size=6, n_utterances=20, heads=2, feature_dim=8, seed=4)
files = generate_corpus(spec, work)
corpus = join_corpus(read_manifest(files.manifest_path), read_alignments(files.alignments_path))

cfg = SegmenterConfig(layer=9, retain_mass=1.0)
report, segmented, labels = evaluate_corpus(
    corpus, cfg, pooling="mean", k=6, n_seeds=1, seed=0
)

segments = labeled_segments(segmented, labels)
class_path = work / "classes.txt"
write_class_file(segments, class_path)

text = class_path.read_text().splitlines()
print(f"wrote {class_path} ({len(segments)} fragments in 6 classes); head:")
print("\n".join(text[:8]))

matching = ned_coverage(segments, corpus)
print(f"\nmatching metrics: n_words={matching.n_words} NED={matching.ned:.1f} "
      f"Cov={matching.coverage:.1f} M-score={matching.m_score:.1f}")
