"""Hyperparameter sweep: pick (layer, threshold) per objective on a dev set.

With noise in the attention maps the best threshold is no longer 1.0:
keeping everything admits noise segments, keeping too little erodes words.
The sweep scores every cell on the dev corpus and re-evaluates the winner
on a held-out corpus.
"""

import tempfile
from pathlib import Path

from attnseg import (
    SweepGrid,
    SynthSpec,
    finalize_on_test,
    generate_corpus,
    join_corpus,
    read_alignments,
    read_manifest,
    run_sweep,
)
from attnseg.sweep import objective_value

work = Path(tempfile.mkdtemp(prefix="attnseg_demo_"))


def make_corpus(seed, subdir):
    spec = SynthSpec(
        vocab_size=10,
        n_utterances=40,
        heads=2,
        feature_dim=8,
        noise_floor=0.35,
        peak_mass=0.9,
        seed=seed,
    )
    files = generate_corpus(spec, work / subdir)
    return join_corpus(
        read_manifest(files.manifest_path), read_alignments(files.alignments_path)
    )


dev, test = make_corpus(0, "dev"), make_corpus(1, "test")

grid = SweepGrid(layers=(9,), thresholds=(0.6, 0.7, 0.8, 0.9, 0.99), objective="boundary_F1")
result = run_sweep(dev, grid, tol_ms=20.0, n_seeds=1)

print("dev leaderboard (boundary F1):")
for cell, report in sorted(result.reports, key=lambda cr: -objective_value(cr[1], "boundary_F1")):
    print(f"  layer {cell.layer}  p={cell.threshold:.2f}  F1={report.boundary.f1:6.2f}  "
          f"P={report.boundary.precision:6.2f}  R={report.boundary.recall:6.2f}")

best_cell, best_report = result.best
print(f"\nchosen: layer {best_cell.layer}, threshold {best_cell.threshold}")

cell, test_report = finalize_on_test(test, result, tol_ms=20.0, n_seeds=1)
print(f"held-out F1 at the chosen cell: {test_report.boundary.f1:.2f}")
