import pytest

from attnseg import (
    MetricReport,
    SweepCell,
    SweepGrid,
    SynthSpec,
    evaluate_config,
    finalize_on_test,
    generate_corpus,
    join_corpus,
    read_alignments,
    read_manifest,
    render_table,
    run_sweep,
)
from attnseg.metrics.segmentation import AreaReport, BoundaryReport
from attnseg.report import WordReport
from attnseg.sweep import SweepResult, objective_value
from attnseg.errors import ConfigError


def _corpus(tmp_path, seed=0, n=10, vocab=5):
    spec = SynthSpec(
        vocab_size=vocab,
        n_utterances=n,
        words_per_utterance=(2, 4),
        word_duration=(6, 14),
        heads=2,
        feature_dim=6,
        seed=seed,
    )
    files = generate_corpus(spec, tmp_path)
    return join_corpus(read_manifest(files.manifest_path), read_alignments(files.alignments_path))


def _report(layer, threshold, a=50.0, f1=50.0, wd=0.0):
    return MetricReport(
        layer=layer,
        threshold=threshold,
        area=AreaReport(a, a, 0.0, a),
        boundary=BoundaryReport(f1, f1, f1, 0.0, f1),
        word=WordReport(90.0, 0.0, wd, 0.0, 1),
    )


class TestSelection:
    def test_single_cell_equals_evaluate_config(self, tmp_path):
        corpus = _corpus(tmp_path)
        grid = SweepGrid(layers=(9,), thresholds=(0.9,))
        result = run_sweep(corpus, grid, tol_ms=20.0, n_seeds=1)
        assert len(result.reports) == 1
        cell, report = result.reports[0]
        direct = evaluate_config(corpus, cell, tol_ms=20.0, n_seeds=1)
        assert report == direct

    def test_wd_objective_prefers_larger(self):
        result = SweepResult(
            "WD",
            (
                (SweepCell(3, 0.9, "mean", 64), _report(3, 0.9, wd=1167)),
                (SweepCell(4, 0.9, "mean", 64), _report(4, 0.9, wd=1230)),
            ),
        )
        best_cell, _ = result.best
        assert best_cell.layer == 4

    def test_tie_breaks_to_lower_layer_then_threshold(self):
        result = SweepResult(
            "A_score",
            (
                (SweepCell(5, 0.8), _report(5, 0.8)),
                (SweepCell(3, 0.9), _report(3, 0.9)),
                (SweepCell(3, 0.7), _report(3, 0.7)),
            ),
        )
        best_cell, _ = result.best
        assert (best_cell.layer, best_cell.threshold) == (3, 0.7)

    def test_missing_layer_rejected(self, tmp_path):
        corpus = _corpus(tmp_path)
        with pytest.raises(ConfigError, match="layer 4"):
            run_sweep(corpus, SweepGrid(layers=(4,), thresholds=(0.9,)))

    def test_grid_validation(self):
        with pytest.raises(ConfigError):
            SweepGrid(layers=(), thresholds=(0.9,))
        with pytest.raises(ConfigError):
            SweepGrid(layers=(1,), thresholds=(1.2,))
        with pytest.raises(ConfigError):
            SweepGrid(layers=(1,), objective="WD")  # needs pooling/K axes
        with pytest.raises(ConfigError):
            SweepGrid(layers=(1,), objective="accuracy")


class TestSweepRuns:
    def test_cross_product_matches_individual_evaluations(self, tmp_path):
        corpus = _corpus(tmp_path)
        grid = SweepGrid(layers=(9,), thresholds=(0.7, 1.0))
        result = run_sweep(corpus, grid, tol_ms=20.0, n_seeds=1)
        assert len(result.reports) == 2
        for cell, report in result.reports:
            direct = evaluate_config(corpus, cell, tol_ms=20.0, n_seeds=1)
            assert report == direct

    def test_word_objective_produces_word_metrics(self, tmp_path):
        corpus = _corpus(tmp_path)
        grid = SweepGrid(
            layers=(9,), thresholds=(1.0,), poolings=("mean",), ks=(5,), objective="WD"
        )
        result = run_sweep(corpus, grid, tol_ms=20.0, n_seeds=2)
        _, report = result.best
        assert report.word is not None
        assert report.word.n_seeds == 2
        assert report.word.wd_mean == pytest.approx(5.0)

    def test_area_objective_skips_clustering(self, tmp_path):
        corpus = _corpus(tmp_path)
        grid = SweepGrid(layers=(9,), thresholds=(1.0,), poolings=("mean",), ks=(5,))
        result = run_sweep(corpus, grid, tol_ms=20.0, n_seeds=1)
        _, report = result.reports[0]
        assert report.word is None

    def test_finalize_on_test_uses_best_cell(self, tmp_path):
        dev = _corpus(tmp_path / "dev", seed=0)
        test = _corpus(tmp_path / "test", seed=1)
        grid = SweepGrid(layers=(9,), thresholds=(0.8, 1.0))
        result = run_sweep(dev, grid, tol_ms=20.0, n_seeds=1)
        best_cell, _ = result.best
        cell, report = finalize_on_test(test, result, tol_ms=20.0, n_seeds=1)
        assert cell == best_cell
        assert report == evaluate_config(test, best_cell, tol_ms=20.0, n_seeds=1)


def test_objective_value_and_table_rendering():
    report = _report(2, 0.9, a=65.77, f1=30.84, wd=1230)
    assert objective_value(report, "A_score") == pytest.approx(65.77)
    assert objective_value(report, "boundary_F1") == pytest.approx(30.84)
    assert objective_value(report, "WD") == pytest.approx(1230)
    table = render_table([report])
    assert "WC" in table and "R-val" in table
    assert "65.77" in table
    assert "1230.0" in table
