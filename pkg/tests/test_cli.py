import json
from pathlib import Path

import pytest

from attnseg.cli import load_config, main


def run(*argv):
    return main(list(argv))


@pytest.fixture()
def synth_dir(tmp_path):
    out = tmp_path / "synth"
    code = run(
        "synth",
        "--out-dir", str(out),
        "--vocab-size", "5",
        "--n-utterances", "10",
        "--words-per-utterance", "[2, 4]",
        "--heads", "2",
        "--feature-dim", "6",
        "--seed", "3",
    )
    assert code == 0
    return out / "corpus"


class TestConfig:
    def test_protocol_presets(self, tmp_path):
        cfg = load_config(None, {"protocol": "zerospeech"})
        assert cfg.tolerance_ms == 30.0
        assert cfg.k == 16384
        assert cfg.pooling == "max"
        cfg = load_config(None, {"protocol": "spokencoco"})
        assert cfg.tolerance_ms == 20.0
        assert cfg.k == 4096

    def test_overrides_beat_protocol(self):
        cfg = load_config(None, {"protocol": "buckeye", "tolerance_ms": "25"})
        assert cfg.tolerance_ms == 25.0

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("no_such_key = 1\n")
        assert run("eval", "--config", str(path)) == 2

    def test_effective_config_round_trips(self, synth_dir, tmp_path):
        out = tmp_path / "seg"
        assert run(
            "segment",
            "--manifest", str(synth_dir / "manifest.jsonl"),
            "--out-dir", str(out),
            "--layer", "9",
            "--retain-mass", "1.0",
        ) == 0
        first = (out / "segments.jsonl").read_bytes()
        # re-run purely from the emitted effective config
        assert run("segment", "--config", str(out / "config.toml")) == 0
        assert (out / "segments.jsonl").read_bytes() == first


class TestSegment:
    def test_writes_fixed_filenames(self, synth_dir, tmp_path):
        out = tmp_path / "seg"
        code = run(
            "segment",
            "--manifest", str(synth_dir / "manifest.jsonl"),
            "--out-dir", str(out),
            "--retain-mass", "1.0",
        )
        assert code == 0
        records = [json.loads(l) for l in (out / "segments.jsonl").read_text().splitlines()]
        assert len(records) == 10
        boundaries = [json.loads(l) for l in (out / "boundaries.jsonl").read_text().splitlines()]
        assert all(rec["times_s"] == sorted(rec["times_s"]) for rec in boundaries)
        assert not (out / "attention_masks.jsonl").exists()

    def test_dump_attention_flag(self, synth_dir, tmp_path):
        out = tmp_path / "seg"
        assert run(
            "segment",
            "--manifest", str(synth_dir / "manifest.jsonl"),
            "--out-dir", str(out),
            "--dump-attention",
        ) == 0
        masks = [json.loads(l) for l in (out / "attention_masks.jsonl").read_text().splitlines()]
        assert len(masks) == 10
        assert all(set(sum(m["masks"], [])) <= {0, 1} for m in masks)

    def test_missing_manifest_is_config_error(self, tmp_path):
        assert run("segment", "--manifest", str(tmp_path / "nope.jsonl")) == 2

    def test_corrupt_manifest_is_data_error(self, tmp_path):
        bad = tmp_path / "manifest.jsonl"
        bad.write_text('{"utterance_id": "u1"}\n')
        assert run("segment", "--manifest", str(bad), "--out-dir", str(tmp_path / "o")) == 3

    def test_idempotent_reruns(self, synth_dir, tmp_path):
        out = tmp_path / "seg"
        argv = (
            "segment",
            "--manifest", str(synth_dir / "manifest.jsonl"),
            "--out-dir", str(out),
            "--seed", "5",
        )
        assert run(*argv) == 0
        first = (out / "segments.jsonl").read_bytes(), (out / "boundaries.jsonl").read_bytes()
        assert run(*argv) == 0
        second = (out / "segments.jsonl").read_bytes(), (out / "boundaries.jsonl").read_bytes()
        assert first == second


class TestEval:
    def test_metrics_files(self, synth_dir, tmp_path):
        out = tmp_path / "eval"
        code = run(
            "eval",
            "--manifest", str(synth_dir / "manifest.jsonl"),
            "--alignments", str(synth_dir / "alignments.jsonl"),
            "--out-dir", str(out),
            "--retain-mass", "1.0",
            "--k", "5",
            "--n-seeds", "2",
            "--threads", "1",
        )
        assert code == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["area"]["wc"] == pytest.approx(100.0)
        assert metrics["boundary"]["f1"] == pytest.approx(100.0)
        assert metrics["word"]["purity_mean"] == pytest.approx(100.0)
        matching = metrics["matching"]
        # segments are narrower than words, so edge phones drop from the
        # transcripts; NED stays moderate and the M-score identity must hold
        assert 0.0 <= matching["ned"] <= 50.0
        assert 0.0 < matching["coverage"] <= 100.0
        expected_m = 2 * (100 - matching["ned"]) * matching["coverage"] / (
            (100 - matching["ned"]) + matching["coverage"]
        )
        assert matching["m_score"] == pytest.approx(expected_m)
        assert "WC" in (out / "metrics.txt").read_text()

    def test_wider_tolerance_never_lowers_recall(self, tmp_path):
        out = tmp_path / "synth_noisy"
        assert run(
            "synth",
            "--out-dir", str(out),
            "--vocab-size", "5",
            "--n-utterances", "12",
            "--heads", "2",
            "--feature-dim", "6",
            "--noise-floor", "0.5",
            "--seed", "11",
        ) == 0
        recalls = {}
        for tol in (20, 30):
            out_eval = tmp_path / f"eval{tol}"
            assert run(
                "eval",
                "--manifest", str(out / "corpus" / "manifest.jsonl"),
                "--alignments", str(out / "corpus" / "alignments.jsonl"),
                "--out-dir", str(out_eval),
                "--retain-mass", "0.8",
                "--tolerance-ms", str(tol),
            ) == 0
            recalls[tol] = json.loads((out_eval / "metrics.json").read_text())["boundary"]["recall"]
        assert recalls[30] >= recalls[20]


class TestClusterAndClassfile:
    def test_cluster_then_export(self, synth_dir, tmp_path):
        out = tmp_path / "run"
        code = run(
            "cluster",
            "--manifest", str(synth_dir / "manifest.jsonl"),
            "--alignments", str(synth_dir / "alignments.jsonl"),
            "--out-dir", str(out),
            "--retain-mass", "1.0",
            "--k", "5",
            "--threads", "1",
        )
        assert code == 0
        assert (out / "model" / "centroids.stdt").exists()
        labels = [json.loads(l) for l in (out / "labels.jsonl").read_text().splitlines()]
        assert {rec["label"] for rec in labels} == set(range(5))

        assert run("export-classfile", "--out-dir", str(out)) == 0
        text = (out / "classes.txt").read_text()
        assert text.startswith("Class 0\n")
        assert len(text.strip().split("\n\n")) == 5

    def test_missing_labels_is_data_error(self, tmp_path):
        assert run("export-classfile", "--out-dir", str(tmp_path / "empty")) == 3

    def test_cluster_requires_k(self, synth_dir, tmp_path):
        code = run(
            "cluster",
            "--manifest", str(synth_dir / "manifest.jsonl"),
            "--alignments", str(synth_dir / "alignments.jsonl"),
            "--out-dir", str(tmp_path / "o"),
        )
        assert code == 2


class TestSweepCommand:
    def test_sweep_outputs(self, synth_dir, tmp_path):
        out = tmp_path / "sweep"
        code = run(
            "sweep",
            "--manifest", str(synth_dir / "manifest.jsonl"),
            "--alignments", str(synth_dir / "alignments.jsonl"),
            "--out-dir", str(out),
            "--layers", "[9]",
            "--thresholds", "[0.8, 1.0]",
            "--objective", "boundary_F1",
            "--n-seeds", "1",
        )
        assert code == 0
        payload = json.loads((out / "sweep.json").read_text())
        assert len(payload["cells"]) == 2
        assert payload["best"]["cell"]["threshold"] == 1.0
        assert (out / "sweep.txt").exists()
