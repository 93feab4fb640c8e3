"""Targeted checks for behaviours that once regressed or are easy to break."""

import numpy as np
import pytest

from attnseg import (
    Corpus,
    CorpusItem,
    LabeledSegment,
    ManifestEntry,
    PhoneInterval,
    SegmenterConfig,
    UtteranceAlignment,
    WordInterval,
    evaluate_corpus,
    ned_coverage,
    read_manifest,
    write_manifest,
    write_tensor,
)
from attnseg.cli import RunConfig


def test_pooling_defaults_to_attention_layer_in_multilayer_dump(tmp_path):
    # two exported layers with different feature values; segmenting on layer
    # 7 must pool layer 7's features, not the first exported layer's
    attn = np.zeros((2, 1, 11), dtype=np.float32)
    attn[:, 0, 3:7] = 0.25
    feats = np.zeros((2, 10, 2), dtype=np.float32)
    feats[0] = 100.0  # layer 3
    feats[1] = 7.0  # layer 7
    write_tensor(attn, tmp_path / "u_a.stdt")
    write_tensor(feats, tmp_path / "u_f.stdt")
    entry = ManifestEntry("u", tmp_path / "u_a.stdt", tmp_path / "u_f.stdt", 10, 20.0, (3, 7), True)
    alignment = UtteranceAlignment("u", 0.2, (WordInterval("w", 0.04, 0.14),))
    corpus = Corpus((CorpusItem(entry, alignment),))

    cfg = SegmenterConfig(layer=7, retain_mass=1.0)
    _, _, labels = evaluate_corpus(corpus, cfg, pooling="mean", k=1, n_seeds=1)
    from attnseg.pipeline import pooled_corpus_vectors, segment_corpus

    segmented = segment_corpus(corpus, cfg)
    [pooled] = pooled_corpus_vectors(segmented, "mean", 7)
    np.testing.assert_allclose(pooled.vector, [7.0, 7.0])
    [pooled3] = pooled_corpus_vectors(segmented, "mean", 3)
    np.testing.assert_allclose(pooled3.vector, [100.0, 100.0])


def test_full_map_manifest_validates_query_axis(tmp_path):
    attn = np.zeros((1, 2, 9, 10), dtype=np.float32)  # query dim off by one
    feats = np.zeros((1, 10, 2), dtype=np.float32)
    write_tensor(attn, tmp_path / "u_a.stdt")
    write_tensor(feats, tmp_path / "u_f.stdt")
    entry = ManifestEntry("u", tmp_path / "u_a.stdt", tmp_path / "u_f.stdt", 10, 20.0, (1,), False)
    write_manifest([entry], tmp_path / "manifest.jsonl")
    from attnseg.errors import ManifestError

    with pytest.raises(ManifestError, match="attention frame dim"):
        read_manifest(tmp_path / "manifest.jsonl")


def test_ned_pair_sampling_cap_is_seeded(tmp_path):
    phones = tuple(
        PhoneInterval(p, 0.1 * i, 0.1 * (i + 1)) for i, p in enumerate(("a", "b", "c", "d"))
    )
    words = (WordInterval("w", 0.0, 0.4),)
    entry = ManifestEntry("u", tmp_path / "a", tmp_path / "f", 20, 20.0, (9,), True)
    corpus = Corpus((CorpusItem(entry, UtteranceAlignment("u", 0.4, words, phones)),))
    rng = np.random.default_rng(0)
    # 80 segments in one cluster -> 3160 pairs, cap at 100 forces sampling
    segments = [
        LabeledSegment("u", float(a), float(a) + 0.15, 0)
        for a in rng.uniform(0.0, 0.25, size=80)
    ]
    r1 = ned_coverage(segments, corpus, seed=5, max_pairs_per_cluster=100)
    r2 = ned_coverage(segments, corpus, seed=5, max_pairs_per_cluster=100)
    assert r1 == r2
    exact = ned_coverage(segments, corpus, seed=5, max_pairs_per_cluster=10**6)
    assert abs(r1.ned - exact.ned) < 15.0  # sampled estimate stays in range


def test_std_threads_env_fallback(monkeypatch):
    cfg = RunConfig(threads=0)
    monkeypatch.setenv("STD_THREADS", "3")
    assert cfg.resolved_threads() == 3
    monkeypatch.setenv("STD_THREADS", "not-a-number")
    assert cfg.resolved_threads() >= 1
    monkeypatch.delenv("STD_THREADS")
    cfg = RunConfig(threads=2)
    assert cfg.resolved_threads() == 2
