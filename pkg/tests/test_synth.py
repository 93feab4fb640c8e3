import numpy as np
import pytest

from attnseg import (
    SegmenterConfig,
    SynthSpec,
    attention_profile,
    extract_segments,
    generate_corpus,
    join_corpus,
    oracle_boundary_match,
    oracle_threshold,
    read_alignments,
    read_manifest,
    read_tensor,
    threshold_profile,
)
from attnseg.errors import ConfigError, DataError


def small_spec(**kw):
    base = dict(
        vocab_size=8,
        n_utterances=12,
        words_per_utterance=(2, 5),
        word_duration=(6, 16),
        heads=2,
        feature_dim=8,
        seed=7,
    )
    base.update(kw)
    return SynthSpec(**base)


class TestGenerator:
    def test_outputs_pass_validation_and_join(self, tmp_path):
        corpus_files = generate_corpus(small_spec(), tmp_path)
        manifests = read_manifest(corpus_files.manifest_path)
        alignments = read_alignments(corpus_files.alignments_path)
        corpus = join_corpus(manifests, alignments)
        assert len(corpus) == 12

    def test_deterministic_given_seed(self, tmp_path):
        a = generate_corpus(small_spec(), tmp_path / "a")
        b = generate_corpus(small_spec(), tmp_path / "b")
        for ma, mb in zip(a.manifests, b.manifests):
            assert read_tensor(ma.attention_path).tobytes() == read_tensor(mb.attention_path).tobytes()
            assert read_tensor(ma.feature_path).tobytes() == read_tensor(mb.feature_path).tobytes()

    def test_different_seed_differs(self, tmp_path):
        a = generate_corpus(small_spec(seed=1), tmp_path / "a")
        b = generate_corpus(small_spec(seed=2), tmp_path / "b")
        same = all(
            read_tensor(ma.attention_path).tobytes() == read_tensor(mb.attention_path).tobytes()
            for ma, mb in zip(a.manifests, b.manifests)
        )
        assert not same

    def test_noiseless_full_mass_recovers_planted_frames(self, tmp_path):
        corpus_files = generate_corpus(small_spec(noise_floor=0.0, peak_mass=1.0), tmp_path)
        cfg = SegmenterConfig(layer=9, retain_mass=1.0)
        for entry in corpus_files.manifests:
            attn = read_tensor(entry.attention_path)
            profile = attention_profile(attn, cfg, entry.layers, entry.has_cls)
            masks = threshold_profile(profile, 1.0)
            segments = extract_segments(profile, masks, cfg)
            got = [(s.start_frame, s.end_frame) for s in segments]
            want = [(ps, pe) for _, ps, pe in corpus_files.planted_spans[entry.utterance_id]]
            assert got == want

    def test_attention_rows_are_normalized_with_zero_cls(self, tmp_path):
        corpus_files = generate_corpus(small_spec(noise_floor=0.2), tmp_path)
        attn = read_tensor(corpus_files.manifests[0].attention_path)
        assert attn[0, :, 0] == pytest.approx(0.0)
        np.testing.assert_allclose(attn.sum(axis=2), 1.0, atol=1e-6)

    def test_bad_specs_rejected(self):
        with pytest.raises(ConfigError):
            small_spec(peak_mass=0.4)
        with pytest.raises(ConfigError):
            small_spec(word_duration=(2, 4))
        with pytest.raises(ConfigError):
            small_spec(noise_floor=-0.1)
        with pytest.raises(ConfigError):
            small_spec(words_per_utterance=(5, 3))


class TestOracleThreshold:
    def test_single_peak(self):
        mask = oracle_threshold([0.1, 0.6, 0.2, 0.1], 0.6)
        np.testing.assert_array_equal(mask, [False, True, False, False])

    def test_full_mass(self):
        mask = oracle_threshold([0.1, 0.0, 0.4], 1.0)
        np.testing.assert_array_equal(mask, [True, False, True])

    def test_uniform_tie(self):
        mask = oracle_threshold([0.25] * 4, 0.5)
        np.testing.assert_array_equal(mask, [True, True, False, False])

    def test_too_many_frames(self):
        with pytest.raises(DataError):
            oracle_threshold([0.1] * 21, 0.5)

    def test_all_zero(self):
        assert not oracle_threshold([0.0, 0.0], 0.5).any()


class TestOracleMatcher:
    def test_disjoint(self):
        assert oracle_boundary_match([0.0, 1.0], [5.0, 6.0], 0.1) == 0

    def test_identical(self):
        times = [0.1, 0.5, 0.9]
        assert oracle_boundary_match(times, times, 0.01) == 3

    def test_maximum_over_greedy_counterexample_shape(self):
        # one hyp close to two refs, another hyp close to only the first
        assert oracle_boundary_match([0.10, 0.12], [0.11, 0.20], 0.02) == 1
        assert oracle_boundary_match([0.10, 0.19], [0.11, 0.20], 0.02) == 2
