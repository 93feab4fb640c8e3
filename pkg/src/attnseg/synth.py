"""Synthetic corpora with planted structure, plus brute-force test oracles.

The generator plants, per attention head, a block of attention mass under a
subset of the utterance's words (every word is covered by at least one
head).  Planted spans are shrunk by a ~20% margin on word-internal edges so
that adjacent words yield separate segments whose midpoint falls on the
shared word boundary; utterance-initial and -final edges stay anchored to
the true word edges.  Frame features are a per-word centroid plus Gaussian
noise, with a distinct filler distribution outside words, which makes the
clustering ground truth analytic.

The remaining functions are deliberately naive reference implementations
(subset enumeration, augmenting-path matching) used to cross-check the fast
paths in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import PhoneInterval, UtteranceAlignment, WordInterval, write_alignments
from .errors import ConfigError, DataError
from .tensorio import ManifestEntry, write_manifest, write_tensor
from .util import utterance_rng

_PHONE_BASE = 8  # vocab index -> base-8 digits -> 3-phone pronunciation


@dataclass(frozen=True)
class SynthSpec:
    """Knobs for one synthetic corpus; all frame counts inclusive ranges."""

    vocab_size: int = 50
    n_utterances: int = 100
    words_per_utterance: tuple[int, int] = (3, 9)
    word_duration: tuple[int, int] = (6, 16)
    gap: tuple[int, int] = (0, 0)
    silence: tuple[int, int] = (0, 0)  # leading/trailing non-speech frames
    heads: int = 4
    noise_floor: float = 0.0
    peak_mass: float = 1.0
    feature_dim: int = 16
    cluster_sigma: float = 0.0
    seed: int = 0
    frame_shift_ms: float = 20.0
    layer: int = 9

    def __post_init__(self) -> None:
        if not 0.5 < self.peak_mass <= 1:
            raise ConfigError(f"peak_mass must be in (0.5, 1], got {self.peak_mass}")
        if self.noise_floor < 0:
            raise ConfigError("noise_floor must be >= 0")
        for name in ("words_per_utterance", "word_duration", "gap", "silence"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise ConfigError(f"bad {name} range ({lo}, {hi})")
        if self.words_per_utterance[0] < 1 or self.word_duration[0] < 3:
            raise ConfigError("need >= 1 word per utterance and >= 3 frames per word")
        if min(self.vocab_size, self.n_utterances, self.heads, self.feature_dim) < 1:
            raise ConfigError("vocab_size, n_utterances, heads, feature_dim must be >= 1")


@dataclass(frozen=True)
class SynthCorpus:
    """Everything the tests need to know about a generated corpus."""

    out_dir: Path
    manifest_path: Path
    alignments_path: Path
    manifests: tuple[ManifestEntry, ...]
    alignments: tuple[UtteranceAlignment, ...]
    vocab: tuple[str, ...]
    word_centroids: np.ndarray
    # Smallest nonzero weight as a fraction of its head's total, minimized
    # over all (utterance, head) profiles: any retain_mass strictly above
    # 1 - min_nonzero_weight_frac keeps every nonzero frame everywhere.
    min_nonzero_weight_frac: float = 0.0
    planted_spans: dict = field(default_factory=dict)


def _word_phones(index: int) -> tuple[str, ...]:
    digits = (index // _PHONE_BASE**2, (index // _PHONE_BASE) % _PHONE_BASE, index % _PHONE_BASE)
    return tuple(f"ph{d}" for d in digits)


def _inner_margin(length: int) -> int:
    margin = max(1, round(0.2 * length))
    return min(margin, (length - 1) // 2)


def generate_corpus(spec: SynthSpec, out_dir: str | Path) -> SynthCorpus:
    """Write tensors, manifest and alignments for a planted corpus.

    Deterministic given ``spec.seed``; utterances draw from generators
    derived per index, so generation order (or parallelism) cannot change
    the result.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_rng = np.random.default_rng(spec.seed)
    vocab = tuple(f"w{idx:03d}" for idx in range(spec.vocab_size))
    centroids = corpus_rng.normal(0.0, 1.0, size=(spec.vocab_size, spec.feature_dim))
    filler_centroid = corpus_rng.normal(0.0, 1.0, size=spec.feature_dim)
    shift_s = spec.frame_shift_ms / 1000.0

    manifests: list[ManifestEntry] = []
    alignments: list[UtteranceAlignment] = []
    min_weight_frac = 1.0
    planted_spans: dict[str, list[tuple[int, int, int]]] = {}

    for u in range(spec.n_utterances):
        rng = utterance_rng(spec.seed, u)
        utt_id = f"synth{u:05d}"
        n_words = int(rng.integers(spec.words_per_utterance[0], spec.words_per_utterance[1] + 1))
        word_ids = rng.integers(0, spec.vocab_size, size=n_words)
        lengths = rng.integers(spec.word_duration[0], spec.word_duration[1] + 1, size=n_words)
        gaps = rng.integers(spec.gap[0], spec.gap[1] + 1, size=n_words - 1) if n_words > 1 else []

        lead = int(rng.integers(spec.silence[0], spec.silence[1] + 1))
        trail = int(rng.integers(spec.silence[0], spec.silence[1] + 1))
        spans: list[tuple[int, int]] = []
        cursor = lead
        for w in range(n_words):
            spans.append((cursor, cursor + int(lengths[w])))
            cursor += int(lengths[w]) + (int(gaps[w]) if w < n_words - 1 else 0)
        num_frames = spans[-1][1] + trail

        # planted attention span per word: margins only on word-internal edges
        planted: list[tuple[int, int, int]] = []
        for w, (s, e) in enumerate(spans):
            margin = _inner_margin(e - s)
            a = 0 if w == 0 else margin
            b = 0 if w == n_words - 1 else margin
            planted.append((int(word_ids[w]), s + a, e - b))
        planted_spans[utt_id] = planted

        # per-head coverage: word w always on head w % heads, plus extras
        head_words: list[list[int]] = [[] for _ in range(spec.heads)]
        for w in range(n_words):
            head_words[w % spec.heads].append(w)
            for h in range(spec.heads):
                if h != w % spec.heads and rng.random() < 0.4:
                    head_words[h].append(w)

        attn = np.zeros((1, spec.heads, num_frames + 1), dtype=np.float64)
        for h in range(spec.heads):
            # noise mass is noise_floor * planted mass, spread over all frames;
            # drawn unconditionally so corpora with the same seed but different
            # noise_floor are paired frame-for-frame
            noise = rng.random(num_frames)
            peak = np.zeros(num_frames)
            for w in sorted(head_words[h]):
                _, ps, pe = planted[w]
                peak[ps:pe] += 1.0 + 0.25 * rng.random(pe - ps)
            row = np.zeros(num_frames)
            if peak.sum() > 0:
                row += spec.peak_mass * peak / peak.sum()
            if spec.noise_floor > 0 and noise.sum() > 0:
                row += spec.noise_floor * spec.peak_mass * noise / noise.sum()
            total = row.sum()
            if total <= 0:
                continue
            row /= total
            attn[0, h, 1:] = row  # index 0 is the CLS key, weight 0
            nonzero = row[row > 0]
            min_weight_frac = min(min_weight_frac, float(nonzero.min()))

        features = np.empty((1, num_frames, spec.feature_dim), dtype=np.float64)
        features[0] = filler_centroid + max(spec.cluster_sigma, 0.5) * rng.normal(
            size=(num_frames, spec.feature_dim)
        )
        for w, (s, e) in enumerate(spans):
            features[0, s:e] = centroids[word_ids[w]] + spec.cluster_sigma * rng.normal(
                size=(e - s, spec.feature_dim)
            )

        attn_path = out_dir / f"{utt_id}_attn.stdt"
        feat_path = out_dir / f"{utt_id}_feat.stdt"
        write_tensor(attn.astype(np.float32), attn_path)
        write_tensor(features.astype(np.float32), feat_path)

        words = []
        phones = []
        for w, (s, e) in enumerate(spans):
            on, off = s * shift_s, e * shift_s
            words.append(WordInterval(vocab[word_ids[w]], on, off))
            seq = _word_phones(int(word_ids[w]))
            bounds = [on + (off - on) * i / len(seq) for i in range(len(seq))] + [off]
            for pi, ph in enumerate(seq):
                phones.append(PhoneInterval(ph, bounds[pi], bounds[pi + 1]))
        duration_s = num_frames * shift_s
        alignments.append(UtteranceAlignment(utt_id, duration_s, tuple(words), tuple(phones)))
        manifests.append(
            ManifestEntry(
                utterance_id=utt_id,
                attention_path=attn_path,
                feature_path=feat_path,
                num_frames=num_frames,
                frame_shift_ms=spec.frame_shift_ms,
                layers=(spec.layer,),
                has_cls=True,
            )
        )

    manifest_path = out_dir / "manifest.jsonl"
    alignments_path = out_dir / "alignments.jsonl"
    write_manifest(manifests, manifest_path)
    write_alignments(alignments, alignments_path)
    return SynthCorpus(
        out_dir,
        manifest_path,
        alignments_path,
        tuple(manifests),
        tuple(alignments),
        vocab,
        centroids,
        min_weight_frac,
        planted_spans,
    )


def oracle_threshold(profile: Sequence[float], retain_mass: float) -> np.ndarray:
    """Reference thresholding by exhaustive subset enumeration (<= 20 frames).

    Returns the smallest frame set whose mass reaches ``retain_mass`` of the
    total; among minimal sets the one with maximal mass, then the
    lexicographically smallest index set.
    """
    weights = np.asarray(profile, dtype=np.float64)
    n = weights.size
    if n > 20:
        raise DataError(f"oracle_threshold enumerates subsets; {n} frames is too many")
    mask = np.zeros(n, dtype=bool)
    total = weights.sum()
    if total <= 0:
        return mask
    target = retain_mass * total - 1e-9 * total
    codes = np.arange(1 << n, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n)) & 1
    masses = bits @ weights
    sizes = bits.sum(axis=1)
    feasible = masses >= target
    best_size = sizes[feasible].min()
    candidates = np.flatnonzero(feasible & (sizes == best_size))
    best_mass = masses[candidates].max()
    candidates = [c for c in candidates if masses[c] >= best_mass - 1e-9 * total]
    best = min(candidates, key=lambda c: tuple(np.flatnonzero(bits[c])))
    mask[np.flatnonzero(bits[best])] = True
    return mask


def oracle_boundary_match(
    hyp: Sequence[float], ref: Sequence[float], tol_s: float
) -> int:
    """Maximum bipartite matching size between boundary sets (test oracle)."""
    adjacency = [
        [j for j, r in enumerate(ref) if abs(h - r) <= tol_s + 1e-9] for h in hyp
    ]
    match_of_ref: list[int] = [-1] * len(ref)

    def augment(i: int, visited: set[int]) -> bool:
        for j in adjacency[i]:
            if j in visited:
                continue
            visited.add(j)
            if match_of_ref[j] == -1 or augment(match_of_ref[j], visited):
                match_of_ref[j] = i
                return True
        return False

    return sum(1 for i in range(len(hyp)) if augment(i, set()))
