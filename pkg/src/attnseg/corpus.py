"""Forced-alignment ingestion and corpus assembly.

Alignments arrive as JSON lines, one utterance per line::

    {"id": "u1", "duration_s": 2.0,
     "words":  [{"w": "a", "on": 0.1, "off": 0.4}, ...],
     "phones": [{"p": "ah", "on": 0.1, "off": 0.4}, ...]}

``phones`` is optional.  Words are lowercased and stripped of surrounding
punctuation; tokens that become empty are dropped and their span treated as
non-speech.  Silence is simply the gaps between word intervals.
"""

from __future__ import annotations

import json
import logging
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import AlignmentError, DataError
from .tensorio import ManifestEntry

logger = logging.getLogger(__name__)

_STRIP_CHARS = string.punctuation + string.whitespace


@dataclass(frozen=True)
class WordInterval:
    word: str
    onset_s: float
    offset_s: float


@dataclass(frozen=True)
class PhoneInterval:
    phone: str
    onset_s: float
    offset_s: float


@dataclass(frozen=True)
class UtteranceAlignment:
    """Ground-truth word (and optional phone) intervals for one utterance."""

    utterance_id: str
    duration_s: float
    words: tuple[WordInterval, ...]
    phones: tuple[PhoneInterval, ...] = ()


def normalize_word(token: str) -> str:
    """Lowercase and strip surrounding punctuation; may return ''."""
    return token.lower().strip(_STRIP_CHARS)


def _check_intervals(utt_id: str, kind: str, items, duration_s: float) -> None:
    # 1e-9 s slack: frame-derived timestamps routinely abut with float error
    for a, b in zip(items, items[1:]):
        if b.onset_s < a.offset_s - 1e-9:
            raise AlignmentError(
                f"{utt_id}: overlapping {kind} intervals "
                f"[{a.onset_s:.3f},{a.offset_s:.3f}) and [{b.onset_s:.3f},{b.offset_s:.3f})"
            )
    for iv in items:
        if not 0 <= iv.onset_s < iv.offset_s:
            raise AlignmentError(
                f"{utt_id}: bad {kind} interval [{iv.onset_s:.3f},{iv.offset_s:.3f})"
            )
        if iv.offset_s > duration_s + 1e-9:
            raise AlignmentError(
                f"{utt_id}: {kind} offset {iv.offset_s:.3f} beyond duration {duration_s:.3f}"
            )


def _parse_alignment(rec: dict, source: str) -> UtteranceAlignment:
    try:
        utt_id = rec["id"]
        duration_s = float(rec["duration_s"])
    except KeyError as exc:
        raise AlignmentError(f"{source}: missing field {exc}") from exc

    words = []
    for w in rec.get("words", []):
        token = normalize_word(str(w["w"]))
        if not token:
            continue  # punctuation-only token: span becomes non-speech
        words.append(WordInterval(token, float(w["on"]), float(w["off"])))
    words.sort(key=lambda iv: (iv.onset_s, iv.offset_s))

    phones = []
    for p in rec.get("phones", []):
        phones.append(PhoneInterval(str(p["p"]), float(p["on"]), float(p["off"])))
    phones.sort(key=lambda iv: (iv.onset_s, iv.offset_s))

    _check_intervals(utt_id, "word", words, duration_s)
    _check_intervals(utt_id, "phone", phones, duration_s)
    return UtteranceAlignment(utt_id, duration_s, tuple(words), tuple(phones))


def read_alignments(path: str | Path) -> list[UtteranceAlignment]:
    """Parse and validate a JSON-lines alignment file."""
    out: list[UtteranceAlignment] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AlignmentError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            alignment = _parse_alignment(rec, f"{path}:{lineno}")
            if alignment.utterance_id in seen:
                raise AlignmentError(f"duplicate alignment id {alignment.utterance_id!r}")
            seen.add(alignment.utterance_id)
            out.append(alignment)
    return out


def write_alignments(alignments: Iterable[UtteranceAlignment], path: str | Path) -> None:
    """Inverse of read_alignments (used by the synthetic generator)."""
    with open(path, "w", encoding="utf-8") as f:
        for a in alignments:
            rec = {
                "id": a.utterance_id,
                "duration_s": a.duration_s,
                "words": [{"w": w.word, "on": w.onset_s, "off": w.offset_s} for w in a.words],
                "phones": [{"p": p.phone, "on": p.onset_s, "off": p.offset_s} for p in a.phones],
            }
            f.write(json.dumps(rec, sort_keys=True))
            f.write("\n")


@dataclass(frozen=True)
class CorpusItem:
    manifest: ManifestEntry
    alignment: UtteranceAlignment

    @property
    def utterance_id(self) -> str:
        return self.manifest.utterance_id


@dataclass(frozen=True)
class Corpus:
    """Joined evaluation corpus; immutable, items sorted by utterance id."""

    items: tuple[CorpusItem, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[CorpusItem]:
        return iter(self.items)

    @property
    def utterance_ids(self) -> list[str]:
        return [item.utterance_id for item in self.items]


def join_corpus(
    manifests: Sequence[ManifestEntry], alignments: Sequence[UtteranceAlignment]
) -> Corpus:
    """Inner join of manifests and alignments on utterance id.

    Ids present on only one side are counted and logged; an empty join is an
    error.  The result is independent of input ordering.
    """
    by_manifest = {m.utterance_id: m for m in manifests}
    by_alignment = {a.utterance_id: a for a in alignments}
    shared = sorted(by_manifest.keys() & by_alignment.keys())
    only_manifest = sorted(by_manifest.keys() - by_alignment.keys())
    only_alignment = sorted(by_alignment.keys() - by_manifest.keys())
    if only_manifest:
        logger.warning(
            "%d manifest utterance(s) without alignments: %s",
            len(only_manifest),
            ", ".join(only_manifest[:10]) + ("..." if len(only_manifest) > 10 else ""),
        )
    if only_alignment:
        logger.warning(
            "%d alignment utterance(s) without manifests: %s",
            len(only_alignment),
            ", ".join(only_alignment[:10]) + ("..." if len(only_alignment) > 10 else ""),
        )
    if not shared:
        raise DataError("corpus join is empty: no utterance id appears in both inputs")

    items = []
    for utt_id in shared:
        manifest, alignment = by_manifest[utt_id], by_alignment[utt_id]
        frame_duration = manifest.duration_from_frames_s
        if abs(frame_duration - alignment.duration_s) > manifest.frame_shift_s:
            logger.warning(
                "%s: alignment duration %.3fs disagrees with %d frames x %.0fms = %.3fs",
                utt_id,
                alignment.duration_s,
                manifest.num_frames,
                manifest.frame_shift_ms,
                frame_duration,
            )
        items.append(CorpusItem(manifest, alignment))
    return Corpus(tuple(items))
