"""Dump per-layer self-attention and frame features from speech transformers.

Works with HuBERT/wav2vec2-style checkpoints (anything AutoModel resolves
to a model exposing ``feature_extractor`` / ``feature_projection`` /
``encoder``).  Two attention modes:

* ``full_map``: the full [layer, head, query, key] attention of the chosen
  layers, straight from the checkpoint;
* ``cls_row``: prepend an aggregate (CLS) embedding ahead of the frame
  sequence and store only its query row, [layer, head, key].  Vanilla
  checkpoints carry no such token, so this mode requires an explicit CLS
  embedding vector.

Everything is exported as float32 in inference mode; attention tensors are
softmax rows and therefore sum to one along the key axis.
"""

from __future__ import annotations

import json
import logging
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from .tensorio import append_manifest_line, read_tensor, write_tensor

logger = logging.getLogger(__name__)

SAMPLE_RATE = 16_000
ATTENTION_MODES = ("cls_row", "full_map")


class ExportError(Exception):
    """Configuration or data problem during export."""


@dataclass(frozen=True)
class ExportJob:
    checkpoint: str
    audio_files: tuple[str, ...]
    layers: tuple[int, ...]
    attention_mode: str = "full_map"
    out_dir: Path = Path("dump")
    device: str = "cpu"
    cls_embedding_path: Optional[str] = None
    max_seconds: float = 30.0
    normalize: bool = False
    manifest_name: str = "manifest.jsonl"

    def __post_init__(self) -> None:
        if self.attention_mode not in ATTENTION_MODES:
            raise ExportError(f"attention_mode must be one of {ATTENTION_MODES}")
        if not self.layers or len(set(self.layers)) != len(self.layers):
            raise ExportError("layers must be a non-empty list of distinct indices")
        if min(self.layers) < 1:
            raise ExportError("layer indices are 1-based")
        if self.attention_mode == "cls_row" and not self.cls_embedding_path:
            raise ExportError(
                "cls_row export needs a CLS-augmented checkpoint: pass --cls-embedding"
            )


@dataclass
class VerifyReport:
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def load_audio(path: str | Path) -> np.ndarray:
    """16 kHz mono PCM16 wav -> float32 waveform in [-1, 1]."""
    with wave.open(str(path), "rb") as w:
        if w.getframerate() != SAMPLE_RATE:
            raise ExportError(f"{path}: sample rate {w.getframerate()}, need {SAMPLE_RATE}")
        if w.getnchannels() != 1:
            raise ExportError(f"{path}: {w.getnchannels()} channels, need mono")
        if w.getsampwidth() != 2:
            raise ExportError(f"{path}: only 16-bit PCM wav is supported")
        raw = w.readframes(w.getnframes())
    return np.frombuffer(raw, dtype="<i2").astype(np.float32) / 32768.0


def load_model(checkpoint: str, device: str = "cpu"):
    """Load a speech-transformer checkpoint in inference mode.

    Attention weights require the eager attention path, so the model is
    loaded with ``attn_implementation="eager"`` regardless of its default.
    """
    from transformers import AutoModel

    try:
        model = AutoModel.from_pretrained(checkpoint, attn_implementation="eager")
    except Exception as exc:
        raise ExportError(f"cannot load checkpoint {checkpoint!r}: {exc}") from exc
    for attr in ("feature_extractor", "feature_projection", "encoder"):
        if not hasattr(model, attr):
            raise ExportError(
                f"checkpoint {checkpoint!r} ({type(model).__name__}) is not a "
                f"HuBERT/wav2vec2-style model: missing {attr}"
            )
    model.to(device)
    model.eval()
    return model


def frame_shift_ms(model) -> float:
    """Frame shift implied by the convolutional front-end stride product."""
    stride = int(np.prod(model.config.conv_stride))
    return 1000.0 * stride / SAMPLE_RATE


def _check_layers(model, layers: Sequence[int]) -> None:
    depth = int(model.config.num_hidden_layers)
    bad = [layer for layer in layers if layer > depth]
    if bad:
        raise ExportError(f"layers {bad} out of range for a {depth}-layer model")


def _forward(model, wav: np.ndarray, device: str, cls_vector: Optional[np.ndarray]):
    """Run the encoder, optionally with a prepended CLS embedding.

    Returns (attentions, hidden_states): attentions is a tuple with one
    [head, S, S] array per transformer layer; hidden_states has one
    [S, dim] array per layer output, index 0 being the pre-encoder input.
    """
    x = torch.from_numpy(wav)[None, :].to(device)
    with torch.inference_mode():
        if cls_vector is None:
            out = model(x, output_attentions=True, output_hidden_states=True)
            attentions, hidden_states = out.attentions, out.hidden_states
        else:
            feats = model.feature_extractor(x).transpose(1, 2)
            projected = model.feature_projection(feats)
            if isinstance(projected, tuple):  # wav2vec2 also returns conv features
                projected = projected[0]
            if cls_vector.shape != (projected.shape[-1],):
                raise ExportError(
                    f"CLS embedding has dim {cls_vector.shape}, model hidden "
                    f"size is {projected.shape[-1]}"
                )
            cls = torch.from_numpy(cls_vector.astype(np.float32))[None, None, :].to(device)
            hidden = torch.cat([cls, projected], dim=1)
            out = model.encoder(hidden, output_attentions=True, output_hidden_states=True)
            attentions, hidden_states = out.attentions, out.hidden_states
    att = tuple(a[0].float().cpu().numpy() for a in attentions)
    hid = tuple(h[0].float().cpu().numpy() for h in hidden_states)
    return att, hid


def export(job: ExportJob) -> Path:
    """Export every clip of the job; returns the manifest path.

    Per utterance writes ``<id>_attn.stdt`` ([layer, head, key] in cls_row
    mode, [layer, head, query, key] otherwise) and ``<id>_feat.stdt``
    ([layer, frame, dim], CLS position excluded), then appends one manifest
    line.  Utterance ids are the audio file stems, which must be unique.
    """
    model = load_model(job.checkpoint, job.device)
    _check_layers(model, job.layers)
    shift_ms = frame_shift_ms(model)
    cls_vector = None
    if job.attention_mode == "cls_row":
        cls_vector = np.asarray(read_tensor(job.cls_embedding_path))
        if cls_vector.ndim != 1:
            raise ExportError("CLS embedding tensor must be 1-dimensional")

    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / job.manifest_name

    stems = [Path(p).stem for p in job.audio_files]
    if len(set(stems)) != len(stems):
        raise ExportError("audio file stems must be unique (they become utterance ids)")

    for audio_path, stem in zip(job.audio_files, stems):
        wav = load_audio(audio_path)
        if wav.size > job.max_seconds * SAMPLE_RATE:
            raise ExportError(
                f"{audio_path}: {wav.size / SAMPLE_RATE:.1f}s exceeds the "
                f"{job.max_seconds:.0f}s cap (chunking would corrupt attention)"
            )
        if job.normalize:
            wav = (wav - wav.mean()) / (wav.std() + 1e-7)
        attentions, hidden_states = _forward(model, wav, job.device, cls_vector)

        has_cls = cls_vector is not None
        keys = attentions[0].shape[-1]
        num_frames = keys - (1 if has_cls else 0)
        if job.attention_mode == "cls_row":
            att = np.stack([attentions[layer - 1][:, 0, :] for layer in job.layers])
        else:
            att = np.stack([attentions[layer - 1] for layer in job.layers])
        start = 1 if has_cls else 0
        feat = np.stack([hidden_states[layer][start:] for layer in job.layers])

        att_name, feat_name = f"{stem}_attn.stdt", f"{stem}_feat.stdt"
        write_tensor(att, out_dir / att_name)
        write_tensor(feat, out_dir / feat_name)
        append_manifest_line(
            manifest_path,
            utterance_id=stem,
            attention_path=att_name,
            feature_path=feat_name,
            num_frames=num_frames,
            frame_shift_ms=shift_ms,
            layers=list(job.layers),
            has_cls=has_cls,
        )
        logger.info("%s: %d frames, %d layers", stem, num_frames, len(job.layers))
    return manifest_path


def verify_export(manifest_path: str | Path, atol: float = 1e-4) -> VerifyReport:
    """Re-open every exported tensor and check it against its manifest line.

    Checks: files readable, shapes match the manifest (layer count, frame
    counts with/without CLS), attention finite / nonnegative / row-sums
    within ``atol`` of 1, features finite.
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.resolve().parent
    report = VerifyReport()

    def fail(utt: str, message: str) -> None:
        report.failures.append((utt, message))

    with open(manifest_path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            utt = rec["utterance_id"]
            report.checked += 1
            try:
                att = read_tensor(base / rec["attention_path"])
                feat = read_tensor(base / rec["feature_path"])
            except (OSError, ValueError) as exc:
                fail(utt, f"unreadable tensor: {exc}")
                continue
            keys = rec["num_frames"] + (1 if rec["has_cls"] else 0)
            n_layers = len(rec["layers"])
            if att.ndim not in (3, 4) or att.shape[0] != n_layers or att.shape[-1] != keys:
                fail(utt, f"attention shape {att.shape} inconsistent with manifest")
                continue
            if feat.shape != (n_layers, rec["num_frames"], feat.shape[-1]):
                fail(utt, f"feature shape {feat.shape} inconsistent with manifest")
                continue
            if not np.isfinite(att).all() or not np.isfinite(feat).all():
                fail(utt, "non-finite values")
                continue
            if att.min() < 0:
                fail(utt, f"negative attention weight {att.min()}")
                continue
            sums = att.sum(axis=-1)
            err = float(np.abs(sums - 1.0).max())
            if err > atol:
                fail(utt, f"attention rows deviate from softmax normalization by {err:.2e}")
    return report
