"""Binary tensor files and the JSON-lines corpus manifest.

The tensor format is deliberately tiny so that producers in other
environments can emit it without depending on this package:

    magic "STDT" | u32 version=1 | u8 dtype (0 = f32) | u8 ndim
    | ndim x u64 dims | row-major f32 payload

everything little-endian.  A file therefore occupies exactly
``10 + 8 * ndim + 4 * prod(shape)`` bytes.

Canonical layouts used by the pipeline:

* attention, CLS-row export:   ``[layer, head, key]``
* attention, full map export:  ``[layer, head, query, key]``
* frame features:              ``[layer, frame, dim]``

When ``has_cls`` is set in the manifest, index 0 of the key/query axes is
the aggregate (CLS) position and frame ``f`` lives at index ``f + 1``;
feature tensors never include the CLS position.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ManifestError, TensorFormatError

MAGIC = b"STDT"
VERSION = 1
_DTYPE_F32 = 0
_HEADER = struct.Struct("<4sIBB")


def _validated_f32(array: np.ndarray) -> np.ndarray:
    arr = np.asarray(array)
    if arr.ndim < 1 or arr.ndim > 4:
        raise TensorFormatError(f"tensor must have 1-4 dims, got shape {arr.shape}")
    if any(d == 0 for d in arr.shape):
        raise TensorFormatError(f"zero-sized dim in shape {arr.shape}")
    if arr.dtype != np.float32:
        if not np.issubdtype(arr.dtype, np.floating) and not np.issubdtype(arr.dtype, np.integer):
            raise TensorFormatError(f"unsupported dtype {arr.dtype}; only f32 tensors are written")
        arr = arr.astype(np.float32)
    return np.ascontiguousarray(arr)


def write_tensor(array: np.ndarray, path: str | Path) -> None:
    """Write a 1-4 dim float32 array to ``path`` in the STDT format."""
    arr = _validated_f32(array)
    header = _HEADER.pack(MAGIC, VERSION, _DTYPE_F32, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = arr.astype("<f4", copy=False).tobytes(order="C")
    with open(path, "wb") as f:
        f.write(header)
        f.write(dims)
        f.write(payload)


def _read_header(f, path) -> tuple[int, ...]:
    raw = f.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise TensorFormatError(f"{path}: file too short for header")
    magic, version, dtype, ndim = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise TensorFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise TensorFormatError(f"{path}: unsupported version {version}, expected {VERSION}")
    if dtype != _DTYPE_F32:
        raise TensorFormatError(f"{path}: unsupported dtype code {dtype}")
    if not 1 <= ndim <= 4:
        raise TensorFormatError(f"{path}: ndim {ndim} outside 1-4")
    raw_dims = f.read(8 * ndim)
    if len(raw_dims) < 8 * ndim:
        raise TensorFormatError(f"{path}: file too short for {ndim} dims")
    shape = struct.unpack(f"<{ndim}Q", raw_dims)
    if any(d == 0 for d in shape):
        raise TensorFormatError(f"{path}: zero-sized dim in shape {shape}")
    return shape


def read_tensor_header(path: str | Path) -> tuple[int, ...]:
    """Shape of the tensor stored at ``path``, without reading the payload."""
    with open(path, "rb") as f:
        return _read_header(f, path)


def read_tensor(path: str | Path) -> np.ndarray:
    """Read an STDT file back into a float32 array (inverse of write_tensor)."""
    with open(path, "rb") as f:
        shape = _read_header(f, path)
        expected = 4 * int(np.prod(shape))
        payload = f.read()
    if len(payload) != expected:
        raise TensorFormatError(
            f"{path}: truncated payload, expected {expected} bytes, got {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(shape).astype(np.float32, copy=False)


@dataclass(frozen=True)
class ManifestEntry:
    """One utterance's exported tensors and their frame geometry.

    ``attention_path`` / ``feature_path`` are resolved to absolute paths when
    the manifest is read; in the file they are relative to the manifest.
    """

    utterance_id: str
    attention_path: Path
    feature_path: Path
    num_frames: int
    frame_shift_ms: float
    layers: tuple[int, ...] = field(default_factory=tuple)
    has_cls: bool = False

    @property
    def frame_shift_s(self) -> float:
        return self.frame_shift_ms / 1000.0

    @property
    def duration_from_frames_s(self) -> float:
        return self.num_frames * self.frame_shift_s


def manifest_record(entry: ManifestEntry, base_dir: str | Path | None = None) -> dict:
    """JSON-serializable record for one entry, paths relative to ``base_dir``."""
    att, feat = entry.attention_path, entry.feature_path
    if base_dir is not None:
        att = Path(att).relative_to(base_dir)
        feat = Path(feat).relative_to(base_dir)
    return {
        "utterance_id": entry.utterance_id,
        "attention_path": str(att),
        "feature_path": str(feat),
        "num_frames": entry.num_frames,
        "frame_shift_ms": entry.frame_shift_ms,
        "layers": list(entry.layers),
        "has_cls": entry.has_cls,
    }


def write_manifest(entries: Sequence[ManifestEntry], path: str | Path) -> None:
    """Write entries as JSON lines, paths stored relative to the manifest dir."""
    base = Path(path).resolve().parent
    with open(path, "w", encoding="utf-8") as f:
        for entry in entries:
            f.write(json.dumps(manifest_record(entry, base), sort_keys=True))
            f.write("\n")


def _check_frame_dims(entry: ManifestEntry) -> None:
    att_shape = read_tensor_header(entry.attention_path)
    key_frames = entry.num_frames + (1 if entry.has_cls else 0)
    if len(att_shape) == 3:
        layer_dim, _, key_dim = att_shape
        query_ok = True
    elif len(att_shape) == 4:
        layer_dim, _, query_dim, key_dim = att_shape
        query_ok = query_dim == key_frames
    else:
        raise ManifestError(
            f"{entry.utterance_id}: attention tensor must be 3-dim (CLS row) or "
            f"4-dim (full map), got shape {att_shape}"
        )
    if key_dim != key_frames or not query_ok:
        raise ManifestError(
            f"{entry.utterance_id}: attention frame dim {att_shape[-1]} does not match "
            f"num_frames={entry.num_frames} (expected {key_frames}"
            f"{' incl. CLS' if entry.has_cls else ''})"
        )
    if layer_dim != len(entry.layers):
        raise ManifestError(
            f"{entry.utterance_id}: attention layer dim {layer_dim} does not match "
            f"manifest layers {list(entry.layers)}"
        )
    feat_shape = read_tensor_header(entry.feature_path)
    if len(feat_shape) != 3:
        raise ManifestError(
            f"{entry.utterance_id}: feature tensor must be [layer, frame, dim], "
            f"got shape {feat_shape}"
        )
    if feat_shape[1] != entry.num_frames:
        raise ManifestError(
            f"{entry.utterance_id}: feature frame dim {feat_shape[1]} does not match "
            f"num_frames={entry.num_frames}"
        )
    if feat_shape[0] != len(entry.layers):
        raise ManifestError(
            f"{entry.utterance_id}: feature layer dim {feat_shape[0]} does not match "
            f"manifest layers {list(entry.layers)}"
        )


def read_manifest(path: str | Path, check_tensors: bool = True) -> list[ManifestEntry]:
    """Parse a JSON-lines manifest, validating every record eagerly.

    Rejects duplicate utterance ids, unreadable referenced tensors and
    frame-count mismatches.  With ``check_tensors=False`` only the record
    fields themselves are validated (used by tooling that post-processes
    manifests before the tensors exist).
    """
    base = Path(path).resolve().parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                entry = ManifestEntry(
                    utterance_id=rec["utterance_id"],
                    attention_path=base / rec["attention_path"],
                    feature_path=base / rec["feature_path"],
                    num_frames=int(rec["num_frames"]),
                    frame_shift_ms=float(rec["frame_shift_ms"]),
                    layers=tuple(int(x) for x in rec["layers"]),
                    has_cls=bool(rec["has_cls"]),
                )
            except KeyError as exc:
                raise ManifestError(f"{path}:{lineno}: missing field {exc}") from exc
            if entry.utterance_id in seen:
                raise ManifestError(f"duplicate utterance_id {entry.utterance_id!r}")
            seen.add(entry.utterance_id)
            if entry.frame_shift_ms <= 0:
                raise ManifestError(
                    f"{entry.utterance_id}: frame_shift_ms must be > 0, got {entry.frame_shift_ms}"
                )
            if entry.num_frames <= 0:
                raise ManifestError(
                    f"{entry.utterance_id}: num_frames must be > 0, got {entry.num_frames}"
                )
            if not entry.layers:
                raise ManifestError(f"{entry.utterance_id}: empty layers list")
            if check_tensors:
                for p in (entry.attention_path, entry.feature_path):
                    if not Path(p).is_file():
                        raise ManifestError(f"{entry.utterance_id}: missing referenced file {p}")
                _check_frame_dims(entry)
            entries.append(entry)
    return entries
