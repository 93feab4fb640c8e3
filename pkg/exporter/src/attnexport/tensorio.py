"""Writer/reader for the engine's tensor file format and manifest lines.

Deliberately self-contained: the exporter and the analysis engine share
only the byte format, not code.  Layout: magic "STDT", u32 version=1,
u8 dtype (0=f32), u8 ndim, ndim x u64 dims, row-major little-endian f32.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<4sIBB")


def write_tensor(array: np.ndarray, path: str | Path) -> None:
    arr = np.ascontiguousarray(np.asarray(array, dtype=np.float32))
    if not 1 <= arr.ndim <= 4 or 0 in arr.shape:
        raise ValueError(f"tensor shape {arr.shape} not writable (need 1-4 nonzero dims)")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(b"STDT", 1, 0, arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        f.write(arr.astype("<f4", copy=False).tobytes(order="C"))


def read_tensor(path: str | Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic, version, dtype, ndim = _HEADER.unpack(f.read(_HEADER.size))
        if magic != b"STDT" or version != 1 or dtype != 0:
            raise ValueError(f"{path}: not a v1 f32 STDT tensor")
        shape = struct.unpack(f"<{ndim}Q", f.read(8 * ndim))
        payload = f.read()
    expected = 4 * int(np.prod(shape))
    if len(payload) != expected:
        raise ValueError(f"{path}: payload {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype="<f4").reshape(shape)


def append_manifest_line(
    manifest_path: str | Path,
    utterance_id: str,
    attention_path: str,
    feature_path: str,
    num_frames: int,
    frame_shift_ms: float,
    layers: list[int],
    has_cls: bool,
) -> None:
    record = {
        "utterance_id": utterance_id,
        "attention_path": attention_path,
        "feature_path": feature_path,
        "num_frames": num_frames,
        "frame_shift_ms": frame_shift_ms,
        "layers": layers,
        "has_cls": has_cls,
    }
    with open(manifest_path, "a", encoding="utf-8") as f:
        f.write(json.dumps(record, sort_keys=True))
        f.write("\n")
