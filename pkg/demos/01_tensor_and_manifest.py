"""Tensor files and corpus manifests: the on-disk contract.

Every utterance is two small binary tensors (attention + frame features)
plus one JSON line in a manifest. The tensor format is 10 bytes of header,
8 bytes per dimension, then raw little-endian float32 -- trivial to emit
from any language.
"""

import tempfile
from pathlib import Path

import numpy as np

from attnseg import ManifestEntry, read_manifest, read_tensor, write_manifest, write_tensor

work = Path(tempfile.mkdtemp(prefix="attnseg_demo_"))

# a CLS-row attention tensor: [layer, head, key], key 0 is the CLS position
attn = np.random.default_rng(0).random((1, 2, 51)).astype(np.float32)
attn /= attn.sum(axis=2, keepdims=True)
write_tensor(attn, work / "u1_attn.stdt")

feats = np.random.default_rng(1).random((1, 50, 8)).astype(np.float32)
write_tensor(feats, work / "u1_feat.stdt")

size = (work / "u1_attn.stdt").stat().st_size
print(f"attention tensor {attn.shape} -> {size} bytes "
      f"(= 10 + 8*{attn.ndim} + 4*{attn.size})")

back = read_tensor(work / "u1_attn.stdt")
print(f"round trip bit-exact: {back.tobytes() == attn.tobytes()}")

entry = ManifestEntry(
    utterance_id="u1",
    attention_path=work / "u1_attn.stdt",
    feature_path=work / "u1_feat.stdt",
    num_frames=50,
    frame_shift_ms=20.0,
    layers=(9,),
    has_cls=True,
)
write_manifest([entry], work / "manifest.jsonl")
print("\nmanifest line:")
print((work / "manifest.jsonl").read_text().strip())

# read_manifest validates eagerly: ids unique, files present, frame dims match
[checked] = read_manifest(work / "manifest.jsonl")
print(f"\nvalidated: {checked.utterance_id}, {checked.num_frames} frames, "
      f"layers {list(checked.layers)}, has_cls={checked.has_cls}")
