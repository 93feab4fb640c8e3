import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attnseg import ManifestEntry, read_manifest, read_tensor, read_tensor_header, write_manifest, write_tensor
from attnseg.errors import ManifestError, TensorFormatError


def test_file_layout_byte_count(tmp_path):
    # header 4+4+1+1, two u64 dims, 6 f32 values
    path = tmp_path / "t.stdt"
    write_tensor(np.arange(6, dtype=np.float32).reshape(2, 3), path)
    assert path.stat().st_size == 4 + 4 + 1 + 1 + 16 + 24 == 50


def test_round_trip_identity(tmp_path):
    path = tmp_path / "t.stdt"
    arr = np.arange(6, dtype=np.float32).reshape(2, 3)
    write_tensor(arr, path)
    back = read_tensor(path)
    assert back.shape == (2, 3)
    assert back.dtype == np.float32
    np.testing.assert_array_equal(back, arr)


def test_zero_dim_and_scalar_rejected(tmp_path):
    with pytest.raises(TensorFormatError):
        write_tensor(np.zeros((2, 0, 3), dtype=np.float32), tmp_path / "z.stdt")
    with pytest.raises(TensorFormatError):
        write_tensor(np.float32(1.0), tmp_path / "s.stdt")
    with pytest.raises(TensorFormatError):
        write_tensor(np.zeros((1, 1, 1, 1, 1), dtype=np.float32), tmp_path / "d5.stdt")


def test_bad_magic(tmp_path):
    path = tmp_path / "t.stdt"
    write_tensor(np.ones(3, dtype=np.float32), path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(raw)
    with pytest.raises(TensorFormatError, match="magic"):
        read_tensor(path)


def test_truncation_reports_byte_counts(tmp_path):
    path = tmp_path / "t.stdt"
    write_tensor(np.arange(6, dtype=np.float32).reshape(2, 3), path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(TensorFormatError, match=r"expected 24 bytes, got 20"):
        read_tensor(path)


def test_version_mismatch(tmp_path):
    path = tmp_path / "t.stdt"
    write_tensor(np.ones(2, dtype=np.float32), path)
    raw = bytearray(path.read_bytes())
    raw[4] = 9
    path.write_bytes(raw)
    with pytest.raises(TensorFormatError, match="version"):
        read_tensor(path)


def test_header_only_read(tmp_path):
    path = tmp_path / "t.stdt"
    write_tensor(np.zeros((3, 4, 5), dtype=np.float32), path)
    assert read_tensor_header(path) == (3, 4, 5)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_round_trip_random(tmp_path_factory, data):
    rng_seed = data.draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(rng_seed)
    ndim = data.draw(st.integers(1, 4))
    shape = tuple(data.draw(st.integers(1, 5)) for _ in range(ndim))
    arr = rng.normal(size=shape).astype(np.float32)
    path = tmp_path_factory.mktemp("rt") / "t.stdt"
    write_tensor(arr, path)
    back = read_tensor(path)
    assert back.shape == arr.shape
    assert back.tobytes() == arr.tobytes()  # bit-exact
    assert path.stat().st_size == 10 + 8 * ndim + 4 * arr.size


def _entry(tmp_path, utt_id, num_frames=10, has_cls=True, layers=(9,), heads=2, dim=4):
    key_frames = num_frames + (1 if has_cls else 0)
    attn_path = tmp_path / f"{utt_id}_attn.stdt"
    feat_path = tmp_path / f"{utt_id}_feat.stdt"
    write_tensor(np.random.default_rng(0).random((len(layers), heads, key_frames)).astype(np.float32), attn_path)
    write_tensor(np.zeros((len(layers), num_frames, dim), dtype=np.float32), feat_path)
    return ManifestEntry(utt_id, attn_path, feat_path, num_frames, 20.0, tuple(layers), has_cls)


def test_manifest_round_trip(tmp_path):
    entries = [_entry(tmp_path, "u1"), _entry(tmp_path, "u2", num_frames=7)]
    path = tmp_path / "manifest.jsonl"
    write_manifest(entries, path)
    back = read_manifest(path)
    assert [e.utterance_id for e in back] == ["u1", "u2"]
    assert back[0].num_frames == 10
    assert back[0].attention_path == entries[0].attention_path
    assert back[1].has_cls


def test_manifest_duplicate_id(tmp_path):
    entries = [_entry(tmp_path, "u1"), _entry(tmp_path, "u1")]
    path = tmp_path / "manifest.jsonl"
    write_manifest(entries, path)
    with pytest.raises(ManifestError, match="u1"):
        read_manifest(path)


def test_manifest_frame_mismatch_with_cls(tmp_path):
    # attention has 102 key frames, manifest claims 100 frames + CLS -> expects 101
    entry = _entry(tmp_path, "u1", num_frames=101, has_cls=True)
    path = tmp_path / "manifest.jsonl"
    rec = json.loads(json.dumps({
        "utterance_id": "u1",
        "attention_path": entry.attention_path.name,
        "feature_path": entry.feature_path.name,
        "num_frames": 100,
        "frame_shift_ms": 20.0,
        "layers": [9],
        "has_cls": True,
    }))
    path.write_text(json.dumps(rec) + "\n")
    with pytest.raises(ManifestError, match="101"):
        read_manifest(path)


def test_manifest_missing_file(tmp_path):
    entry = _entry(tmp_path, "u1")
    entry.attention_path.unlink()
    path = tmp_path / "manifest.jsonl"
    write_manifest([entry], path)
    with pytest.raises(ManifestError, match="missing referenced file"):
        read_manifest(path)


def test_manifest_bad_frame_shift(tmp_path):
    entry = _entry(tmp_path, "u1")
    path = tmp_path / "manifest.jsonl"
    write_manifest([entry], path)
    text = path.read_text().replace("20.0", "0.0")
    path.write_text(text)
    with pytest.raises(ManifestError, match="frame_shift_ms"):
        read_manifest(path)
