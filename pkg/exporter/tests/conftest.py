import json
import wave
from pathlib import Path

import numpy as np
import pytest
import torch
from transformers import HubertConfig, HubertModel

from attnexport import ExportJob, export

SAMPLE_RATE = 16_000


def write_wav(path: Path, seconds: float, seed: int) -> None:
    rng = np.random.default_rng(seed)
    samples = (rng.normal(0, 0.1, int(seconds * SAMPLE_RATE)) * 32767).clip(-32768, 32767)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(SAMPLE_RATE)
        w.writeframes(samples.astype("<i2").tobytes())


@pytest.fixture(scope="session")
def checkpoint_dir(tmp_path_factory) -> Path:
    """Small randomly initialized HuBERT-architecture checkpoint.

    Same conv stride product (320 -> 20 ms frames) as the reference
    architectures, scaled down everywhere else.
    """
    torch.manual_seed(0)
    config = HubertConfig(
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        conv_dim=[32, 32, 32],
        conv_kernel=[10, 8, 4],
        conv_stride=[8, 8, 5],
        num_feat_extract_layers=3,
        num_conv_pos_embeddings=16,
        num_conv_pos_embedding_groups=2,
    )
    model = HubertModel(config)
    out = tmp_path_factory.mktemp("checkpoint")
    model.save_pretrained(out)
    return out


@pytest.fixture(scope="session")
def clips(tmp_path_factory) -> dict:
    """Ten short clips, their list file, and fabricated word alignments."""
    out = tmp_path_factory.mktemp("clips")
    durations = [0.6 + 0.08 * i for i in range(10)]
    paths = []
    for i, seconds in enumerate(durations):
        path = out / f"clip{i:02d}.wav"
        write_wav(path, seconds, seed=i)
        paths.append(path)
    audio_list = out / "audio_list.txt"
    audio_list.write_text("\n".join(str(p) for p in paths) + "\n")

    alignments = out / "alignments.jsonl"
    with open(alignments, "w") as f:
        for i, seconds in enumerate(durations):
            rec = {
                "id": f"clip{i:02d}",
                "duration_s": round(seconds, 3),
                "words": [
                    {"w": "left", "on": round(0.1 * seconds, 3), "off": round(0.45 * seconds, 3)},
                    {"w": "right", "on": round(0.5 * seconds, 3), "off": round(0.9 * seconds, 3)},
                ],
            }
            f.write(json.dumps(rec) + "\n")
    return {"paths": paths, "audio_list": audio_list, "alignments": alignments}


@pytest.fixture(scope="session")
def full_dump(checkpoint_dir, clips, tmp_path_factory):
    out = tmp_path_factory.mktemp("dump_full")
    job = ExportJob(
        checkpoint=str(checkpoint_dir),
        audio_files=tuple(str(p) for p in clips["paths"]),
        layers=(1, 2),
        attention_mode="full_map",
        out_dir=out,
    )
    manifest = export(job)
    return {"out": out, "manifest": manifest, "job": job}
