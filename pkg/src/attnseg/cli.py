"""Command-line entry point: ``std <command> --config run.toml [overrides]``.

Commands: ``segment``, ``cluster``, ``eval``, ``sweep``, ``synth`` and
``export-classfile``.  Every config key has a same-named CLI flag that
overrides the TOML value; the fully resolved config is written next to the
outputs (``config.toml``) and is itself a valid config file.  Exit codes:
0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import sweep as sweep_mod
from .clustering import kmeans_assign, kmeans_fit, save_cluster_model
from .corpus import join_corpus, read_alignments
from .errors import AttnsegError, ConfigError, DataError
from .metrics.lexicon import LabeledSegment, write_class_file
from .pipeline import (
    evaluate_corpus,
    labeled_segments,
    pooled_corpus_vectors,
    segment_corpus,
    segment_entry,
)
from .report import render_table
from .segmenter import SegmenterConfig
from .synth import SynthSpec, generate_corpus
from .tensorio import read_manifest

import numpy as np

# Evaluation presets: boundary tolerance and lexicon size conventions.
PROTOCOLS = {
    "spokencoco": {"tolerance_ms": 20.0, "k": 4096, "pooling": "mean"},
    "buckeye": {"tolerance_ms": 20.0, "k": 16384, "pooling": "max"},
    "zerospeech": {"tolerance_ms": 30.0, "k": 16384, "pooling": "max"},
}


@dataclass
class RunConfig:
    """Resolved run configuration shared by all commands."""

    manifest: str = ""
    alignments: str = ""
    manifest_test: str = ""
    alignments_test: str = ""
    out_dir: str = "out"
    protocol: str = ""
    layer: int = 9
    retain_mass: float = 0.9
    profile_mode: str = "cls_row"
    merge_mode: str = "union"
    pooling: str = "mean"
    k: int = 0
    vector_normalize: str = "none"
    feature_layer: int = -1
    n_seeds: int = 5
    tolerance_ms: float = 20.0
    include_edges: bool = False
    seed: int = 0
    threads: int = 0
    objective: str = "A_score"
    layers: list = field(default_factory=list)
    thresholds: list = field(default_factory=list)
    poolings: list = field(default_factory=list)
    ks: list = field(default_factory=list)
    # synthetic-corpus keys
    vocab_size: int = 50
    n_utterances: int = 100
    words_per_utterance: list = field(default_factory=lambda: [3, 9])
    word_duration: list = field(default_factory=lambda: [6, 16])
    gap: list = field(default_factory=lambda: [0, 0])
    silence: list = field(default_factory=lambda: [0, 0])
    heads: int = 4
    noise_floor: float = 0.0
    peak_mass: float = 1.0
    feature_dim: int = 16
    cluster_sigma: float = 0.0

    def resolved_threads(self) -> int:
        if self.threads > 0:
            return self.threads
        env = os.environ.get("STD_THREADS", "")
        if env.isdigit() and int(env) > 0:
            return int(env)
        return os.cpu_count() or 1


def _coerce(value: str, template) -> object:
    if isinstance(template, bool):
        if value.lower() in ("1", "true", "yes"):
            return True
        if value.lower() in ("0", "false", "no"):
            return False
        raise ConfigError(f"expected a boolean, got {value!r}")
    if isinstance(template, int):
        return int(value)
    if isinstance(template, float):
        return float(value)
    if isinstance(template, list):
        out = json.loads(value)
        if not isinstance(out, list):
            raise ConfigError(f"expected a list, got {value!r}")
        return out
    return value


def load_config(path: Optional[str], overrides: dict) -> RunConfig:
    cfg = RunConfig()
    known = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    merged: dict = {}
    if path:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        with open(path, "rb") as f:
            merged.update(tomllib.load(f))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    protocol = merged.get("protocol", "")
    if protocol:
        if protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {protocol!r}; choose from {sorted(PROTOCOLS)}")
        for key, value in PROTOCOLS[protocol].items():
            merged.setdefault(key, value)
    for key, value in merged.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, str) and not isinstance(known[key], str):
            value = _coerce(value, known[key])
        setattr(cfg, key, value)
    return cfg


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return json.dumps(str(value))


def write_effective_config(cfg: RunConfig, out_dir: Path) -> None:
    lines = [f"{f.name} = {_toml_value(getattr(cfg, f.name))}" for f in fields(cfg)]
    (out_dir / "config.toml").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _require(cfg: RunConfig, *keys: str) -> None:
    for key in keys:
        if not getattr(cfg, key):
            raise ConfigError(f"config key {key!r} is required for this command")
    for key in ("manifest", "alignments", "manifest_test", "alignments_test"):
        value = getattr(cfg, key)
        if value and not Path(value).is_file():
            raise ConfigError(f"{key} file not found: {value}")


def _segmenter_config(cfg: RunConfig) -> SegmenterConfig:
    return SegmenterConfig(cfg.layer, cfg.retain_mass, cfg.profile_mode, cfg.merge_mode)


def _load_corpus(cfg: RunConfig, test: bool = False):
    manifest = cfg.manifest_test if test else cfg.manifest
    alignments = cfg.alignments_test if test else cfg.alignments
    return join_corpus(read_manifest(manifest), read_alignments(alignments))


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_effective_config(cfg, out)
    return out


def _write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True))
            f.write("\n")


def cmd_segment(cfg: RunConfig, dump_attention: bool = False) -> int:
    _require(cfg, "manifest")
    out = _out_dir(cfg)
    entries = read_manifest(cfg.manifest)
    seg_cfg = _segmenter_config(cfg)
    seg_records, bnd_records, mask_records = [], [], []
    for entry in entries:
        segments, boundaries, _, masks = segment_entry(entry, seg_cfg)
        shift_s = entry.frame_shift_s
        seg_records.append(
            {
                "id": entry.utterance_id,
                "segments": [
                    {
                        "head": s.head,
                        "start_frame": s.start_frame,
                        "end_frame": s.end_frame,
                        "start_s": round(s.start_frame * shift_s, 6),
                        "end_s": round(s.end_frame * shift_s, 6),
                        "mass": round(s.mass, 6),
                    }
                    for s in segments
                ],
            }
        )
        bnd_records.append(
            {"id": entry.utterance_id, "times_s": [round(t, 6) for t in boundaries.times_s]}
        )
        if dump_attention:
            mask_records.append(
                {"id": entry.utterance_id, "masks": np.asarray(masks, dtype=int).tolist()}
            )
    _write_jsonl(out / "segments.jsonl", seg_records)
    _write_jsonl(out / "boundaries.jsonl", bnd_records)
    if dump_attention:
        _write_jsonl(out / "attention_masks.jsonl", mask_records)
    print(f"segmented {len(entries)} utterance(s) -> {out / 'segments.jsonl'}")
    return 0


def cmd_cluster(cfg: RunConfig) -> int:
    _require(cfg, "manifest", "alignments")
    if cfg.k <= 0:
        raise ConfigError("cluster command needs k > 0")
    out = _out_dir(cfg)
    corpus = _load_corpus(cfg)
    threads = cfg.resolved_threads()
    segmented = segment_corpus(corpus, _segmenter_config(cfg), threads)
    feature_layer = cfg.feature_layer if cfg.feature_layer >= 0 else cfg.layer
    pooled = pooled_corpus_vectors(segmented, cfg.pooling, feature_layer, threads)
    vectors = np.stack([p.vector for p in pooled])
    model = kmeans_fit(
        vectors, cfg.k, seed=cfg.seed, n_threads=threads, normalize=cfg.vector_normalize
    )
    labels = kmeans_assign(model, vectors, n_threads=threads)
    save_cluster_model(model, out / "model")
    records = [
        {
            "id": seg.utterance_id,
            "start_s": round(seg.start_s, 6),
            "end_s": round(seg.end_s, 6),
            "label": seg.label,
        }
        for seg in labeled_segments(segmented, labels.tolist())
    ]
    _write_jsonl(out / "labels.jsonl", records)
    print(
        f"clustered {len(vectors)} segments into k={cfg.k}: "
        f"inertia={model.inertia:.4f} after {model.n_iter} iteration(s)"
    )
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    _require(cfg, "manifest", "alignments")
    out = _out_dir(cfg)
    corpus = _load_corpus(cfg)
    report, _, _ = evaluate_corpus(
        corpus,
        _segmenter_config(cfg),
        tol_ms=cfg.tolerance_ms,
        pooling=cfg.pooling if cfg.k > 0 else None,
        k=cfg.k if cfg.k > 0 else None,
        feature_layer=cfg.feature_layer if cfg.feature_layer >= 0 else None,
        n_seeds=cfg.n_seeds,
        seed=cfg.seed,
        threads=cfg.resolved_threads(),
        include_edges=cfg.include_edges,
        vector_normalize=cfg.vector_normalize,
    )
    with open(out / "metrics.json", "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, sort_keys=True, indent=2)
        f.write("\n")
    table = render_table([report])
    (out / "metrics.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    _require(cfg, "manifest", "alignments")
    out = _out_dir(cfg)
    corpus = _load_corpus(cfg)
    layers = [int(x) for x in cfg.layers] or sorted(
        set(corpus.items[0].manifest.layers)
    )
    grid = sweep_mod.SweepGrid(
        layers=tuple(layers),
        thresholds=tuple(float(t) for t in cfg.thresholds) or sweep_mod.DEFAULT_THRESHOLDS,
        poolings=tuple(cfg.poolings) if cfg.poolings else ((cfg.pooling,) if cfg.objective == "WD" else (None,)),
        ks=tuple(int(k) for k in cfg.ks) if cfg.ks else ((cfg.k,) if cfg.objective == "WD" else (None,)),
        objective=cfg.objective,
        profile_mode=cfg.profile_mode,
    )
    result = sweep_mod.run_sweep(
        corpus,
        grid,
        tol_ms=cfg.tolerance_ms,
        n_seeds=cfg.n_seeds,
        seed=cfg.seed,
        threads=cfg.resolved_threads(),
    )
    best_cell, best_report = result.best
    payload = {
        "objective": grid.objective,
        "cells": [
            {"cell": vars(cell).copy(), "report": report.to_dict()}
            for cell, report in result.reports
        ],
        "best": {"cell": vars(best_cell).copy(), "report": best_report.to_dict()},
    }
    if cfg.manifest_test and cfg.alignments_test:
        corpus_test = _load_corpus(cfg, test=True)
        _, test_report = sweep_mod.finalize_on_test(
            corpus_test,
            result,
            tol_ms=cfg.tolerance_ms,
            n_seeds=cfg.n_seeds,
            seed=cfg.seed,
            threads=cfg.resolved_threads(),
            profile_mode=cfg.profile_mode,
        )
        payload["test"] = test_report.to_dict()
    with open(out / "sweep.json", "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")
    ordered = sorted(
        result.reports,
        key=lambda cr: -sweep_mod.objective_value(cr[1], grid.objective),
    )
    leaderboard = render_table([r for _, r in ordered])
    (out / "sweep.txt").write_text(leaderboard, encoding="utf-8")
    print(
        f"best cell for {grid.objective}: layer={best_cell.layer} "
        f"threshold={best_cell.threshold}"
        + (f" pooling={best_cell.pooling} k={best_cell.k}" if best_cell.k else "")
    )
    return 0


def cmd_synth(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    spec = SynthSpec(
        vocab_size=cfg.vocab_size,
        n_utterances=cfg.n_utterances,
        words_per_utterance=tuple(cfg.words_per_utterance),
        word_duration=tuple(cfg.word_duration),
        gap=tuple(cfg.gap),
        silence=tuple(cfg.silence),
        heads=cfg.heads,
        noise_floor=cfg.noise_floor,
        peak_mass=cfg.peak_mass,
        feature_dim=cfg.feature_dim,
        cluster_sigma=cfg.cluster_sigma,
        seed=cfg.seed,
        layer=cfg.layer,
    )
    corpus = generate_corpus(spec, out / "corpus")
    print(f"wrote {len(corpus.manifests)} utterances under {corpus.out_dir}")
    print(f"manifest:   {corpus.manifest_path}")
    print(f"alignments: {corpus.alignments_path}")
    return 0


def cmd_export_classfile(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    labels_path = out / "labels.jsonl"
    if not labels_path.is_file():
        raise DataError(
            f"missing cluster labels {labels_path}; run `std cluster` into this out_dir first"
        )
    segments = []
    with open(labels_path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            segments.append(
                LabeledSegment(rec["id"], float(rec["start_s"]), float(rec["end_s"]), int(rec["label"]))
            )
    write_class_file(segments, out / "classes.txt")
    print(f"wrote {out / 'classes.txt'} ({len(segments)} intervals)")
    return 0


_COMMANDS = {
    "segment": cmd_segment,
    "cluster": cmd_cluster,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "export-classfile": cmd_export_classfile,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="std", description="attention-based spoken term discovery"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML config file")
        if name == "segment":
            p.add_argument(
                "--dump-attention",
                action="store_true",
                help="also write per-head retained-frame masks (attention_masks.jsonl)",
            )
        for f in fields(RunConfig):
            flag = "--" + f.name.replace("_", "-")
            p.add_argument(flag, dest=f.name, default=None, metavar="V")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        f.name: getattr(args, f.name) for f in fields(RunConfig) if getattr(args, f.name) is not None
    }
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "segment":
            return cmd_segment(cfg, dump_attention=args.dump_attention)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, AttnsegError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
