"""CLI: ``std-export --checkpoint <id> --audio-list clips.txt --layers 1-12
--mode full_map --out dump/`` plus ``--verify-manifest`` for post-hoc checks.

Exit codes: 0 success, 1 verification failures, 2 bad configuration,
3 data error during export.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .export import ExportError, ExportJob, export, verify_export


def parse_layers(text: str) -> tuple[int, ...]:
    """'1-12' or '3,6,9' or a mix ('1-4,9')."""
    layers: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            layers.extend(range(int(lo), int(hi) + 1))
        elif part:
            layers.append(int(part))
    return tuple(dict.fromkeys(layers))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="std-export",
        description="dump speech-transformer attention maps and features",
    )
    parser.add_argument("--checkpoint", help="model id or local checkpoint path")
    parser.add_argument("--audio-list", help="text file, one wav path per line")
    parser.add_argument("--layers", default="1-12", help="e.g. 1-12 or 3,6,9")
    parser.add_argument("--mode", choices=("cls_row", "full_map"), default="full_map")
    parser.add_argument("--out", default="dump", help="output directory")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--cls-embedding", help="STDT vector to prepend as the CLS token")
    parser.add_argument("--max-seconds", type=float, default=30.0)
    parser.add_argument("--normalize", action="store_true", help="zero-mean/unit-var input")
    parser.add_argument("--manifest-name", default="manifest.jsonl")
    parser.add_argument(
        "--verify-manifest",
        metavar="PATH",
        help="verify an existing export instead of exporting",
    )
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)

    if args.verify_manifest:
        report = verify_export(args.verify_manifest)
        for utt, message in report.failures:
            print(f"FAIL {utt}: {message}", file=sys.stderr)
        print(f"verified {report.checked} utterance(s), {len(report.failures)} failure(s)")
        return 0 if report.ok else 1

    if not args.checkpoint or not args.audio_list:
        print("config error: --checkpoint and --audio-list are required", file=sys.stderr)
        return 2
    audio_list = Path(args.audio_list)
    if not audio_list.is_file():
        print(f"config error: audio list not found: {audio_list}", file=sys.stderr)
        return 2
    audio_files = tuple(
        line.strip() for line in audio_list.read_text().splitlines() if line.strip()
    )
    if not audio_files:
        print("config error: audio list is empty", file=sys.stderr)
        return 2

    try:
        job = ExportJob(
            checkpoint=args.checkpoint,
            audio_files=audio_files,
            layers=parse_layers(args.layers),
            attention_mode=args.mode,
            out_dir=Path(args.out),
            device=args.device,
            cls_embedding_path=args.cls_embedding,
            max_seconds=args.max_seconds,
            normalize=args.normalize,
            manifest_name=args.manifest_name,
        )
    except ExportError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = export(job)
    except ExportError as exc:
        print(f"export error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
