"""Command line: export per-layer embeddings for a manifest of recordings."""

from __future__ import annotations

import argparse
import sys

from .audio import AudioError
from .exporter import DEFAULT_CHECKPOINT, ExportJob, ExportError, export, parse_layer_selection


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="w2v2-export",
        description="Export per-layer speech-encoder embeddings as EMB1 archives",
    )
    parser.add_argument("--manifest", required=True,
                        help="CSV with utterance_id and wav_path columns")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--layers", required=True,
                        help="e.g. 'hidden:1-12', 'hidden:9,10 latent:all'")
    parser.add_argument("--model", default=DEFAULT_CHECKPOINT,
                        help="checkpoint id or local path (default: %(default)s)")
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            manifest=args.manifest, out_dir=args.out,
            layers=parse_layer_selection(args.layers),
            checkpoint=args.model, device=args.device,
        )
        result = export(job)
    except (ExportError, AudioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    utterances = len({r.utterance_id for r in result.records})
    print(f"wrote {len(result.records)} archives for {utterances} utterances; "
          f"index at {result.index_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
