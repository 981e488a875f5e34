"""Extraction command line: audio and text layer stacks from a job file or flags."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .extract import extract_audio_stacks, extract_text_stacks
from .job import DEFAULT_FRAMES, RANDOM_INIT, ExtractionJob, load_job


def build_job(args) -> ExtractionJob:
    if args.job:
        return load_job(args.job)
    return ExtractionJob(
        audio_paths=tuple(args.audio or ()),
        alignments=args.alignments,
        out_dir=args.out,
        audio_model=args.audio_model,
        text_model=args.text_model,
        target_frames=args.frames,
        pad_ms=args.pad_ms,
        seed=args.seed,
        interp=args.interp,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stimembed",
        description="Extract per-word layer embedding stacks for the alignment pipeline",
    )
    parser.add_argument("mode", choices=("audio", "text", "both"))
    parser.add_argument("--job", help="JSON job file; flags below are ignored if set")
    parser.add_argument("--audio", action="append", help="story WAV segment (repeatable, in order)")
    parser.add_argument("--alignments", help="word,onset_s,offset_s CSV")
    parser.add_argument("--out", help="output directory for .ltns stacks")
    parser.add_argument("--audio-model", default=RANDOM_INIT,
                        help="speech checkpoint path/name, or 'random'")
    parser.add_argument("--text-model", default=RANDOM_INIT,
                        help="text-encoder checkpoint path/name, or 'random'")
    parser.add_argument("--frames", type=int, default=DEFAULT_FRAMES)
    parser.add_argument("--pad-ms", dest="pad_ms", type=float, default=150.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--interp", choices=("linear", "nearest"), default="linear")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    if not args.job and (not args.alignments or not args.out):
        parser.error("--alignments and --out are required without --job")

    try:
        job = build_job(args)
        if args.mode in ("audio", "both"):
            if not job.audio_paths:
                parser.error("audio extraction needs at least one --audio file")
            written, skipped = extract_audio_stacks(job)
            print(f"audio: wrote {len(written)} stacks, skipped {len(skipped)}")
            if skipped:
                rejects = Path(job.out_dir) / "audio_rejects.csv"
                with open(rejects, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write("word_index,word,reason\n")
                    for s in skipped:
                        fh.write(f"{s.word_index},{s.word},{s.reason}\n")
        if args.mode in ("text", "both"):
            written = extract_text_stacks(job)
            print(f"text: wrote {len(written)} stacks")
        return 0
    except FileNotFoundError as exc:
        print(f"stimembed: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"stimembed: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
