"""Extraction job description and weight pinning."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

#: Per-word flattened sizes the downstream pipeline expects.
AUDIO_HIDDEN = 768
TEXT_HIDDEN = 512
DEFAULT_FRAMES = 159

#: Model source selecting seeded random initialization (offline runs, tests).
RANDOM_INIT = "random"


@dataclass(frozen=True)
class ExtractionJob:
    """Everything one extraction run needs.

    ``audio_paths`` are the story WAV segments in playback order; alignment
    timestamps index into their concatenation. Model sources are either a
    pretrained checkpoint path/name or ``"random"`` for a seeded random
    initialization. ``checksums`` pins weight files by sha256; mismatches
    abort the run.
    """

    audio_paths: tuple[str, ...]
    alignments: str
    out_dir: str
    audio_model: str = RANDOM_INIT
    text_model: str = RANDOM_INIT
    target_frames: int = DEFAULT_FRAMES
    pad_ms: float = 150.0
    seed: int = 0
    interp: str = "linear"  # or "nearest"
    checksums: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.target_frames < 1:
            raise ValueError("target_frames must be >= 1")
        if self.pad_ms < 0:
            raise ValueError("pad_ms must be >= 0")
        if self.interp not in ("linear", "nearest"):
            raise ValueError(f"interp must be 'linear' or 'nearest', got {self.interp!r}")


def load_job(path: str | Path) -> ExtractionJob:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    raw["audio_paths"] = tuple(raw.get("audio_paths", ()))
    return ExtractionJob(**raw)


def save_job(job: ExtractionJob, path: str | Path) -> None:
    payload = {
        "audio_paths": list(job.audio_paths),
        "alignments": job.alignments,
        "out_dir": job.out_dir,
        "audio_model": job.audio_model,
        "text_model": job.text_model,
        "target_frames": job.target_frames,
        "pad_ms": job.pad_ms,
        "seed": job.seed,
        "interp": job.interp,
        "checksums": job.checksums,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def verify_checksums(job: ExtractionJob) -> None:
    """Compare pinned sha256 digests against the files on disk."""
    for name, expected in job.checksums.items():
        actual = sha256_file(name)
        if actual != expected:
            raise ValueError(
                f"checksum mismatch for {name}: expected {expected}, got {actual}"
            )
