"""Per-word layer-embedding extraction for the EEG alignment pipeline.

Slices word-aligned audio (and transcriptions) out of the stimulus,
runs them through a 13-layer speech model and a 13-layer text encoder,
resamples each layer's sequence axis to a fixed frame count, and writes
the flattened stacks in the shared tensor container format.
"""

__version__ = "0.1.0"

from .audio import MODEL_RATE, load_story_audio, read_wav, slice_word
from .extract import (
    SkippedWord,
    extract_audio_stacks,
    extract_text_stacks,
    load_audio_model,
    load_text_model,
    resample_time_axis,
)
from .job import (
    AUDIO_HIDDEN,
    DEFAULT_FRAMES,
    RANDOM_INIT,
    TEXT_HIDDEN,
    ExtractionJob,
    load_job,
    save_job,
    sha256_file,
    verify_checksums,
)

__all__ = [
    "AUDIO_HIDDEN",
    "DEFAULT_FRAMES",
    "MODEL_RATE",
    "RANDOM_INIT",
    "TEXT_HIDDEN",
    "ExtractionJob",
    "SkippedWord",
    "extract_audio_stacks",
    "extract_text_stacks",
    "load_audio_model",
    "load_job",
    "load_text_model",
    "read_wav",
    "resample_time_axis",
    "save_job",
    "sha256_file",
    "slice_word",
    "load_story_audio",
    "verify_checksums",
]
