"""WAV loading and word-window slicing for the speech model."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

MODEL_RATE = 16000


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Load a mono float waveform in [-1, 1] from a PCM or float WAV file."""
    rate, data = wavfile.read(path)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        data = data.astype(np.float32) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float32) / 2147483648.0
    elif data.dtype == np.uint8:
        data = (data.astype(np.float32) - 128.0) / 128.0
    else:
        data = data.astype(np.float32)
    return data, int(rate)


def load_story_audio(paths) -> np.ndarray:
    """Concatenate the story segments into one waveform at the model rate.

    Alignment timestamps index into this concatenation, matching how the
    stimulus was played back.
    """
    if not paths:
        raise ValueError("no audio files given")
    pieces = []
    for path in paths:
        data, rate = read_wav(path)
        if rate != MODEL_RATE:
            data = resample_poly(data, MODEL_RATE, rate).astype(np.float32)
        pieces.append(data)
    return np.concatenate(pieces)


def slice_word(
    audio: np.ndarray, onset_s: float, offset_s: float, pad_ms: float
) -> np.ndarray | None:
    """Cut the padded word window; None when it falls outside the audio."""
    pad = pad_ms / 1000.0
    start = int(round((onset_s - pad) * MODEL_RATE))
    end = int(round((offset_s + pad) * MODEL_RATE))
    if start < 0 or end > len(audio) or end <= start:
        return None
    return audio[start:end]
