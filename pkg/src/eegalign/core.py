"""Shared domain types and dataset validation."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

#: Number of layers exported per pretrained model (input stage + 12 blocks).
EMBEDDING_LAYERS = 13

#: Canonical per-word EEG feature tensor shape: channels x features x frames.
FEATURE_SHAPE = (60, 14, 159)


class ModelId(Enum):
    """Source model of a stimulus embedding stack."""

    WAV2VEC2 = "wav2vec2"
    CLIP = "clip"


def _readonly_f64(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, order="C", copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Recording:
    """Continuous multi-channel EEG in microvolts.

    Attributes:
        samples: array of shape (n_channels, n_samples).
        channel_names: one name per row of ``samples``, unique.
        fs: sampling rate in Hz.
    """

    samples: np.ndarray
    channel_names: tuple[str, ...]
    fs: float

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples)
        if samples.ndim != 2:
            raise ValueError(
                f"samples must be 2-D (channels, samples), got shape {samples.shape}"
            )
        names = tuple(str(n) for n in self.channel_names)
        if samples.shape[0] != len(names):
            raise ValueError(
                f"channel count mismatch: {samples.shape[0]} rows "
                f"but {len(names)} channel names"
            )
        if len(set(names)) != len(names):
            raise ValueError("channel names must be unique")
        if not self.fs > 0:
            raise ValueError(f"sampling rate must be positive, got {self.fs}")
        object.__setattr__(self, "samples", _readonly_f64(samples))
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "fs", float(self.fs))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs


@dataclass(frozen=True)
class WordAlignment:
    """Word onset/offset timestamps within a recording, in seconds."""

    word: str
    onset_s: float
    offset_s: float

    def __post_init__(self) -> None:
        if not self.onset_s >= 0:
            raise ValueError(f"onset must be >= 0, got {self.onset_s}")
        if not self.offset_s > self.onset_s:
            raise ValueError(
                f"offset ({self.offset_s}) must be greater than onset ({self.onset_s})"
            )


@dataclass(frozen=True)
class FeatureTensor:
    """Per-word EEG feature tensor of shape (60, 14, 159).

    ``n_baseline_frames`` counts leading frames that lie fully inside the
    pre-onset pad; the baseline-correction step averages over them. Zero
    means no baseline reference is available (e.g. synthetic tensors).
    """

    data: np.ndarray
    word_index: int
    n_baseline_frames: int = 0

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if data.shape != FEATURE_SHAPE:
            raise ValueError(
                f"feature tensor must have shape {FEATURE_SHAPE}, got {data.shape}"
            )
        if not np.isfinite(data).all():
            raise ValueError("feature tensor contains non-finite values")
        if self.word_index < 0:
            raise ValueError("word_index must be >= 0")
        if not 0 <= self.n_baseline_frames <= FEATURE_SHAPE[2]:
            raise ValueError("n_baseline_frames out of range")
        object.__setattr__(self, "data", _readonly_f64(data))


@dataclass(frozen=True)
class EmbeddingStack:
    """Per-word stack of 13 layer vectors from one pretrained model."""

    model_id: ModelId
    layers: np.ndarray

    def __post_init__(self) -> None:
        layers = np.asarray(self.layers)
        if layers.ndim != 2 or layers.shape[0] != EMBEDDING_LAYERS:
            raise ValueError(
                f"embedding stack must be ({EMBEDDING_LAYERS}, D), got {layers.shape}"
            )
        if not np.isfinite(layers).all():
            raise ValueError("embedding stack contains non-finite values")
        object.__setattr__(self, "layers", _readonly_f64(layers))

    @property
    def dim(self) -> int:
        return self.layers.shape[1]


def validate_recording(rec: Recording, drop: list[str] | tuple[str, ...] = ()) -> Recording:
    """Validate a recording and remove named channels.

    Checks that every sample is finite and that every name in ``drop``
    exists, then returns a new Recording with the dropped channels removed
    and the order of the remaining channels preserved.
    """
    drop = list(drop)
    unknown = [name for name in drop if name not in rec.channel_names]
    if unknown:
        raise ValueError(
            f"unknown channel name(s) {unknown}; available: {list(rec.channel_names)}"
        )
    bad = np.argwhere(~np.isfinite(rec.samples))
    if bad.size:
        ch, idx = bad[0]
        raise ValueError(
            f"non-finite sample in channel '{rec.channel_names[ch]}' at sample index {idx}"
        )
    keep = [i for i, name in enumerate(rec.channel_names) if name not in set(drop)]
    return Recording(
        samples=rec.samples[keep],
        channel_names=tuple(rec.channel_names[i] for i in keep),
        fs=rec.fs,
    )
