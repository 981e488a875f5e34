"""Filtering, smoothing, envelope computation, and word-aligned segmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .core import Recording, WordAlignment


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Segment:
    """One word-aligned chunk of the recording.

    ``pre_pad_samples`` is the number of samples preceding the word onset
    (the neural-latency pad), used later as the baseline window.
    """

    samples: np.ndarray
    word_index: int
    pre_pad_samples: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] == 0:
            raise ValueError(f"segment samples must be 2-D and non-empty, got {samples.shape}")
        if self.pre_pad_samples < 0:
            raise ValueError("pre_pad_samples must be >= 0")
        if samples.shape[1] < self.pre_pad_samples:
            raise ValueError(
                f"segment length {samples.shape[1]} shorter than "
                f"pre-pad {self.pre_pad_samples}"
            )
        arr = np.array(samples, order="C", copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class SegmentReject:
    """Alignment that could not be segmented, with the reason."""

    word_index: int
    word: str
    reason: str


def notch_filter(
    rec: Recording,
    base_hz: float = 60.0,
    n_harmonics: int = 1,
    q: float = 30.0,
) -> Recording:
    """Zero-phase IIR notch at ``base_hz`` and its first ``n_harmonics`` multiples.

    Each harmonic gets a second-order notch (quality factor ``q``) applied
    forward-backward, so the output has no group delay.
    """
    if base_hz <= 0:
        raise ValueError(f"notch base frequency must be positive, got {base_hz}")
    if q <= 0:
        raise ValueError(f"notch quality factor must be positive, got {q}")
    if n_harmonics < 0:
        raise ValueError("n_harmonics must be >= 0")
    nyquist = rec.fs / 2.0
    for k in range(1, n_harmonics + 1):
        f = k * base_hz
        if f >= nyquist:
            raise ValueError(
                f"notch harmonic {f:g} Hz is at or above Nyquist ({nyquist:g} Hz)"
            )
    data = rec.samples
    for k in range(1, n_harmonics + 1):
        f = k * base_hz
        b, a = sps.iirnotch(f, q, fs=rec.fs)
        # edge padding sized to the notch transient (~q/f seconds), not the
        # scipy default of a few samples, so edges settle
        padlen = min(data.shape[1] - 1, int(3 * math.ceil(rec.fs * q / f)))
        data = sps.filtfilt(b, a, data, axis=1, padlen=padlen)
    return Recording(samples=data, channel_names=rec.channel_names, fs=rec.fs)


def auto_harmonics(fs: float, base_hz: float) -> int:
    """Largest harmonic count with every notch strictly below Nyquist."""
    if base_hz <= 0:
        raise ValueError("base_hz must be positive")
    n = int(math.floor((fs / 2.0) / base_hz))
    while n > 0 and n * base_hz >= fs / 2.0:
        n -= 1
    return n


def highpass_filter(rec: Recording, cutoff_hz: float = 2.0, order: int = 4) -> Recording:
    """Zero-phase Butterworth high-pass; removes DC and slow drift."""
    if not 0 < cutoff_hz < rec.fs / 2.0:
        raise ValueError(
            f"high-pass cutoff must lie in (0, {rec.fs / 2.0:g}) Hz, got {cutoff_hz}"
        )
    if order < 1:
        raise ValueError(f"filter order must be >= 1, got {order}")
    sos = sps.butter(order, cutoff_hz, btype="highpass", fs=rec.fs, output="sos")
    data = sps.sosfiltfilt(sos, rec.samples, axis=1)
    return Recording(samples=data, channel_names=rec.channel_names, fs=rec.fs)


def _moving_average(a: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average along the last axis, partial windows at edges."""
    n = a.shape[-1]
    csum = np.concatenate(
        [np.zeros(a.shape[:-1] + (1,), dtype=np.float64), np.cumsum(a, axis=-1)],
        axis=-1,
    )
    half = window // 2
    idx = np.arange(n)
    lo = np.clip(idx - half, 0, n)
    hi = np.clip(idx + half + 1, 0, n)
    return (csum[..., hi] - csum[..., lo]) / (hi - lo)


def smooth(x: np.ndarray, window: int = 5) -> np.ndarray:
    """Centered moving average of a 1-D signal.

    Edge samples are averaged over the in-bounds portion of the window, so
    the output has the same length as the input.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("smooth expects a 1-D signal")
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be an odd positive count, got {window}")
    if window > x.shape[0]:
        raise ValueError(f"window {window} exceeds signal length {x.shape[0]}")
    return _moving_average(x, window)


def envelope(x: np.ndarray) -> np.ndarray:
    """Instantaneous amplitude: magnitude of the FFT-based analytic signal."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("envelope expects a 1-D signal")
    if x.shape[0] < 4:
        raise ValueError(f"envelope needs at least 4 samples, got {x.shape[0]}")
    return np.abs(sps.hilbert(x))


def segment_words(
    rec: Recording,
    aligns: list[WordAlignment],
    pad_ms: float = 150.0,
) -> tuple[list[Segment], list[SegmentReject]]:
    """Cut one padded segment per word alignment.

    Each segment spans [onset - pad, offset + pad]. Windows that fall
    outside the recording are skipped and reported in the rejects list;
    they are never truncated or zero-padded.
    """
    if pad_ms < 0:
        raise ValueError("pad_ms must be >= 0")
    pad_s = pad_ms / 1000.0
    pre_pad = _round_half_up(pad_s * rec.fs)
    segments: list[Segment] = []
    rejects: list[SegmentReject] = []
    for i, a in enumerate(aligns):
        start = _round_half_up((a.onset_s - pad_s) * rec.fs)
        end = _round_half_up((a.offset_s + pad_s) * rec.fs)
        if end <= start:
            end = start + 1  # sub-sample word durations still yield one sample
        if start < 0:
            rejects.append(SegmentReject(i, a.word, f"window starts before recording ({start})"))
            continue
        if end > rec.n_samples:
            rejects.append(
                SegmentReject(i, a.word, f"window ends past recording ({end} > {rec.n_samples})")
            )
            continue
        segments.append(
            Segment(samples=rec.samples[:, start:end], word_index=i, pre_pad_samples=pre_pad)
        )
    return segments, rejects
