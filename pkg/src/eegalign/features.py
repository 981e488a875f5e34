"""Per-word feature tensors and the train-statistics post-processing chain."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import FEATURE_SHAPE, FeatureTensor
from .sigproc import Segment, _moving_average, envelope

#: Frequency bands (Hz) for the nine spectral features, low edge inclusive.
DEFAULT_BANDS: tuple[tuple[float, float], ...] = (
    (2, 4),
    (4, 8),
    (8, 12),
    (12, 20),
    (20, 30),
    (30, 45),
    (45, 70),
    (70, 100),
    (100, 150),
)

N_TIME_FEATURES = 5
N_FRAMES = FEATURE_SHAPE[2]
MIN_SEGMENT_SAMPLES = 17


@dataclass(frozen=True)
class FrameGrid:
    """Frame start indices and the shared frame length for one segment."""

    starts: np.ndarray
    win: int

    def __post_init__(self) -> None:
        starts = np.asarray(self.starts, dtype=np.int64)
        if starts.ndim != 1 or starts.shape[0] == 0:
            raise ValueError("starts must be a non-empty 1-D index array")
        if np.any(np.diff(starts) < 0):
            raise ValueError("frame starts must be nondecreasing")
        if self.win < 1:
            raise ValueError("frame length must be >= 1")
        starts = np.array(starts, copy=True)
        starts.setflags(write=False)
        object.__setattr__(self, "starts", starts)

    @property
    def n_frames(self) -> int:
        return self.starts.shape[0]


def frame_segment(seg: Segment, n_frames: int = N_FRAMES) -> FrameGrid:
    """Lay a fixed number of equally spaced, length-adaptive frames over a segment.

    Frame length is max(8, L // 16); starts are rounded to cover the whole
    segment, with starts[i] + win <= L for every frame.
    """
    if n_frames < 2:
        raise ValueError("n_frames must be >= 2")
    length = seg.n_samples
    if length < MIN_SEGMENT_SAMPLES:
        raise ValueError(
            f"segment of {length} samples is too short to frame "
            f"(minimum {MIN_SEGMENT_SAMPLES})"
        )
    win = max(8, length // 16)
    positions = np.arange(n_frames, dtype=np.float64) * (length - win) / (n_frames - 1)
    starts = np.floor(positions + 0.5).astype(np.int64)
    return FrameGrid(starts=starts, win=win)


def _zero_crossing_rate(frames: np.ndarray) -> np.ndarray:
    prod = frames[..., :-1] * frames[..., 1:]
    return (prod < 0).sum(axis=-1) / (frames.shape[-1] - 1)


def _band_energies(
    frames: np.ndarray,
    fs: float,
    bands: Sequence[tuple[float, float]],
    n_fft: int,
) -> np.ndarray:
    windowed = frames * np.hanning(frames.shape[-1])
    spectrum = np.fft.rfft(windowed, n=n_fft, axis=-1)
    power = spectrum.real**2 + spectrum.imag**2
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / fs)
    out = np.empty(frames.shape[:-1] + (len(bands),), dtype=np.float64)
    for j, (lo, hi) in enumerate(bands):
        mask = (freqs >= lo) & (freqs < hi)
        out[..., j] = power[..., mask].sum(axis=-1)
    return out


def compute_feature_tensor(
    seg: Segment,
    grid: FrameGrid,
    fs: float,
    bands: Sequence[tuple[float, float]] = DEFAULT_BANDS,
    smooth_window: int = 5,
    n_fft: int = 256,
) -> FeatureTensor:
    """Compute the (60, 14, 159) feature tensor for one segment.

    Per channel and frame, the five time-domain features are the mean and
    RMS of the moving-average-smoothed frame, the RMS and mean of the
    segment envelope over the frame, and the zero-crossing rate. The nine
    spectral features are Hann-windowed band energies of the zero-padded
    ``n_fft``-point frame spectrum.
    """
    n_ch = seg.samples.shape[0]
    if n_ch != FEATURE_SHAPE[0]:
        raise ValueError(f"expected {FEATURE_SHAPE[0]} channels, got {n_ch}")
    if len(bands) != FEATURE_SHAPE[1] - N_TIME_FEATURES:
        raise ValueError(
            f"expected {FEATURE_SHAPE[1] - N_TIME_FEATURES} bands, got {len(bands)}"
        )
    if smooth_window < 1 or smooth_window % 2 == 0:
        raise ValueError("smooth_window must be odd and positive")
    if smooth_window > grid.win:
        raise ValueError(
            f"smooth_window {smooth_window} exceeds frame length {grid.win}"
        )
    length = seg.n_samples
    if int(grid.starts[-1]) + grid.win > length:
        raise ValueError("frame grid does not fit the segment")

    idx = grid.starts[:, None] + np.arange(grid.win)[None, :]
    frames = seg.samples[:, idx]  # (60, n_frames, win)

    # Envelope over the whole segment, then sliced per frame, so frame edges
    # carry no Hilbert transients.
    env = np.stack([envelope(row) for row in seg.samples])
    env_frames = env[:, idx]

    smoothed = _moving_average(frames, smooth_window)
    feats = np.empty((n_ch, FEATURE_SHAPE[1], grid.n_frames), dtype=np.float64)
    feats[:, 0] = smoothed.mean(axis=-1)
    feats[:, 1] = np.sqrt((smoothed**2).mean(axis=-1))
    feats[:, 2] = np.sqrt((env_frames**2).mean(axis=-1))
    feats[:, 3] = _zero_crossing_rate(frames)
    feats[:, 4] = env_frames.mean(axis=-1)
    feats[:, N_TIME_FEATURES:] = np.moveaxis(
        _band_energies(frames, fs, bands, n_fft), -1, 1
    )

    n_baseline = int(np.sum(grid.starts + grid.win <= seg.pre_pad_samples))
    if n_baseline == 0 and seg.pre_pad_samples > 0:
        n_baseline = 1  # pad shorter than one frame: first frame is the best reference
    return FeatureTensor(data=feats, word_index=seg.word_index, n_baseline_frames=n_baseline)


@dataclass(frozen=True)
class PostprocStats:
    """Per-(channel, feature) training statistics, each of shape (60, 14).

    median/iqr come from baseline-corrected values, p5/p95 from
    robust-scaled values, mean/std from clipped values.
    """

    median: np.ndarray
    iqr: np.ndarray
    p5: np.ndarray
    p95: np.ndarray
    mean: np.ndarray
    std: np.ndarray


def postprocess(
    tensors: Sequence[FeatureTensor],
    train_idx: Sequence[int],
    clamp_sigma: float = 20.0,
) -> tuple[list[FeatureTensor], PostprocStats]:
    """Apply the five-step normalization chain with train-only statistics.

    Steps per (channel, feature) cell, values pooled across frames and
    words: (1) subtract each word's pre-onset baseline mean, (2) robust
    scale by train median/IQR (zero IQR divides by 1), (3) clip train
    values to the train [p5, p95], (4) clamp all values to +/- clamp_sigma
    train standard deviations (this is what bounds held-out outliers; train
    values are already inside the clip range), (5) standardize everything
    with train mean/std. No statistic ever uses a non-train word.
    """
    if len(tensors) == 0:
        raise ValueError("no tensors to postprocess")
    train = np.unique(np.asarray(train_idx, dtype=np.int64))
    if train.size == 0:
        raise ValueError("training index set must be non-empty")
    if train.min() < 0 or train.max() >= len(tensors):
        raise ValueError(f"train indices out of range 0..{len(tensors) - 1}")

    arr = np.stack([t.data for t in tensors]).astype(np.float64)  # (n, 60, 14, 159)

    for w, t in enumerate(tensors):
        nb = t.n_baseline_frames
        if nb > 0:
            arr[w] -= arr[w, :, :, :nb].mean(axis=-1, keepdims=True)

    med = np.median(arr[train], axis=(0, 3))
    q25, q75 = np.percentile(arr[train], [25, 75], axis=(0, 3))
    iqr = q75 - q25
    iqr_div = np.where(iqr == 0, 1.0, iqr)
    arr = (arr - med[None, :, :, None]) / iqr_div[None, :, :, None]

    p5, p95 = np.percentile(arr[train], [5, 95], axis=(0, 3))
    arr[train] = np.clip(
        arr[train], p5[None, :, :, None], p95[None, :, :, None]
    )

    mean = arr[train].mean(axis=(0, 3))
    std = arr[train].std(axis=(0, 3))
    bound = clamp_sigma * std
    arr = np.clip(arr, -bound[None, :, :, None], bound[None, :, :, None])

    std_div = np.where(std == 0, 1.0, std)
    arr = (arr - mean[None, :, :, None]) / std_div[None, :, :, None]

    out = [
        FeatureTensor(data=arr[w], word_index=t.word_index, n_baseline_frames=t.n_baseline_frames)
        for w, t in enumerate(tensors)
    ]
    stats = PostprocStats(median=med, iqr=iqr, p5=p5, p95=p95, mean=mean, std=std)
    return out, stats
