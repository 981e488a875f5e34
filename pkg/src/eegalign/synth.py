"""Seeded synthetic datasets and brute-force oracles for end-to-end testing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import EMBEDDING_LAYERS, FEATURE_SHAPE, EmbeddingStack, FeatureTensor, ModelId
from . import io as eio

_Q = FEATURE_SHAPE[0] * FEATURE_SHAPE[1] * FEATURE_SHAPE[2]


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a generated dataset; every random draw flows from ``seed``.

    ``n_layers`` is the sweep length: 13 generates wav2vec2 stacks only, 26
    adds clip stacks. ``signal_layers`` are sweep positions whose scores
    drive the targets; ``snr`` is the linear signal-to-noise variance ratio
    (``math.inf`` disables noise; an empty signal set yields pure noise).
    """

    n_words: int = 40
    n_layers: int = 26
    dim: int = 10
    signal_layers: tuple[int, ...] = (3,)
    snr: float = 100.0
    seed: int = 42
    raw_dim: int = 64

    def __post_init__(self) -> None:
        if self.n_words < 10:
            raise ValueError(f"n_words must be >= 10, got {self.n_words}")
        if self.n_layers not in (EMBEDDING_LAYERS, 2 * EMBEDDING_LAYERS):
            raise ValueError(
                f"n_layers must be {EMBEDDING_LAYERS} or {2 * EMBEDDING_LAYERS}"
            )
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.snr > 0:
            raise ValueError(f"snr must be positive, got {self.snr}")
        for layer in self.signal_layers:
            if not 0 <= layer < self.n_layers:
                raise ValueError(f"signal layer {layer} out of range 0..{self.n_layers - 1}")
        if self.raw_dim and self.raw_dim < self.dim:
            raise ValueError("raw_dim must be 0 or >= dim")


def gen_dataset(
    spec: SynthSpec,
) -> tuple[dict[ModelId, list[EmbeddingStack]], list[FeatureTensor], dict[int, np.ndarray]]:
    """Generate reduced embedding stacks, target tensors, and the true weights.

    Layer scores are standard normal; targets are the planted layers'
    scores pushed through random weights plus white noise scaled to the
    requested variance ratio. Tensors are the targets reshaped to the
    canonical (60, 14, 159).
    """
    rng = np.random.default_rng(spec.seed)
    scores = rng.standard_normal((spec.n_words, spec.n_layers, spec.dim))

    w_true: dict[int, np.ndarray] = {}
    signal = np.zeros((spec.n_words, _Q))
    for layer in spec.signal_layers:
        w = rng.standard_normal((spec.dim, _Q))
        w_true[layer] = w
        signal += scores[:, layer, :] @ w

    noise = rng.standard_normal((spec.n_words, _Q))
    if spec.signal_layers:
        if math.isinf(spec.snr):
            targets = signal
        else:
            sig_var = float(signal.var())
            noise_var = float(noise.var())
            targets = signal + noise * math.sqrt(sig_var / (spec.snr * noise_var))
    else:
        targets = noise

    stacks: dict[ModelId, list[EmbeddingStack]] = {
        ModelId.WAV2VEC2: [
            EmbeddingStack(ModelId.WAV2VEC2, scores[w, :EMBEDDING_LAYERS])
            for w in range(spec.n_words)
        ]
    }
    if spec.n_layers > EMBEDDING_LAYERS:
        stacks[ModelId.CLIP] = [
            EmbeddingStack(ModelId.CLIP, scores[w, EMBEDDING_LAYERS:])
            for w in range(spec.n_words)
        ]
    tensors = [
        FeatureTensor(data=targets[w].reshape(FEATURE_SHAPE), word_index=w)
        for w in range(spec.n_words)
    ]
    return stacks, tensors, w_true


def ols_oracle(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact least squares on centered data, solved by SVD-based lstsq.

    Independent of the ridge path; used to cross-check ridge_fit at tiny
    regularization. Raises on rank-deficient predictors.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y must be 2-D with matching rows")
    xc = X - X.mean(axis=0)
    if np.linalg.matrix_rank(xc) < X.shape[1]:
        raise ValueError("singular system: centered predictors are rank deficient")
    weights, *_ = np.linalg.lstsq(xc, Y - Y.mean(axis=0), rcond=None)
    intercept = Y.mean(axis=0) - X.mean(axis=0) @ weights
    return weights, intercept


def _synth_recording(rng: np.random.Generator, n_words: int, fs: float):
    """62-channel sinusoid mix (with mains hum) covering all word windows."""
    word_times = [(1.0 + 0.8 * w, 1.0 + 0.8 * w + 0.4) for w in range(n_words)]
    duration = word_times[-1][1] + 1.0
    t = np.arange(int(round(duration * fs))) / fs
    n_ch = 62
    freqs = rng.uniform(3.0, 45.0, size=n_ch)
    phases = rng.uniform(0, 2 * np.pi, size=n_ch)
    amps = rng.uniform(5.0, 20.0, size=n_ch)
    data = amps[:, None] * np.sin(2 * np.pi * freqs[:, None] * t[None, :] + phases[:, None])
    data += 2.0 * np.sin(2 * np.pi * 60.0 * t)[None, :]  # shared mains interference
    data += rng.standard_normal((n_ch, len(t)))
    return data, word_times


def write_synth_dataset(spec: SynthSpec, outdir: str | Path, fs: float = 500.0) -> dict:
    """Materialize a synthetic dataset on disk in the formats the CLI consumes.

    Writes a 62-channel recording with channel names (last two are the
    droppable VEOG/AUD), an alignment CSV, per-word raw stacks (planted
    scores embedded in a higher-dimensional space, so PCA reduction
    recovers them), combined reduced stacks, and the target tensors.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stacks, tensors, _ = gen_dataset(spec)

    rng = np.random.default_rng(spec.seed + 1)
    data, word_times = _synth_recording(rng, spec.n_words, fs)
    eio.write_tensor(outdir / "recording.ltns", data)
    from .report import default_montage

    names = list(default_montage().names) + ["VEOG", "AUD"]
    eio.write_channel_names(outdir / "channels.txt", names)
    with open(outdir / "alignments.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("word,onset_s,offset_s\n")
        for w, (onset, offset) in enumerate(word_times):
            fh.write(f"w{w:04d},{onset:.3f},{offset:.3f}\n")

    written = {
        "recording": "recording.ltns",
        "channels": "channels.txt",
        "alignments": "alignments.csv",
        "tensors": "tensors.ltns",
    }
    eio.write_tensor(outdir / "tensors.ltns", np.stack([t.data for t in tensors]))

    for model, words in stacks.items():
        reduced = np.stack([s.layers for s in words])
        name = f"{model.value}_reduced.ltns"
        eio.write_tensor(outdir / name, reduced)
        written[f"reduced_{model.value}"] = name

    if spec.raw_dim:
        # Embed the planted scores through a fixed orthonormal map so the
        # reduce stage recovers them (up to rotation) from the raw files.
        basis, _ = np.linalg.qr(rng.standard_normal((spec.raw_dim, spec.dim)))
        for model, words in stacks.items():
            for w, stack in enumerate(words):
                raw = stack.layers @ basis.T
                eio.write_tensor(
                    outdir / f"{model.value}_{w:05d}.ltns", raw, dtype=np.float64
                )
        written["raw_pattern"] = "{model}_{word:05d}.ltns"
    return written
