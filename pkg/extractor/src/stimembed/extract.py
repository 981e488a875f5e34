"""Layer-stack extraction: 13 speech-model layers and 13 text-encoder layers per word."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from eegalign import io as eio
from eegalign.core import EMBEDDING_LAYERS

from .audio import load_story_audio, slice_word
from .job import AUDIO_HIDDEN, RANDOM_INIT, TEXT_HIDDEN, ExtractionJob, verify_checksums

log = logging.getLogger("stimembed")

# CLIP text vocabulary bounds for the offline stand-in tokenizer
_CLIP_VOCAB = 49408
_CLIP_BOS = 49406
_CLIP_EOS = 49407
_CLIP_MAX_TOKENS = 77


@dataclass(frozen=True)
class SkippedWord:
    word_index: int
    word: str
    reason: str


def load_audio_model(source: str, seed: int) -> torch.nn.Module:
    from transformers import Wav2Vec2Config, Wav2Vec2Model

    if source == RANDOM_INIT:
        torch.manual_seed(seed)
        model = Wav2Vec2Model(Wav2Vec2Config())
    else:
        model = Wav2Vec2Model.from_pretrained(source)
    if model.config.hidden_size != AUDIO_HIDDEN:
        raise ValueError(
            f"speech model hidden size {model.config.hidden_size} != {AUDIO_HIDDEN}"
        )
    return model.eval()


def load_text_model(source: str, seed: int) -> torch.nn.Module:
    from transformers import CLIPTextConfig, CLIPTextModel

    if source == RANDOM_INIT:
        torch.manual_seed(seed + 1)
        model = CLIPTextModel(CLIPTextConfig())
    else:
        model = CLIPTextModel.from_pretrained(source)
    if model.config.hidden_size != TEXT_HIDDEN:
        raise ValueError(
            f"text model hidden size {model.config.hidden_size} != {TEXT_HIDDEN}"
        )
    return model.eval()


def _load_tokenizer(source: str):
    if source == RANDOM_INIT:
        return None  # hashed stand-in tokens, see _fallback_token_ids
    from transformers import AutoTokenizer

    return AutoTokenizer.from_pretrained(source)


def _fallback_token_ids(word: str) -> list[int]:
    """Deterministic byte-bigram hash tokens for checkpoint-free runs."""
    data = word.encode("utf-8")
    ids = [_CLIP_BOS]
    for i in range(0, len(data), 2):
        chunk = data[i : i + 2]
        ids.append(int.from_bytes(chunk, "big") % (_CLIP_VOCAB - 2))
    ids.append(_CLIP_EOS)
    return ids[:_CLIP_MAX_TOKENS]


def resample_time_axis(hidden: np.ndarray, n_frames: int, mode: str = "linear") -> np.ndarray:
    """Resample (T, D) hidden states to (n_frames, D) along the time axis."""
    t = hidden.shape[0]
    if t == 1:
        return np.repeat(hidden, n_frames, axis=0)
    positions = np.linspace(0.0, t - 1.0, n_frames)
    if mode == "nearest":
        # half-up, matching the index rounding used on the EEG side
        return hidden[np.minimum(np.floor(positions + 0.5).astype(int), t - 1)]
    lower = np.floor(positions).astype(int)
    upper = np.minimum(lower + 1, t - 1)
    frac = (positions - lower)[:, None]
    return hidden[lower] * (1.0 - frac) + hidden[upper] * frac


def _stack_hidden_states(hidden_states, n_frames: int, mode: str) -> np.ndarray:
    rows = []
    for layer in hidden_states:
        hidden = layer[0].numpy().astype(np.float64)  # (T, D)
        rows.append(resample_time_axis(hidden, n_frames, mode).ravel())
    return np.stack(rows).astype(np.float32)


def extract_audio_stacks(job: ExtractionJob, model=None) -> tuple[list[Path], list[SkippedWord]]:
    """Write one (13, 768 * target_frames) stack file per word.

    Word audio is sliced with the same pre/post pad as the EEG segments,
    normalized, and run through the speech model; each layer's sequence is
    resampled to ``target_frames`` positions and flattened time-major.
    Words whose padded window falls outside the audio are skipped and
    logged, mirroring the EEG segmentation rejects.
    """
    verify_checksums(job)
    if model is None:
        model = load_audio_model(job.audio_model, job.seed)
    aligns = eio.read_alignments(job.alignments)
    audio = load_story_audio(job.audio_paths)
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written: list[Path] = []
    skipped: list[SkippedWord] = []
    for index, align in enumerate(aligns):
        clip = slice_word(audio, align.onset_s, align.offset_s, job.pad_ms)
        if clip is None:
            reason = "padded window outside audio"
            log.warning("skipping word %d (%s): %s", index, align.word, reason)
            skipped.append(SkippedWord(index, align.word, reason))
            continue
        std = float(clip.std())
        normalized = (clip - clip.mean()) / (std if std > 0 else 1.0)
        batch = torch.from_numpy(normalized.astype(np.float32))[None, :]
        with torch.no_grad():
            out = model(batch, output_hidden_states=True)
        if len(out.hidden_states) != EMBEDDING_LAYERS:
            raise ValueError(
                f"speech model produced {len(out.hidden_states)} layers, "
                f"expected {EMBEDDING_LAYERS}"
            )
        stack = _stack_hidden_states(out.hidden_states, job.target_frames, job.interp)
        path = out_dir / f"wav2vec2_{index:05d}.ltns"
        eio.write_tensor(path, stack, dtype=np.float32)
        written.append(path)
    return written, skipped


def extract_text_stacks(job: ExtractionJob, model=None, tokenizer=None) -> list[Path]:
    """Write one (13, 512 * target_frames) stack file per word transcription.

    The 13 rows are the token-embedding output plus the 12 encoder blocks;
    the token axis is resampled to ``target_frames`` positions.
    """
    verify_checksums(job)
    if model is None:
        model = load_text_model(job.text_model, job.seed)
    if tokenizer is None:
        tokenizer = _load_tokenizer(job.text_model)
    aligns = eio.read_alignments(job.alignments)
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written: list[Path] = []
    for index, align in enumerate(aligns):
        word = align.word.strip()
        if not word:
            raise ValueError(f"word {index} has an empty transcription")
        if tokenizer is None:
            ids = _fallback_token_ids(word)
        else:
            try:
                ids = tokenizer(word)["input_ids"][:_CLIP_MAX_TOKENS]
            except Exception as exc:
                raise ValueError(f"tokenizer failed on word {word!r}: {exc}") from exc
        batch = torch.tensor([ids], dtype=torch.long)
        with torch.no_grad():
            out = model(input_ids=batch, output_hidden_states=True)
        if len(out.hidden_states) != EMBEDDING_LAYERS:
            raise ValueError(
                f"text model produced {len(out.hidden_states)} layers, "
                f"expected {EMBEDDING_LAYERS}"
            )
        stack = _stack_hidden_states(out.hidden_states, job.target_frames, job.interp)
        path = out_dir / f"clip_{index:05d}.ltns"
        eio.write_tensor(path, stack, dtype=np.float32)
        written.append(path)
    return written
