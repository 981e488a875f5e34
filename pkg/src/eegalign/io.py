"""Tensor container format, alignment CSV parsing, and config loading.

The tensor container is a minimal fixed layout, little endian throughout:

    bytes 0-3    magic ``LTNS``
    byte  4      format version, currently 1
    byte  5      dtype code: 1 = float32, 2 = float64
    byte  6      number of dimensions (1..4)
    byte  7      reserved, must be 0
    8 * ndim     dimensions as unsigned 64-bit integers
    remainder    payload, row major

The payload length must equal element_size * prod(dims); the reader
validates the header and dims before allocating anything.
"""

from __future__ import annotations

import csv
import os
import struct
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .align import DEFAULT_ALPHAS
from .core import WordAlignment
from .features import DEFAULT_BANDS

MAGIC = b"LTNS"
FORMAT_VERSION = 1
MAX_NDIM = 4

_DTYPE_BY_CODE = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_CODE_BY_DTYPE = {np.dtype(np.float32): 1, np.dtype(np.float64): 2}


class TensorFormatError(ValueError):
    """The file does not follow the tensor container layout."""


class BadMagicError(TensorFormatError):
    """The file does not start with the LTNS magic."""


class UnknownDtypeError(TensorFormatError):
    """The dtype code is not one of the supported float types."""


class TruncatedPayloadError(TensorFormatError):
    """Fewer bytes than the recorded dims require."""


class AlignmentParseError(ValueError):
    """A word-alignment CSV row failed validation."""


def write_tensor(path: str | Path, array: np.ndarray, dtype=np.float64) -> None:
    """Write an array to the tensor container format (float64 by default).

    The write goes through a temp file and an atomic rename, so readers
    never observe a partial file.
    """
    arr = np.asarray(array)
    np_dtype = np.dtype(dtype)
    if np_dtype not in _CODE_BY_DTYPE:
        raise UnknownDtypeError(f"unsupported dtype {np_dtype}; use float32 or float64")
    if arr.ndim < 1 or arr.ndim > MAX_NDIM:
        raise ValueError(f"tensor rank must be 1..{MAX_NDIM}, got {arr.ndim}")
    if any(d < 1 for d in arr.shape):
        raise ValueError(f"all dims must be >= 1, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("refusing to write non-finite values")
    le = np_dtype.newbyteorder("<")
    header = MAGIC + struct.pack(
        "<BBBB", FORMAT_VERSION, _CODE_BY_DTYPE[np_dtype], arr.ndim, 0
    )
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(arr, dtype=le).tobytes(order="C"))
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"failed to write tensor file {path}: {exc}") from exc


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a tensor container file, validating the header before allocation."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: not a tensor container (bad magic)")
    if len(raw) < 8:
        raise TruncatedPayloadError(f"{path}: header truncated")
    version, dtype_code, ndim, reserved = struct.unpack("<BBBB", raw[4:8])
    if version != FORMAT_VERSION:
        raise TensorFormatError(f"{path}: unsupported format version {version}")
    if dtype_code not in _DTYPE_BY_CODE:
        raise UnknownDtypeError(f"{path}: unknown dtype code {dtype_code}")
    if not 1 <= ndim <= MAX_NDIM:
        raise TensorFormatError(f"{path}: ndim must be 1..{MAX_NDIM}, got {ndim}")
    if reserved != 0:
        raise TensorFormatError(f"{path}: reserved byte must be 0, got {reserved}")
    dims_end = 8 + 8 * ndim
    if len(raw) < dims_end:
        raise TruncatedPayloadError(f"{path}: dims truncated")
    dims = struct.unpack(f"<{ndim}Q", raw[8:dims_end])
    if any(d < 1 for d in dims):
        raise TensorFormatError(f"{path}: zero-sized dimension in {dims}")
    np_dtype = _DTYPE_BY_CODE[dtype_code]
    expected = int(np.prod([int(d) for d in dims], dtype=object)) * np_dtype.itemsize
    payload = raw[dims_end:]
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload has {len(payload)} bytes, dims {dims} require {expected}"
        )
    if len(payload) > expected:
        raise TensorFormatError(
            f"{path}: {len(payload) - expected} trailing bytes after payload"
        )
    return np.frombuffer(payload, dtype=np_dtype).reshape(dims).copy()


ALIGNMENT_HEADER = ("word", "onset_s", "offset_s")


def read_alignments(path: str | Path) -> list[WordAlignment]:
    """Parse a word-alignment CSV with header ``word,onset_s,offset_s``.

    Rows must validate (onset >= 0, offset > onset); out-of-order rows are
    re-sorted by onset with a warning.
    """
    path = Path(path)
    aligns: list[WordAlignment] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != ALIGNMENT_HEADER:
            raise AlignmentParseError(
                f"{path}: expected header {','.join(ALIGNMENT_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise AlignmentParseError(
                    f"{path}:{lineno}: expected 3 columns, got {len(row)}"
                )
            try:
                onset, offset = float(row[1]), float(row[2])
            except ValueError:
                raise AlignmentParseError(
                    f"{path}:{lineno}: timestamps are not numbers: {row[1]!r}, {row[2]!r}"
                ) from None
            try:
                aligns.append(WordAlignment(word=row[0], onset_s=onset, offset_s=offset))
            except ValueError as exc:
                raise AlignmentParseError(f"{path}:{lineno}: {exc}") from None
    onsets = [a.onset_s for a in aligns]
    if any(b < a for a, b in zip(onsets, onsets[1:])):
        warnings.warn(f"{path}: alignments were out of order and have been re-sorted")
        aligns.sort(key=lambda a: a.onset_s)
    return aligns


def read_channel_names(path: str | Path) -> tuple[str, ...]:
    """Read channel names, one per line, blank lines ignored."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    names = tuple(line.strip() for line in lines if line.strip())
    if not names:
        raise ValueError(f"{path}: no channel names found")
    return names


def write_channel_names(path: str | Path, names) -> None:
    Path(path).write_text("\n".join(names) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Config:
    """Pipeline defaults, overridable by a key=value config file and CLI flags."""

    fs: float = 500.0
    pad_ms: float = 150.0
    notch_hz: float = 60.0
    notch_q: float = 30.0
    hp_hz: float = 2.0
    hp_order: int = 4
    n_frames: int = 159
    bands: tuple[tuple[float, float], ...] = DEFAULT_BANDS
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    folds: int = 5
    seed: int = 42
    ratio: float = 0.8


def parse_bands(text: str) -> tuple[tuple[float, float], ...]:
    bands = []
    for part in text.split(","):
        lo, _, hi = part.partition("-")
        try:
            bands.append((float(lo), float(hi)))
        except ValueError:
            raise ValueError(f"bad band '{part}'; expected e.g. 2-4,4-8") from None
    return tuple(bands)


_CONFIG_PARSERS = {
    "fs": float,
    "pad_ms": float,
    "notch_hz": float,
    "notch_q": float,
    "hp_hz": float,
    "hp_order": int,
    "n_frames": int,
    "bands": parse_bands,
    "alphas": lambda s: tuple(float(v) for v in s.split(",")),
    "folds": int,
    "seed": int,
    "ratio": float,
}


def read_config(path: str | Path, base: Config | None = None) -> Config:
    """Load a flat key=value config file on top of the defaults."""
    cfg = base if base is not None else Config()
    overrides = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in _CONFIG_PARSERS:
            raise ValueError(f"{path}:{lineno}: unknown config entry '{line}'")
        try:
            overrides[key] = _CONFIG_PARSERS[key](value)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return replace(cfg, **overrides)
