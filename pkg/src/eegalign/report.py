"""Sweep tables, channel-weight topomaps, and performance figures."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import FEATURE_SHAPE


@dataclass(frozen=True)
class ChannelPosition:
    name: str
    x: float
    y: float


@dataclass(frozen=True)
class Montage:
    """Top-view scalp positions inside the unit disc, one entry per channel."""

    channels: tuple[ChannelPosition, ...]

    def __post_init__(self) -> None:
        names = [c.name for c in self.channels]
        if len(set(names)) != len(names):
            raise ValueError("montage channel names must be unique")
        for c in self.channels:
            if c.x**2 + c.y**2 > 1.0 + 1e-9:
                raise ValueError(f"channel '{c.name}' lies outside the unit disc")

    def __len__(self) -> int:
        return len(self.channels)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.channels)

    def for_channels(self, names: Sequence[str]) -> "Montage":
        """Reorder montage entries to match a channel-name sequence."""
        by_name = {c.name: c for c in self.channels}
        missing = [n for n in names if n not in by_name]
        if missing:
            raise ValueError(f"montage is missing channel(s): {missing}")
        return Montage(channels=tuple(by_name[n] for n in names))


def read_montage(path: str | Path) -> Montage:
    """Parse a montage CSV with header ``name,x,y``."""
    rows: list[ChannelPosition] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["name", "x", "y"]:
            raise ValueError(f"montage file {path} must start with header 'name,x,y'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            try:
                rows.append(ChannelPosition(row[0].strip(), float(row[1]), float(row[2])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad coordinate: {exc}") from None
    return Montage(channels=tuple(rows))


def default_montage() -> Montage:
    """Approximate 60-channel 10-10 style layout shipped with the package."""
    ref = resources.files("eegalign").joinpath("data/montage60.csv")
    with resources.as_file(ref) as path:
        return read_montage(path)


def channel_weight_map(model, shape: tuple[int, int, int] = FEATURE_SHAPE) -> np.ndarray:
    """Per-channel L2 norm of regression weights, min-max scaled to [0, 1].

    ``model`` is a fitted ridge model whose weights map predictors onto the
    flattened feature tensor. When every channel carries identical weight
    mass the scores degenerate to a flat 0.5.
    """
    weights = np.asarray(model.weights, dtype=np.float64)
    n_ch, n_feat, n_frames = shape
    q = n_ch * n_feat * n_frames
    if weights.ndim != 2 or weights.shape[1] != q:
        raise ValueError(
            f"weights shape {weights.shape} does not map onto targets {shape} (q={q})"
        )
    per_channel = weights.reshape(weights.shape[0], n_ch, n_feat * n_frames)
    norms = np.sqrt((per_channel**2).sum(axis=(0, 2)))
    lo, hi = norms.min(), norms.max()
    if hi == lo:
        return np.full(n_ch, 0.5)
    return (norms - lo) / (hi - lo)


def _diverging_color(t: float) -> str:
    """Blue (0) through white (0.5) to red (1)."""
    t = min(max(float(t), 0.0), 1.0)
    if t <= 0.5:
        level = int(round(255 * 2 * t))
        r, g, b = level, level, 255
    else:
        level = int(round(255 * 2 * (1.0 - t)))
        r, g, b = 255, level, level
    return f"#{r:02x}{g:02x}{b:02x}"


def render_topomap_svg(scores: np.ndarray, montage: Montage, path: str | Path) -> None:
    """Write a standalone scalp map: one colored circle per channel.

    Output is a deterministic function of the inputs; rendering the same
    scores twice produces byte-identical files.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        raise ValueError("scores must be a 1-D vector")
    if len(montage) != scores.shape[0]:
        raise ValueError(
            f"montage has {len(montage)} channels but scores has {scores.shape[0]}"
        )
    width, height = 460, 500
    cx, cy, radius = 210.0, 250.0, 185.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        "<defs>",
        '<linearGradient id="cbar" x1="0" y1="1" x2="0" y2="0">',
        f'<stop offset="0" stop-color="{_diverging_color(0.0)}"/>',
        f'<stop offset="0.5" stop-color="{_diverging_color(0.5)}"/>',
        f'<stop offset="1" stop-color="{_diverging_color(1.0)}"/>',
        "</linearGradient>",
        "</defs>",
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        # head outline and nose (ellipse + path, so channel markers are the
        # only circle elements)
        f'<ellipse cx="{cx:.1f}" cy="{cy:.1f}" rx="{radius:.1f}" ry="{radius:.1f}" '
        'fill="none" stroke="#444444" stroke-width="2"/>',
        f'<path d="M {cx - 14:.1f} {cy - radius + 2:.1f} L {cx:.1f} {cy - radius - 16:.1f} '
        f'L {cx + 14:.1f} {cy - radius + 2:.1f}" fill="none" stroke="#444444" stroke-width="2"/>',
    ]
    for ch, score in zip(montage.channels, scores):
        px = cx + ch.x * (radius - 12)
        py = cy - ch.y * (radius - 12)
        parts.append(
            f'<circle cx="{px:.2f}" cy="{py:.2f}" r="9" fill="{_diverging_color(score)}" '
            f'stroke="#333333" stroke-width="0.8"><title>{ch.name}: {score:.3f}</title></circle>'
        )
    bar_x, bar_y, bar_w, bar_h = width - 38, 90, 16, 320
    parts += [
        f'<rect x="{bar_x}" y="{bar_y}" width="{bar_w}" height="{bar_h}" '
        'fill="url(#cbar)" stroke="#444444" stroke-width="1"/>',
        f'<text x="{bar_x + bar_w / 2:.1f}" y="{bar_y - 8}" font-size="12" '
        'text-anchor="middle" font-family="sans-serif">1.0</text>',
        f'<text x="{bar_x + bar_w / 2:.1f}" y="{bar_y + bar_h + 16}" font-size="12" '
        'text-anchor="middle" font-family="sans-serif">0.0</text>',
        "</svg>",
    ]
    Path(path).write_bytes(("\n".join(parts) + "\n").encode("utf-8"))


_RESULT_FIELDS = ("label", "alpha", "train_r2", "test_r2", "train_corr", "test_corr")


def _sig6(value: float) -> float:
    return float(f"{float(value):.6g}")


def write_results(results: Sequence, path: str | Path, format: str = "csv") -> None:
    """Write sweep results as CSV or JSON with stable 6-significant-digit formatting.

    CSV columns are exactly label,alpha,train_r2,test_r2,train_corr,test_corr
    in input order; JSON mirrors those fields and adds channel_scores.
    """
    if len(results) == 0:
        raise ValueError("results list is empty")
    path = Path(path)
    if format == "csv":
        lines = [",".join(_RESULT_FIELDS)]
        for r in results:
            lines.append(
                ",".join(
                    [r.label]
                    + [
                        f"{getattr(r, f):.6g}"
                        for f in _RESULT_FIELDS[1:]
                    ]
                )
            )
        path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    elif format == "json":
        payload = []
        for r in results:
            obj = {"label": r.label}
            for f in _RESULT_FIELDS[1:]:
                obj[f] = _sig6(getattr(r, f))
            obj["channel_scores"] = [_sig6(v) for v in np.asarray(r.channel_scores)]
            payload.append(obj)
        path.write_bytes((json.dumps(payload, indent=2) + "\n").encode("utf-8"))
    else:
        raise ValueError(f"unknown results format '{format}' (use 'csv' or 'json')")


def render_sweep_figure(results: Sequence, path: str | Path, title: str = "") -> None:
    """Plot train/test R-squared and correlation across sweep positions (PNG)."""
    if len(results) == 0:
        raise ValueError("results list is empty")
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure

    labels = [r.label for r in results]
    x = np.arange(len(results))
    fig = Figure(figsize=(max(7.0, 0.42 * len(results)), 6.4), dpi=120)
    FigureCanvasAgg(fig)
    ax_r2, ax_corr = fig.subplots(2, 1, sharex=True)
    ax_r2.plot(x, [r.train_r2 for r in results], "o-", color="#1f77b4", label="train R²")
    ax_r2.plot(x, [r.test_r2 for r in results], "s-", color="#d62728", label="test R²")
    ax_r2.axhline(0.0, color="#999999", linewidth=0.8)
    ax_r2.set_ylabel("R²")
    ax_r2.legend(loc="best", fontsize=8)
    ax_corr.plot(x, [r.train_corr for r in results], "o-", color="#1f77b4", label="train corr")
    ax_corr.plot(x, [r.test_corr for r in results], "s-", color="#d62728", label="test corr")
    ax_corr.axhline(0.0, color="#999999", linewidth=0.8)
    ax_corr.set_ylabel("Pearson r")
    ax_corr.set_xticks(x)
    ax_corr.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    if title:
        ax_r2.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="png")
