"""Command-line pipeline: preprocess, reduce, sweep, report, synth, retrieve."""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import io as eio
from .align import (
    SweepConfig,
    Strategy,
    best_result,
    build_design,
    contrastive_retrieval,
    default_order,
    flatten_tensors,
    layer_sweep,
    ridge_cv,
    split_train_test,
)
from .core import EMBEDDING_LAYERS, FeatureTensor, EmbeddingStack, ModelId, Recording, validate_recording
from .dimred import ica_fit, ica_transform, pca_fit, pca_transform
from .features import compute_feature_tensor, frame_segment, postprocess
from .report import (
    default_montage,
    read_montage,
    render_sweep_figure,
    render_topomap_svg,
    write_results,
)
from .sigproc import auto_harmonics, highpass_filter, notch_filter, segment_words
from .synth import SynthSpec, write_synth_dataset

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class CliParser(argparse.ArgumentParser):
    """argparse subclass that exits with code 1 on usage errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _require_file(path: str | Path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    return path


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(outdir: Path, command: str, config: dict, inputs: list[Path], seed, timing: dict) -> None:
    manifest = {
        "tool": "eegalign",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "seed": seed,
        "timing_s": {k: round(v, 6) for k, v in timing.items()},
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _load_config(args) -> eio.Config:
    cfg = eio.Config()
    if getattr(args, "config", None):
        cfg = eio.read_config(_require_file(args.config), cfg)
    overrides = {}
    for key in ("fs", "pad_ms", "notch_hz", "notch_q", "hp_hz", "hp_order",
                "n_frames", "folds", "seed", "ratio"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "alphas", None):
        overrides["alphas"] = tuple(float(v) for v in args.alphas.split(","))
    if getattr(args, "bands", None):
        overrides["bands"] = eio.parse_bands(args.bands)
    return dataclasses.replace(cfg, **overrides)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_snapshot(cfg: eio.Config, extra: dict | None = None) -> dict:
    snap = dataclasses.asdict(cfg)
    snap["bands"] = [list(b) for b in snap["bands"]]
    snap["alphas"] = list(snap["alphas"])
    if extra:
        snap.update(extra)
    return snap


# ---------------------------------------------------------------- preprocess

def cmd_preprocess(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_config(args)
    outdir = _outdir(args)
    rec_path = _require_file(args.recording)
    align_path = _require_file(args.alignments)
    inputs = [rec_path, align_path]

    samples = eio.read_tensor(rec_path)
    if samples.ndim != 2:
        raise ValueError(f"recording tensor must be 2-D, got shape {samples.shape}")
    if args.channels:
        names = eio.read_channel_names(_require_file(args.channels))
        inputs.append(Path(args.channels))
    else:
        names = tuple(f"CH{i:02d}" for i in range(samples.shape[0]))
    rec = Recording(samples=samples, channel_names=names, fs=cfg.fs)

    drop = [n for n in (args.drop.split(",") if args.drop else []) if n]
    rec = validate_recording(rec, drop)
    t_load = time.perf_counter()

    harmonics = args.harmonics if args.harmonics is not None else auto_harmonics(cfg.fs, cfg.notch_hz)
    rec = notch_filter(rec, cfg.notch_hz, harmonics, cfg.notch_q)
    rec = highpass_filter(rec, cfg.hp_hz, cfg.hp_order)
    t_filter = time.perf_counter()

    aligns = eio.read_alignments(align_path)
    segments, rejects = segment_words(rec, aligns, cfg.pad_ms)
    if not segments:
        raise ValueError("no word segment fits inside the recording")
    tensors = [
        compute_feature_tensor(
            seg, frame_segment(seg, cfg.n_frames), cfg.fs, cfg.bands, args.smooth_win
        )
        for seg in segments
    ]
    train_idx, _ = split_train_test(len(tensors), cfg.ratio, cfg.seed)
    tensors, _stats = postprocess(tensors, train_idx)
    t_features = time.perf_counter()

    eio.write_tensor(outdir / "tensors.ltns", np.stack([t.data for t in tensors]))
    eio.write_channel_names(outdir / "channels_kept.txt", rec.channel_names)
    with open(outdir / "rejects.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("word_index,word,reason\n")
        for r in rejects:
            fh.write(f"{r.word_index},{r.word},{r.reason}\n")
    _write_manifest(
        outdir,
        "preprocess",
        _config_snapshot(cfg, {"drop": drop, "harmonics": harmonics, "smooth_win": args.smooth_win}),
        inputs,
        cfg.seed,
        {
            "load": t_load - t0,
            "filter": t_filter - t_load,
            "features": t_features - t_filter,
            "total": time.perf_counter() - t0,
        },
    )
    print(f"preprocess: {len(tensors)} word tensors, {len(rejects)} rejected -> {outdir}")
    return EXIT_OK


# -------------------------------------------------------------------- reduce

def cmd_reduce(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_config(args)
    outdir = _outdir(args)
    stack_dir = Path(args.stacks)
    if not stack_dir.is_dir():
        raise FileNotFoundError(f"input file not found: {stack_dir}")
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    inputs: list[Path] = []
    ev_rows: list[tuple[str, int, int, float]] = []

    for model in models:
        files = sorted(stack_dir.glob(f"{model}_[0-9]*.ltns"))
        if not files:
            raise FileNotFoundError(f"input file not found: {stack_dir}/{model}_*.ltns")
        inputs.extend(files)
        words = [eio.read_tensor(f) for f in files]
        shapes = {w.shape for w in words}
        if len(shapes) != 1:
            raise ValueError(f"{model}: inconsistent raw stack shapes {sorted(shapes)}")
        arr = np.stack(words)  # (n_words, layers, D)
        if arr.shape[1] != EMBEDDING_LAYERS:
            raise ValueError(
                f"{model}: expected {EMBEDDING_LAYERS} layers per stack, got {arr.shape[1]}"
            )
        n_words, n_layers, _ = arr.shape
        reduced = np.zeros((n_words, n_layers, args.k))
        for layer in range(n_layers):
            X = arr[:, layer, :]
            if args.method == "pca":
                model_fit = pca_fit(X, args.k)
                reduced[:, layer, :] = pca_transform(model_fit, X)
                for comp, ratio in enumerate(model_fit.explained_variance_ratio):
                    ev_rows.append((model, layer, comp, float(ratio)))
            else:
                ica = ica_fit(X, args.k, cfg.seed)
                reduced[:, layer, :] = ica_transform(ica, X)
        eio.write_tensor(outdir / f"{model}_{args.method}_reduced.ltns", reduced)

    if ev_rows:
        with open(outdir / "explained_variance.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("model,layer,component,ratio\n")
            for model, layer, comp, ratio in ev_rows:
                fh.write(f"{model},{layer},{comp},{ratio:.6g}\n")
    _write_manifest(
        outdir,
        "reduce",
        {"models": models, "method": args.method, "k": args.k, "seed": cfg.seed},
        inputs,
        cfg.seed,
        {"total": time.perf_counter() - t0},
    )
    print(f"reduce: {','.join(models)} via {args.method} (k={args.k}) -> {outdir}")
    return EXIT_OK


# --------------------------------------------------------------------- sweep

def _load_stacks(stack_args: list[str]) -> dict[ModelId, list[EmbeddingStack]]:
    stacks: dict[ModelId, list[EmbeddingStack]] = {}
    for item in stack_args:
        name, sep, path = item.partition("=")
        if not sep:
            raise ValueError(f"--stack expects model=path, got '{item}'")
        model = ModelId(name)
        arr = eio.read_tensor(_require_file(path))
        if arr.ndim != 3:
            raise ValueError(f"{path}: reduced stacks must be rank 3, got {arr.shape}")
        stacks[model] = [EmbeddingStack(model, arr[w]) for w in range(arr.shape[0])]
    if not stacks:
        raise ValueError("at least one --stack model=path is required")
    return stacks


def _load_tensors(path: Path) -> list[FeatureTensor]:
    arr = eio.read_tensor(path)
    if arr.ndim != 4:
        raise ValueError(f"{path}: tensors file must be rank 4, got {arr.shape}")
    return [FeatureTensor(data=arr[w], word_index=w) for w in range(arr.shape[0])]


def cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_config(args)
    outdir = _outdir(args)
    stacks = _load_stacks(args.stack)
    tensors_path = _require_file(args.tensors)
    tensors = _load_tensors(tensors_path)

    families = ("single", "concat", "sum") if args.strategy == "all" else (args.strategy,)
    positions = None
    if args.upto is not None:
        positions = tuple(range(args.upto + 1))
    sweep_cfg = SweepConfig(
        alphas=cfg.alphas,
        folds=cfg.folds,
        seed=cfg.seed,
        ratio=cfg.ratio,
        method=args.method,
        positions=positions,
    )
    for family in families:
        results = layer_sweep(stacks, tensors, family, sweep_cfg)
        write_results(results, outdir / f"results_{family}.csv", "csv")
        write_results(results, outdir / f"results_{family}.json", "json")
        best = best_result(results)
        print(
            f"sweep[{family}]: {len(results)} configurations, best {best.label} "
            f"(test R2 {best.test_r2:.4f}, test corr {best.test_corr:.4f})"
        )
    inputs = [Path(p.partition("=")[2]) for p in args.stack] + [tensors_path]
    _write_manifest(
        outdir,
        "sweep",
        _config_snapshot(cfg, {"strategy": args.strategy, "method": args.method}),
        inputs,
        cfg.seed,
        {"total": time.perf_counter() - t0},
    )
    return EXIT_OK


# -------------------------------------------------------------------- report

def cmd_report(args) -> int:
    t0 = time.perf_counter()
    outdir = _outdir(args)
    montage = read_montage(_require_file(args.montage)) if args.montage else default_montage()
    if args.channels:
        montage = montage.for_channels(eio.read_channel_names(_require_file(args.channels)))

    inputs = []
    for results_path in args.results:
        results_path = _require_file(results_path)
        inputs.append(results_path)
        with open(results_path, encoding="utf-8") as fh:
            rows = json.load(fh)
        if not rows:
            raise ValueError(f"{results_path}: no results to report")
        results = [argparse.Namespace(**row) for row in rows]
        family = results_path.stem.replace("results_", "")
        render_sweep_figure(results, outdir / f"sweep_{family}.png", title=family)
        for row in results:
            scores = np.asarray(row.channel_scores, dtype=np.float64)
            render_topomap_svg(scores, montage, outdir / f"topomap_{row.label}.svg")
    _write_manifest(
        outdir,
        "report",
        {"montage": args.montage or "builtin", "channels": args.channels},
        inputs,
        None,
        {"total": time.perf_counter() - t0},
    )
    print(f"report: figures for {len(args.results)} result file(s) -> {outdir}")
    return EXIT_OK


# --------------------------------------------------------------------- synth

def cmd_synth(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_config(args)
    outdir = _outdir(args)
    spec = SynthSpec(
        n_words=args.n_words,
        n_layers=args.n_layers,
        dim=args.dim,
        signal_layers=tuple(int(v) for v in args.signal_layers.split(",")) if args.signal_layers else (),
        snr=float("inf") if args.snr == "inf" else float(args.snr),
        seed=cfg.seed,
        raw_dim=args.raw_dim,
    )
    write_synth_dataset(spec, outdir, fs=cfg.fs)
    _write_manifest(
        outdir,
        "synth",
        {**dataclasses.asdict(spec), "snr": "inf" if spec.snr == float("inf") else spec.snr,
         "signal_layers": list(spec.signal_layers)},
        [],
        spec.seed,
        {"total": time.perf_counter() - t0},
    )
    print(f"synth: {spec.n_words} words, {spec.n_layers} layers -> {outdir}")
    return EXIT_OK


# ------------------------------------------------------------------ retrieve

def cmd_retrieve(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_config(args)
    outdir = _outdir(args)
    stacks = _load_stacks(args.stack)
    tensors_path = _require_file(args.tensors)
    tensors = _load_tensors(tensors_path)

    Y = flatten_tensors(tensors)
    order = default_order(stacks)
    strategy = Strategy(args.family, args.position)
    design = build_design(stacks, strategy, order, method=args.method)
    train_idx, test_idx = split_train_test(Y.shape[0], cfg.ratio, cfg.seed)
    model, alpha, _ = ridge_cv(
        design.X[train_idx], Y[train_idx], cfg.alphas, cfg.folds, cfg.seed
    )

    k_values = sorted(int(v) for v in args.k_list.split(","))
    x_test = design.X[test_idx]
    ranks = [
        contrastive_retrieval(model, x_test, Y[row], pos, k=1).rank
        for pos, row in enumerate(test_idx)
    ]
    with open(outdir / "retrieval.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,hits,total,accuracy\n")
        for k in k_values:
            hits = sum(1 for r in ranks if r <= k)
            fh.write(f"{k},{hits},{len(ranks)},{hits / len(ranks):.6g}\n")
    inputs = [Path(p.partition("=")[2]) for p in args.stack] + [tensors_path]
    _write_manifest(
        outdir,
        "retrieve",
        _config_snapshot(cfg, {"family": args.family, "position": args.position,
                               "label": design.label, "alpha": alpha}),
        inputs,
        cfg.seed,
        {"total": time.perf_counter() - t0},
    )
    print(
        f"retrieve[{design.label}]: {len(ranks)} held-out words, "
        f"median rank {sorted(ranks)[len(ranks) // 2]} -> {outdir}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------- main

def _add_common(p: CliParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> CliParser:
    parser = CliParser(prog="eegalign", description=__doc__)
    parser.add_argument("--version", action="version", version=f"eegalign {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    p = sub.add_parser("preprocess", help="recording + alignments -> feature tensors")
    _add_common(p)
    p.add_argument("--recording", required=True, help="2-D tensor file (channels x samples)")
    p.add_argument("--channels", help="channel names, one per line")
    p.add_argument("--alignments", required=True, help="word,onset_s,offset_s CSV")
    p.add_argument("--drop", default="VEOG,AUD", help="comma list of channels to remove")
    p.add_argument("--fs", type=float, default=None)
    p.add_argument("--pad-ms", dest="pad_ms", type=float, default=None)
    p.add_argument("--notch-hz", dest="notch_hz", type=float, default=None)
    p.add_argument("--notch-q", dest="notch_q", type=float, default=None)
    p.add_argument("--harmonics", type=int, default=None, help="notch harmonic count (default: all below Nyquist)")
    p.add_argument("--hp-hz", dest="hp_hz", type=float, default=None)
    p.add_argument("--hp-order", dest="hp_order", type=int, default=None)
    p.add_argument("--n-frames", dest="n_frames", type=int, default=None)
    p.add_argument("--bands", default=None, help="nine bands, e.g. 2-4,4-8,...")
    p.add_argument("--smooth-win", dest="smooth_win", type=int, default=5)
    p.add_argument("--ratio", type=float, default=None)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("reduce", help="raw embedding stacks -> 10-component stacks")
    _add_common(p)
    p.add_argument("--stacks", required=True, help="directory of {model}_{index}.ltns files")
    p.add_argument("--models", default="wav2vec2,clip")
    p.add_argument("--method", choices=("pca", "ica"), default="pca")
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("sweep", help="reduced stacks + tensors -> ridge sweep tables")
    _add_common(p)
    p.add_argument("--stack", action="append", required=True, metavar="MODEL=PATH",
                   help="reduced stack file per model (repeatable)")
    p.add_argument("--tensors", required=True, help="rank-4 tensors file")
    p.add_argument("--strategy", choices=("single", "concat", "sum", "all"), default="all")
    p.add_argument("--method", default="pca", help="reduction label for result names")
    p.add_argument("--upto", type=int, default=None, help="only sweep positions 0..UPTO")
    p.add_argument("--alphas", default=None, help="comma list of ridge alphas")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--ratio", type=float, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="sweep results -> figures and topomaps")
    _add_common(p)
    p.add_argument("--results", action="append", required=True,
                   help="results_*.json from sweep (repeatable)")
    p.add_argument("--montage", default=None, help="montage CSV (default: built-in layout)")
    p.add_argument("--channels", default=None, help="channel order file to match scores")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    _add_common(p)
    p.add_argument("--n-words", dest="n_words", type=int, default=40)
    p.add_argument("--n-layers", dest="n_layers", type=int, default=26)
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--signal-layers", dest="signal_layers", default="3",
                   help="comma list of sweep positions carrying signal ('' for none)")
    p.add_argument("--snr", default="100", help="linear variance ratio, or 'inf'")
    p.add_argument("--raw-dim", dest="raw_dim", type=int, default=64,
                   help="raw stack dimensionality (0 skips raw files)")
    p.add_argument("--fs", type=float, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("retrieve", help="rank held-out words by predicted features")
    _add_common(p)
    p.add_argument("--stack", action="append", required=True, metavar="MODEL=PATH")
    p.add_argument("--tensors", required=True)
    p.add_argument("--family", choices=("single", "concat", "sum"), default="single")
    p.add_argument("--position", type=int, default=0)
    p.add_argument("--method", default="pca")
    p.add_argument("--k-list", dest="k_list", default="1,5,10")
    p.add_argument("--alphas", default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--ratio", type=float, default=None)
    p.set_defaults(func=cmd_retrieve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"eegalign: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"eegalign: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, RuntimeError) as exc:
        print(f"eegalign: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
