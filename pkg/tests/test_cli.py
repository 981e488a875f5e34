"""End-to-end CLI tests driving the subcommands in-process."""

import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from eegalign import io as eio
from eegalign.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    code = run(
        "synth", "--out", out, "--n-words", 16, "--n-layers", 26,
        "--signal-layers", "3", "--snr", "100", "--seed", 11, "--raw-dim", 24,
    )
    assert code == 0
    return out


@pytest.fixture(scope="module")
def sweep_dir(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    code = run(
        "sweep", "--out", out,
        "--stack", f"wav2vec2={synth_dir}/wav2vec2_reduced.ltns",
        "--stack", f"clip={synth_dir}/clip_reduced.ltns",
        "--tensors", synth_dir / "tensors.ltns",
        "--strategy", "single", "--alphas", "0.001,0.1,10,1000", "--folds", 3,
        "--seed", 11,
    )
    assert code == 0
    return out


class TestExitCodes:
    def test_missing_input_is_io_error_with_path(self, tmp_path, capsys):
        code = run("sweep", "--out", tmp_path, "--stack", "wav2vec2=/nope/x.ltns",
                   "--tensors", "/nope/t.ltns")
        assert code == 2
        assert "/nope/x.ltns" in capsys.readouterr().err

    def test_unknown_flag_exits_1_with_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("synth", "--out", "/tmp/x", "--wavelets", "on")
        assert exc.value.code == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_subcommand_exits_1(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("transmogrify")
        assert exc.value.code == 1

    def test_validation_error_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.ltns"
        bad.write_bytes(b"XXXX" + bytes(68))
        code = run("sweep", "--out", tmp_path / "out", "--stack", f"wav2vec2={bad}",
                   "--tensors", bad)
        assert code == 1
        assert "magic" in capsys.readouterr().err


class TestSynth:
    def test_outputs_and_manifest(self, synth_dir):
        for name in ["recording.ltns", "channels.txt", "alignments.csv",
                     "tensors.ltns", "wav2vec2_reduced.ltns", "clip_reduced.ltns",
                     "manifest.json"]:
            assert (synth_dir / name).exists(), name
        manifest = json.loads((synth_dir / "manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["seed"] == 11


class TestPreprocess:
    def test_synthetic_recording_to_tensors(self, synth_dir, tmp_path):
        out = tmp_path / "prep"
        code = run(
            "preprocess", "--out", out,
            "--recording", synth_dir / "recording.ltns",
            "--channels", synth_dir / "channels.txt",
            "--alignments", synth_dir / "alignments.csv",
            "--drop", "VEOG,AUD", "--seed", 1,
        )
        assert code == 0
        tensors = eio.read_tensor(out / "tensors.ltns")
        assert tensors.shape == (16, 60, 14, 159)
        assert np.isfinite(tensors).all()
        names = eio.read_channel_names(out / "channels_kept.txt")
        assert len(names) == 60
        assert (out / "rejects.csv").read_text().startswith("word_index,word,reason")
        assert (out / "manifest.json").exists()

    def test_unknown_drop_channel_fails_validation(self, synth_dir, tmp_path, capsys):
        code = run(
            "preprocess", "--out", tmp_path / "prep2",
            "--recording", synth_dir / "recording.ltns",
            "--channels", synth_dir / "channels.txt",
            "--alignments", synth_dir / "alignments.csv",
            "--drop", "NOSUCH",
        )
        assert code == 1
        assert "NOSUCH" in capsys.readouterr().err


class TestReduce:
    def test_raw_stacks_to_reduced(self, synth_dir, tmp_path):
        out = tmp_path / "red"
        code = run("reduce", "--out", out, "--stacks", synth_dir,
                   "--models", "wav2vec2,clip", "--method", "pca", "--k", 10)
        assert code == 0
        reduced = eio.read_tensor(out / "wav2vec2_pca_reduced.ltns")
        assert reduced.shape == (16, 13, 10)
        with open(out / "explained_variance.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2 * 13 * 10  # model x layer x component
        assert {r["model"] for r in rows} == {"wav2vec2", "clip"}

    def test_reduced_stacks_recover_planted_layer(self, synth_dir, tmp_path):
        # raw stacks embed the planted scores, so the reduce -> sweep path
        # finds the same best layer as the directly generated stacks
        red = tmp_path / "red2"
        assert run("reduce", "--out", red, "--stacks", synth_dir,
                   "--models", "wav2vec2", "--method", "pca", "--k", 10) == 0
        out = tmp_path / "sweep2"
        code = run(
            "sweep", "--out", out,
            "--stack", f"wav2vec2={red}/wav2vec2_pca_reduced.ltns",
            "--tensors", synth_dir / "tensors.ltns",
            "--strategy", "single", "--alphas", "0.001,0.1,10", "--folds", 3,
            "--seed", 11,
        )
        assert code == 0
        with open(out / "results_single.csv") as fh:
            rows = list(csv.DictReader(fh))
        best = max(rows, key=lambda r: float(r["test_r2"]))
        assert best["label"] == "wav2vec2_3_pca_single"


class TestSweep:
    def test_planted_layer_wins(self, sweep_dir):
        with open(sweep_dir / "results_single.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 26
        best = max(rows, key=lambda r: float(r["test_r2"]))
        assert best["label"] == "wav2vec2_3_pca_single"
        # 13 training words against 10 predictors shrinks hard; the margin
        # over the non-signal layers is what matters here
        assert float(best["test_r2"]) > 0.1
        second = sorted((float(r["test_r2"]) for r in rows), reverse=True)[1]
        assert float(best["test_r2"]) > second + 0.2

    def test_json_mirrors_csv(self, sweep_dir):
        rows = json.loads((sweep_dir / "results_single.json").read_text())
        assert len(rows) == 26
        assert len(rows[0]["channel_scores"]) == 60

    def test_sum_upto0_matches_single_row_values(self, synth_dir, tmp_path):
        outs = {}
        for family in ("single", "sum"):
            out = tmp_path / family
            code = run(
                "sweep", "--out", out,
                "--stack", f"wav2vec2={synth_dir}/wav2vec2_reduced.ltns",
                "--tensors", synth_dir / "tensors.ltns",
                "--strategy", family, "--upto", 0,
                "--alphas", "0.1,10", "--folds", 3, "--seed", 2,
            )
            assert code == 0
            with open(out / f"results_{family}.csv") as fh:
                outs[family] = list(csv.DictReader(fh))[0]
        for field in ("alpha", "train_r2", "test_r2", "train_corr", "test_corr"):
            assert outs["single"][field] == outs["sum"][field]

    def test_deterministic_outputs(self, synth_dir, tmp_path):
        digests = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            code = run(
                "sweep", "--out", out,
                "--stack", f"wav2vec2={synth_dir}/wav2vec2_reduced.ltns",
                "--tensors", synth_dir / "tensors.ltns",
                "--strategy", "sum", "--upto", 2,
                "--alphas", "0.1,10", "--folds", 3, "--seed", 2,
            )
            assert code == 0
            digests.append((out / "results_sum.csv").read_bytes()
                           + (out / "results_sum.json").read_bytes())
        assert digests[0] == digests[1]


class TestReport:
    def test_figures_and_topomaps(self, sweep_dir, tmp_path):
        out = tmp_path / "rep"
        code = run("report", "--out", out, "--results", sweep_dir / "results_single.json")
        assert code == 0
        png = out / "sweep_single.png"
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        svgs = sorted(out.glob("topomap_*.svg"))
        assert len(svgs) == 26
        root = ET.parse(svgs[0]).getroot()
        circles = [el for el in root.iter() if el.tag.endswith("circle")]
        assert len(circles) == 60

    def test_missing_results_file(self, tmp_path, capsys):
        code = run("report", "--out", tmp_path / "rep2", "--results", "/nope/results.json")
        assert code == 2
        assert "/nope/results.json" in capsys.readouterr().err


class TestRetrieve:
    def test_accuracy_table(self, synth_dir, tmp_path):
        out = tmp_path / "ret"
        code = run(
            "retrieve", "--out", out,
            "--stack", f"wav2vec2={synth_dir}/wav2vec2_reduced.ltns",
            "--tensors", synth_dir / "tensors.ltns",
            "--family", "single", "--position", 3,
            "--alphas", "0.001,0.1,10", "--folds", 3, "--k-list", "1,3",
            "--seed", 11,
        )
        assert code == 0
        with open(out / "retrieval.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["k"] for r in rows] == ["1", "3"]
        acc = {r["k"]: float(r["accuracy"]) for r in rows}
        assert acc["3"] >= acc["1"]
        assert acc["1"] > 0.5  # planted high-snr layer retrieves well


class TestConfigFile:
    def test_config_flag_sets_defaults(self, synth_dir, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alphas=0.1,10\nfolds=3\nseed=2\n", encoding="utf-8")
        out = tmp_path / "out"
        code = run(
            "sweep", "--out", out, "--config", cfg,
            "--stack", f"wav2vec2={synth_dir}/wav2vec2_reduced.ltns",
            "--tensors", synth_dir / "tensors.ltns",
            "--strategy", "sum", "--upto", 1,
        )
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["alphas"] == [0.1, 10.0]
        assert manifest["config"]["folds"] == 3
        assert manifest["seed"] == 2
