"""Synthetic dataset generator tests."""

import numpy as np
import pytest

from eegalign import ModelId, SynthSpec, gen_dataset, ridge_fit, score, write_synth_dataset
from eegalign import io as eio


class TestGenDataset:
    def test_same_seed_bit_identical(self):
        spec = SynthSpec(n_words=12, seed=99)
        stacks_a, tensors_a, w_a = gen_dataset(spec)
        stacks_b, tensors_b, w_b = gen_dataset(spec)
        for model in stacks_a:
            for sa, sb in zip(stacks_a[model], stacks_b[model]):
                assert sa.layers.tobytes() == sb.layers.tobytes()
        for ta, tb in zip(tensors_a, tensors_b):
            assert ta.data.tobytes() == tb.data.tobytes()
        assert w_a.keys() == w_b.keys()

    def test_shapes_and_models(self):
        stacks, tensors, w_true = gen_dataset(SynthSpec(n_words=10, n_layers=26, seed=0))
        assert set(stacks) == {ModelId.WAV2VEC2, ModelId.CLIP}
        assert len(stacks[ModelId.WAV2VEC2]) == 10
        assert stacks[ModelId.CLIP][0].layers.shape == (13, 10)
        assert tensors[0].data.shape == (60, 14, 159)
        assert set(w_true) == {3}

    def test_wav2vec2_only_when_13_layers(self):
        stacks, _, _ = gen_dataset(SynthSpec(n_words=10, n_layers=13, seed=1))
        assert set(stacks) == {ModelId.WAV2VEC2}

    def test_noiseless_signal_layer_is_linearly_decodable(self):
        spec = SynthSpec(n_words=30, n_layers=13, signal_layers=(3,), snr=float("inf"), seed=5)
        stacks, tensors, _ = gen_dataset(spec)
        X = np.stack([s.layers[3] for s in stacks[ModelId.WAV2VEC2]])
        Y = np.stack([t.data.ravel() for t in tensors])
        model = ridge_fit(X[:24], Y[:24], 1e-8)
        r2, _ = score(model, X[24:], Y[24:])
        assert r2 >= 0.99

    def test_low_snr_buries_the_signal(self):
        spec = SynthSpec(n_words=30, n_layers=13, signal_layers=(3,), snr=1e-4, seed=6)
        stacks, tensors, _ = gen_dataset(spec)
        X = np.stack([s.layers[3] for s in stacks[ModelId.WAV2VEC2]])
        Y = np.stack([t.data.ravel() for t in tensors])
        model = ridge_fit(X[:24], Y[:24], 1.0)
        r2, _ = score(model, X[24:], Y[24:])
        assert r2 <= 0.05

    def test_spec_validation(self):
        with pytest.raises(ValueError, match="n_words"):
            SynthSpec(n_words=5)
        with pytest.raises(ValueError, match="snr"):
            SynthSpec(snr=0.0)
        with pytest.raises(ValueError, match="signal layer"):
            SynthSpec(n_layers=13, signal_layers=(20,))


class TestWriteSynthDataset:
    def test_files_readable_and_consistent(self, tmp_path):
        spec = SynthSpec(n_words=10, n_layers=26, seed=3, raw_dim=32)
        write_synth_dataset(spec, tmp_path)
        recording = eio.read_tensor(tmp_path / "recording.ltns")
        names = eio.read_channel_names(tmp_path / "channels.txt")
        assert recording.shape[0] == 62
        assert len(names) == 62
        assert names[-2:] == ("VEOG", "AUD")
        aligns = eio.read_alignments(tmp_path / "alignments.csv")
        assert len(aligns) == 10
        tensors = eio.read_tensor(tmp_path / "tensors.ltns")
        assert tensors.shape == (10, 60, 14, 159)
        reduced = eio.read_tensor(tmp_path / "wav2vec2_reduced.ltns")
        assert reduced.shape == (10, 13, 10)
        raw = eio.read_tensor(tmp_path / "wav2vec2_00000.ltns")
        assert raw.shape == (13, 32)

    def test_word_windows_fit_recording(self, tmp_path):
        spec = SynthSpec(n_words=10, seed=4)
        write_synth_dataset(spec, tmp_path, fs=500.0)
        recording = eio.read_tensor(tmp_path / "recording.ltns")
        aligns = eio.read_alignments(tmp_path / "alignments.csv")
        last_end = aligns[-1].offset_s + 0.15
        assert last_end * 500.0 < recording.shape[1]

    def test_export_deterministic(self, tmp_path):
        spec = SynthSpec(n_words=10, seed=5, raw_dim=16)
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        write_synth_dataset(spec, dir_a)
        write_synth_dataset(spec, dir_b)
        for name in ["recording.ltns", "tensors.ltns", "wav2vec2_reduced.ltns",
                     "alignments.csv", "wav2vec2_00003.ltns"]:
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()

    def test_raw_stacks_span_planted_scores(self, tmp_path):
        # PCA on the raw stacks must recover the full variance of the
        # embedded low-dimensional scores
        from eegalign import pca_fit

        spec = SynthSpec(n_words=12, n_layers=13, dim=10, seed=6, raw_dim=40)
        write_synth_dataset(spec, tmp_path)
        raw = np.stack(
            [eio.read_tensor(tmp_path / f"wav2vec2_{w:05d}.ltns")[3] for w in range(12)]
        )
        model = pca_fit(raw, 10)
        assert model.explained_variance_ratio.sum() >= 1 - 1e-9
