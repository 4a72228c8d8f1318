"""Hierarchical Gaussian generator: determinism, layout, signal strength.

The AUC levels asserted here were confirmed with an independent
re-implementation of the sampling scheme (tests/oracles/mc_signal.py).
"""

import json

import numpy as np
import pytest

from miaudit.errors import ValidationError
from miaudit.evaluation import auc
from miaudit.featurestore import load_manifest, load_sequence
from miaudit.scoring import score_dataset
from miaudit.synthesizer import SynthConfig, generate, synth_config_from_json

SMALL = dict(q=4, num_speakers_seen=2, num_speakers_unseen=2,
             utterances_per_speaker=2, frames_per_utterance=3)


def read_all_bytes(root):
    return {p.relative_to(root): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


class TestDeterminism:
    def test_same_seed_bit_identical(self, tmp_path):
        cfg = SynthConfig(seed=7, **SMALL)
        generate(cfg, tmp_path / "a")
        generate(cfg, tmp_path / "b")
        assert read_all_bytes(tmp_path / "a") == read_all_bytes(tmp_path / "b")

    def test_different_seed_differs(self, tmp_path):
        generate(SynthConfig(seed=7, **SMALL), tmp_path / "a")
        generate(SynthConfig(seed=8, **SMALL), tmp_path / "b")
        a, b = read_all_bytes(tmp_path / "a"), read_all_bytes(tmp_path / "b")
        assert set(a) == set(b)
        assert any(a[k] != b[k] for k in a)


class TestLayout:
    def test_ids_paths_and_partition(self, tmp_path):
        man = generate(SynthConfig(seed=0, **SMALL), tmp_path)
        ids = [e.utterance_id for e in man.entries]
        assert ids[0] == "spk-seen-000-u000"
        assert ids[-1] == "spk-unseen-001-u001"
        assert len(ids) == len(set(ids)) == 8
        for e in man.entries:
            assert e.path == f"features/{e.utterance_id}.miaf"
            assert e.utterance_id.startswith(e.speaker_id)
            assert e.membership in ("seen", "unseen")
        seen = [e for e in man.entries if e.membership == "seen"]
        assert len(seen) == 4
        assert {e.speaker_id for e in seen} == {"spk-seen-000", "spk-seen-001"}

    def test_files_consistent_with_manifest(self, tmp_path):
        man = generate(SynthConfig(seed=1, **SMALL), tmp_path)
        for e in man.entries:
            seq = load_sequence(man, e)
            assert seq.utterance_id == e.utterance_id
            assert seq.speaker_id == e.speaker_id
            assert seq.frames.shape == (3, 4)
            assert seq.frames.dtype == np.float32

    def test_metadata_line(self, tmp_path):
        generate(SynthConfig(seed=3, gamma=0.25, **SMALL), tmp_path)
        first = (tmp_path / "manifest.ndjson").read_text().splitlines()[0]
        meta = json.loads(first)["metadata"]
        assert meta["gamma"] == 0.25
        assert meta["seed"] == 3
        assert meta["q"] == 4

    def test_manifest_reloads_with_verification(self, tmp_path):
        generate(SynthConfig(seed=2, **SMALL), tmp_path)
        man = load_manifest(tmp_path / "manifest.ndjson", verify_files=True)
        assert len(man) == 8

    def test_frame_range_draws(self, tmp_path):
        cfg = SynthConfig(seed=5, frames_per_utterance=(2, 9), q=3,
                          num_speakers_seen=3, num_speakers_unseen=3,
                          utterances_per_speaker=4)
        man = generate(cfg, tmp_path)
        counts = {load_sequence(man, e).frames.shape[0] for e in man.entries}
        assert all(2 <= m <= 9 for m in counts)
        assert len(counts) >= 2


class TestConfig:
    def test_scales_interpolation(self):
        cfg = SynthConfig(gamma=0.5, sigma_u_seen=0.1, sigma_u_unseen=0.5,
                          sigma_f_seen=1.0, sigma_f_unseen=0.2)
        assert cfg.scales("unseen") == (0.5, 0.2)
        su, sf = cfg.scales("seen")
        assert su == pytest.approx(0.3, abs=1e-15)
        assert sf == pytest.approx(0.6, abs=1e-15)
        flat = SynthConfig(gamma=0.0)
        assert flat.scales("seen") == flat.scales("unseen")
        full = SynthConfig(gamma=1.0)
        assert full.scales("seen") == (full.sigma_u_seen, full.sigma_f_seen)

    @pytest.mark.parametrize("kwargs", [
        dict(q=0),
        dict(gamma=-0.1),
        dict(gamma=1.5),
        dict(sigma_c=0.0),
        dict(sigma_f_seen=-1.0),
        dict(frames_per_utterance=0),
        dict(frames_per_utterance=(5, 2)),
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValidationError):
            SynthConfig(**kwargs)

    def test_config_json(self, tmp_path):
        path = tmp_path / "synth.json"
        path.write_text(json.dumps({
            "q": 6, "gamma": 0.5, "frames_per_utterance": [2, 4], "seed": 9,
        }))
        cfg = synth_config_from_json(path)
        assert cfg.q == 6
        assert cfg.frame_range() == (2, 4)
        assert cfg.seed == 9

    def test_config_json_unknown_key(self, tmp_path):
        path = tmp_path / "synth.json"
        path.write_text(json.dumps({"qq": 6}))
        with pytest.raises(ValidationError, match="qq"):
            synth_config_from_json(path)


class TestSignal:
    def test_auc_monotone_in_gamma(self, tmp_path):
        # Separation between classes must not decrease as gamma rises.
        for seed in range(3):
            aucs = []
            for gamma in (0.0, 0.5, 1.0):
                out = tmp_path / f"s{seed}-g{gamma}"
                man = generate(SynthConfig(gamma=gamma, seed=seed), out)
                result = score_dataset(man, level="utterance")
                aucs.append(auc(result.table))
            assert aucs[0] <= aucs[1] + 0.02
            assert aucs[1] <= aucs[2] + 0.02
