"""Synthetic feature datasets with a controllable membership signal.

Sampling is a three-level Gaussian hierarchy: a speaker centroid, a
per-utterance offset around it, and per-frame noise around the utterance
mean. The separability knob gamma moves the seen class away from the
unseen class along both signals the attacks measure: seen utterances get
larger frame noise (higher pairwise frame distance) and tighter utterance
offsets (higher pairwise embedding similarity). At gamma=0 both classes are
sampled from identical parameters.

The random source is numpy's PCG64 generator seeded with the config seed;
draw order is fixed (speakers in manifest order; per speaker the centroid,
then per utterance the frame count, offset, and frames), so a seed pins the
output files bit for bit.

The AUC levels the test suite asserts against this generator were confirmed
by an independent from-scratch simulation of the same sampling scheme:
tests/oracles/mc_signal.py.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import StorageError, ValidationError
from .featurestore import (
    FeatureSequence,
    Manifest,
    ManifestEntry,
    load_manifest,
    write_feature_file,
    write_manifest,
)


@dataclass
class SynthConfig:
    q: int = 32
    num_speakers_seen: int = 20
    num_speakers_unseen: int = 20
    utterances_per_speaker: int = 10
    frames_per_utterance: int | tuple[int, int] = 50
    gamma: float = 1.0
    sigma_c: float = 1.0
    sigma_u_seen: float = 0.05  # utterance-offset scale of seen at gamma=1
    sigma_u_unseen: float = 0.5
    sigma_f_seen: float = 1.0  # frame-noise scale of seen at gamma=1
    sigma_f_unseen: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.q < 1:
            raise ValidationError(f"q must be >= 1, got {self.q}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValidationError(f"gamma must be in [0,1], got {self.gamma}")
        for name in ("sigma_c", "sigma_u_seen", "sigma_u_unseen",
                     "sigma_f_seen", "sigma_f_unseen"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")
        lo, hi = self.frame_range()
        if lo < 1 or hi < lo:
            raise ValidationError(
                f"bad frames_per_utterance {self.frames_per_utterance!r}"
            )

    def frame_range(self) -> tuple[int, int]:
        f = self.frames_per_utterance
        if isinstance(f, int):
            return f, f
        lo, hi = f
        return int(lo), int(hi)

    def scales(self, membership: str) -> tuple[float, float]:
        """(utterance-offset scale, frame-noise scale) for one class.

        Unseen keeps its base scales; seen interpolates linearly from the
        unseen values (gamma=0) to its configured values (gamma=1).
        """
        if membership == "unseen":
            return self.sigma_u_unseen, self.sigma_f_unseen
        g = self.gamma
        # (1-g)*a + g*b hits both endpoints exactly.
        sigma_u = (1.0 - g) * self.sigma_u_unseen + g * self.sigma_u_seen
        sigma_f = (1.0 - g) * self.sigma_f_unseen + g * self.sigma_f_seen
        return sigma_u, sigma_f


def synth_config_from_json(path: str | Path) -> SynthConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise StorageError(f"cannot read synth config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid synth config {path}: {exc}") from exc
    known = set(SynthConfig.__dataclass_fields__)
    unknown = set(obj) - known
    if unknown:
        raise ValidationError(f"unknown synth config keys: {sorted(unknown)}")
    if "frames_per_utterance" in obj and isinstance(obj["frames_per_utterance"], list):
        obj["frames_per_utterance"] = tuple(obj["frames_per_utterance"])
    return SynthConfig(**obj)


def generate(cfg: SynthConfig, out_dir: str | Path) -> Manifest:
    """Write the synthetic dataset (features/ + manifest.ndjson) and return
    the loaded manifest."""
    out = Path(out_dir)
    feat_dir = out / "features"
    try:
        feat_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create output dir {out}: {exc}") from exc

    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.frame_range()
    entries: list[ManifestEntry] = []
    speakers = [("seen", i) for i in range(cfg.num_speakers_seen)] + [
        ("unseen", i) for i in range(cfg.num_speakers_unseen)
    ]
    for membership, idx in speakers:
        speaker_id = f"spk-{membership}-{idx:03d}"
        sigma_u, sigma_f = cfg.scales(membership)
        centroid = cfg.sigma_c * rng.standard_normal(cfg.q)
        for j in range(cfg.utterances_per_speaker):
            m = int(rng.integers(lo, hi + 1)) if lo != hi else lo
            utt_mean = centroid + sigma_u * rng.standard_normal(cfg.q)
            frames = utt_mean + sigma_f * rng.standard_normal((m, cfg.q))
            utterance_id = f"{speaker_id}-u{j:03d}"
            rel = f"features/{utterance_id}.miaf"
            seq = FeatureSequence(utterance_id, speaker_id, frames)
            write_feature_file(seq, out / rel)
            entries.append(ManifestEntry(utterance_id, speaker_id, rel, membership))

    metadata = {
        "generator": "miaudit-synth",
        "gamma": cfg.gamma,
        "seed": cfg.seed,
        "q": cfg.q,
    }
    write_manifest(entries, out / "manifest.ndjson", metadata=metadata)
    return load_manifest(out / "manifest.ndjson")
