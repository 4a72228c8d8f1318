"""Basic attacks: pair-averaged utterance and speaker scores plus thresholding.

The utterance score is the mean distance over all unordered frame pairs of a
sequence; the speaker score is the mean similarity over all unordered pairs
of its mean-pooled utterance embeddings. Cosine variants are the defaults;
euclidean variants are provided (as a similarity, euclidean enters negated so
"higher score = seen" holds for every metric).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal

import numpy as np

from .errors import (
    DegenerateVectorError,
    StorageError,
    TooFewFramesError,
    TooFewUtterancesError,
    ValidationError,
)
from .featurestore import (
    FeatureSequence,
    Manifest,
    MEMBERSHIPS,
    SpeakerGroup,
    group_by_speaker,
    load_sequence,
)

Level = Literal["utterance", "speaker"]
METRICS = ("cosine", "euclidean")


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValidationError(f"expected a vector, got shape {v.shape}")
    return v


def cosine_similarity(a, b) -> float:
    """(a.b) / (|a||b|), in [-1, 1]. Zero-norm input is an error."""
    a, b = _as_vector(a), _as_vector(b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("cosine metric undefined for zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


def cosine_distance(a, b) -> float:
    """1 - cosine_similarity, in [0, 2]."""
    return 1.0 - cosine_similarity(a, b)


def euclidean_distance(a, b) -> float:
    return float(np.linalg.norm(_as_vector(a) - _as_vector(b)))


def negative_euclidean(a, b) -> float:
    """Euclidean distance negated, usable wherever a similarity is expected."""
    return -euclidean_distance(a, b)


def distance_fn(metric: str) -> Callable:
    if metric == "cosine":
        return cosine_distance
    if metric == "euclidean":
        return euclidean_distance
    raise ValidationError(f"unknown metric {metric!r} (expected one of {METRICS})")


def similarity_fn(metric: str) -> Callable:
    if metric == "cosine":
        return cosine_similarity
    if metric == "euclidean":
        return negative_euclidean
    raise ValidationError(f"unknown metric {metric!r} (expected one of {METRICS})")


def _check_norms(X: np.ndarray, what: str):
    norms = np.linalg.norm(X, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DegenerateVectorError(
            f"zero-norm {what} at index {int(zero[0])}", index=int(zero[0])
        )
    return norms


def _pair_values(X: np.ndarray, fn: Callable) -> np.ndarray:
    """Condensed vector of fn over all unordered row pairs i < j of X.

    Known metrics take a vectorized path; arbitrary callables fall back to a
    plain pair loop. Either way the caller sums with np.sum, whose pairwise
    accumulation keeps long low-variance pair sums stable.
    """
    n = X.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    if fn in (cosine_distance, cosine_similarity):
        norms = _check_norms(X, "vector")
        G = (X / norms[:, None]) @ (X / norms[:, None]).T
        vals = G[iu, ju]
        return 1.0 - vals if fn is cosine_distance else vals
    if fn in (euclidean_distance, negative_euclidean):
        diffs = X[iu] - X[ju]
        vals = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
        return -vals if fn is negative_euclidean else vals
    return np.array([fn(X[i], X[j]) for i, j in zip(iu, ju)], dtype=np.float64)


def utterance_score(
    seq: FeatureSequence | np.ndarray, distance: Callable = cosine_distance
) -> float:
    """Mean pairwise frame distance: 2/(m(m-1)) * sum_{i<j} d(h_i, h_j)."""
    frames = seq.frames if isinstance(seq, FeatureSequence) else seq
    X = np.asarray(frames, dtype=np.float64)
    m = X.shape[0]
    if m < 2:
        raise TooFewFramesError(
            f"utterance score needs at least 2 frames, got {m}"
        )
    try:
        vals = _pair_values(X, distance)
    except DegenerateVectorError as exc:
        raise DegenerateVectorError(
            f"zero-norm frame at index {exc.index}", index=exc.index
        ) from None
    return float(np.sum(vals) / len(vals))


def speaker_mean_embeddings(group: SpeakerGroup) -> np.ndarray:
    """One mean-pooled q-vector per utterance, as an (n, q) float64 array."""
    rows = []
    for i, seq in enumerate(group.sequences):
        if seq.num_frames < 1:
            raise TooFewFramesError(
                f"utterance {seq.utterance_id!r} (index {i}) has no frames"
            )
        rows.append(np.asarray(seq.frames, dtype=np.float64).mean(axis=0))
    return np.asarray(rows)


def speaker_score(
    group: SpeakerGroup, similarity: Callable = cosine_similarity
) -> float:
    """Mean pairwise similarity of the mean-pooled utterance embeddings."""
    n = group.num_utterances
    if n < 2:
        raise TooFewUtterancesError(
            f"speaker score needs at least 2 utterances, got {n} "
            f"for speaker {group.speaker_id!r}"
        )
    emb = speaker_mean_embeddings(group)
    try:
        vals = _pair_values(emb, similarity)
    except DegenerateVectorError as exc:
        raise DegenerateVectorError(
            f"zero-norm mean embedding at utterance index {exc.index}",
            index=exc.index,
        ) from None
    return float(np.sum(vals) / len(vals))


@dataclass(frozen=True)
class ThresholdRule:
    """Decision rule: strictly above the threshold means seen."""

    threshold: float

    def __post_init__(self):
        if not np.isfinite(self.threshold):
            raise ValidationError("threshold must be finite")


def decide(score: float, rule: ThresholdRule) -> str:
    """seen iff score > threshold; ties classify as unseen."""
    return "seen" if score > rule.threshold else "unseen"


@dataclass(frozen=True)
class ScoreRow:
    id: str
    score: float
    membership: str = "unknown"


@dataclass
class ScoreTable:
    kind: Level
    rows: list[ScoreRow]

    def validate(self) -> "ScoreTable":
        ids = [r.id for r in self.rows]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate ids in score table: {dupes}")
        for r in self.rows:
            if not np.isfinite(r.score):
                raise ValidationError(f"non-finite score for id {r.id!r}")
            if r.membership not in MEMBERSHIPS:
                raise ValidationError(
                    f"unknown membership token {r.membership!r} for id {r.id!r}"
                )
        return self

    def scores(self) -> np.ndarray:
        return np.array([r.score for r in self.rows], dtype=np.float64)


@dataclass(frozen=True)
class SkipRecord:
    id: str
    reason: str


@dataclass
class ScoreResult:
    table: ScoreTable
    skipped: list[SkipRecord] = field(default_factory=list)


def _speaker_memberships(manifest: Manifest) -> dict[str, str]:
    seen: dict[str, set[str]] = {}
    for e in manifest.entries:
        seen.setdefault(e.speaker_id, set()).add(e.membership)
    mixed = sorted(s for s, labels in seen.items() if len(labels) > 1)
    if mixed:
        raise ValidationError(
            f"speakers with mixed membership labels: {mixed}"
        )
    return {s: labels.pop() for s, labels in seen.items()}


def score_dataset(
    manifest: Manifest, level: Level, metric: str = "cosine"
) -> ScoreResult:
    """Score every utterance (or speaker) in the manifest.

    Items failing a scoring precondition (too few frames/utterances,
    degenerate vectors) land in the skip list instead of aborting the run.
    Ordering is deterministic: manifest order, speakers by first appearance.
    """
    if level == "utterance":
        dist = distance_fn(metric)
        rows, skipped = [], []
        for entry in manifest.entries:
            seq = load_sequence(manifest, entry)
            try:
                s = utterance_score(seq, dist)
            except (TooFewFramesError, DegenerateVectorError) as exc:
                skipped.append(SkipRecord(entry.utterance_id, str(exc)))
                continue
            rows.append(ScoreRow(entry.utterance_id, s, entry.membership))
        return ScoreResult(ScoreTable("utterance", rows).validate(), skipped)

    if level == "speaker":
        sim = similarity_fn(metric)
        memberships = _speaker_memberships(manifest)
        rows, skipped = [], []
        for group in group_by_speaker(manifest):
            try:
                s = speaker_score(group, sim)
            except (
                TooFewUtterancesError,
                TooFewFramesError,
                DegenerateVectorError,
            ) as exc:
                skipped.append(SkipRecord(group.speaker_id, str(exc)))
                continue
            rows.append(ScoreRow(group.speaker_id, s, memberships[group.speaker_id]))
        return ScoreResult(ScoreTable("speaker", rows).validate(), skipped)

    raise ValidationError(f"unknown level {level!r}")


def write_score_csv(table: ScoreTable, path: str | Path) -> None:
    """CSV `id,score,membership`; 17 significant digits round-trip float64."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "score", "membership"])
            for r in table.rows:
                writer.writerow([r.id, format(r.score, ".17g"), r.membership])
    except OSError as exc:
        raise StorageError(f"cannot write score table {path}: {exc}") from exc


def read_score_csv(path: str | Path, kind: Level) -> ScoreTable:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["id", "score", "membership"]:
                raise ValidationError(
                    f"unexpected score CSV header {header} in {path}"
                )
            rows = [ScoreRow(i, float(s), mb) for i, s, mb in reader]
    except OSError as exc:
        raise StorageError(f"cannot read score table {path}: {exc}") from exc
    return ScoreTable(kind, rows).validate()
