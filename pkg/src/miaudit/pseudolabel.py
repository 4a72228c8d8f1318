"""Pseudo-label selection: score extremes become the attack training set.

The k highest-scoring items are labeled positive ("seen") and the k lowest
negative ("unseen"). Ties break by ascending id over one canonical ordering,
so the two halves never overlap even when every score is tied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import InsufficientDataError, StorageError, ValidationError
from .scoring import Level, ScoreTable

# The utterance default assumes a label pool of about DEFAULT_POOL_SIZE
# items; scale it down with scaled_k() for smaller pools.
DEFAULT_K_UTTERANCE = 500
DEFAULT_K_SPEAKER = 1
DEFAULT_POOL_SIZE = 11126


def scaled_k(pool_size: int, k: int = DEFAULT_K_UTTERANCE,
             reference: int = DEFAULT_POOL_SIZE) -> int:
    """k scaled proportionally from its reference pool size, at least 1."""
    if pool_size < 1:
        raise ValidationError(f"pool_size must be >= 1, got {pool_size}")
    return max(1, round(k * pool_size / reference))


@dataclass
class PseudoLabelSet:
    level: Level
    positives: list[str]
    negatives: list[str]
    k: int

    def __post_init__(self):
        if len(self.positives) != self.k or len(self.negatives) != self.k:
            raise ValidationError(
                f"pseudo-label set needs exactly k={self.k} ids per side, got "
                f"{len(self.positives)} positives / {len(self.negatives)} negatives"
            )
        if set(self.positives) & set(self.negatives):
            raise ValidationError("positives and negatives overlap")


def select(table: ScoreTable, k: int) -> PseudoLabelSet:
    """Pick the k highest scores as positives and the k lowest as negatives.

    Rows are ordered once by (score descending, id ascending); positives are
    the first k ids, negatives the ids of the last k listed in ascending
    score order (ties by id).
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if 2 * k > len(table.rows):
        raise InsufficientDataError(
            f"need at least 2k={2 * k} rows to pseudo-label, table has "
            f"{len(table.rows)}"
        )
    order = sorted(table.rows, key=lambda r: (-r.score, r.id))
    positives = [r.id for r in order[:k]]
    tail = sorted(order[-k:], key=lambda r: (r.score, r.id))
    negatives = [r.id for r in tail]
    return PseudoLabelSet(table.kind, positives, negatives, k)


def write_labels(labels: PseudoLabelSet, path: str | Path) -> None:
    payload = {
        "level": labels.level,
        "k": labels.k,
        "positives": labels.positives,
        "negatives": labels.negatives,
    }
    try:
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")
    except OSError as exc:
        raise StorageError(f"cannot write labels {path}: {exc}") from exc


def read_labels(path: str | Path) -> PseudoLabelSet:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise StorageError(f"cannot read labels {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid labels file {path}: {exc}") from exc
    for key in ("level", "k", "positives", "negatives"):
        if key not in obj:
            raise ValidationError(f"labels file {path} missing field {key!r}")
    if obj["level"] not in ("utterance", "speaker"):
        raise ValidationError(f"labels file {path}: bad level {obj['level']!r}")
    return PseudoLabelSet(
        obj["level"], list(obj["positives"]), list(obj["negatives"]), int(obj["k"])
    )
