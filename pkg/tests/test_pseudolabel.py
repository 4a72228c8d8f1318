"""Score-extreme selection: determinism, tie handling, serialization."""

import numpy as np
import pytest

from miaudit.errors import InsufficientDataError, ValidationError
from miaudit.pseudolabel import (
    DEFAULT_K_SPEAKER,
    DEFAULT_K_UTTERANCE,
    DEFAULT_POOL_SIZE,
    PseudoLabelSet,
    read_labels,
    scaled_k,
    select,
    write_labels,
)
from miaudit.scoring import ScoreRow, ScoreTable


def table(kind, scores):
    return ScoreTable(kind, [ScoreRow(i, s, "unknown") for i, s in scores])


class TestSelect:
    def test_distinct_extremes(self):
        t = table("utterance", [("a", 0.9), ("b", 0.1), ("c", 0.5), ("d", 0.7)])
        labels = select(t, 1)
        assert labels.positives == ["a"]
        assert labels.negatives == ["b"]

    def test_all_tied_id_tiebreak(self):
        t = table("utterance", [("a", 0.5), ("b", 0.5), ("c", 0.5), ("d", 0.5)])
        labels = select(t, 2)
        assert labels.positives == ["a", "b"]
        assert labels.negatives == ["c", "d"]

    def test_insufficient_rows_states_both_numbers(self):
        t = table("utterance", [("a", 1.0), ("b", 2.0), ("c", 3.0), ("d", 4.0)])
        with pytest.raises(InsufficientDataError, match="6.*4|4.*6"):
            select(t, 3)

    def test_separation_property(self):
        rng = np.random.default_rng(301)
        for _ in range(50):
            n = int(rng.integers(4, 40))
            scores = rng.normal(size=n)
            if len(np.unique(scores)) != n:
                continue
            t = table("utterance", [(f"u{i}", float(s))
                                    for i, s in enumerate(scores)])
            k = int(rng.integers(1, n // 2 + 1))
            labels = select(t, k)
            by_id = {r.id: r.score for r in t.rows}
            assert min(by_id[i] for i in labels.positives) >= \
                max(by_id[i] for i in labels.negatives)

    def test_row_order_invariance(self):
        rng = np.random.default_rng(302)
        for _ in range(30):
            n = int(rng.integers(4, 30))
            rows = [(f"u{i}", float(rng.choice([0.1, 0.5, 0.9])))
                    for i in range(n)]
            t1 = table("utterance", rows)
            perm = rng.permutation(n)
            t2 = table("utterance", [rows[i] for i in perm])
            k = int(rng.integers(1, n // 2 + 1))
            a, b = select(t1, k), select(t2, k)
            assert a.positives == b.positives
            assert a.negatives == b.negatives

    def test_selection_does_not_mutate(self):
        rows = [("a", 0.9), ("b", 0.1), ("c", 0.5), ("d", 0.7)]
        t = table("speaker", rows)
        select(t, 2)
        assert [(r.id, r.score) for r in t.rows] == rows

    def test_disjointness_enforced(self):
        with pytest.raises(ValidationError):
            PseudoLabelSet("utterance", ["a"], ["a"], k=1)

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            PseudoLabelSet("utterance", ["a", "b"], ["c"], k=2)

    def test_defaults(self):
        assert DEFAULT_K_UTTERANCE == 500
        assert DEFAULT_K_SPEAKER == 1

    def test_scaled_k(self):
        assert scaled_k(DEFAULT_POOL_SIZE) == DEFAULT_K_UTTERANCE
        assert scaled_k(400) == round(500 * 400 / DEFAULT_POOL_SIZE) == 18
        assert scaled_k(5) == 1  # never scales below one per side
        with pytest.raises(ValidationError):
            scaled_k(0)


class TestLabelsJson:
    def test_round_trip(self, tmp_path):
        labels = PseudoLabelSet("speaker", ["s3", "s1"], ["s2", "s4"], k=2)
        path = tmp_path / "labels.json"
        write_labels(labels, path)
        back = read_labels(path)
        assert back == labels

    def test_schema_fields(self, tmp_path):
        import json

        labels = PseudoLabelSet("utterance", ["a"], ["b"], k=1)
        path = tmp_path / "labels.json"
        write_labels(labels, path)
        obj = json.loads(path.read_text())
        assert set(obj) == {"level", "k", "positives", "negatives"}

    def test_bad_level_rejected(self, tmp_path):
        import json

        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "level": "word", "k": 1, "positives": ["a"], "negatives": ["b"],
        }))
        with pytest.raises(ValidationError):
            read_labels(path)
