"""ROC/AUC evaluation of a score table against ground-truth membership.

Seen is the positive class and "score strictly above threshold" the positive
prediction, matching the engine's decision rule, so every reported threshold
is directly usable with decide(). Tied scores collapse into one ROC vertex
and receive half credit in the AUC (Mann-Whitney convention).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EvaluationError, StorageError, ValidationError
from .scoring import ScoreTable

DEFAULT_FPR_TARGETS = (0.01, 0.05, 0.1)


@dataclass(frozen=True)
class RocPoint:
    fpr: float
    tpr: float
    threshold: float


@dataclass
class EvalReport:
    roc: list[RocPoint]
    auc: float
    tpr_at: dict[float, float]
    counts: dict[str, int]
    # Threshold maximizing TPR - FPR, reported as an operating-point
    # convenience; not part of any attack definition.
    youden: dict[str, float] = field(default_factory=dict)

    def validate(self) -> "EvalReport":
        if not self.roc:
            raise ValidationError("empty ROC")
        first, last = self.roc[0], self.roc[-1]
        if (first.fpr, first.tpr) != (0.0, 0.0) or (last.fpr, last.tpr) != (1.0, 1.0):
            raise ValidationError("ROC must begin at (0,0) and end at (1,1)")
        for a, b in zip(self.roc, self.roc[1:]):
            if b.fpr < a.fpr or b.tpr < a.tpr:
                raise ValidationError("ROC points must be monotone nondecreasing")
        if not 0.0 <= self.auc <= 1.0:
            raise ValidationError(f"AUC out of range: {self.auc}")
        return self


def _split_classes(table: ScoreTable) -> tuple[np.ndarray, np.ndarray]:
    """Scores of (seen, unseen) rows; unknown-membership rows are excluded."""
    pos = np.array([r.score for r in table.rows if r.membership == "seen"])
    neg = np.array([r.score for r in table.rows if r.membership == "unseen"])
    if len(pos) == 0 or len(neg) == 0:
        raise EvaluationError(
            f"evaluation needs both classes, got {len(pos)} seen and "
            f"{len(neg)} unseen labeled rows"
        )
    return pos, neg


def roc_curve(table: ScoreTable) -> list[RocPoint]:
    """Sweep all thresholds achievable under the strict "score > t" rule.

    With d distinct score values the curve has d+1 vertices. Vertex 0 is
    (0,0) at t = max score; each following vertex admits one more score
    level; the final threshold (one ulp below the min score) predicts
    everything positive.
    """
    pos, neg = _split_classes(table)
    P, U = len(pos), len(neg)
    levels = np.unique(np.concatenate([pos, neg]))[::-1]  # descending
    points = [RocPoint(0.0, 0.0, float(levels[0]))]
    tp = fp = 0
    for i, s in enumerate(levels):
        tp += int(np.count_nonzero(pos == s))
        fp += int(np.count_nonzero(neg == s))
        if i + 1 < len(levels):
            threshold = float(levels[i + 1])
        else:
            threshold = float(np.nextafter(s, -np.inf))
        points.append(RocPoint(fp / U, tp / P, threshold))
    return points


def auc(table: ScoreTable) -> float:
    """Mann-Whitney statistic: P(score_seen > score_unseen) + half tie credit.

    Counted per distinct score level in exact integer/half-integer
    arithmetic, so the result matches brute-force pair counting bit for bit.
    """
    pos, neg = _split_classes(table)
    order = np.argsort(neg, kind="stable")
    neg_sorted = neg[order]
    wins = 0.0
    # For each positive: negatives strictly below count 1, ties count 1/2.
    lo = np.searchsorted(neg_sorted, pos, side="left")
    hi = np.searchsorted(neg_sorted, pos, side="right")
    for l, h in zip(lo, hi):
        wins += float(l) + 0.5 * float(h - l)
    return wins / (len(pos) * len(neg))


def tpr_at_fpr(table: ScoreTable, fpr_target: float) -> float:
    """Best TPR among thresholds with FPR <= target; step convention, no
    interpolation, so the number is achievable by an actual threshold."""
    if not 0.0 <= fpr_target <= 1.0:
        raise ValidationError(f"fpr target must be in [0,1], got {fpr_target}")
    best = 0.0
    for pt in roc_curve(table):
        if pt.fpr <= fpr_target and pt.tpr > best:
            best = pt.tpr
    return best


def evaluate(
    table: ScoreTable, fpr_targets: tuple[float, ...] = DEFAULT_FPR_TARGETS
) -> EvalReport:
    """Full report: ROC vertices, AUC, TPR at the requested FPR bounds."""
    pos, neg = _split_classes(table)
    roc = roc_curve(table)
    tpr_map = {}
    for target in fpr_targets:
        best = 0.0
        for pt in roc:
            if pt.fpr <= target and pt.tpr > best:
                best = pt.tpr
        tpr_map[float(target)] = best
    best_pt = max(roc, key=lambda p: (p.tpr - p.fpr, -p.fpr))
    report = EvalReport(
        roc=roc,
        auc=auc(table),
        tpr_at=tpr_map,
        counts={"num_seen": len(pos), "num_unseen": len(neg)},
        youden={
            "threshold": best_pt.threshold,
            "tpr": best_pt.tpr,
            "fpr": best_pt.fpr,
            "j": best_pt.tpr - best_pt.fpr,
        },
    )
    return report.validate()


def emit_report(report: EvalReport, out_dir: str | Path) -> None:
    """Write report.json plus plot-ready roc.csv into out_dir."""
    report.validate()
    out = Path(out_dir)
    payload = {
        "roc": [
            {"fpr": p.fpr, "tpr": p.tpr, "threshold": p.threshold}
            for p in report.roc
        ],
        "auc": report.auc,
        "tpr_at": {format(k, ".17g"): v for k, v in report.tpr_at.items()},
        "counts": report.counts,
        "youden": report.youden,
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(payload, indent=2) + "\n")
        lines = ["fpr,tpr,threshold"]
        for p in report.roc:
            lines.append(
                f"{p.fpr:.17g},{p.tpr:.17g},{p.threshold:.17g}"
            )
        (out / "roc.csv").write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise StorageError(f"cannot write report to {out}: {exc}") from exc


def read_report(path: str | Path) -> EvalReport:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise StorageError(f"cannot read report {path}: {exc}") from exc
    report = EvalReport(
        roc=[RocPoint(p["fpr"], p["tpr"], p["threshold"]) for p in obj["roc"]],
        auc=obj["auc"],
        tpr_at={float(k): v for k, v in obj["tpr_at"].items()},
        counts=dict(obj["counts"]),
        youden=dict(obj.get("youden", {})),
    )
    return report.validate()
