"""Command-line pipeline: synth -> score -> pseudo-label -> train -> infer ->
evaluate, plus a one-shot `pipeline` command that chains them.

Every subcommand writes its artifacts under --out, refuses a non-empty
output directory without --overwrite, exits 0 on success and nonzero with a
single-line JSON error on stderr otherwise; a `.failed` marker is left in
the output directory when artifacts may be partial.

Randomness: each stage derives its generator seed from the single run seed
as SeedSequence([seed, STAGE_CODE]) (codes below), so `pipeline` and the
equivalent chain of individual subcommands produce identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import attacknet, evaluation, pseudolabel, scoring, synthesizer
from .errors import ConfigurationError, MiauditError, ValidationError
from .featurestore import (
    Manifest,
    ManifestEntry,
    group_by_speaker,
    load_manifest,
    load_sequence,
    write_manifest,
)

STAGE_CODES = {"synth": 1, "train": 2}


def derive_seed(master: int, stage: str) -> int:
    """Per-stage sub-seed: first u64 of SeedSequence([master, code])."""
    code = STAGE_CODES[stage]
    ss = np.random.SeedSequence([int(master), code])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class PipelineConfig:
    target_manifest: str | None = None
    aux_manifest: str | None = None
    level: str = "utterance"
    metric: str = "cosine"
    k: int | None = None
    fpr_targets: list[float] = field(
        default_factory=lambda: list(evaluation.DEFAULT_FPR_TARGETS)
    )
    seed: int = 0
    pseudo_label_pool: str = "pool"  # "pool" or "aux"
    train: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.level not in ("utterance", "speaker"):
            raise ValidationError(f"bad level {self.level!r}")
        if self.metric not in scoring.METRICS:
            raise ValidationError(f"bad metric {self.metric!r}")
        if self.pseudo_label_pool not in ("pool", "aux"):
            raise ValidationError(
                f"pseudo_label_pool must be 'pool' or 'aux', "
                f"got {self.pseudo_label_pool!r}"
            )
        if self.k is not None and self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")

    def effective_k(self) -> int:
        if self.k is not None:
            return self.k
        if self.level == "utterance":
            return pseudolabel.DEFAULT_K_UTTERANCE
        return pseudolabel.DEFAULT_K_SPEAKER


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid config {path}: {exc}") from exc
    known = set(PipelineConfig.__dataclass_fields__)
    unknown = set(obj) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    cfg = PipelineConfig(**obj)
    base = path.parent
    if cfg.target_manifest is not None:
        cfg.target_manifest = str((base / cfg.target_manifest))
    if cfg.aux_manifest is not None:
        cfg.aux_manifest = str((base / cfg.aux_manifest))
    return cfg


def _train_config(train: dict, master_seed: int) -> tuple[attacknet.TrainConfig, int, int]:
    """TrainConfig plus net widths from the `train` config section."""
    train = dict(train)
    p = int(train.pop("attention_width", attacknet.DEFAULT_ATTENTION_WIDTH))
    r = int(train.pop("hidden_width", attacknet.DEFAULT_HIDDEN_WIDTH))
    if train.get("seed") is None:
        train["seed"] = derive_seed(master_seed, "train")
    known = set(attacknet.TrainConfig.__dataclass_fields__)
    unknown = set(train) - known
    if unknown:
        raise ConfigurationError(f"unknown train config keys: {sorted(unknown)}")
    return attacknet.TrainConfig(**train), p, r


def prepare_out_dir(path: str | Path, overwrite: bool) -> Path:
    out = Path(path)
    if out.exists() and any(out.iterdir()):
        if not overwrite:
            raise ConfigurationError(
                f"output directory {out} is not empty; pass --overwrite to reuse it"
            )
    out.mkdir(parents=True, exist_ok=True)
    marker = out / ".failed"
    if marker.exists():
        marker.unlink()
    return out


def _write_skips(result: scoring.ScoreResult, out: Path) -> None:
    scoring.write_score_csv(result.table, out / "scores.csv")
    payload = [{"id": s.id, "reason": s.reason} for s in result.skipped]
    (out / "skipped.json").write_text(json.dumps(payload, indent=2) + "\n")
    if result.skipped:
        print(
            f"warning: skipped {len(result.skipped)} item(s), see "
            f"{out / 'skipped.json'}",
            file=sys.stderr,
        )


def merge_manifests(paths: list[str | Path], out_path: Path) -> Manifest:
    """Concatenate manifests into one NDJSON file whose paths are rewritten
    relative to the merged file's directory."""
    entries = []
    for p in paths:
        man = load_manifest(p)
        for e in man.entries:
            rel = os.path.relpath(man.resolve(e), out_path.parent)
            entries.append(ManifestEntry(e.utterance_id, e.speaker_id, rel,
                                         e.membership))
    write_manifest(entries, out_path)
    return load_manifest(out_path)


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    cfg = synthesizer.synth_config_from_json(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out = prepare_out_dir(args.out, args.overwrite)
    manifest = synthesizer.generate(cfg, out)
    print(f"wrote {len(manifest)} utterances under {out}")
    return 0


def cmd_score(args) -> int:
    manifest = load_manifest(args.manifest)
    out = prepare_out_dir(args.out, args.overwrite)
    result = scoring.score_dataset(manifest, args.level, args.metric)
    _write_skips(result, out)
    print(f"scored {len(result.table.rows)} {args.level}(s) -> {out / 'scores.csv'}")
    return 0


def cmd_pseudo_label(args) -> int:
    table = scoring.read_score_csv(args.scores, args.level)
    out = prepare_out_dir(args.out, args.overwrite)
    labels = pseudolabel.select(table, args.k)
    pseudolabel.write_labels(labels, out / "labels.json")
    print(f"selected {labels.k} positives / {labels.k} negatives -> "
          f"{out / 'labels.json'}")
    return 0


def cmd_train(args) -> int:
    labels = pseudolabel.read_labels(args.labels)
    manifest = load_manifest(args.manifest)
    train_section = {}
    if args.config:
        train_section = json.loads(Path(args.config).read_text())
    cfg, p, r = _train_config(train_section, args.seed)
    out = prepare_out_dir(args.out, args.overwrite)
    net = _run_training(labels, manifest, cfg, p, r)
    attacknet.save_checkpoint(
        net, out / "checkpoint.miac",
        extra={"seed": cfg.seed, "train_config": asdict(cfg)},
    )
    print(f"trained {labels.level} attack net -> {out / 'checkpoint.miac'}")
    return 0


def _run_training(labels, manifest, cfg, p, r):
    if labels.level == "utterance":
        wanted = set(labels.positives) | set(labels.negatives)
        sequences = {
            e.utterance_id: load_sequence(manifest, e)
            for e in manifest.entries
            if e.utterance_id in wanted
        }
        return attacknet.train_utterance_attack(labels, sequences, cfg, p=p, r=r)
    groups = {g.speaker_id: g for g in group_by_speaker(manifest)}
    wanted = set(labels.positives) | set(labels.negatives)
    groups = {k: v for k, v in groups.items() if k in wanted}
    return attacknet.train_speaker_attack(labels, groups, cfg, p=p, r=r)


def cmd_infer(args) -> int:
    net, _ = attacknet.load_checkpoint(args.checkpoint)
    manifest = load_manifest(args.manifest)
    out = prepare_out_dir(args.out, args.overwrite)
    result = attacknet.infer_dataset(net, manifest)
    _write_skips(result, out)
    print(f"inferred {len(result.table.rows)} {net.kind}(s) -> "
          f"{out / 'scores.csv'}")
    return 0


def cmd_evaluate(args) -> int:
    table = scoring.read_score_csv(args.scores, args.level)
    targets = tuple(args.fpr_targets) if args.fpr_targets else \
        evaluation.DEFAULT_FPR_TARGETS
    out = prepare_out_dir(args.out, args.overwrite)
    report = evaluation.evaluate(table, targets)
    evaluation.emit_report(report, out)
    from .plotting import render_roc_figure

    render_roc_figure([("scores", report)], out / "roc.png")
    print(f"AUC {report.auc:.6f} over {report.counts['num_seen']} seen / "
          f"{report.counts['num_unseen']} unseen -> {out / 'report.json'}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = load_pipeline_config(args.config) if args.config else PipelineConfig()
    if args.level:
        cfg.level = args.level
    if args.metric:
        cfg.metric = args.metric
    if args.k is not None:
        cfg.k = args.k
    if args.seed is not None:
        cfg.seed = args.seed
    if args.target_manifest:
        cfg.target_manifest = args.target_manifest
    if args.aux_manifest:
        cfg.aux_manifest = args.aux_manifest
    manifests = [p for p in (cfg.target_manifest, cfg.aux_manifest) if p]
    if not manifests:
        raise ConfigurationError(
            "pipeline needs target_manifest and/or aux_manifest"
        )
    if cfg.pseudo_label_pool == "aux" and not cfg.aux_manifest:
        raise ConfigurationError(
            "pseudo_label_pool='aux' requires aux_manifest"
        )

    out = prepare_out_dir(args.out, args.overwrite)
    try:
        pool = merge_manifests(manifests, out / "pool.ndjson")

        # basic attack over the evaluation pool
        basic_dir = out / "basic"
        basic_dir.mkdir(exist_ok=True)
        basic = scoring.score_dataset(pool, cfg.level, cfg.metric)
        _write_skips(basic, basic_dir)
        basic_report = evaluation.evaluate(basic.table, tuple(cfg.fpr_targets))
        evaluation.emit_report(basic_report, basic_dir / "report")

        # pseudo-labels from the configured pool
        if cfg.pseudo_label_pool == "aux":
            aux_manifest = load_manifest(cfg.aux_manifest)
            label_source = scoring.score_dataset(
                aux_manifest, cfg.level, cfg.metric
            ).table
        else:
            label_source = basic.table
        k = cfg.effective_k()
        labels = pseudolabel.select(label_source, k)
        pseudolabel.write_labels(labels, out / "labels.json")

        # improved attack: train, infer, evaluate
        train_cfg, p, r = _train_config(cfg.train, cfg.seed)
        net = _run_training(labels, pool, train_cfg, p, r)
        attacknet.save_checkpoint(
            net, out / "checkpoint.miac",
            extra={"seed": train_cfg.seed, "train_config": asdict(train_cfg)},
        )
        improved_dir = out / "improved"
        improved_dir.mkdir(exist_ok=True)
        improved = attacknet.infer_dataset(net, pool)
        _write_skips(improved, improved_dir)
        improved_report = evaluation.evaluate(
            improved.table, tuple(cfg.fpr_targets)
        )
        evaluation.emit_report(improved_report, improved_dir / "report")

        summary = {
            "basic_auc": basic_report.auc,
            "improved_auc": improved_report.auc,
            "level": cfg.level,
            "k": k,
            "metric": cfg.metric,
            "seed": cfg.seed,
            "pseudo_label_source": cfg.pseudo_label_pool,
        }
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")

        from .plotting import render_roc_figure

        render_roc_figure(
            [("basic", basic_report), ("improved", improved_report)],
            out / "roc.png",
            title=f"{cfg.level}-level attack",
        )
    except Exception:
        (out / ".failed").write_text("pipeline failed before completion\n")
        raise
    print(
        f"pipeline done: basic AUC {basic_report.auc:.6f}, "
        f"improved AUC {improved_report.auc:.6f} -> {out / 'summary.json'}"
    )
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sp, out_required=True):
    sp.add_argument("--out", required=out_required, help="output directory")
    sp.add_argument("--overwrite", action="store_true",
                    help="allow reuse of a non-empty output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miaudit",
        description="Membership-inference audit over frame-level "
        "representation dumps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic dataset")
    sp.add_argument("--config", required=True, help="SynthConfig JSON file")
    sp.add_argument("--seed", type=int, default=None, help="override config seed")
    _add_common(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("score", help="run the basic attack scores")
    sp.add_argument("manifest", help="NDJSON manifest of feature files")
    sp.add_argument("--level", choices=["utterance", "speaker"],
                    default="utterance")
    sp.add_argument("--metric", choices=list(scoring.METRICS), default="cosine")
    _add_common(sp)
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("pseudo-label", help="select score extremes")
    sp.add_argument("scores", help="scores.csv from `score`")
    sp.add_argument("--level", choices=["utterance", "speaker"],
                    default="utterance")
    sp.add_argument("--k", type=int, required=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_pseudo_label)

    sp = sub.add_parser("train", help="train the improved attack net")
    sp.add_argument("labels", help="labels.json from `pseudo-label`")
    sp.add_argument("--manifest", required=True,
                    help="manifest providing the labeled features")
    sp.add_argument("--config", default=None,
                    help="train config JSON (epochs, learning_rate, ...)")
    sp.add_argument("--seed", type=int, default=0,
                    help="run seed (train sub-seed is derived from it)")
    _add_common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("infer", help="apply a trained attack net")
    sp.add_argument("checkpoint", help="checkpoint.miac from `train`")
    sp.add_argument("manifest", help="manifest to score")
    _add_common(sp)
    sp.set_defaults(func=cmd_infer)

    sp = sub.add_parser("evaluate", help="ROC/AUC report from scores")
    sp.add_argument("scores", help="scores.csv with ground-truth membership")
    sp.add_argument("--level", choices=["utterance", "speaker"],
                    default="utterance")
    sp.add_argument("--fpr-targets", type=float, nargs="*", default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("pipeline", help="basic + improved attack end to end")
    sp.add_argument("--config", default=None, help="PipelineConfig JSON file")
    sp.add_argument("--target-manifest", dest="target_manifest", default=None)
    sp.add_argument("--aux-manifest", dest="aux_manifest", default=None)
    sp.add_argument("--level", choices=["utterance", "speaker"], default=None)
    sp.add_argument("--metric", choices=list(scoring.METRICS), default=None)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MiauditError as exc:
        line = json.dumps(
            {"error": type(exc).__name__, "message": str(exc)}
        )
        print(line, file=sys.stderr)
        return 1
    except Exception as exc:  # single-line contract also for unexpected bugs
        line = json.dumps(
            {"error": type(exc).__name__, "message": str(exc)}
        )
        print(line, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
