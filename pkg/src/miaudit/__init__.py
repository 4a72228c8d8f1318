"""Membership-inference audit toolkit for frame-level speech representations.

The library covers the full audit loop: binary feature storage, pairwise
similarity scoring, pseudo-label selection, small attack networks trained
with hand-derived gradients, ROC/AUC evaluation, and a synthetic data
generator for calibration. The `miaudit` CLI chains the stages.
"""

from .attacknet import (
    SpeakerNet,
    TrainConfig,
    UtteranceNet,
    improved_speaker_score,
    improved_utterance_score,
    infer_dataset,
    load_checkpoint,
    save_checkpoint,
    train_speaker_attack,
    train_utterance_attack,
)
from .errors import (
    ConfigurationError,
    DataError,
    DegenerateVectorError,
    EvaluationError,
    FormatError,
    InsufficientDataError,
    InsufficientPairsError,
    MiauditError,
    StorageError,
    TooFewFramesError,
    TooFewUtterancesError,
    ValidationError,
)
from .evaluation import (
    DEFAULT_FPR_TARGETS,
    EvalReport,
    RocPoint,
    auc,
    evaluate,
    emit_report,
    read_report,
    roc_curve,
    tpr_at_fpr,
)
from .featurestore import (
    FeatureSequence,
    Manifest,
    ManifestEntry,
    SpeakerGroup,
    group_by_speaker,
    load_manifest,
    load_sequence,
    read_feature_file,
    write_feature_file,
    write_manifest,
)
from .pseudolabel import (
    DEFAULT_K_SPEAKER,
    DEFAULT_K_UTTERANCE,
    DEFAULT_POOL_SIZE,
    PseudoLabelSet,
    read_labels,
    scaled_k,
    select,
    write_labels,
)
from .scoring import (
    ScoreResult,
    ScoreRow,
    ScoreTable,
    SkipRecord,
    ThresholdRule,
    cosine_distance,
    cosine_similarity,
    euclidean_distance,
    score_dataset,
    speaker_mean_embeddings,
    speaker_score,
    read_score_csv,
    utterance_score,
    write_score_csv,
)
from .synthesizer import SynthConfig, generate, synth_config_from_json

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DataError",
    "DegenerateVectorError",
    "DEFAULT_FPR_TARGETS",
    "DEFAULT_K_SPEAKER",
    "DEFAULT_K_UTTERANCE",
    "DEFAULT_POOL_SIZE",
    "EvalReport",
    "EvaluationError",
    "FeatureSequence",
    "FormatError",
    "InsufficientDataError",
    "InsufficientPairsError",
    "Manifest",
    "ManifestEntry",
    "MiauditError",
    "PseudoLabelSet",
    "RocPoint",
    "ScoreResult",
    "ScoreRow",
    "ScoreTable",
    "SkipRecord",
    "SpeakerGroup",
    "SpeakerNet",
    "StorageError",
    "SynthConfig",
    "ThresholdRule",
    "TooFewFramesError",
    "TooFewUtterancesError",
    "TrainConfig",
    "UtteranceNet",
    "ValidationError",
    "auc",
    "cosine_distance",
    "cosine_similarity",
    "emit_report",
    "euclidean_distance",
    "evaluate",
    "generate",
    "group_by_speaker",
    "improved_speaker_score",
    "improved_utterance_score",
    "infer_dataset",
    "load_checkpoint",
    "load_manifest",
    "load_sequence",
    "read_feature_file",
    "read_labels",
    "read_report",
    "read_score_csv",
    "roc_curve",
    "save_checkpoint",
    "score_dataset",
    "scaled_k",
    "select",
    "speaker_mean_embeddings",
    "speaker_score",
    "synth_config_from_json",
    "tpr_at_fpr",
    "train_speaker_attack",
    "train_utterance_attack",
    "utterance_score",
    "write_feature_file",
    "write_labels",
    "write_manifest",
    "write_score_csv",
]
