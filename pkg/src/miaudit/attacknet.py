"""Learned attack networks with hand-derived backpropagation.

Two small architectures over frame-level representations, trained with
binary cross-entropy on pseudo-labeled score extremes:

* UtteranceNet: attentive pooling (e_i = u . tanh(W1 h_i + b1), softmax
  weights, weighted frame mean) followed by a ReLU layer and a linear
  readout to one logit.
* SpeakerNet: the same attentive pooling applied to each sequence of a
  pair with shared parameters, one linear projection, and a dot product
  between the projected vectors as the logit.

All arithmetic is float64; gradients are exact (softmax Jacobian included)
and are verified against central finite differences in the test suite.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import (
    ConfigurationError,
    DataError,
    FormatError,
    InsufficientPairsError,
    StorageError,
    TooFewFramesError,
    TooFewUtterancesError,
    ValidationError,
)
from .featurestore import FeatureSequence, SpeakerGroup
from .pseudolabel import PseudoLabelSet

DEFAULT_ATTENTION_WIDTH = 128
DEFAULT_HIDDEN_WIDTH = 256

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CKPT_MAGIC = b"MIAC"
CKPT_VERSION = 1

_UTTERANCE_PARAMS = ("W1", "b1", "u", "W2", "b2", "W3", "b3")
_SPEAKER_PARAMS = ("W1", "b1", "u", "W", "b")


def sigmoid(x):
    """Numerically stable logistic function for scalars or arrays."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out) if out.ndim == 0 else out


def bce_loss(logit: float, label: float) -> float:
    """softplus(logit) - label*logit, stable for any logit magnitude."""
    return float(np.logaddexp(0.0, logit) - label * logit)


def bce_loss_grad(logit: float, label: float) -> float:
    """d(bce_loss)/d(logit) = sigmoid(logit) - label."""
    return sigmoid(logit) - label


@dataclass
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 1e-5
    optimizer: str = "adam"
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ValidationError(
                f"learning_rate must be > 0, got {self.learning_rate}"
            )
        if self.optimizer not in ("sgd", "adam"):
            raise ValidationError(
                f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}"
            )
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class UtteranceNet:
    W1: np.ndarray  # (p, q) attention projection
    b1: np.ndarray  # (p,)
    u: np.ndarray  # (p,)  attention scoring vector
    W2: np.ndarray  # (r, q) hidden layer
    b2: np.ndarray  # (r,)
    W3: np.ndarray  # (r,)  readout
    b3: float

    kind = "utterance"
    param_names = _UTTERANCE_PARAMS

    @property
    def q(self) -> int:
        return self.W1.shape[1]

    @property
    def p(self) -> int:
        return self.W1.shape[0]

    @property
    def r(self) -> int:
        return self.W2.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.param_names}


@dataclass
class SpeakerNet:
    W1: np.ndarray  # (p, q) shared attention projection
    b1: np.ndarray  # (p,)
    u: np.ndarray  # (p,)
    W: np.ndarray  # (r, q) projection before the dot product
    b: np.ndarray  # (r,)

    kind = "speaker"
    param_names = _SPEAKER_PARAMS

    @property
    def q(self) -> int:
        return self.W1.shape[1]

    @property
    def p(self) -> int:
        return self.W1.shape[0]

    @property
    def r(self) -> int:
        return self.W.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.param_names}


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_utterance_net(
    q: int,
    rng: np.random.Generator,
    p: int = DEFAULT_ATTENTION_WIDTH,
    r: int = DEFAULT_HIDDEN_WIDTH,
) -> UtteranceNet:
    """Uniform(+-1/sqrt(fan_in)) weights, zero biases; draw order W1,u,W2,W3."""
    return UtteranceNet(
        W1=_uniform(rng, (p, q), q),
        b1=np.zeros(p),
        u=_uniform(rng, (p,), p),
        W2=_uniform(rng, (r, q), q),
        b2=np.zeros(r),
        W3=_uniform(rng, (r,), r),
        b3=0.0,
    )


def init_speaker_net(
    q: int,
    rng: np.random.Generator,
    p: int = DEFAULT_ATTENTION_WIDTH,
    r: int = DEFAULT_HIDDEN_WIDTH,
) -> SpeakerNet:
    """Uniform(+-1/sqrt(fan_in)) weights, zero biases; draw order W1,u,W."""
    return SpeakerNet(
        W1=_uniform(rng, (p, q), q),
        b1=np.zeros(p),
        u=_uniform(rng, (p,), p),
        W=_uniform(rng, (r, q), q),
        b=np.zeros(r),
    )


def _frames(seq: FeatureSequence | np.ndarray) -> np.ndarray:
    H = seq.frames if isinstance(seq, FeatureSequence) else seq
    return np.asarray(H, dtype=np.float64)


def _check_shapes(net, H: np.ndarray):
    if H.ndim != 2:
        raise ConfigurationError(f"input must be an m x q matrix, got {H.shape}")
    if H.shape[0] < 1:
        raise TooFewFramesError("attack net input has no frames")
    if H.shape[1] != net.q:
        raise ConfigurationError(
            f"input dimensionality {H.shape[1]} does not match net q={net.q}"
        )


def _pool(W1, b1, u, H):
    """Attentive pooling; returns (c, cache) with softmax weights in cache."""
    V = H @ W1.T + b1  # (m, p)
    T = np.tanh(V)
    e = T @ u  # (m,)
    e_shift = e - np.max(e)
    ex = np.exp(e_shift)
    a = ex / np.sum(ex)
    c = a @ H  # (q,)
    return c, (H, T, a)


def _pool_backward(u, cache, dc):
    """Gradients of the pooling parameters given dL/dc."""
    H, T, a = cache
    da = H @ dc  # (m,)
    de = a * (da - np.dot(a, da))  # softmax Jacobian
    du = T.T @ de
    dV = np.outer(de, u) * (1.0 - T * T)
    dW1 = dV.T @ H
    db1 = dV.sum(axis=0)
    return dW1, db1, du


def attention_weights(net: UtteranceNet | SpeakerNet, seq) -> np.ndarray:
    """Softmax attention weights the net assigns to a sequence's frames."""
    H = _frames(seq)
    _check_shapes(net, H)
    _, (_, _, a) = _pool(net.W1, net.b1, net.u, H)
    return a


def _uttr_forward(net: UtteranceNet, H):
    c, pool_cache = _pool(net.W1, net.b1, net.u, H)
    s2 = net.W2 @ c + net.b2
    z = np.maximum(s2, 0.0)
    logit = float(net.W3 @ z + net.b3)
    return logit, (pool_cache, c, s2, z)


def uttr_forward(net: UtteranceNet, seq) -> float:
    """Logit of the utterance attack net; sigmoid of it is the membership
    probability."""
    H = _frames(seq)
    _check_shapes(net, H)
    return _uttr_forward(net, H)[0]


def uttr_backward(net: UtteranceNet, seq, label: float):
    """Loss and exact parameter gradients of bce_loss(uttr_forward(.))."""
    H = _frames(seq)
    _check_shapes(net, H)
    logit, (pool_cache, c, s2, z) = _uttr_forward(net, H)
    g = bce_loss_grad(logit, label)

    dW3 = g * z
    db3 = g
    dz = g * net.W3
    ds2 = np.where(s2 > 0.0, dz, 0.0)
    dW2 = np.outer(ds2, c)
    db2 = ds2
    dc = net.W2.T @ ds2
    dW1, db1, du = _pool_backward(net.u, pool_cache, dc)

    grads = {"W1": dW1, "b1": db1, "u": du, "W2": dW2, "b2": db2,
             "W3": dW3, "b3": db3}
    return bce_loss(logit, label), grads


def _spkr_forward(net: SpeakerNet, Ha, Hb):
    ca, cache_a = _pool(net.W1, net.b1, net.u, Ha)
    cb, cache_b = _pool(net.W1, net.b1, net.u, Hb)
    za = net.W @ ca + net.b
    zb = net.W @ cb + net.b
    logit = float(za @ zb)
    return logit, (cache_a, cache_b, ca, cb, za, zb)


def spkr_forward(net: SpeakerNet, seq_a, seq_b) -> float:
    """Pairwise-similarity logit; symmetric in its two inputs."""
    Ha, Hb = _frames(seq_a), _frames(seq_b)
    _check_shapes(net, Ha)
    _check_shapes(net, Hb)
    return _spkr_forward(net, Ha, Hb)[0]


def spkr_backward(net: SpeakerNet, seq_a, seq_b, label: float):
    """Loss and exact parameter gradients of bce_loss(spkr_forward(.))."""
    Ha, Hb = _frames(seq_a), _frames(seq_b)
    _check_shapes(net, Ha)
    _check_shapes(net, Hb)
    logit, (cache_a, cache_b, ca, cb, za, zb) = _spkr_forward(net, Ha, Hb)
    g = bce_loss_grad(logit, label)

    dza = g * zb
    dzb = g * za
    dW = np.outer(dza, ca) + np.outer(dzb, cb)
    db = dza + dzb
    dca = net.W.T @ dza
    dcb = net.W.T @ dzb
    dW1a, db1a, dua = _pool_backward(net.u, cache_a, dca)
    dW1b, db1b, dub = _pool_backward(net.u, cache_b, dcb)

    grads = {"W1": dW1a + dW1b, "b1": db1a + db1b, "u": dua + dub,
             "W": dW, "b": db}
    return bce_loss(logit, label), grads


def improved_utterance_score(net: UtteranceNet, seq) -> float:
    """Membership probability sigmoid(logit), in (0, 1)."""
    return sigmoid(uttr_forward(net, seq))


def improved_speaker_score(net: SpeakerNet, group: SpeakerGroup) -> float:
    """Mean of sigmoid(pair logit) over all unordered utterance pairs: the
    pair averaging of the basic speaker score is retained, only the
    similarity metric is learned."""
    n = group.num_utterances
    if n < 2:
        raise TooFewUtterancesError(
            f"improved speaker score needs at least 2 utterances, got {n} "
            f"for speaker {group.speaker_id!r}"
        )
    vals = [
        sigmoid(spkr_forward(net, group.sequences[i], group.sequences[j]))
        for i in range(n)
        for j in range(i + 1, n)
    ]
    return float(np.sum(vals) / len(vals))


class _Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for name, p in params.items():
            g = grads[name]
            if np.ndim(p) == 0:
                params[name] = p - self.lr * g
            else:
                p -= self.lr * g


class _Adam:
    def __init__(self, lr, param_shapes):
        self.lr = lr
        self.t = 0
        self.m = {k: np.zeros(s) for k, s in param_shapes.items()}
        self.v = {k: np.zeros(s) for k, s in param_shapes.items()}

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - ADAM_BETA1 ** self.t
        c2 = 1.0 - ADAM_BETA2 ** self.t
        for name, p in params.items():
            g = grads[name]
            self.m[name] = ADAM_BETA1 * self.m[name] + (1.0 - ADAM_BETA1) * g
            self.v[name] = ADAM_BETA2 * self.v[name] + (1.0 - ADAM_BETA2) * g * g
            update = self.lr * (self.m[name] / c1) / (
                np.sqrt(self.v[name] / c2) + ADAM_EPS
            )
            if np.ndim(p) == 0:
                params[name] = float(p - update)
            else:
                p -= update
        return params


def _make_optimizer(cfg: TrainConfig, params: dict):
    if cfg.optimizer == "adam":
        shapes = {k: np.shape(v) for k, v in params.items()}
        return _Adam(cfg.learning_rate, shapes)
    return _Sgd(cfg.learning_rate)


def _zero_grads(params):
    return {k: (0.0 if np.ndim(v) == 0 else np.zeros_like(v))
            for k, v in params.items()}


def _train(net, examples, backward, cfg: TrainConfig, rng: np.random.Generator):
    """Shared loop: per-epoch shuffles, batch-mean gradients, full epochs."""
    params = net.params()
    opt = _make_optimizer(cfg, params)
    for _ in range(cfg.epochs):
        perm = rng.permutation(len(examples))
        for start in range(0, len(perm), cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            acc = _zero_grads(params)
            for idx in batch:
                inputs, label = examples[idx]
                _, grads = backward(net, *inputs, label)
                for k in acc:
                    acc[k] = acc[k] + grads[k]
            for k in acc:
                acc[k] = acc[k] / len(batch)
            opt.step(params, acc)
            # scalar params are rebound by the optimizer, arrays mutate
            for k, v in params.items():
                if np.ndim(v) == 0:
                    setattr(net, k, v)
    return net


def _gather_sequences(ids, sequences: Mapping[str, FeatureSequence]):
    missing = [i for i in ids if i not in sequences]
    if missing:
        raise DataError(f"missing feature sequences for ids: {sorted(missing)}")
    return [sequences[i] for i in ids]


def train_utterance_attack(
    labels: PseudoLabelSet,
    sequences: Mapping[str, FeatureSequence],
    cfg: TrainConfig,
    p: int = DEFAULT_ATTENTION_WIDTH,
    r: int = DEFAULT_HIDDEN_WIDTH,
) -> UtteranceNet:
    """Train UtteranceNet on the 2k pseudo-labeled utterances.

    Exactly cfg.epochs passes over positives (label 1) and negatives
    (label 0); bit-deterministic given cfg.seed.
    """
    if labels.level != "utterance":
        raise ConfigurationError(
            f"utterance training needs utterance-level labels, got {labels.level!r}"
        )
    pos = _gather_sequences(labels.positives, sequences)
    neg = _gather_sequences(labels.negatives, sequences)
    for seq in pos + neg:
        if seq.num_frames < 1:
            raise DataError(f"utterance {seq.utterance_id!r} has no frames")
    q = pos[0].dim
    for seq in pos + neg:
        if seq.dim != q:
            raise ConfigurationError(
                f"inconsistent dimensionality in training data: "
                f"{seq.utterance_id!r} has q={seq.dim}, expected {q}"
            )
    rng = np.random.default_rng(cfg.seed)
    net = init_utterance_net(q, rng, p=p, r=r)
    examples = [((seq,), 1.0) for seq in pos] + [((seq,), 0.0) for seq in neg]
    return _train(net, examples, uttr_backward, cfg, rng)


def _group_pairs(group: SpeakerGroup, label: float):
    n = group.num_utterances
    if n < 2:
        raise InsufficientPairsError(
            f"pseudo-labeled speaker {group.speaker_id!r} has {n} utterance(s); "
            f"at least 2 are needed to form training pairs"
        )
    return [
        ((group.sequences[i], group.sequences[j]), label)
        for i in range(n)
        for j in range(i + 1, n)
    ]


def train_speaker_attack(
    labels: PseudoLabelSet,
    groups: Mapping[str, SpeakerGroup],
    cfg: TrainConfig,
    p: int = DEFAULT_ATTENTION_WIDTH,
    r: int = DEFAULT_HIDDEN_WIDTH,
) -> SpeakerNet:
    """Train SpeakerNet on all within-speaker utterance pairs of the
    pseudo-seen (label 1) and pseudo-unseen (label 0) speakers."""
    if labels.level != "speaker":
        raise ConfigurationError(
            f"speaker training needs speaker-level labels, got {labels.level!r}"
        )
    missing = [s for s in labels.positives + labels.negatives if s not in groups]
    if missing:
        raise DataError(f"missing speaker groups for ids: {sorted(missing)}")
    examples = []
    for spk in labels.positives:
        examples.extend(_group_pairs(groups[spk], 1.0))
    for spk in labels.negatives:
        examples.extend(_group_pairs(groups[spk], 0.0))
    q = examples[0][0][0].dim
    for (a, b), _ in examples:
        if a.dim != q or b.dim != q:
            raise ConfigurationError(
                "inconsistent dimensionality in speaker training data"
            )
    rng = np.random.default_rng(cfg.seed)
    net = init_speaker_net(q, rng, p=p, r=r)
    return _train(net, examples, spkr_backward, cfg, rng)


def save_checkpoint(
    net: UtteranceNet | SpeakerNet, path: str | Path, extra: dict | None = None
) -> None:
    """JSON header + float64 little-endian parameter blob, round-trip exact.

    Layout: magic "MIAC" | u32 version | u32 header length | header JSON |
    parameters concatenated in net.param_names order.
    """
    header = {
        "kind": net.kind,
        "q": net.q,
        "p": net.p,
        "r": net.r,
        "params": list(net.param_names),
    }
    if extra:
        header.update(extra)
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = b"".join(
        np.ascontiguousarray(np.atleast_1d(np.asarray(v, dtype="<f8"))).tobytes()
        for v in net.params().values()
    )
    try:
        Path(path).write_bytes(
            CKPT_MAGIC + struct.pack("<II", CKPT_VERSION, len(raw)) + raw + blob
        )
    except OSError as exc:
        raise StorageError(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(path: str | Path):
    """Returns (net, header). Inverse of save_checkpoint, bit-exact."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise StorageError(f"cannot read checkpoint {path}: {exc}") from exc
    if data[:4] != CKPT_MAGIC:
        raise FormatError(f"bad checkpoint magic in {path}")
    version, hlen = struct.unpack("<II", data[4:12])
    if version != CKPT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version} in {path}")
    header = json.loads(data[12 : 12 + hlen].decode("utf-8"))
    q, p, r = header["q"], header["p"], header["r"]
    if header["kind"] == "utterance":
        shapes = {"W1": (p, q), "b1": (p,), "u": (p,), "W2": (r, q),
                  "b2": (r,), "W3": (r,), "b3": ()}
    elif header["kind"] == "speaker":
        shapes = {"W1": (p, q), "b1": (p,), "u": (p,), "W": (r, q), "b": (r,)}
    else:
        raise FormatError(f"unknown checkpoint kind {header['kind']!r}")
    offset = 12 + hlen
    values = {}
    for name in header["params"]:
        shape = shapes[name]
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(data):
            raise FormatError(f"truncated checkpoint {path}")
        arr = np.frombuffer(data[offset:end], dtype="<f8").copy()
        values[name] = float(arr[0]) if shape == () else arr.reshape(shape)
        offset = end
    if offset != len(data):
        raise FormatError(f"trailing bytes in checkpoint {path}")
    if header["kind"] == "utterance":
        return UtteranceNet(**values), header
    return SpeakerNet(**values), header


def infer_dataset(net, manifest, level=None):
    """Improved-attack scores for a whole manifest; mirrors score_dataset.

    Utterance checkpoints score each utterance, speaker checkpoints each
    speaker group. Items failing preconditions go to the skip list.
    """
    from .featurestore import group_by_speaker, load_sequence
    from .scoring import ScoreResult, ScoreRow, ScoreTable, SkipRecord, \
        _speaker_memberships

    kind = net.kind if level is None else level
    if kind != net.kind:
        raise ConfigurationError(
            f"checkpoint is {net.kind}-level but {level!r} was requested"
        )
    rows, skipped = [], []
    if kind == "utterance":
        for entry in manifest.entries:
            seq = load_sequence(manifest, entry)
            if seq.num_frames < 1:
                skipped.append(SkipRecord(entry.utterance_id, "no frames"))
                continue
            s = improved_utterance_score(net, seq)
            rows.append(ScoreRow(entry.utterance_id, s, entry.membership))
    else:
        memberships = _speaker_memberships(manifest)
        for group in group_by_speaker(manifest):
            try:
                s = improved_speaker_score(net, group)
            except (TooFewUtterancesError, TooFewFramesError) as exc:
                skipped.append(SkipRecord(group.speaker_id, str(exc)))
                continue
            rows.append(ScoreRow(group.speaker_id, s, memberships[group.speaker_id]))
    return ScoreResult(ScoreTable(kind, rows).validate(), skipped)
